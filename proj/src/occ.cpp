#include "hcc/occ.h"

#include <map>

namespace hcc::occ {

namespace {

void require_active(const TxState& tx) {
    if (tx.status != TxStatus::Active) throw error(ErrorCode::TxInactive, tx.id.str() + " is not active");
}

} // namespace

ReadResult Executor::read(TxState& tx, TableId table, std::string_view key) {
    require_active(tx);
    auto& t = store_.table(table);
    if (auto own = tx.writes.find({table, std::string(key)}); own != tx.writes.end()) {
        return {own->second, tx.id};
    }
    auto* rec = t.find(key);
    store::VersionPtr observed = rec ? rec->latest() : nullptr;
    tx.occ_reads.push_back({table, std::string(key), rec, observed});
    if (!observed || observed->deleted()) return {std::nullopt, observed ? observed->writer : TransactionId{}};
    return {observed->value, observed->writer};
}

std::vector<ScanRow> Executor::scan(TxState& tx, TableId table, const KeyRange& range) {
    require_active(tx);
    const auto res = store_.scan(table, range, SerializationSlot::infinity());
    tx.scans.push_back({table, range, res.structure_version});

    std::map<std::string, ScanRow, std::less<>> rows;
    for (const auto& e : res.entries) {
        tx.occ_reads.push_back({table, e.record->key(), e.record, e.version});
        if (e.version && !e.version->deleted()) {
            rows[e.record->key()] = {e.record->key(), *e.version->value, e.version->writer};
        }
    }
    // own pending writes shadow what the store holds
    auto it = tx.writes.lower_bound({table, range.low.value_or(std::string{})});
    for (; it != tx.writes.end() && it->first.first == table; ++it) {
        const auto& key = it->first.second;
        if (!range.contains(key)) {
            if (range.high && key >= *range.high) break;
            continue;
        }
        if (it->second) rows[key] = {key, *it->second, tx.id};
        else rows.erase(key);
    }
    std::vector<ScanRow> out;
    out.reserve(rows.size());
    for (auto& [_, row] : rows) out.push_back(std::move(row));
    return out;
}

void Executor::write(TxState& tx, TableId table, std::string key, std::optional<std::string> value) {
    require_active(tx);
    (void)store_.table(table);
    tx.writes[{table, std::move(key)}] = std::move(value);
}

CommitResult Executor::commit(TxState& tx) {
    require_active(tx);
    if (logger_.halted() && !tx.writes.empty()) {
        tx.status = TxStatus::Aborted;
        tx.result = CommitResult::aborted(AbortReason::IoFailure);
        return tx.result;
    }
    tx.status = TxStatus::Validating;
    auto guard = epochs_.acquire_guard();

    // lock phase, (table, key) order
    std::vector<std::pair<store::Record*, const std::pair<const RecordKey, std::optional<std::string>>*>> locked;
    std::map<TableId, std::uint64_t> own_bumps;
    locked.reserve(tx.writes.size());
    for (const auto& w : tx.writes) {
        auto& t = store_.table(w.first.first);
        auto* rec = t.find_or_create(w.first.second);
        rec->latch(tx.id);
        if (t.prepare_write(*rec, !w.second.has_value())) ++own_bumps[t.id()];
        locked.push_back({rec, &w});
    }
    auto finish = [&](CommitResult r) {
        for (auto& [rec, _] : locked) rec->unlatch();
        tx.status = r.is_committed() ? TxStatus::Committed : TxStatus::Aborted;
        tx.result = r;
        return r;
    };

    const Epoch at = guard.held_at();
    const SerializationSlot slot{at, SlotTier::Occ, seq_.fetch_add(1) + 1};

    // write preservation on every table touched
    auto tables = tx.read_tables();
    for (const auto& [k, _] : tx.writes) tables.insert(k.first);
    for (auto t : tables) {
        for (const auto& e : store_.table(t).wp().effective(at)) {
            if (e.tx != tx.id) return finish(CommitResult::aborted(AbortReason::OccWpConflict));
        }
    }

    // publish clues before validating, so a long transaction that latches one
    // of these records afterwards sees the read
    for (const auto& r : tx.occ_reads) {
        if (r.record != nullptr) r.record->bump_read_clue(at);
        store_.table(r.table).bump_max_read_epoch(at);
    }
    for (const auto& s : tx.scans) store_.table(s.table).bump_max_read_epoch(at);

    for (const auto& r : tx.occ_reads) {
        auto* rec = r.record != nullptr ? r.record : store_.table(r.table).find(r.key);
        if (rec == nullptr) continue;
        const auto owner = rec->latch_owner();
        if (!owner.nil() && owner != tx.id) return finish(CommitResult::aborted(AbortReason::OccReadValidationFail));
        if (rec->latest() != r.observed) return finish(CommitResult::aborted(AbortReason::OccReadValidationFail));
    }

    for (const auto& s : tx.scans) {
        const auto bumps = own_bumps.contains(s.table) ? own_bumps[s.table] : 0;
        if (store_.table(s.table).structure_version() != s.structure_version + bumps) {
            return finish(CommitResult::aborted(AbortReason::OccPhantom));
        }
    }

    for (auto& [rec, w] : locked) {
        auto v = rec->append(store_.next_version_id(), tx.id, w->second, slot);
        store::Store::commit_version(v, at);
        logger_.touch(at, w->first.first, rec);
    }
    return finish(CommitResult::committed(slot));
}

} // namespace hcc::occ
