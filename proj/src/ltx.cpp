#include "hcc/ltx.h"

#include <algorithm>
#include <functional>

namespace hcc::ltx {

namespace {

void require_active(const TxState& tx) {
    if (tx.status != TxStatus::Active) throw error(ErrorCode::TxInactive, tx.id.str() + " is not active");
}

template <class A, class B>
bool intersects(const A& a, const B& b) {
    return std::any_of(a.begin(), a.end(), [&b](const auto& x) { return b.contains(x); });
}

SerializationSlot native_slot(const TxState& tx) {
    return {tx.valid_epoch, SlotTier::Ltx, kNativeBase + tx.id.seq()};
}

bool present(const store::VersionPtr& v) { return v && !v->deleted(); }

} // namespace

Manager::Manager(store::Store& store, epoch::EpochManager& epochs, durability::Logger& logger, Config cfg)
    : store_(store), epochs_(epochs), logger_(logger), cfg_(cfg) {}

std::shared_ptr<TxState> Manager::begin(const std::set<TableId>& wp_tables,
                                        std::optional<std::set<TableId>> read_area) {
    for (auto t : wp_tables) (void)store_.table(t);
    if (read_area) {
        for (auto t : *read_area) (void)store_.table(t);
    }
    auto guard = epochs_.acquire_guard();
    const Epoch valid = guard.held_at() + 1;

    auto tx = std::make_shared<TxState>();
    tx->mode = TxMode::Ltx;
    tx->valid_epoch = valid;
    tx->snapshot = SerializationSlot::epoch_start(valid);
    tx->wp_set = wp_tables;
    tx->read_area = std::move(read_area);
    tx->forward_bound = valid;
    tx->floor = valid;

    std::lock_guard lock(mutex_);
    std::erase_if(begin_seq_, [valid](const auto& kv) { return kv.first < valid; });
    tx->id = TransactionId::ltx(valid, begin_seq_[valid]++);

    std::vector<TableId> done;
    try {
        for (auto t : wp_tables) {
            store_.table(t).wp().register_entry(tx->id, valid);
            done.push_back(t);
        }
    } catch (...) {
        for (auto t : done) store_.table(t).wp().remove(tx->id);
        throw;
    }
    live_[tx->id] = tx;
    return tx;
}

ReadResult Manager::read(TxState& tx, TableId table, std::string_view key) {
    require_active(tx);
    if (tx.read_area && !tx.read_area->contains(table)) {
        throw error(ErrorCode::ReadAreaViolation, "table " + std::to_string(table) + " outside read area");
    }
    auto& t = store_.table(table);
    RecordKey rk{table, std::string(key)};
    if (auto own = tx.writes.find(rk); own != tx.writes.end()) return {own->second, tx.id};
    epochs_.wait_until(tx.valid_epoch);

    auto it = tx.ltx_reads.find(rk);
    if (it == tx.ltx_reads.end()) {
        auto* rec = t.find(key);
        it = tx.ltx_reads.emplace(rk, ltx::ReadEntry{rec ? rec->visible(tx.snapshot) : nullptr}).first;
        auto pred = store::PredicateEntry::point(table, rk.second, tx.id);
        store_.register_predicate(pred);
        tx.predicates.push_back(std::move(pred));
    }
    const auto& v = it->second.observed;
    return {present(v) ? v->value : std::nullopt, v ? v->writer : TransactionId{}};
}

std::vector<ScanRow> Manager::scan(TxState& tx, TableId table, const KeyRange& range) {
    require_active(tx);
    if (tx.read_area && !tx.read_area->contains(table)) {
        throw error(ErrorCode::ReadAreaViolation, "table " + std::to_string(table) + " outside read area");
    }
    auto& t = store_.table(table);
    epochs_.wait_until(tx.valid_epoch);

    std::map<std::string, ScanRow, std::less<>> rows;
    for (auto* rec : t.records_in(range)) {
        RecordKey rk{table, rec->key()};
        auto it = tx.ltx_reads.find(rk);
        if (it == tx.ltx_reads.end()) it = tx.ltx_reads.emplace(rk, ltx::ReadEntry{rec->visible(tx.snapshot)}).first;
        const auto& v = it->second.observed;
        if (present(v)) rows[rec->key()] = {rec->key(), *v->value, v->writer};
    }
    auto pred = store::PredicateEntry::scan(table, range, tx.id);
    store_.register_predicate(pred);
    tx.predicates.push_back(std::move(pred));

    for (auto it = tx.writes.lower_bound({table, range.low.value_or(std::string{})});
         it != tx.writes.end() && it->first.first == table; ++it) {
        const auto& key = it->first.second;
        if (range.high && key >= *range.high) break;
        if (it->second) rows[key] = {key, *it->second, tx.id};
        else rows.erase(key);
    }
    std::vector<ScanRow> out;
    out.reserve(rows.size());
    for (auto& [_, row] : rows) out.push_back(std::move(row));
    return out;
}

void Manager::write(TxState& tx, TableId table, std::string key, std::optional<std::string> value) {
    require_active(tx);
    (void)store_.table(table);
    if (!tx.wp_set.contains(table)) {
        {
            std::lock_guard lock(mutex_);
            finalize(tx, CommitResult::aborted(AbortReason::WpMismatch));
        }
        throw error(ErrorCode::WpMismatch, "table " + std::to_string(table) + " is not in the write preservation of " +
                                               tx.id.str());
    }
    tx.writes[{table, std::move(key)}] = std::move(value);
}

CommitResult Manager::precommit(TxState& tx) {
    require_active(tx);
    epochs_.wait_until(tx.valid_epoch);
    auto guard = epochs_.acquire_guard();
    std::lock_guard lock(mutex_);
    tx.status = TxStatus::Validating;
    return precommit_locked(tx, guard.held_at());
}

void Manager::request_abort(TxState& tx) {
    std::lock_guard lock(mutex_);
    if (tx.finished()) return;
    if (tx.status == TxStatus::Waiting) {
        tx.user_abort_requested = true;
        return;
    }
    finalize(tx, CommitResult::aborted(AbortReason::UserAbort));
}

CommitResult Manager::poll(const TxState& tx) const {
    std::lock_guard lock(mutex_);
    return tx.result;
}

TxStatus Manager::status(const TxState& tx) const {
    std::lock_guard lock(mutex_);
    return tx.status;
}

ForwardBound Manager::compute_forward_bound(const TxState& tx) const {
    std::lock_guard lock(mutex_);
    return forward_bound_locked(tx);
}

ForwardBound Manager::forward_bound_locked(const TxState& tx) const {
    ForwardBound out;
    out.bound = tx.valid_epoch;

    if (cfg_.order_forwarding) {
        const auto read_tables = tx.read_tables();
        for (const auto& [uid, u] : live_) {
            if (!(uid < tx.id)) break; // map order is priority order
            if (!u->finished() && intersects(u->wp_set, read_tables)) out.blockers.push_back(uid);
        }
    }

    auto consider = [&out](const store::VersionPtr& v) {
        if (!out.first_overwriter || v->slot < *out.first_overwriter) out.first_overwriter = v->slot;
        out.bound = std::min(out.bound, v->slot.epoch);
    };
    for (const auto& [rk, entry] : tx.ltx_reads) {
        const auto* rec = store_.table(rk.first).find(rk.second);
        if (rec == nullptr) continue;
        const auto after = entry.observed ? entry.observed->slot : SerializationSlot{};
        for (const auto& v : rec->committed_after(after)) {
            if (v->writer != tx.id) consider(v);
        }
    }
    // keys that appeared inside a scanned range after the scan
    for (const auto& p : tx.predicates) {
        if (p.kind == store::PredicateKind::PointSearch) continue;
        for (auto* rec : store_.table(p.table).records_in(p.range)) {
            if (tx.ltx_reads.contains({p.table, rec->key()})) continue;
            for (const auto& v : rec->committed_after({})) {
                if (v->writer != tx.id) consider(v);
            }
        }
    }
    out.forced = out.bound < tx.valid_epoch || (out.first_overwriter && *out.first_overwriter < native_slot(tx));
    return out;
}

bool Manager::has_other_ltx_version(const TxState& tx, Epoch e) const {
    for (const auto& [rk, _] : tx.writes) {
        const auto* rec = store_.table(rk.first).find(rk.second);
        if (rec == nullptr) continue;
        for (const auto& v : *rec->chain()) {
            if (v->committed() && v->writer != tx.id && v->slot.epoch == e && v->slot.tier == SlotTier::Ltx) return true;
        }
    }
    return false;
}

CommitResult Manager::precommit_locked(TxState& tx, Epoch now) {
    auto decide = [&](CommitResult r) {
        finalize(tx, r);
        return r;
    };
    auto wait = [&](std::vector<TransactionId> blockers) {
        for (auto b : blockers) {
            if (!b.has_priority_over(tx.id)) stats_.priority_violations.fetch_add(1);
        }
        stats_.waits.fetch_add(1);
        auto r = CommitResult::waiting(std::move(blockers));
        tx.status = TxStatus::Waiting;
        tx.result = r;
        waiting_[tx.id] = live_.at(tx.id);
        return r;
    };

    if (tx.user_abort_requested) return decide(CommitResult::aborted(AbortReason::UserAbort));
    if (logger_.halted() && !tx.writes.empty()) return decide(CommitResult::aborted(AbortReason::IoFailure));
    for (const auto& [rk, _] : tx.writes) {
        if (!tx.wp_set.contains(rk.first)) return decide(CommitResult::aborted(AbortReason::WpMismatch));
    }

    const auto fb = forward_bound_locked(tx);
    if (!fb.blockers.empty()) return wait(fb.blockers);

    const auto native = native_slot(tx);
    std::vector<SerializationSlot> candidates;
    if (!cfg_.order_forwarding) {
        if (fb.first_overwriter && *fb.first_overwriter < native) {
            return decide(CommitResult::aborted(AbortReason::LtxReadUpperBound));
        }
        candidates.push_back(native);
    } else {
        tx.forward_bound = std::min(tx.forward_bound, fb.bound);
        const bool forced = fb.forced || tx.forward_bound < tx.valid_epoch;
        for (const auto& [rk, entry] : tx.ltx_reads) {
            const auto& v = entry.observed;
            if (v && v->writer != tx.id && v->slot.epoch >= tx.forward_bound && forced) {
                return decide(CommitResult::aborted(AbortReason::LtxReadUpperBound));
            }
        }

        if (!tx.writes.empty()) {
            const auto wt = tx.write_tables();
            std::vector<TransactionId> readers;
            for (const auto& [uid, u] : live_) {
                if (!(uid < tx.id)) break;
                if (u->finished() || u->forward_bound < tx.forward_bound) continue;
                if (!u->read_area || intersects(*u->read_area, wt)) readers.push_back(uid);
            }
            if (!readers.empty()) return wait(std::move(readers));
        }

        auto front = [&] { return SerializationSlot{tx.forward_bound, SlotTier::Ltx, kFrontBase - front_counter_++}; };
        if (forced) {
            candidates.push_back(front());
        } else {
            if (cfg_.aggressive_forwarding && has_other_ltx_version(tx, tx.valid_epoch)) candidates.push_back(front());
            candidates.push_back(native);
        }
    }

    std::vector<store::Record*> records;
    records.reserve(tx.writes.size());
    for (const auto& [rk, _] : tx.writes) {
        auto* rec = store_.table(rk.first).find_or_create(rk.second);
        rec->latch(tx.id);
        records.push_back(rec);
    }
    AbortReason reason = AbortReason::LtxWriteConflict;
    for (const auto& p : candidates) {
        if (p.epoch <= logger_.safe_epoch()) continue;
        bump_structure(tx, p, records);
        if (auto why = validate_writes(tx, p, records)) {
            reason = *why;
            continue;
        }
        install(tx, p, now, records);
        for (auto* rec : records) rec->unlatch();
        if (p.seq < kNativeBase) stats_.forwarded.fetch_add(1);
        return decide(CommitResult::committed(p));
    }
    for (auto* rec : records) rec->unlatch();
    return decide(CommitResult::aborted(reason));
}

void Manager::bump_structure(const TxState& tx, SerializationSlot p,
                             const std::vector<store::Record*>& records) const {
    std::size_t i = 0;
    for (const auto& [rk, value] : tx.writes) {
        const auto* rec = records[i++];
        const bool is_delete = !value.has_value();
        if (present(rec->latest()) == is_delete || present(rec->visible(p)) == is_delete) {
            store_.table(rk.first).bump_structure_version();
        }
    }
}

std::optional<AbortReason> Manager::validate_writes(const TxState& tx, SerializationSlot p,
                                                    const std::vector<store::Record*>& records) const {
    std::size_t i = 0;
    for (const auto& [rk, value] : tx.writes) {
        const auto* rec = records[i++];
        const auto& table = store_.table(rk.first);
        if (rec->read_clue() >= p.epoch) return AbortReason::LtxWriteConflict;
        if (present(rec->visible(p)) == !value.has_value() && table.max_read_epoch() >= p.epoch) {
            return AbortReason::LtxPhantom;
        }

        std::set<TransactionId> marked;
        if (auto it = committed_reads_.find(rk); it != committed_reads_.end()) {
            for (const auto& m : it->second) {
                marked.insert(m.reader);
                if (m.reader != tx.id && p < m.reader_slot && (!m.observed || *m.observed < p)) {
                    return AbortReason::LtxWriteConflict;
                }
            }
        }
        for (const auto& pred : table.committed_covering(rk.second, p)) {
            if (pred.reader != tx.id && !marked.contains(pred.reader)) return AbortReason::LtxPhantom;
        }

        if (!cfg_.order_forwarding) {
            // a live later reader would have to see this write
            for (const auto& pred : table.predicates()) {
                if (pred.committed || !(tx.id < pred.reader) || !pred.covers(rk.second)) continue;
                auto it = live_.find(pred.reader);
                if (it != live_.end() && !it->second->finished()) return AbortReason::LtxWriteConflict;
            }
        }
    }
    return std::nullopt;
}

void Manager::install(TxState& tx, SerializationSlot p, Epoch now, const std::vector<store::Record*>& records) {
    std::size_t i = 0;
    for (const auto& [rk, value] : tx.writes) {
        auto* rec = records[i++];
        auto v = rec->append(store_.next_version_id(), tx.id, value, p);
        store::Store::commit_version(v, now);
        logger_.touch(now, rk.first, rec);
    }
}

void Manager::finalize(TxState& tx, CommitResult r) {
    tx.result = r;
    tx.status = r.is_committed() ? TxStatus::Committed : TxStatus::Aborted;

    std::set<TableId> pred_tables;
    for (const auto& p : tx.predicates) pred_tables.insert(p.table);
    if (r.is_committed()) {
        for (auto t : pred_tables) store_.table(t).commit_predicates(tx.id, r.slot);
        for (const auto& [rk, entry] : tx.ltx_reads) {
            std::optional<SerializationSlot> observed;
            if (entry.observed) observed = entry.observed->slot;
            committed_reads_[rk].push_back({tx.id, r.slot, observed});
        }
        for (auto& [uid, u] : live_) {
            if (uid != tx.id) u->floor = std::min(u->floor, r.slot.epoch);
        }
    } else {
        for (auto t : pred_tables) store_.table(t).remove_predicates(tx.id);
    }
    live_.erase(tx.id);
    waiting_.erase(tx.id);
    for (auto t : tx.wp_set) pending_wp_removals_.push_back({t, tx.id});
}

std::vector<std::pair<std::shared_ptr<TxState>, CommitResult>> Manager::resolve_waiters(Epoch ending) {
    std::lock_guard lock(mutex_);
    std::vector<std::pair<std::shared_ptr<TxState>, CommitResult>> out;
    std::vector<std::shared_ptr<TxState>> order;
    for (const auto& [_, tx] : waiting_) order.push_back(tx);

    for (auto& tx : order) {
        if (tx->user_abort_requested) {
            finalize(*tx, CommitResult::aborted(AbortReason::UserAbort));
            out.push_back({tx, tx->result});
            continue;
        }
        if (cfg_.max_wait_epochs && ++tx->waited_epochs > *cfg_.max_wait_epochs) {
            finalize(*tx, CommitResult::aborted(AbortReason::UserAbort));
            out.push_back({tx, tx->result});
            continue;
        }
        const auto r = precommit_locked(*tx, ending);
        if (!r.is_waiting()) out.push_back({tx, r});
    }
    check_waits_for();
    return out;
}

void Manager::check_waits_for() {
    // three-colour DFS over waiter -> blocker edges
    std::map<TransactionId, int> colour;
    std::function<bool(TransactionId)> visit = [&](TransactionId id) {
        colour[id] = 1;
        auto it = waiting_.find(id);
        if (it != waiting_.end()) {
            for (auto b : it->second->result.waiting_for) {
                const int c = colour[b];
                if (c == 1) return true;
                if (c == 0 && visit(b)) return true;
            }
        }
        colour[id] = 2;
        return false;
    };
    for (const auto& [id, _] : waiting_) {
        if (colour[id] == 0 && visit(id)) {
            stats_.wait_cycles.fetch_add(1);
            return;
        }
    }
}

void Manager::apply_wp_removals() {
    std::vector<std::pair<TableId, TransactionId>> pending;
    {
        std::lock_guard lock(mutex_);
        pending.swap(pending_wp_removals_);
    }
    for (const auto& [t, id] : pending) store_.table(t).wp().remove(id);
}

std::optional<Epoch> Manager::min_live_floor() const {
    std::lock_guard lock(mutex_);
    std::optional<Epoch> out;
    for (const auto& [_, tx] : live_) {
        if (!out || tx->floor < *out) out = tx->floor;
    }
    return out;
}

void Manager::prune(Epoch safe) {
    std::lock_guard lock(mutex_);
    for (auto it = committed_reads_.begin(); it != committed_reads_.end();) {
        std::erase_if(it->second, [safe](const ReadMark& m) { return m.reader_slot.epoch <= safe; });
        it = it->second.empty() ? committed_reads_.erase(it) : std::next(it);
    }
    for (std::size_t t = 0; t < store_.table_count(); ++t) store_.table(static_cast<TableId>(t)).prune_predicates(safe);
}

std::size_t Manager::live_count() const {
    std::lock_guard lock(mutex_);
    return live_.size();
}

std::size_t Manager::waiting_count() const {
    std::lock_guard lock(mutex_);
    return waiting_.size();
}

} // namespace hcc::ltx
