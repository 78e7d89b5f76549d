#include "hcc/store.h"

#include <algorithm>
#include <thread>

namespace hcc::store {

namespace {

constexpr TransactionId kGcOwner{~std::uint64_t{0}};

void atomic_max(std::atomic<Epoch>& target, Epoch e) {
    auto cur = target.load();
    while (cur < e && !target.compare_exchange_weak(cur, e)) {
    }
}

} // namespace

Record::Record(std::string key) : key_(std::move(key)), chain_(std::make_shared<const Chain>()) {}

VersionPtr Record::visible(SerializationSlot as_of) const {
    const auto c = chain();
    for (auto it = c->rbegin(); it != c->rend(); ++it) {
        if ((*it)->slot < as_of && (*it)->committed()) return *it;
    }
    return nullptr;
}

VersionPtr Record::latest() const {
    const auto c = chain();
    for (auto it = c->rbegin(); it != c->rend(); ++it) {
        if ((*it)->committed()) return *it;
    }
    return nullptr;
}

std::vector<VersionPtr> Record::committed_after(SerializationSlot after) const {
    std::vector<VersionPtr> out;
    for (const auto& v : *chain()) {
        if (after < v->slot && v->committed()) out.push_back(v);
    }
    return out;
}

void Record::bump_read_clue(Epoch e) { atomic_max(read_clue_, e); }

void Record::latch(TransactionId owner) {
    while (!try_latch(owner)) std::this_thread::yield();
}

bool Record::try_latch(TransactionId owner) {
    std::uint64_t expected = 0;
    return owner_.compare_exchange_strong(expected, owner.raw());
}

void Record::unlatch() { owner_.store(0, std::memory_order_release); }

VersionPtr Record::append(std::uint64_t id, TransactionId writer, std::optional<std::string> value,
                          SerializationSlot slot) {
    auto v = std::make_shared<Version>(id, writer, std::move(value), slot);
    auto next = std::make_shared<Chain>(*chain());
    auto pos = std::upper_bound(next->begin(), next->end(), slot,
                                [](const SerializationSlot& s, const VersionPtr& e) { return s < e->slot; });
    next->insert(pos, v);
    publish(std::move(next));
    return v;
}

PredicateEntry PredicateEntry::point(TableId t, std::string key, TransactionId reader) {
    std::string high = key;
    high.push_back('\0');
    return {t, PredicateKind::PointSearch, KeyRange{std::move(key), std::move(high)}, reader, {}, false};
}

PredicateEntry PredicateEntry::scan(TableId t, KeyRange range, TransactionId reader) {
    const auto kind = range.unbounded() ? PredicateKind::FullScan : PredicateKind::RangeScan;
    return {t, kind, std::move(range), reader, {}, false};
}

bool PredicateEntry::covers(std::string_view key) const {
    return kind == PredicateKind::FullScan || range.contains(key);
}

std::vector<std::pair<std::string, std::string>> ScanResult::rows() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : entries) {
        if (e.version && !e.version->deleted()) out.emplace_back(e.record->key(), *e.version->value);
    }
    return out;
}

Table::Table(TableId id, std::string name, std::size_t wp_capacity)
    : id_(id), name_(std::move(name)), wp_(wp_capacity) {}

Record* Table::find(std::string_view key) const {
    std::shared_lock lock(index_latch_);
    auto it = index_.find(key);
    return it == index_.end() ? nullptr : it->second.get();
}

Record* Table::find_or_create(std::string_view key) {
    if (auto* r = find(key)) return r;
    std::unique_lock lock(index_latch_);
    auto it = index_.find(key);
    if (it != index_.end()) return it->second.get();
    auto [pos, _] = index_.emplace(std::string(key), std::make_unique<Record>(std::string(key)));
    return pos->second.get();
}

std::vector<Record*> Table::records_in(const KeyRange& range) const {
    std::vector<Record*> out;
    std::shared_lock lock(index_latch_);
    auto it = range.low ? index_.lower_bound(*range.low) : index_.begin();
    for (; it != index_.end(); ++it) {
        if (range.high && it->first >= *range.high) break;
        out.push_back(it->second.get());
    }
    return out;
}

std::size_t Table::record_count() const {
    std::shared_lock lock(index_latch_);
    return index_.size();
}

bool Table::prepare_write(const Record& rec, bool is_delete) {
    const auto tip = rec.latest();
    const bool present = tip && !tip->deleted();
    if (present != is_delete) return false;
    structure_version_.fetch_add(1);
    return true;
}

void Table::bump_max_read_epoch(Epoch e) { atomic_max(max_read_epoch_, e); }

void Table::register_predicate(PredicateEntry entry) {
    std::lock_guard lock(predicate_mutex_);
    predicates_.push_back(std::move(entry));
}

void Table::commit_predicates(TransactionId reader, SerializationSlot slot) {
    std::lock_guard lock(predicate_mutex_);
    for (auto& p : predicates_) {
        if (p.reader == reader) {
            p.committed = true;
            p.reader_slot = slot;
        }
    }
}

void Table::remove_predicates(TransactionId reader) {
    std::lock_guard lock(predicate_mutex_);
    std::erase_if(predicates_, [reader](const PredicateEntry& p) { return p.reader == reader; });
}

std::vector<PredicateEntry> Table::committed_covering(std::string_view key, SerializationSlot above) const {
    std::vector<PredicateEntry> out;
    std::lock_guard lock(predicate_mutex_);
    for (const auto& p : predicates_) {
        if (p.committed && above < p.reader_slot && p.covers(key)) out.push_back(p);
    }
    return out;
}

std::vector<PredicateEntry> Table::predicates() const {
    std::lock_guard lock(predicate_mutex_);
    return predicates_;
}

void Table::prune_predicates(Epoch e) {
    std::lock_guard lock(predicate_mutex_);
    std::erase_if(predicates_, [e](const PredicateEntry& p) { return p.committed && p.reader_slot.epoch <= e; });
}

std::uint64_t digest(const StoreState& state) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::string_view bytes) {
        for (unsigned char c : bytes) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
    };
    auto mix_u32 = [&mix](std::uint32_t v) {
        char buf[4];
        for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
        mix({buf, 4});
    };
    for (const auto& [k, v] : state) {
        mix_u32(k.first);
        mix_u32(static_cast<std::uint32_t>(k.second.size()));
        mix(k.second);
        mix_u32(static_cast<std::uint32_t>(v.size()));
        mix(v);
    }
    return h;
}

Store::Store(std::size_t wp_capacity) : wp_capacity_(wp_capacity), tables_(kMaxTables) {}

TableId Store::create_table(std::string name) {
    std::lock_guard lock(create_mutex_);
    const auto id = table_count_.load();
    if (id >= kMaxTables) throw error(ErrorCode::ConfigError, "too many tables");
    tables_[id] = std::make_unique<Table>(static_cast<TableId>(id), std::move(name), wp_capacity_);
    table_count_.store(id + 1, std::memory_order_release);
    return static_cast<TableId>(id);
}

Table& Store::table(TableId id) const {
    if (id >= table_count()) throw error(ErrorCode::UnknownTable, "table " + std::to_string(id));
    return *tables_[id];
}

std::optional<TableId> Store::find_table(std::string_view name) const {
    for (std::size_t i = 0; i < table_count(); ++i) {
        if (tables_[i]->name() == name) return static_cast<TableId>(i);
    }
    return std::nullopt;
}

VersionPtr Store::get_visible(TableId table_id, std::string_view key, SerializationSlot as_of) const {
    const auto* rec = table(table_id).find(key);
    if (rec == nullptr) return nullptr;
    auto v = rec->visible(as_of);
    if (!v || v->deleted()) return nullptr;
    return v;
}

VersionPtr Store::install_inflight(TableId table_id, std::string_view key, TransactionId writer,
                                   std::optional<std::string> value, SerializationSlot slot) {
    auto& t = table(table_id);
    auto* rec = t.find_or_create(key);
    t.prepare_write(*rec, !value.has_value());
    return rec->append(next_version_id(), writer, std::move(value), slot);
}

void Store::commit_version(const VersionPtr& v, Epoch commit_epoch) {
    v->commit_epoch.store(commit_epoch, std::memory_order_relaxed);
    v->status.store(VersionStatus::Committed, std::memory_order_release);
}

void Store::abort_version(Record& rec, const VersionPtr& v) {
    v->status.store(VersionStatus::Aborted, std::memory_order_release);
    auto next = std::make_shared<Chain>(*rec.chain());
    std::erase(*next, v);
    rec.publish(std::move(next));
}

void Store::bump_read_clue(TableId table_id, std::string_view key, Epoch e) {
    auto& t = table(table_id);
    if (auto* rec = t.find(key)) rec->bump_read_clue(e);
    t.bump_max_read_epoch(e);
}

void Store::register_predicate(PredicateEntry entry) { table(entry.table).register_predicate(std::move(entry)); }

ScanResult Store::scan(TableId table_id, const KeyRange& range, SerializationSlot as_of) const {
    const auto& t = table(table_id);
    ScanResult out;
    out.structure_version = t.structure_version();
    for (auto* rec : t.records_in(range)) out.entries.push_back({rec, rec->visible(as_of)});
    return out;
}

std::size_t Store::collect_garbage(SerializationSlot horizon) {
    std::size_t freed = 0;
    for (std::size_t i = 0; i < table_count(); ++i) {
        for (auto* rec : tables_[i]->records_in({})) {
            const auto cur = rec->chain();
            std::size_t committed_below = 0;
            bool aborted = false;
            for (const auto& v : *cur) {
                const auto st = v->status.load(std::memory_order_acquire);
                if (st == VersionStatus::Aborted) aborted = true;
                if (st == VersionStatus::Committed && v->slot < horizon) ++committed_below;
            }
            if (committed_below <= 1 && !aborted) continue;
            if (!rec->try_latch(kGcOwner)) continue;
            const auto base = rec->chain();
            // newest committed version below the horizon stays readable
            std::ptrdiff_t keep_from = -1;
            for (std::size_t j = 0; j < base->size(); ++j) {
                const auto& v = (*base)[j];
                if (v->committed() && v->slot < horizon) keep_from = static_cast<std::ptrdiff_t>(j);
            }
            auto next = std::make_shared<Chain>();
            for (std::size_t j = 0; j < base->size(); ++j) {
                const auto& v = (*base)[j];
                const auto st = v->status.load(std::memory_order_acquire);
                const bool shadowed = st == VersionStatus::Committed && v->slot < horizon &&
                                      static_cast<std::ptrdiff_t>(j) < keep_from;
                if (st == VersionStatus::Aborted || shadowed) {
                    ++freed;
                    continue;
                }
                next->push_back(v);
            }
            rec->publish(std::move(next));
            rec->unlatch();
        }
    }
    return freed;
}

StoreState Store::state() const {
    StoreState out;
    for (std::size_t i = 0; i < table_count(); ++i) {
        for (auto* rec : tables_[i]->records_in({})) {
            auto v = rec->latest();
            if (v && !v->deleted()) out.emplace(std::pair{static_cast<TableId>(i), rec->key()}, *v->value);
        }
    }
    return out;
}

} // namespace hcc::store
