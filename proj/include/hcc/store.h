#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "hcc/types.h"
#include "hcc/wp.h"

namespace hcc::store {

enum class VersionStatus : std::uint8_t { InFlight, Committed, Aborted };

struct Version {
    Version(std::uint64_t id_, TransactionId writer_, std::optional<std::string> value_,
            SerializationSlot slot_)
        : id(id_), writer(writer_), value(std::move(value_)), slot(slot_) {}

    const std::uint64_t id;
    const TransactionId writer;
    const std::optional<std::string> value; // nullopt: delete marker
    const SerializationSlot slot;
    std::atomic<Epoch> commit_epoch{kNoEpoch};
    std::atomic<VersionStatus> status{VersionStatus::InFlight};
    std::atomic<bool> persisted{false};

    [[nodiscard]] bool deleted() const { return !value.has_value(); }
    [[nodiscard]] bool committed() const { return status.load(std::memory_order_acquire) == VersionStatus::Committed; }
};

using VersionPtr = std::shared_ptr<Version>;
/// Slot-ascending. Published copy-on-write, so readers never take the latch.
using Chain = std::vector<VersionPtr>;

class Record {
public:
    explicit Record(std::string key);

    [[nodiscard]] const std::string& key() const { return key_; }
    [[nodiscard]] std::shared_ptr<const Chain> chain() const { return std::atomic_load(&chain_); }

    /// Committed version (delete markers included) with the greatest slot < as_of.
    [[nodiscard]] VersionPtr visible(SerializationSlot as_of) const;
    /// Committed version with the greatest slot.
    [[nodiscard]] VersionPtr latest() const;
    /// Committed versions with slot > after, ascending.
    [[nodiscard]] std::vector<VersionPtr> committed_after(SerializationSlot after) const;

    [[nodiscard]] Epoch read_clue() const { return read_clue_.load(); }
    void bump_read_clue(Epoch e);

    // write latch; owner identity lets optimistic validators spot foreign holders
    void latch(TransactionId owner);
    bool try_latch(TransactionId owner);
    void unlatch();
    [[nodiscard]] TransactionId latch_owner() const { return TransactionId{owner_.load()}; }

    /// Inserts an in-flight version at its slot position. Caller holds the latch.
    VersionPtr append(std::uint64_t id, TransactionId writer, std::optional<std::string> value,
                      SerializationSlot slot);
    /// Caller holds the latch.
    void publish(std::shared_ptr<const Chain> next) { std::atomic_store(&chain_, std::move(next)); }

private:
    const std::string key_;
    std::shared_ptr<const Chain> chain_;
    std::atomic<Epoch> read_clue_{kNoEpoch};
    std::atomic<std::uint64_t> owner_{0};
};

enum class PredicateKind : std::uint8_t { FullScan, RangeScan, PointSearch };

struct PredicateEntry {
    TableId table{0};
    PredicateKind kind{PredicateKind::FullScan};
    KeyRange range; // empty for FullScan, [key, key+"\0") for PointSearch
    TransactionId reader;
    SerializationSlot reader_slot{};
    bool committed{false};

    static PredicateEntry point(TableId t, std::string key, TransactionId reader);
    static PredicateEntry scan(TableId t, KeyRange range, TransactionId reader);

    [[nodiscard]] bool covers(std::string_view key) const;
};

struct ScanEntry {
    Record* record;
    VersionPtr version; // visible version, may be null or a delete marker
};

struct ScanResult {
    std::vector<ScanEntry> entries; // every indexed record in range, key order
    std::uint64_t structure_version{0};

    /// Rows with a live value, as the user sees them.
    [[nodiscard]] std::vector<std::pair<std::string, std::string>> rows() const;
};

class Table {
public:
    Table(TableId id, std::string name, std::size_t wp_capacity);

    [[nodiscard]] TableId id() const { return id_; }
    [[nodiscard]] const std::string& name() const { return name_; }

    [[nodiscard]] Record* find(std::string_view key) const;
    /// Looks up or creates the record; created records carry no versions.
    Record* find_or_create(std::string_view key);
    [[nodiscard]] std::vector<Record*> records_in(const KeyRange& range) const;
    [[nodiscard]] std::size_t record_count() const;

    [[nodiscard]] std::uint64_t structure_version() const { return structure_version_.load(); }
    /// Bumps the structure version when writing `value` over the current tip
    /// inserts or removes the key. Caller holds the record latch.
    bool prepare_write(const Record& rec, bool is_delete);
    void bump_structure_version() { structure_version_.fetch_add(1); }

    [[nodiscard]] Epoch max_read_epoch() const { return max_read_epoch_.load(); }
    void bump_max_read_epoch(Epoch e);

    [[nodiscard]] wp::WpRegistry& wp() { return wp_; }
    [[nodiscard]] const wp::WpRegistry& wp() const { return wp_; }

    void register_predicate(PredicateEntry entry);
    void commit_predicates(TransactionId reader, SerializationSlot slot);
    void remove_predicates(TransactionId reader);
    /// Committed predicates with reader_slot > above covering `key`.
    [[nodiscard]] std::vector<PredicateEntry> committed_covering(std::string_view key,
                                                                 SerializationSlot above) const;
    [[nodiscard]] std::vector<PredicateEntry> predicates() const;
    /// Drops committed predicates whose reader slot epoch is <= e.
    void prune_predicates(Epoch e);

private:
    const TableId id_;
    const std::string name_;
    mutable std::shared_mutex index_latch_;
    std::map<std::string, std::unique_ptr<Record>, std::less<>> index_;
    std::atomic<std::uint64_t> structure_version_{0};
    std::atomic<Epoch> max_read_epoch_{kNoEpoch};
    wp::WpRegistry wp_;
    mutable std::mutex predicate_mutex_;
    std::vector<PredicateEntry> predicates_;
};

/// Latest committed live value of every key.
using StoreState = std::map<std::pair<TableId, std::string>, std::string>;

std::uint64_t digest(const StoreState& state);

class Store {
public:
    static constexpr std::size_t kMaxTables = 1024;

    explicit Store(std::size_t wp_capacity = 64);

    TableId create_table(std::string name);
    /// Throws error(UnknownTable).
    [[nodiscard]] Table& table(TableId id) const;
    [[nodiscard]] std::size_t table_count() const { return table_count_.load(std::memory_order_acquire); }
    [[nodiscard]] std::optional<TableId> find_table(std::string_view name) const;

    /// Visible committed value; absent when missing or deleted.
    [[nodiscard]] VersionPtr get_visible(TableId table, std::string_view key, SerializationSlot as_of) const;

    /// Appends an in-flight version for `writer`. The record latch must be held
    /// by the caller when the record exists; a new record is created here.
    VersionPtr install_inflight(TableId table, std::string_view key, TransactionId writer,
                                std::optional<std::string> value, SerializationSlot slot);
    static void commit_version(const VersionPtr& v, Epoch commit_epoch);
    /// Marks the version aborted and unlinks it. Caller holds the record latch.
    static void abort_version(Record& rec, const VersionPtr& v);

    void bump_read_clue(TableId table, std::string_view key, Epoch e);
    void register_predicate(PredicateEntry entry);

    [[nodiscard]] ScanResult scan(TableId table, const KeyRange& range, SerializationSlot as_of) const;

    [[nodiscard]] std::uint64_t next_version_id() { return version_ids_.fetch_add(1) + 1; }

    /// Prunes aborted versions and every committed version shadowed by a newer
    /// one below `horizon`.
    std::size_t collect_garbage(SerializationSlot horizon);

    [[nodiscard]] StoreState state() const;

private:
    const std::size_t wp_capacity_;
    std::mutex create_mutex_;
    std::vector<std::unique_ptr<Table>> tables_;
    std::atomic<std::size_t> table_count_{0};
    std::atomic<std::uint64_t> version_ids_{0};
};

} // namespace hcc::store
