#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <vector>

#include "hcc/durability.h"
#include "hcc/epoch.h"
#include "hcc/store.h"
#include "hcc/transaction.h"

namespace hcc::ltx {

/// Native slots sit above every front slot of the same epoch.
inline constexpr std::uint64_t kNativeBase = 1ULL << 32;
/// Forwarded arrivals count down from here, so a later arrival lands earlier.
inline constexpr std::uint64_t kFrontBase = kNativeBase - 1;

struct Config {
    bool order_forwarding{true};      // false: degraded MVTO-style validation
    bool aggressive_forwarding{true};
    std::optional<std::size_t> max_wait_epochs;
};

struct Stats {
    std::atomic<std::uint64_t> waits{0};
    std::atomic<std::uint64_t> forwarded{0};
    std::atomic<std::uint64_t> priority_violations{0};
    std::atomic<std::uint64_t> wait_cycles{0};
};

struct ForwardBound {
    Epoch bound{kNoEpoch};
    /// Must be placed ahead of an overwriter that already sits in `bound`.
    bool forced{false};
    std::vector<TransactionId> blockers;
    /// Lowest-slot committed version that overwrites something read.
    std::optional<SerializationSlot> first_overwriter;
};

/**
 * Long-transaction manager. Precommits are serialized by one mutex; reads
 * run on the caller's thread against the epoch-aligned snapshot.
 */
class Manager {
public:
    Manager(store::Store& store, epoch::EpochManager& epochs, durability::Logger& logger, Config cfg = {});

    /// Takes a guard at N, stages the transaction for N + 1 and registers
    /// write preservation. Throws error(RegistryFull) after rolling back.
    std::shared_ptr<TxState> begin(const std::set<TableId>& wp_tables,
                                   std::optional<std::set<TableId>> read_area);

    /// Blocks until the valid epoch is reached.
    ReadResult read(TxState& tx, TableId table, std::string_view key);
    std::vector<ScanRow> scan(TxState& tx, TableId table, const KeyRange& range);
    /// Throws error(WpMismatch) and aborts the transaction outside its WP.
    void write(TxState& tx, TableId table, std::string key, std::optional<std::string> value);

    /// User-side commit request; holds an epoch guard while deciding.
    CommitResult precommit(TxState& tx);
    /// Active: aborts now. Waiting: honoured at the next boundary.
    void request_abort(TxState& tx);
    [[nodiscard]] CommitResult poll(const TxState& tx) const;
    [[nodiscard]] TxStatus status(const TxState& tx) const;

    /// Runs on the epoch thread. Returns the waiters whose outcome is now decided.
    std::vector<std::pair<std::shared_ptr<TxState>, CommitResult>> resolve_waiters(Epoch ending);
    /// Removes the write preservation of transactions finalized since the last call.
    void apply_wp_removals();

    [[nodiscard]] std::optional<Epoch> min_live_floor() const;
    /// Forgets committed read marks at or below the safe epoch.
    void prune(Epoch safe);

    [[nodiscard]] ForwardBound compute_forward_bound(const TxState& tx) const;

    [[nodiscard]] const Config& config() const { return cfg_; }
    [[nodiscard]] const Stats& stats() const { return stats_; }
    [[nodiscard]] std::size_t live_count() const;
    [[nodiscard]] std::size_t waiting_count() const;

private:
    struct ReadMark {
        TransactionId reader;
        SerializationSlot reader_slot;
        std::optional<SerializationSlot> observed;
    };

    ForwardBound forward_bound_locked(const TxState& tx) const;
    CommitResult precommit_locked(TxState& tx, Epoch now);
    std::optional<AbortReason> validate_writes(const TxState& tx, SerializationSlot p,
                                               const std::vector<store::Record*>& records) const;
    void install(TxState& tx, SerializationSlot p, Epoch now, const std::vector<store::Record*>& records);
    void finalize(TxState& tx, CommitResult r);
    [[nodiscard]] bool has_other_ltx_version(const TxState& tx, Epoch e) const;
    void check_waits_for();
    void bump_structure(const TxState& tx, SerializationSlot p, const std::vector<store::Record*>& records) const;

    store::Store& store_;
    epoch::EpochManager& epochs_;
    durability::Logger& logger_;
    const Config cfg_;
    Stats stats_;

    mutable std::mutex mutex_;
    std::map<Epoch, std::uint64_t> begin_seq_;
    std::map<TransactionId, std::shared_ptr<TxState>> live_;
    std::map<TransactionId, std::shared_ptr<TxState>> waiting_;
    std::map<RecordKey, std::vector<ReadMark>> committed_reads_;
    std::vector<std::pair<TableId, TransactionId>> pending_wp_removals_;
    std::uint64_t front_counter_{0};
};

} // namespace hcc::ltx
