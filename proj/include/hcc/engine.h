#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hcc/durability.h"
#include "hcc/epoch.h"
#include "hcc/history.h"
#include "hcc/ltx.h"
#include "hcc/occ.h"
#include "hcc/store.h"
#include "hcc/transaction.h"

namespace hcc {

struct EngineConfig {
    std::size_t wp_capacity{64};
    /// Zero leaves epochs to advance_epoch().
    std::chrono::milliseconds epoch_period{40};
    std::optional<std::filesystem::path> log_path;
    bool sync_log{true};
    bool order_forwarding{true};
    bool aggressive_forwarding{true};
    std::optional<std::size_t> max_wait_epochs;
};

struct TxOptions {
    TxMode mode{TxMode::Occ};
    std::set<TableId> wp_tables;
    std::optional<std::set<TableId>> read_area;

    static TxOptions occ() { return {}; }
    static TxOptions ltx(std::set<TableId> wp, std::optional<std::set<TableId>> read_area = std::nullopt) {
        return {TxMode::Ltx, std::move(wp), std::move(read_area)};
    }
    static TxOptions read_only() { return {TxMode::ReadOnly, {}, {}}; }
};

class Engine;

/// Owned by one thread at a time. Cheap to move.
class TransactionHandle {
public:
    TransactionHandle() = default;

    [[nodiscard]] TransactionId id() const { return state_->id; }
    [[nodiscard]] TxMode mode() const { return state_->mode; }
    [[nodiscard]] bool valid() const { return state_ != nullptr; }
    /// Snapshot slot of long and read-only transactions.
    [[nodiscard]] SerializationSlot snapshot() const { return state_->snapshot; }
    [[nodiscard]] Epoch valid_epoch() const { return state_->valid_epoch; }

private:
    friend class Engine;
    explicit TransactionHandle(std::shared_ptr<TxState> s) : state_(std::move(s)) {}
    std::shared_ptr<TxState> state_;
};

struct EngineStats {
    std::uint64_t waits{0};
    std::uint64_t forwarded{0};
    std::uint64_t priority_violations{0};
    std::uint64_t wait_cycles{0};
    std::uint64_t log_records{0};
};

class Engine {
public:
    using EpochObserver = std::function<void(Epoch ended)>;

    explicit Engine(EngineConfig cfg = {});
    ~Engine();
    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    TableId create_table(std::string name);
    [[nodiscard]] std::optional<TableId> find_table(std::string_view name) const { return store_.find_table(name); }

    TransactionHandle begin(const TxOptions& opts = {});

    std::optional<std::string> read(TransactionHandle& h, TableId table, std::string_view key);
    /// Same as read, also reporting which transaction wrote the returned version.
    ReadResult read_versioned(TransactionHandle& h, TableId table, std::string_view key);
    std::vector<std::pair<std::string, std::string>> scan(TransactionHandle& h, TableId table,
                                                          const KeyRange& range = {});
    void write(TransactionHandle& h, TableId table, std::string key, std::string value);
    void erase(TransactionHandle& h, TableId table, std::string key);

    CommitResult commit(TransactionHandle& h);
    /// Current outcome; long transactions move out of Waiting only at epoch boundaries.
    CommitResult poll(const TransactionHandle& h) const;
    /// Blocks across epoch boundaries until the outcome is decided. Needs the ticker.
    CommitResult wait(const TransactionHandle& h) const;
    void abort(TransactionHandle& h);
    [[nodiscard]] TxStatus status(const TransactionHandle& h) const;

    /// Not thread-safe with running transactions; set before use.
    void set_trace_sink(oracle::TraceSink* sink) { sink_ = sink; }
    /// Runs at the very end of each epoch's boundary processing.
    void set_epoch_observer(EpochObserver obs) { observer_ = std::move(obs); }

    Epoch advance_epoch() { return epochs_.advance(); }
    [[nodiscard]] Epoch current_epoch() const { return epochs_.current(); }
    [[nodiscard]] Epoch durable_epoch() const { return logger_.durable_epoch(); }
    [[nodiscard]] Epoch safe_epoch() const { return logger_.safe_epoch(); }
    [[nodiscard]] bool halted() const { return logger_.halted(); }
    /// Stops the ticker and finishes the current epoch so everything committed is flushed.
    void shutdown();

    [[nodiscard]] store::Store& store() { return store_; }
    [[nodiscard]] const store::Store& store() const { return store_; }
    [[nodiscard]] durability::Logger& logger() { return logger_; }
    [[nodiscard]] ltx::Manager& ltx_manager() { return ltx_; }
    [[nodiscard]] epoch::EpochManager& epochs() { return epochs_; }
    [[nodiscard]] EngineStats stats() const;
    [[nodiscard]] const EngineConfig& config() const { return cfg_; }

private:
    void on_epoch_end(Epoch e);
    void emit(oracle::HistoryEvent ev) {
        if (sink_ != nullptr) sink_->emit(std::move(ev));
    }
    void emit_outcome(const TxState& tx, const CommitResult& r);
    void end_read_only(const TxState& tx);
    TxState& active(TransactionHandle& h) const;

    EngineConfig cfg_;
    store::Store store_;
    epoch::EpochManager epochs_;
    durability::Logger logger_;
    occ::Executor occ_;
    ltx::Manager ltx_;
    oracle::TraceSink* sink_{nullptr};
    EpochObserver observer_;

    std::atomic<std::uint64_t> occ_ids_{0};
    std::atomic<std::uint64_t> ro_ids_{0};
    mutable std::mutex ro_mutex_;
    std::multiset<Epoch> ro_snapshots_;
};

} // namespace hcc
