#pragma once

#include <atomic>
#include <optional>
#include <string>
#include <vector>

#include "hcc/durability.h"
#include "hcc/epoch.h"
#include "hcc/store.h"
#include "hcc/transaction.h"

namespace hcc::occ {

/**
 * Short-transaction protocol. Reads are invisible until commit; the commit
 * phase latches the write set, checks write preservation, publishes read
 * clues, then validates reads and scan structure before installing.
 */
class Executor {
public:
    Executor(store::Store& store, epoch::EpochManager& epochs, durability::Logger& logger)
        : store_(store), epochs_(epochs), logger_(logger) {}

    ReadResult read(TxState& tx, TableId table, std::string_view key);
    std::vector<ScanRow> scan(TxState& tx, TableId table, const KeyRange& range);
    void write(TxState& tx, TableId table, std::string key, std::optional<std::string> value);

    /// Takes an epoch guard for the whole commit phase and decides at its epoch.
    CommitResult commit(TxState& tx);

private:
    store::Store& store_;
    epoch::EpochManager& epochs_;
    durability::Logger& logger_;
    std::atomic<std::uint64_t> seq_{0};
};

} // namespace hcc::occ
