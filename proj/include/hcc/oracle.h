#pragma once

#include <map>
#include <string>
#include <vector>

#include "hcc/history.h"

namespace hcc::oracle {

struct Verdict {
    bool pass{true};
    std::string description;

    static Verdict ok() { return {}; }
    static Verdict violation(std::string why) { return {false, std::move(why)}; }
    explicit operator bool() const { return pass; }
};

/// Committed transactions of a well-formed history, with their reads and final
/// writes. Reads of a transaction's own writes are dropped.
struct CommittedTx {
    TransactionId id;
    SerializationSlot slot;
    std::vector<std::pair<std::pair<TableId, std::string>, TransactionId>> reads; // (table,key) -> writer
    std::vector<std::pair<TableId, std::string>> writes;
};

struct Summary {
    std::vector<CommittedTx> committed; // first-commit order
    std::map<TransactionId, bool> outcome; // true: committed
};

/// Throws error(MalformedHistory) when a transaction does not start with Begin
/// and end with exactly one Commit or Abort.
Summary summarize(const History& h);

/**
 * Certifies the history against the engine-reported slots: every committed
 * read must observe the latest committed write that precedes the reader in
 * slot order. Pass means the history is view-equivalent to the slot order.
 */
Verdict check_witness(const History& h);

inline constexpr std::size_t kMaxBruteForceTxs = 8;

/// Exhaustive search for a serial order that reproduces every reads-from.
/// Throws error(TooLarge) above kMaxBruteForceTxs committed transactions.
Verdict check_mvsr_bruteforce(const History& h);

/// Single-version conflict graph over committed transactions using event
/// order per key. Returns false (Cyclic) when the graph has a cycle.
bool check_csr(const History& h);

} // namespace hcc::oracle
