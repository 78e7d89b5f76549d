#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hcc/store.h"
#include "hcc/types.h"

namespace hcc {

enum class TxStatus : std::uint8_t { Active, Validating, Waiting, Committed, Aborted };

std::string_view to_string(TxStatus status);

using RecordKey = std::pair<TableId, std::string>;

/// Value returned to the caller together with the identity of the version it
/// came from, so the api layer can trace reads.
struct ReadResult {
    std::optional<std::string> value;
    TransactionId writer; // nil: initial state
};

struct ScanRow {
    std::string key;
    std::string value;
    TransactionId writer;
};

namespace occ {

struct ReadEntry {
    TableId table;
    std::string key;
    store::Record* record; // null when the key had no record at read time
    store::VersionPtr observed; // newest committed version at read time
};

struct ScanToken {
    TableId table;
    KeyRange range;
    std::uint64_t structure_version;
};

} // namespace occ

namespace ltx {

struct ReadEntry {
    store::VersionPtr observed; // null: nothing visible in the snapshot
};

} // namespace ltx

/// Per-session transaction state. Used by one thread at a time; long
/// transactions are also referenced by the ltx manager under its mutex.
struct TxState {
    TransactionId id;
    TxMode mode{TxMode::Occ};
    TxStatus status{TxStatus::Active};
    CommitResult result;

    /// Buffered writes; nullopt value is a delete.
    std::map<RecordKey, std::optional<std::string>> writes;

    // short transactions
    std::vector<occ::ReadEntry> occ_reads;
    std::vector<occ::ScanToken> scans;

    // long and read-only transactions
    SerializationSlot snapshot{};
    Epoch valid_epoch{kNoEpoch};
    std::set<TableId> wp_set;
    std::optional<std::set<TableId>> read_area;
    std::map<RecordKey, ltx::ReadEntry> ltx_reads;
    std::vector<store::PredicateEntry> predicates;
    Epoch forward_bound{kNoEpoch};
    /// Lower bound on any forward_bound this transaction can still reach.
    Epoch floor{kNoEpoch};
    bool user_abort_requested{false};
    std::size_t waited_epochs{0};

    [[nodiscard]] bool finished() const { return status == TxStatus::Committed || status == TxStatus::Aborted; }
    [[nodiscard]] std::set<TableId> read_tables() const;
    [[nodiscard]] std::set<TableId> write_tables() const;
};

} // namespace hcc
