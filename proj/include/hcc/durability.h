#pragma once

#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "hcc/store.h"
#include "hcc/types.h"

namespace hcc::durability {

/// Table id of the record that seals an epoch.
inline constexpr std::uint32_t kEpochMarkerTable = 0xffffffffU;
/// Value length of a delete record.
inline constexpr std::uint32_t kDeleteLength = 0xffffffffU;
inline constexpr std::size_t kHeaderSize = 8 + 4 + 4 + 4;

struct LogRecord {
    Epoch epoch{kNoEpoch};
    std::uint32_t table{0};
    std::string key;
    std::optional<std::string> value; // nullopt: delete
    std::uint64_t slot_seq{0};        // position within the epoch; implicit in the file

    [[nodiscard]] bool is_marker() const { return table == kEpochMarkerTable; }
    static LogRecord marker(Epoch e) { return {e, kEpochMarkerTable, {}, std::string{}, 0}; }
};

/// Little-endian header (epoch u64, table u32, key length u32, value length
/// u32), key bytes, value bytes, then CRC-32 of everything before it.
std::string encode(const LogRecord& rec);

enum class SnapshotClass : std::uint8_t { Safe, Unsafe };

struct RecoveryResult {
    Epoch durable_epoch{kNoEpoch};
    store::StoreState state;
    std::size_t records{0};
    std::size_t discarded_bytes{0};
};

/// Replays sealed epochs. A torn final record is dropped; a bad checksum with
/// more data behind it throws error(CorruptLog).
RecoveryResult recover(const std::filesystem::path& log_path);

/**
 * Epoch-group logger.
 *
 * Commits report every record they wrote together with the epoch they
 * finished in. At the end of that epoch only the slot-maximal committed
 * version of each such record is logged; same-epoch versions that have a
 * serialization-later successor are committed but never persisted.
 */
class Logger {
public:
    using FlushObserver = std::function<void(Epoch, const std::vector<LogRecord>&)>;

    /// Without a path the logger still runs the selection and classification
    /// but writes nothing.
    explicit Logger(std::optional<std::filesystem::path> log_path = std::nullopt, bool sync = true);
    ~Logger();
    Logger(const Logger&) = delete;
    Logger& operator=(const Logger&) = delete;

    void touch(Epoch commit_epoch, TableId table, store::Record* rec);

    /// Writes the selected versions of epoch e followed by its marker.
    Epoch epoch_flush(Epoch e);
    /// `min_live_floor` is the lowest epoch any live long transaction may still
    /// be placed into, or nullopt when none is live.
    SnapshotClass classify(Epoch e, std::optional<Epoch> min_live_floor);

    [[nodiscard]] Epoch durable_epoch() const { return durable_epoch_.load(std::memory_order_acquire); }
    [[nodiscard]] Epoch safe_epoch() const { return safe_epoch_.load(std::memory_order_acquire); }
    [[nodiscard]] bool halted() const { return halted_.load(std::memory_order_acquire); }
    [[nodiscard]] std::size_t records_written() const { return records_written_; }
    [[nodiscard]] const std::optional<std::filesystem::path>& path() const { return path_; }

    /// Called after each flush with the records of that epoch (marker excluded).
    void set_flush_observer(FlushObserver obs) { observer_ = std::move(obs); }
    /// Test hook: makes the next flush fail as if the device rejected it.
    void inject_failure() { inject_failure_ = true; }

private:
    std::optional<std::filesystem::path> path_;
    bool sync_;
    std::FILE* file_{nullptr};
    std::mutex touch_mutex_;
    std::map<Epoch, std::vector<std::pair<TableId, store::Record*>>> touched_;
    std::atomic<Epoch> durable_epoch_{kNoEpoch};
    std::atomic<Epoch> safe_epoch_{kNoEpoch};
    std::atomic<bool> halted_{false};
    bool inject_failure_{false};
    std::size_t records_written_{0};
    FlushObserver observer_;
};

} // namespace hcc::durability
