#pragma once

#include <iosfwd>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "hcc/types.h"

namespace hcc::oracle {

enum class EventKind : std::uint8_t { Begin, Read, Write, Commit, Abort };

std::string_view to_string(EventKind kind);

struct HistoryEvent {
    EventKind kind{EventKind::Begin};
    TransactionId tx;
    std::optional<TableId> table;
    std::optional<std::string> key;
    /// Writer of the version a Read observed; nil for the initial state.
    TransactionId version_writer;
    std::optional<SerializationSlot> slot;

    static HistoryEvent begin(TransactionId tx) { return {EventKind::Begin, tx, {}, {}, {}, {}}; }
    static HistoryEvent read(TransactionId tx, TableId t, std::string k, TransactionId writer) {
        return {EventKind::Read, tx, t, std::move(k), writer, {}};
    }
    static HistoryEvent write(TransactionId tx, TableId t, std::string k) {
        return {EventKind::Write, tx, t, std::move(k), {}, {}};
    }
    static HistoryEvent commit(TransactionId tx, SerializationSlot s) { return {EventKind::Commit, tx, {}, {}, {}, s}; }
    static HistoryEvent abort(TransactionId tx) { return {EventKind::Abort, tx, {}, {}, {}, {}}; }

    friend bool operator==(const HistoryEvent&, const HistoryEvent&) = default;
};

using History = std::vector<HistoryEvent>;

/// One event per line: `kind tx table key version_writer slot`, with `-` for
/// fields that do not apply. Keys are written as `x` followed by hex digits.
std::string format_event(const HistoryEvent& ev);
std::optional<HistoryEvent> parse_event(std::string_view line);

void write_history(std::ostream& out, const History& h);
/// Throws error(MalformedHistory) on an unparsable line.
History read_history(std::istream& in);

class TraceSink {
public:
    virtual ~TraceSink() = default;
    virtual void emit(HistoryEvent ev) = 0;
};

class MemoryTraceSink final : public TraceSink {
public:
    void emit(HistoryEvent ev) override;
    [[nodiscard]] History snapshot() const;
    History take();
    [[nodiscard]] std::size_t size() const;

private:
    mutable std::mutex mutex_;
    History events_;
};

} // namespace hcc::oracle
