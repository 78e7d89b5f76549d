#include "hcc/history.h"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

namespace hcc::oracle {

std::string_view to_string(EventKind kind) {
    switch (kind) {
    case EventKind::Begin: return "begin";
    case EventKind::Read: return "read";
    case EventKind::Write: return "write";
    case EventKind::Commit: return "commit";
    case EventKind::Abort: return "abort";
    }
    return "?";
}

std::string format_event(const HistoryEvent& ev) {
    std::string out{to_string(ev.kind)};
    out += ' ';
    out += ev.tx.str();
    out += ' ';
    out += ev.table ? std::to_string(*ev.table) : "-";
    out += ' ';
    out += ev.key ? "x" + to_hex(*ev.key) : "-";
    out += ' ';
    out += ev.kind == EventKind::Read ? ev.version_writer.str() : "-";
    out += ' ';
    out += ev.slot ? ev.slot->str() : "-";
    return out;
}

std::optional<HistoryEvent> parse_event(std::string_view line) {
    std::vector<std::string_view> f;
    while (!line.empty()) {
        auto sp = line.find_first_of(" \t");
        if (sp != 0) f.push_back(line.substr(0, sp));
        if (sp == std::string_view::npos) break;
        line.remove_prefix(sp + 1);
    }
    if (f.size() != 6) return std::nullopt;

    HistoryEvent ev;
    if (f[0] == "begin") ev.kind = EventKind::Begin;
    else if (f[0] == "read") ev.kind = EventKind::Read;
    else if (f[0] == "write") ev.kind = EventKind::Write;
    else if (f[0] == "commit") ev.kind = EventKind::Commit;
    else if (f[0] == "abort") ev.kind = EventKind::Abort;
    else return std::nullopt;

    auto tx = TransactionId::parse(f[1]);
    if (!tx || tx->nil()) return std::nullopt;
    ev.tx = *tx;

    if (f[2] != "-") {
        TableId t = 0;
        auto [p, ec] = std::from_chars(f[2].data(), f[2].data() + f[2].size(), t);
        if (ec != std::errc{} || p != f[2].data() + f[2].size()) return std::nullopt;
        ev.table = t;
    }
    if (f[3] != "-") {
        if (f[3].front() != 'x') return std::nullopt;
        auto k = from_hex(f[3].substr(1));
        if (!k) return std::nullopt;
        ev.key = std::move(*k);
    }
    if (f[4] != "-") {
        auto w = TransactionId::parse(f[4]);
        if (!w) return std::nullopt;
        ev.version_writer = *w;
    }
    if (f[5] != "-") {
        auto s = SerializationSlot::parse(f[5]);
        if (!s) return std::nullopt;
        ev.slot = *s;
    }

    const bool keyed = ev.kind == EventKind::Read || ev.kind == EventKind::Write;
    if (keyed != (ev.table.has_value() && ev.key.has_value())) return std::nullopt;
    if ((ev.kind == EventKind::Commit) != ev.slot.has_value()) return std::nullopt;
    return ev;
}

void write_history(std::ostream& out, const History& h) {
    for (const auto& ev : h) out << format_event(ev) << '\n';
}

History read_history(std::istream& in) {
    History h;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line.front() == '#') continue;
        auto ev = parse_event(line);
        if (!ev) throw error(ErrorCode::MalformedHistory, "line " + std::to_string(lineno) + ": " + line);
        h.push_back(std::move(*ev));
    }
    return h;
}

void MemoryTraceSink::emit(HistoryEvent ev) {
    std::lock_guard lock(mutex_);
    events_.push_back(std::move(ev));
}

History MemoryTraceSink::snapshot() const {
    std::lock_guard lock(mutex_);
    return events_;
}

History MemoryTraceSink::take() {
    std::lock_guard lock(mutex_);
    return std::exchange(events_, {});
}

std::size_t MemoryTraceSink::size() const {
    std::lock_guard lock(mutex_);
    return events_.size();
}

} // namespace hcc::oracle
