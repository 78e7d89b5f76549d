#include "hcc/types.h"

#include <charconv>

namespace hcc {

namespace {

std::optional<std::uint64_t> parse_u64(std::string_view text) {
    std::uint64_t v = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end || text.empty()) return std::nullopt;
    return v;
}

} // namespace

std::string_view to_string(TxMode mode) {
    switch (mode) {
    case TxMode::Occ: return "occ";
    case TxMode::Ltx: return "ltx";
    case TxMode::ReadOnly: return "read_only";
    }
    return "?";
}

TransactionId TransactionId::ltx(Epoch valid_epoch, std::uint64_t seq) {
    return TransactionId{(std::uint64_t{2} << 62) | ((valid_epoch << kSeqBits) & kPayloadMask) |
                         (seq & kSeqMask)};
}

TransactionId TransactionId::counter(TxMode mode, std::uint64_t n) {
    return TransactionId{(static_cast<std::uint64_t>(mode) << 62) | (n & kPayloadMask)};
}

std::string TransactionId::str() const {
    if (nil()) return "init";
    switch (mode()) {
    case TxMode::Ltx: return "L" + std::to_string(valid_epoch()) + "." + std::to_string(seq());
    case TxMode::Occ: return "O" + std::to_string(raw_ & kPayloadMask);
    case TxMode::ReadOnly: return "R" + std::to_string(raw_ & kPayloadMask);
    }
    return "?";
}

std::optional<TransactionId> TransactionId::parse(std::string_view text) {
    if (text == "init") return TransactionId{};
    if (text.size() < 2) return std::nullopt;
    const char tag = text.front();
    text.remove_prefix(1);
    if (tag == 'L') {
        auto dot = text.find('.');
        if (dot == std::string_view::npos) return std::nullopt;
        auto e = parse_u64(text.substr(0, dot));
        auto s = parse_u64(text.substr(dot + 1));
        if (!e || !s) return std::nullopt;
        return ltx(*e, *s);
    }
    auto n = parse_u64(text);
    if (!n || *n == 0) return std::nullopt;
    if (tag == 'O') return counter(TxMode::Occ, *n);
    if (tag == 'R') return counter(TxMode::ReadOnly, *n);
    return std::nullopt;
}

std::string SerializationSlot::str() const {
    return std::to_string(epoch) + "." + std::to_string(static_cast<int>(tier)) + "." +
           std::to_string(seq);
}

std::optional<SerializationSlot> SerializationSlot::parse(std::string_view text) {
    auto d1 = text.find('.');
    if (d1 == std::string_view::npos) return std::nullopt;
    auto d2 = text.find('.', d1 + 1);
    if (d2 == std::string_view::npos) return std::nullopt;
    auto e = parse_u64(text.substr(0, d1));
    auto t = parse_u64(text.substr(d1 + 1, d2 - d1 - 1));
    auto s = parse_u64(text.substr(d2 + 1));
    if (!e || !t || !s || *t > 1) return std::nullopt;
    return SerializationSlot{*e, static_cast<SlotTier>(*t), *s};
}

std::string_view to_string(AbortReason reason) {
    switch (reason) {
    case AbortReason::OccReadValidationFail: return "OccReadValidationFail";
    case AbortReason::OccWpConflict: return "OccWpConflict";
    case AbortReason::OccPhantom: return "OccPhantom";
    case AbortReason::WpMismatch: return "WpMismatch";
    case AbortReason::LtxReadUpperBound: return "LtxReadUpperBound";
    case AbortReason::LtxWriteConflict: return "LtxWriteConflict";
    case AbortReason::LtxPhantom: return "LtxPhantom";
    case AbortReason::UserAbort: return "UserAbort";
    case AbortReason::IoFailure: return "IoFailure";
    }
    return "?";
}

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::UnknownTable: return "UnknownTable";
    case ErrorCode::TxInactive: return "TxInactive";
    case ErrorCode::ReadOnlyViolation: return "ReadOnlyViolation";
    case ErrorCode::ReadAreaViolation: return "ReadAreaViolation";
    case ErrorCode::WpMismatch: return "WpMismatch";
    case ErrorCode::RegistryFull: return "RegistryFull";
    case ErrorCode::NotRegistered: return "NotRegistered";
    case ErrorCode::CorruptLog: return "CorruptLog";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::MalformedHistory: return "MalformedHistory";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::UnknownScenario: return "UnknownScenario";
    }
    return "?";
}

error::error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

std::string to_hex(std::string_view bytes) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (unsigned char c : bytes) {
        out.push_back(kDigits[c >> 4]);
        out.push_back(kDigits[c & 0xf]);
    }
    return out;
}

std::optional<std::string> from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) return std::nullopt;
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    std::string out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        int hi = nibble(hex[i]);
        int lo = nibble(hex[i + 1]);
        if (hi < 0 || lo < 0) return std::nullopt;
        out.push_back(static_cast<char>((hi << 4) | lo));
    }
    return out;
}

} // namespace hcc
