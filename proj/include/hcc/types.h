#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hcc {

/// Global epoch frame index. 0 means "before any transaction".
using Epoch = std::uint64_t;

inline constexpr Epoch kNoEpoch = 0;

using TableId = std::uint32_t;

enum class TxMode : std::uint8_t { Occ = 1, Ltx = 2, ReadOnly = 3 };

std::string_view to_string(TxMode mode);

/**
 * Transaction identity packed into one word.
 *
 * Bits 62..63 carry the mode tag. Long transactions keep their valid epoch in
 * bits 20..61 and their begin order within that epoch in bits 0..19, so raw
 * comparison of two long-transaction ids is priority order. Short and
 * read-only transactions use a global counter in the low bits.
 */
class TransactionId {
public:
    static constexpr unsigned kSeqBits = 20;
    static constexpr std::uint64_t kSeqMask = (1ULL << kSeqBits) - 1;
    static constexpr std::uint64_t kPayloadMask = (1ULL << 62) - 1;

    constexpr TransactionId() = default;
    constexpr explicit TransactionId(std::uint64_t raw) : raw_(raw) {}

    static TransactionId ltx(Epoch valid_epoch, std::uint64_t seq);
    static TransactionId counter(TxMode mode, std::uint64_t n);

    [[nodiscard]] constexpr std::uint64_t raw() const { return raw_; }
    [[nodiscard]] constexpr bool nil() const { return raw_ == 0; }
    [[nodiscard]] TxMode mode() const { return static_cast<TxMode>(raw_ >> 62); }
    [[nodiscard]] bool is_ltx() const { return !nil() && mode() == TxMode::Ltx; }

    /// Valid epoch of a long transaction.
    [[nodiscard]] Epoch valid_epoch() const { return (raw_ & kPayloadMask) >> kSeqBits; }
    /// Begin order of a long transaction within its valid epoch.
    [[nodiscard]] std::uint64_t seq() const { return raw_ & kSeqMask; }

    /// True when this long transaction outranks `other` (earlier begin).
    [[nodiscard]] bool has_priority_over(TransactionId other) const {
        return is_ltx() && other.is_ltx() && raw_ < other.raw_;
    }

    /// "L6.0", "O17", "R3" or "init" for nil.
    [[nodiscard]] std::string str() const;
    static std::optional<TransactionId> parse(std::string_view text);

    friend constexpr auto operator<=>(TransactionId, TransactionId) = default;

private:
    std::uint64_t raw_{0};
};

enum class SlotTier : std::uint8_t { Ltx = 0, Occ = 1 };

/// Total-order key of a committed transaction: (epoch, tier, seq).
struct SerializationSlot {
    Epoch epoch{0};
    SlotTier tier{SlotTier::Ltx};
    std::uint64_t seq{0};

    static constexpr SerializationSlot infinity() {
        return {~Epoch{0}, SlotTier::Occ, ~std::uint64_t{0}};
    }
    /// Snapshot point of an epoch: sees everything committed in earlier epochs.
    static constexpr SerializationSlot epoch_start(Epoch e) { return {e, SlotTier::Ltx, 0}; }

    [[nodiscard]] std::string str() const;
    static std::optional<SerializationSlot> parse(std::string_view text);

    friend constexpr auto operator<=>(const SerializationSlot&, const SerializationSlot&) = default;
};

enum class AbortReason : std::uint8_t {
    OccReadValidationFail,
    OccWpConflict,
    OccPhantom,
    WpMismatch,
    LtxReadUpperBound,
    LtxWriteConflict,
    LtxPhantom,
    UserAbort,
    IoFailure,
};

std::string_view to_string(AbortReason reason);

enum class CommitStatus : std::uint8_t { Committed, Aborted, Waiting };

struct CommitResult {
    CommitStatus status{CommitStatus::Aborted};
    SerializationSlot slot{};
    AbortReason reason{AbortReason::UserAbort};
    std::vector<TransactionId> waiting_for;

    static CommitResult committed(SerializationSlot s) { return {CommitStatus::Committed, s, {}, {}}; }
    static CommitResult aborted(AbortReason r) { return {CommitStatus::Aborted, {}, r, {}}; }
    static CommitResult waiting(std::vector<TransactionId> blockers) {
        return {CommitStatus::Waiting, {}, {}, std::move(blockers)};
    }

    [[nodiscard]] bool is_committed() const { return status == CommitStatus::Committed; }
    [[nodiscard]] bool is_aborted() const { return status == CommitStatus::Aborted; }
    [[nodiscard]] bool is_waiting() const { return status == CommitStatus::Waiting; }
};

enum class ErrorCode : std::uint8_t {
    UnknownTable,
    TxInactive,
    ReadOnlyViolation,
    ReadAreaViolation,
    WpMismatch,
    RegistryFull,
    NotRegistered,
    CorruptLog,
    IoFailure,
    MalformedHistory,
    TooLarge,
    ConfigError,
    UnknownScenario,
};

std::string_view to_string(ErrorCode code);

class error : public std::runtime_error {
public:
    error(ErrorCode code, const std::string& what);
    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Half-open key range; an absent bound is unbounded on that side.
struct KeyRange {
    std::optional<std::string> low;
    std::optional<std::string> high;

    [[nodiscard]] bool contains(std::string_view key) const {
        if (low && key < std::string_view(*low)) return false;
        if (high && key >= std::string_view(*high)) return false;
        return true;
    }
    [[nodiscard]] bool unbounded() const { return !low && !high; }
};

std::string to_hex(std::string_view bytes);
std::optional<std::string> from_hex(std::string_view hex);

} // namespace hcc

template <>
struct std::hash<hcc::TransactionId> {
    std::size_t operator()(hcc::TransactionId id) const noexcept {
        return std::hash<std::uint64_t>{}(id.raw());
    }
};
