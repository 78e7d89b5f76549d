#pragma once

#include <atomic>
#include <cstddef>
#include <memory>
#include <vector>

#include "hcc/types.h"

namespace hcc::wp {

/// 64-bit lock word: bit 0 is the lock bit, bits 1..63 count completed
/// write sections.
class LockWord {
public:
    static constexpr std::uint64_t kLockBit = 1;

    [[nodiscard]] std::uint64_t raw() const { return raw_.load(std::memory_order_acquire); }
    [[nodiscard]] static bool locked(std::uint64_t raw) { return (raw & kLockBit) != 0; }
    [[nodiscard]] static std::uint64_t version(std::uint64_t raw) { return raw >> 1; }

    void lock();
    /// Clears the lock bit and bumps the version in one store.
    void unlock();
    /// Clears the lock bit without publishing a new version (nothing changed).
    void unlock_unchanged();

    /// Spins until unlocked and returns the observed word.
    [[nodiscard]] std::uint64_t read_begin() const;
    /// True when no writer ran since `begin` was observed.
    [[nodiscard]] bool read_validate(std::uint64_t begin) const;

private:
    std::atomic<std::uint64_t> raw_{0};
};

struct WpEntry {
    TransactionId tx;
    Epoch valid_epoch{kNoEpoch};

    friend bool operator==(const WpEntry&, const WpEntry&) = default;
};

/**
 * Per-table write-preservation array.
 *
 * The array length is fixed at construction; writers mutate it under the
 * lock word and readers take optimistic copies, retrying when a writer
 * overlapped the copy.
 */
class WpRegistry {
public:
    explicit WpRegistry(std::size_t capacity);

    /// Claims a free slot. Throws error(RegistryFull) when none is left.
    void register_entry(TransactionId tx, Epoch valid_epoch);
    /// Throws error(NotRegistered) when `tx` holds no slot.
    void remove(TransactionId tx);

    [[nodiscard]] std::vector<WpEntry> snapshot() const;
    /// Entries whose valid epoch has been reached at `at`.
    [[nodiscard]] std::vector<WpEntry> effective(Epoch at) const;

    [[nodiscard]] std::size_t capacity() const { return slots_.size(); }
    [[nodiscard]] const LockWord& lock_word() const { return lock_; }

private:
    struct Slot {
        std::atomic<std::uint64_t> tx{0};
        std::atomic<Epoch> valid_epoch{kNoEpoch};
    };

    LockWord lock_;
    std::vector<Slot> slots_;
};

} // namespace hcc::wp
