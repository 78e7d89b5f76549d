#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>

#include "hcc/types.h"

namespace hcc::epoch {

class EpochManager;

/// Shared hold on the epoch latch. While any guard is alive, advance() waits.
class EpochGuard {
public:
    EpochGuard() = default;
    EpochGuard(EpochGuard&& other) noexcept;
    EpochGuard& operator=(EpochGuard&& other) noexcept;
    EpochGuard(const EpochGuard&) = delete;
    EpochGuard& operator=(const EpochGuard&) = delete;
    ~EpochGuard() { release(); }

    [[nodiscard]] Epoch held_at() const { return held_at_; }
    [[nodiscard]] bool held() const { return owner_ != nullptr; }
    void release();

private:
    friend class EpochManager;
    EpochGuard(EpochManager* owner, Epoch at) : owner_(owner), held_at_(at) {}

    EpochManager* owner_{nullptr};
    Epoch held_at_{kNoEpoch};
};

/**
 * Owns the global epoch counter.
 *
 * Guards are the shared side of a latch and advance() is the exclusive side.
 * The end-of-epoch hook runs inside advance() while the latch is held
 * exclusively and before the next value is published, so everything that
 * belongs to epoch N is finalized before N + 1 can be observed.
 */
class EpochManager {
public:
    using EndOfEpochHook = std::function<void(Epoch ending)>;

    EpochManager() = default;
    ~EpochManager();
    EpochManager(const EpochManager&) = delete;
    EpochManager& operator=(const EpochManager&) = delete;

    [[nodiscard]] Epoch current() const { return epoch_.load(std::memory_order_acquire); }

    Epoch advance();
    EpochGuard acquire_guard();

    void set_end_of_epoch_hook(EndOfEpochHook hook) { hook_ = std::move(hook); }

    /// Starts a background thread calling advance() every `period`. A zero
    /// period leaves the engine in manual mode.
    void start_ticker(std::chrono::milliseconds period);
    void stop_ticker();
    [[nodiscard]] bool ticking() const { return ticker_.joinable(); }

    /// Blocks until current() >= e.
    void wait_until(Epoch e) const;

private:
    friend class EpochGuard;
    void release_shared();

    std::atomic<Epoch> epoch_{1};
    std::atomic<std::uint64_t> readers_{0};
    std::atomic<bool> closed_{false};
    std::mutex advance_mutex_;
    EndOfEpochHook hook_;

    std::thread ticker_;
    std::mutex ticker_mutex_;
    std::condition_variable ticker_cv_;
    bool stop_ticker_{false};
};

} // namespace hcc::epoch
