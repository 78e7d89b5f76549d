#include "hcc/epoch.h"

#include <utility>

namespace hcc::epoch {

EpochGuard::EpochGuard(EpochGuard&& other) noexcept
    : owner_(std::exchange(other.owner_, nullptr)), held_at_(other.held_at_) {}

EpochGuard& EpochGuard::operator=(EpochGuard&& other) noexcept {
    if (this != &other) {
        release();
        owner_ = std::exchange(other.owner_, nullptr);
        held_at_ = other.held_at_;
    }
    return *this;
}

void EpochGuard::release() {
    if (owner_ != nullptr) {
        owner_->release_shared();
        owner_ = nullptr;
    }
}

EpochManager::~EpochManager() { stop_ticker(); }

EpochGuard EpochManager::acquire_guard() {
    for (;;) {
        while (closed_.load()) closed_.wait(true);
        readers_.fetch_add(1);
        if (!closed_.load()) break;
        // an advance closed the latch between the check and the increment
        release_shared();
    }
    return EpochGuard{this, epoch_.load()};
}

void EpochManager::release_shared() {
    if (readers_.fetch_sub(1) == 1) readers_.notify_all();
}

Epoch EpochManager::advance() {
    std::lock_guard lock(advance_mutex_);
    closed_.store(true);
    for (auto r = readers_.load(); r != 0; r = readers_.load()) readers_.wait(r);

    const Epoch ending = epoch_.load();
    if (hook_) hook_(ending);
    epoch_.store(ending + 1, std::memory_order_release);
    epoch_.notify_all();

    closed_.store(false);
    closed_.notify_all();
    return ending + 1;
}

void EpochManager::start_ticker(std::chrono::milliseconds period) {
    if (period.count() <= 0 || ticker_.joinable()) return;
    {
        std::lock_guard lock(ticker_mutex_);
        stop_ticker_ = false;
    }
    ticker_ = std::thread([this, period] {
        std::unique_lock lock(ticker_mutex_);
        while (!ticker_cv_.wait_for(lock, period, [this] { return stop_ticker_; })) {
            lock.unlock();
            advance();
            lock.lock();
        }
    });
}

void EpochManager::stop_ticker() {
    if (!ticker_.joinable()) return;
    {
        std::lock_guard lock(ticker_mutex_);
        stop_ticker_ = true;
    }
    ticker_cv_.notify_all();
    ticker_.join();
}

void EpochManager::wait_until(Epoch e) const {
    for (auto cur = epoch_.load(); cur < e; cur = epoch_.load()) epoch_.wait(cur);
}

} // namespace hcc::epoch
