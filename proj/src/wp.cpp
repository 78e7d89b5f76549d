#include "hcc/wp.h"

#include <thread>

namespace hcc::wp {

void LockWord::lock() {
    for (;;) {
        auto cur = raw_.load(std::memory_order_relaxed);
        if (!locked(cur) &&
            raw_.compare_exchange_weak(cur, cur | kLockBit, std::memory_order_acquire)) {
            return;
        }
        std::this_thread::yield();
    }
}

void LockWord::unlock() {
    const auto cur = raw_.load(std::memory_order_relaxed);
    raw_.store((version(cur) + 1) << 1, std::memory_order_release);
}

void LockWord::unlock_unchanged() {
    const auto cur = raw_.load(std::memory_order_relaxed);
    raw_.store(cur & ~kLockBit, std::memory_order_release);
}

std::uint64_t LockWord::read_begin() const {
    for (;;) {
        const auto cur = raw_.load(std::memory_order_acquire);
        if (!locked(cur)) return cur;
        std::this_thread::yield();
    }
}

bool LockWord::read_validate(std::uint64_t begin) const {
    std::atomic_thread_fence(std::memory_order_acquire);
    return raw_.load(std::memory_order_relaxed) == begin;
}

WpRegistry::WpRegistry(std::size_t capacity) : slots_(capacity) {}

void WpRegistry::register_entry(TransactionId tx, Epoch valid_epoch) {
    lock_.lock();
    for (auto& slot : slots_) {
        if (slot.tx.load(std::memory_order_relaxed) == 0) {
            slot.valid_epoch.store(valid_epoch, std::memory_order_relaxed);
            slot.tx.store(tx.raw(), std::memory_order_relaxed);
            lock_.unlock();
            return;
        }
    }
    lock_.unlock_unchanged();
    throw error(ErrorCode::RegistryFull, "no free write-preservation slot for " + tx.str());
}

void WpRegistry::remove(TransactionId tx) {
    lock_.lock();
    for (auto& slot : slots_) {
        if (slot.tx.load(std::memory_order_relaxed) == tx.raw()) {
            slot.tx.store(0, std::memory_order_relaxed);
            slot.valid_epoch.store(kNoEpoch, std::memory_order_relaxed);
            lock_.unlock();
            return;
        }
    }
    lock_.unlock_unchanged();
    throw error(ErrorCode::NotRegistered, tx.str() + " holds no write preservation");
}

std::vector<WpEntry> WpRegistry::snapshot() const {
    std::vector<WpEntry> out;
    out.reserve(slots_.size());
    for (;;) {
        out.clear();
        const auto begin = lock_.read_begin();
        for (const auto& slot : slots_) {
            const auto tx = slot.tx.load(std::memory_order_relaxed);
            const auto ve = slot.valid_epoch.load(std::memory_order_relaxed);
            if (tx != 0) out.push_back({TransactionId{tx}, ve});
        }
        if (lock_.read_validate(begin)) return out;
    }
}

std::vector<WpEntry> WpRegistry::effective(Epoch at) const {
    auto all = snapshot();
    std::erase_if(all, [at](const WpEntry& e) { return e.valid_epoch > at; });
    return all;
}

} // namespace hcc::wp
