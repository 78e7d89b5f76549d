#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <future>
#include <set>
#include <thread>
#include <vector>

#include "hcc/epoch.h"

using namespace hcc;
using namespace std::chrono_literals;

namespace {

// true when the future is still pending after a short grace period
template <typename T>
bool still_blocked(std::future<T>& f) {
    return f.wait_for(50ms) == std::future_status::timeout;
}

} // namespace

TEST(Epoch, StartsAtOneAndCounts) {
    epoch::EpochManager m;
    EXPECT_EQ(m.current(), 1u);
    m.advance();
    m.advance();
    EXPECT_EQ(m.advance(), 4u);
    EXPECT_EQ(m.current(), 4u);
}

TEST(Epoch, GuardRecordsHeldAt) {
    epoch::EpochManager m;
    for (int i = 0; i < 4; ++i) m.advance();
    auto g = m.acquire_guard();
    EXPECT_EQ(g.held_at(), 5u);
    EXPECT_TRUE(g.held());
    g.release();
    EXPECT_FALSE(g.held());
}

TEST(Epoch, GuardHeldAcrossSecondTick) {
    epoch::EpochManager m;
    m.advance(); // tick 1 -> 2
    auto g = m.acquire_guard();
    auto tick2 = std::async(std::launch::async, [&] { return m.advance(); });
    EXPECT_TRUE(still_blocked(tick2));
    EXPECT_EQ(m.current(), 2u);
    g.release();
    EXPECT_EQ(tick2.get(), 3u);
    EXPECT_EQ(m.current(), 3u);
    m.advance(); // tick 3
    EXPECT_EQ(m.current(), 4u);
}

TEST(Epoch, AdvanceWaitsForEveryGuard) {
    epoch::EpochManager m;
    auto g1 = m.acquire_guard();
    auto g2 = m.acquire_guard();
    auto adv = std::async(std::launch::async, [&] { return m.advance(); });
    EXPECT_TRUE(still_blocked(adv));
    g1.release();
    EXPECT_TRUE(still_blocked(adv));
    EXPECT_EQ(m.current(), 1u);
    g2.release();
    EXPECT_EQ(adv.get(), 2u);
}

TEST(Epoch, ConcurrentAdvancesReturnDistinctValues) {
    epoch::EpochManager m;
    for (int i = 0; i < 4; ++i) m.advance();
    constexpr int kThreads = 8;
    constexpr int kEach = 50;
    std::vector<std::vector<Epoch>> got(kThreads);
    std::vector<std::thread> ts;
    for (int t = 0; t < kThreads; ++t) {
        ts.emplace_back([&, t] {
            for (int i = 0; i < kEach; ++i) got[t].push_back(m.advance());
        });
    }
    for (auto& t : ts) t.join();
    std::set<Epoch> all;
    for (const auto& v : got) all.insert(v.begin(), v.end());
    EXPECT_EQ(all.size(), static_cast<std::size_t>(kThreads * kEach));
    EXPECT_EQ(*all.begin(), 6u);
    EXPECT_EQ(*all.rbegin(), static_cast<Epoch>(5 + kThreads * kEach));
}

TEST(Epoch, HookRunsBeforeNextEpochIsPublished) {
    epoch::EpochManager m;
    std::vector<std::pair<Epoch, Epoch>> seen;
    m.set_end_of_epoch_hook([&](Epoch ending) { seen.emplace_back(ending, m.current()); });
    m.advance();
    m.advance();
    ASSERT_EQ(seen.size(), 2u);
    EXPECT_EQ(seen[0], (std::pair<Epoch, Epoch>{1, 1}));
    EXPECT_EQ(seen[1], (std::pair<Epoch, Epoch>{2, 2}));
}

TEST(Epoch, NeverObservedDecreasingUnderTicker) {
    epoch::EpochManager m;
    m.start_ticker(1ms);
    std::atomic<bool> bad{false};
    std::vector<std::thread> ts;
    for (int t = 0; t < 4; ++t) {
        ts.emplace_back([&] {
            Epoch last = 0;
            for (int i = 0; i < 20000; ++i) {
                const auto e = m.current();
                if (e < last) bad = true;
                last = e;
                if (i % 100 == 0) {
                    auto g = m.acquire_guard();
                    if (g.held_at() < last) bad = true;
                }
            }
        });
    }
    for (auto& t : ts) t.join();
    m.stop_ticker();
    EXPECT_FALSE(bad.load());
    EXPECT_FALSE(m.ticking());
}

TEST(Epoch, WaitUntilReturnsOnceReached) {
    epoch::EpochManager m;
    auto w = std::async(std::launch::async, [&] { m.wait_until(3); return m.current(); });
    m.advance();
    EXPECT_TRUE(still_blocked(w));
    m.advance();
    EXPECT_EQ(w.get(), 3u);
}
