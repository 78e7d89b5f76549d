#include <gtest/gtest.h>

#include <atomic>
#include <set>
#include <thread>
#include <vector>

#include "hcc/wp.h"

using namespace hcc;

namespace {

TransactionId tx(std::uint64_t n) { return TransactionId::ltx(6, n); }

} // namespace

TEST(LockWord, RawEncoding) {
    wp::WpRegistry r(4);
    EXPECT_EQ(r.lock_word().raw(), 0u);
    r.register_entry(tx(7), 6);
    EXPECT_EQ(r.lock_word().raw(), 2u);
    EXPECT_FALSE(wp::LockWord::locked(r.lock_word().raw()));
    EXPECT_EQ(wp::LockWord::version(r.lock_word().raw()), 1u);
}

TEST(WpRegistry, RegisterSnapshotRemove) {
    wp::WpRegistry r(4);
    EXPECT_TRUE(r.snapshot().empty());
    r.register_entry(tx(7), 6);
    const auto s = r.snapshot();
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0], (wp::WpEntry{tx(7), 6}));
    r.remove(tx(7));
    EXPECT_TRUE(r.snapshot().empty());
    EXPECT_EQ(wp::LockWord::version(r.lock_word().raw()), 2u);
}

TEST(WpRegistry, CapacityIsFixed) {
    wp::WpRegistry r(2);
    r.register_entry(tx(1), 6);
    r.register_entry(tx(2), 6);
    try {
        r.register_entry(tx(3), 6);
        FAIL() << "expected RegistryFull";
    } catch (const error& e) {
        EXPECT_EQ(e.code(), ErrorCode::RegistryFull);
    }
    EXPECT_EQ(r.capacity(), 2u);
    // a failed registration does not count as a mutation
    EXPECT_EQ(wp::LockWord::version(r.lock_word().raw()), 2u);
}

TEST(WpRegistry, RemoveUnknownThrows) {
    wp::WpRegistry r(2);
    try {
        r.remove(tx(9));
        FAIL() << "expected NotRegistered";
    } catch (const error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotRegistered);
    }
}

TEST(WpRegistry, EffectiveFromValidEpoch) {
    wp::WpRegistry r(4);
    r.register_entry(tx(1), 6);
    EXPECT_TRUE(r.effective(5).empty());
    EXPECT_EQ(r.effective(6).size(), 1u);
    r.register_entry(tx(2), 8);
    const auto at7 = r.effective(7);
    ASSERT_EQ(at7.size(), 1u);
    EXPECT_EQ(at7[0].valid_epoch, 6u);
}

TEST(WpRegistry, VersionCountsMutations) {
    wp::WpRegistry r(8);
    for (std::uint64_t i = 0; i < 5; ++i) r.register_entry(tx(i), 6);
    for (std::uint64_t i = 0; i < 3; ++i) r.remove(tx(i));
    EXPECT_EQ(wp::LockWord::version(r.lock_word().raw()), 8u);
}

// Writers cycle through register/remove pairs. Each writer only ever holds
// entries whose epoch encodes its own id, so a torn copy shows up either as an
// id that was never registered or as an epoch paired with the wrong id.
TEST(WpRegistry, SnapshotsAreNeverTorn) {
    wp::WpRegistry r(8);
    constexpr int kWriters = 3;
    constexpr int kPairs = 1000;
    std::atomic<bool> done{false};
    std::atomic<int> bad{0};
    std::atomic<std::uint64_t> snapshots{0};

    std::vector<std::thread> readers;
    for (int i = 0; i < 2; ++i) {
        readers.emplace_back([&] {
            while (!done.load()) {
                const auto s = r.snapshot();
                ++snapshots;
                std::set<TransactionId> ids;
                for (const auto& e : s) {
                    const auto w = e.tx.seq() / 10000;
                    const auto n = e.tx.seq() % 10000;
                    if (w >= kWriters || n >= kPairs || e.valid_epoch != 100 + w) ++bad;
                    if (!ids.insert(e.tx).second) ++bad;
                }
                if (s.size() > kWriters) ++bad;
            }
        });
    }
    std::vector<std::thread> writers;
    for (int w = 0; w < kWriters; ++w) {
        writers.emplace_back([&, w] {
            for (int n = 0; n < kPairs; ++n) {
                const auto id = TransactionId::ltx(6, static_cast<std::uint64_t>(w) * 10000 + n);
                r.register_entry(id, 100 + w);
                r.remove(id);
            }
        });
    }
    for (auto& t : writers) t.join();
    done = true;
    for (auto& t : readers) t.join();
    EXPECT_EQ(bad.load(), 0);
    EXPECT_GT(snapshots.load(), 0u);
    EXPECT_TRUE(r.snapshot().empty());
    EXPECT_EQ(wp::LockWord::version(r.lock_word().raw()), 2u * kWriters * kPairs);
}

// A reader that samples while one entry flips in and out sees exactly the
// before state or the after state.
TEST(WpRegistry, RemoveSeenAtomically) {
    wp::WpRegistry r(4);
    r.register_entry(tx(1), 6);
    r.register_entry(tx(2), 6);
    std::atomic<bool> done{false};
    std::atomic<int> bad{0};
    std::thread reader([&] {
        while (!done.load()) {
            const auto s = r.snapshot();
            if (s.size() != 1 && s.size() != 2) ++bad;
            bool has1 = false;
            for (const auto& e : s) has1 = has1 || e.tx == tx(1);
            if (!has1) ++bad;
        }
    });
    for (int i = 0; i < 2000; ++i) {
        r.remove(tx(2));
        r.register_entry(tx(2), 6);
    }
    done = true;
    reader.join();
    EXPECT_EQ(bad.load(), 0);
}
