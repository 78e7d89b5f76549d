#include <gtest/gtest.h>

#include "hcc/engine.h"

using namespace hcc;

namespace {

EngineConfig manual() {
    EngineConfig c;
    c.epoch_period = std::chrono::milliseconds(0);
    return c;
}

struct OccTest : ::testing::Test {
    Engine eng{manual()};
    TableId t = eng.create_table("t");

    void seed(const std::string& k, const std::string& v) {
        auto h = eng.begin();
        eng.write(h, t, k, v);
        ASSERT_TRUE(eng.commit(h).is_committed());
    }
};

} // namespace

TEST_F(OccTest, ReadCommittedValue) {
    seed("k", "v1");
    auto h = eng.begin();
    EXPECT_EQ(eng.read(h, t, "k"), "v1");
    EXPECT_EQ(eng.read(h, t, "absent"), std::nullopt);
    EXPECT_TRUE(eng.commit(h).is_committed());
}

TEST_F(OccTest, ReadOwnWriteAndLastWriteWins) {
    auto h = eng.begin();
    eng.write(h, t, "k", "x");
    EXPECT_EQ(eng.read(h, t, "k"), "x");
    eng.write(h, t, "k", "y");
    EXPECT_TRUE(eng.commit(h).is_committed());
    auto r = eng.begin();
    EXPECT_EQ(eng.read(r, t, "k"), "y");
}

TEST_F(OccTest, AbortLeavesStoreUnchanged) {
    seed("k", "v");
    const auto before = store::digest(eng.store().state());
    auto h = eng.begin();
    eng.write(h, t, "k", "changed");
    eng.write(h, t, "new", "x");
    eng.abort(h);
    EXPECT_EQ(store::digest(eng.store().state()), before);
    EXPECT_EQ(eng.status(h), TxStatus::Aborted);
}

TEST_F(OccTest, WriteToUnknownTable) {
    auto h = eng.begin();
    try {
        eng.write(h, 42, "k", "v");
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnknownTable);
    }
}

TEST_F(OccTest, LostUpdateIsPrevented) {
    seed("x", "0");
    auto a = eng.begin();
    auto b = eng.begin();
    (void)eng.read(a, t, "x");
    (void)eng.read(b, t, "x");
    eng.write(a, t, "x", "a");
    eng.write(b, t, "x", "b");
    EXPECT_TRUE(eng.commit(a).is_committed());
    const auto r = eng.commit(b);
    ASSERT_TRUE(r.is_aborted());
    EXPECT_EQ(r.reason, AbortReason::OccReadValidationFail);
}

TEST_F(OccTest, ReadOfAbsentKeyValidatesAgainstInsert) {
    auto a = eng.begin();
    EXPECT_EQ(eng.read(a, t, "k"), std::nullopt);
    seed("k", "appeared");
    eng.write(a, t, "other", "v");
    const auto r = eng.commit(a);
    ASSERT_TRUE(r.is_aborted());
    EXPECT_EQ(r.reason, AbortReason::OccReadValidationFail);
}

TEST_F(OccTest, ScanDetectsPhantomInsert) {
    seed("a", "1");
    seed("c", "3");
    auto s = eng.begin();
    const auto rows = eng.scan(s, t, {"a", "z"});
    EXPECT_EQ(rows.size(), 2u);
    seed("b", "2");
    eng.write(s, t, "sum", "4");
    const auto r = eng.commit(s);
    ASSERT_TRUE(r.is_aborted());
    EXPECT_EQ(r.reason, AbortReason::OccPhantom);
}

TEST_F(OccTest, EmptyRangeScanIsStillChecked) {
    auto s = eng.begin();
    EXPECT_TRUE(eng.scan(s, t, {"m", "n"}).empty());
    seed("zz", "outside"); // table-granular structure check: any insert counts
    const auto r = eng.commit(s);
    ASSERT_TRUE(r.is_aborted());
    EXPECT_EQ(r.reason, AbortReason::OccPhantom);
}

TEST_F(OccTest, ScanThenOwnInsertCommits) {
    seed("a", "1");
    auto s = eng.begin();
    EXPECT_EQ(eng.scan(s, t).size(), 1u);
    eng.write(s, t, "b", "own insert");
    const auto rows = eng.scan(s, t);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[1].second, "own insert");
    EXPECT_TRUE(eng.commit(s).is_committed());
}

TEST_F(OccTest, SlotOrderFollowsCommitOrder) {
    seed("x", "0");
    auto a = eng.begin();
    (void)eng.read(a, t, "x");
    eng.write(a, t, "x", "1");
    const auto ra = eng.commit(a);
    auto b = eng.begin();
    (void)eng.read(b, t, "x");
    eng.write(b, t, "x", "2");
    eng.advance_epoch();
    const auto rb = eng.commit(b);
    ASSERT_TRUE(ra.is_committed() && rb.is_committed());
    EXPECT_LT(ra.slot, rb.slot);
    EXPECT_EQ(ra.slot.tier, SlotTier::Occ);
    EXPECT_EQ(rb.slot.epoch, ra.slot.epoch + 1);
}

TEST_F(OccTest, CommitPublishesReadEpoch) {
    seed("x", "0");
    eng.advance_epoch();
    eng.advance_epoch();
    auto a = eng.begin();
    (void)eng.read(a, t, "x");
    ASSERT_TRUE(eng.commit(a).is_committed());
    EXPECT_GE(eng.store().table(t).max_read_epoch(), 3u);
    EXPECT_GE(eng.store().table(t).find("x")->read_clue(), 3u);
}

TEST_F(OccTest, DeleteAndReinsert) {
    seed("k", "v");
    auto d = eng.begin();
    eng.erase(d, t, "k");
    EXPECT_EQ(eng.read(d, t, "k"), std::nullopt);
    ASSERT_TRUE(eng.commit(d).is_committed());
    auto r = eng.begin();
    EXPECT_EQ(eng.read(r, t, "k"), std::nullopt);
    eng.write(r, t, "k", "back");
    ASSERT_TRUE(eng.commit(r).is_committed());
    EXPECT_EQ(eng.store().state().at({t, "k"}), "back");
}

TEST_F(OccTest, WpOnWrittenTableAbortsBlindWrite) {
    auto l = eng.begin(TxOptions::ltx({t}));
    eng.advance_epoch();
    auto h = eng.begin();
    eng.write(h, t, "k", "v");
    const auto r = eng.commit(h);
    ASSERT_TRUE(r.is_aborted());
    EXPECT_EQ(r.reason, AbortReason::OccWpConflict);
    eng.abort(l);
}

TEST_F(OccTest, InactiveHandleRejected) {
    auto h = eng.begin();
    ASSERT_TRUE(eng.commit(h).is_committed());
    try {
        (void)eng.read(h, t, "k");
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TxInactive);
    }
}
