#include <gtest/gtest.h>

#include "hcc/engine.h"

using namespace hcc;

namespace {

EngineConfig manual() {
    EngineConfig c;
    c.epoch_period = std::chrono::milliseconds(0);
    return c;
}

struct LtxTest : ::testing::Test {
    explicit LtxTest(EngineConfig cfg = manual()) : eng(std::move(cfg)) {}

    Engine eng;
    TableId t = eng.create_table("t");
    TableId u = eng.create_table("u");

    void seed(TableId table, const std::string& k, const std::string& v) {
        auto h = eng.begin();
        eng.write(h, table, k, v);
        ASSERT_TRUE(eng.commit(h).is_committed());
    }
    CommitResult occ_write(TableId table, const std::string& k, const std::string& v) {
        auto h = eng.begin();
        eng.write(h, table, k, v);
        return eng.commit(h);
    }
};

bool is_native(const SerializationSlot& s) { return s.tier == SlotTier::Ltx && s.seq >= ltx::kNativeBase; }

} // namespace

TEST_F(LtxTest, BeginStagesIntoNextEpoch) {
    for (int i = 0; i < 4; ++i) eng.advance_epoch();
    ASSERT_EQ(eng.current_epoch(), 5u);
    auto a = eng.begin(TxOptions::ltx({t}));
    auto b = eng.begin(TxOptions::ltx({t}));
    EXPECT_EQ(a.valid_epoch(), 6u);
    EXPECT_EQ(b.valid_epoch(), 6u);
    EXPECT_EQ(a.id().seq(), 0u);
    EXPECT_EQ(b.id().seq(), 1u);
    EXPECT_TRUE(a.id().has_priority_over(b.id()));
    const auto wp = eng.store().table(t).wp().snapshot();
    ASSERT_EQ(wp.size(), 2u);
    EXPECT_EQ(wp[0], (wp::WpEntry{a.id(), 6}));
    EXPECT_TRUE(eng.store().table(u).wp().snapshot().empty());
}

TEST_F(LtxTest, PureReadLtxRegistersNothing) {
    auto a = eng.begin(TxOptions::ltx({}));
    EXPECT_TRUE(eng.store().table(t).wp().snapshot().empty());
    eng.advance_epoch();
    (void)eng.read(a, t, "k");
    EXPECT_TRUE(eng.commit(a).is_committed());
}

TEST_F(LtxTest, LoneLtxCommitsAtNativeSlot) {
    auto a = eng.begin(TxOptions::ltx({t}));
    eng.advance_epoch();
    eng.write(a, t, "k", "v");
    const auto r = eng.commit(a);
    ASSERT_TRUE(r.is_committed());
    EXPECT_EQ(r.slot, (SerializationSlot{a.valid_epoch(), SlotTier::Ltx, ltx::kNativeBase + a.id().seq()}));
    eng.advance_epoch();
    EXPECT_TRUE(eng.store().table(t).wp().snapshot().empty()) << "removed at the boundary";
}

TEST_F(LtxTest, WpRemovalWaitsForBoundary) {
    auto a = eng.begin(TxOptions::ltx({t}));
    eng.advance_epoch();
    eng.write(a, t, "k", "v");
    ASSERT_TRUE(eng.commit(a).is_committed());
    EXPECT_EQ(eng.store().table(t).wp().snapshot().size(), 1u);
    EXPECT_EQ(occ_write(t, "k", "x").reason, AbortReason::OccWpConflict);
    eng.advance_epoch();
    EXPECT_TRUE(occ_write(t, "k", "x").is_committed());
}

TEST_F(LtxTest, SnapshotExcludesValidEpochCommits) {
    seed(t, "k", "before");
    auto a = eng.begin(TxOptions::ltx({u}));
    eng.advance_epoch();
    ASSERT_TRUE(occ_write(t, "k", "during").is_committed());
    EXPECT_EQ(eng.read(a, t, "k"), "before");
    eng.abort(a);
}

TEST_F(LtxTest, ReadAreaIsEnforced) {
    auto a = eng.begin(TxOptions::ltx({t}, std::set<TableId>{t}));
    eng.advance_epoch();
    try {
        (void)eng.read(a, u, "k");
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ReadAreaViolation);
    }
    EXPECT_THROW(eng.scan(a, u), error);
    (void)eng.read(a, t, "k");
    eng.abort(a);
}

TEST_F(LtxTest, ScansRegisterPredicates) {
    for (const char* k : {"a", "b", "c"}) seed(t, k, k);
    auto a = eng.begin(TxOptions::ltx({u}));
    eng.advance_epoch();
    EXPECT_EQ(eng.scan(a, t).size(), 3u);
    const auto ab = eng.scan(a, t, {"a", "c"});
    ASSERT_EQ(ab.size(), 2u);
    EXPECT_EQ(ab[1].first, "b");
    const auto preds = eng.store().table(t).predicates();
    ASSERT_EQ(preds.size(), 2u);
    EXPECT_EQ(preds[0].kind, store::PredicateKind::FullScan);
    EXPECT_EQ(preds[1].kind, store::PredicateKind::RangeScan);
    EXPECT_FALSE(preds[0].committed);
    ASSERT_TRUE(eng.commit(a).is_committed());
    EXPECT_TRUE(eng.store().table(t).predicates()[0].committed);
}

TEST_F(LtxTest, AbortRemovesPredicates) {
    auto a = eng.begin(TxOptions::ltx({u}));
    eng.advance_epoch();
    (void)eng.scan(a, t);
    EXPECT_EQ(eng.store().table(t).predicates().size(), 1u);
    eng.abort(a);
    EXPECT_TRUE(eng.store().table(t).predicates().empty());
}

// Inserts committed during the scan epoch by short transactions stay out of
// the scan: the rows equal the store as it stood before the epoch.
TEST_F(LtxTest, ScanSnapshotIsStable) {
    for (int i = 0; i < 10; ++i) seed(t, "k" + std::to_string(i), "v");
    auto a = eng.begin(TxOptions::ltx({u}));
    const auto before = eng.store().state();
    eng.advance_epoch();
    for (int i = 10; i < 20; ++i) ASSERT_TRUE(occ_write(t, "k" + std::to_string(i), "new").is_committed());
    ASSERT_TRUE(occ_write(t, "k0", "changed").is_committed());
    const auto rows = eng.scan(a, t);
    store::StoreState seen;
    for (const auto& [k, v] : rows) seen.emplace(std::pair{t, k}, v);
    EXPECT_EQ(store::digest(seen), store::digest(before));
    eng.abort(a);
}

TEST_F(LtxTest, WriteOutsideWpFailsEagerly) {
    auto a = eng.begin(TxOptions::ltx({t}));
    eng.advance_epoch();
    try {
        eng.write(a, u, "k", "v");
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), ErrorCode::WpMismatch);
    }
    EXPECT_EQ(eng.status(a), TxStatus::Aborted);
    EXPECT_EQ(eng.poll(a).reason, AbortReason::WpMismatch);
}

TEST_F(LtxTest, DeleteInsideWp) {
    seed(t, "k", "v");
    auto a = eng.begin(TxOptions::ltx({t}));
    eng.advance_epoch();
    eng.erase(a, t, "k");
    EXPECT_EQ(eng.read(a, t, "k"), std::nullopt);
    ASSERT_TRUE(eng.commit(a).is_committed());
    EXPECT_FALSE(eng.store().state().contains({t, "k"}));
}

TEST_F(LtxTest, ForwardBoundWithoutOverwriters) {
    seed(t, "k", "v");
    auto a = eng.begin(TxOptions::ltx({u}));
    eng.advance_epoch();
    (void)eng.read(a, t, "k");
    // reach into the manager through a fresh handle-less query
    auto tx_state = eng.ltx_manager().begin({}, std::nullopt);
    eng.advance_epoch();
    const auto fb = eng.ltx_manager().compute_forward_bound(*tx_state);
    EXPECT_EQ(fb.bound, tx_state->valid_epoch);
    EXPECT_FALSE(fb.forced);
    EXPECT_TRUE(fb.blockers.empty());
    eng.ltx_manager().request_abort(*tx_state);
    eng.abort(a);
}

TEST_F(LtxTest, OverwriterInOwnEpochDoesNotForce) {
    seed(t, "k", "v");
    auto a = eng.begin(TxOptions::ltx({u}));
    eng.advance_epoch();
    (void)eng.read(a, t, "k");
    ASSERT_TRUE(occ_write(t, "k", "newer").is_committed());
    eng.write(a, u, "out", "x");
    const auto r = eng.commit(a);
    ASSERT_TRUE(r.is_committed());
    EXPECT_TRUE(is_native(r.slot)) << "the short overwriter sits after every long slot of the epoch";
}

TEST_F(LtxTest, HigherPriorityWpOnReadTableBlocks) {
    auto hi = eng.begin(TxOptions::ltx({t}));
    auto lo = eng.begin(TxOptions::ltx({u}));
    eng.advance_epoch();
    (void)eng.read(lo, t, "k");
    eng.write(lo, u, "k", "v");
    const auto r = eng.commit(lo);
    ASSERT_TRUE(r.is_waiting());
    ASSERT_EQ(r.waiting_for.size(), 1u);
    EXPECT_EQ(r.waiting_for[0], hi.id());
    EXPECT_TRUE(hi.id().has_priority_over(lo.id()));

    eng.advance_epoch();
    EXPECT_TRUE(eng.poll(lo).is_waiting()) << "blocker still running";

    eng.write(hi, t, "k", "hi");
    ASSERT_TRUE(eng.commit(hi).is_committed());
    eng.advance_epoch();
    const auto after = eng.poll(lo);
    ASSERT_TRUE(after.is_committed());
    EXPECT_LT(after.slot, eng.poll(hi).slot) << "lo read the old k, so it goes first";
}

TEST_F(LtxTest, WaitChainResolvesInOnePass) {
    const auto v = eng.create_table("v");
    auto a = eng.begin(TxOptions::ltx({t}));
    auto b = eng.begin(TxOptions::ltx({u}));
    auto c = eng.begin(TxOptions::ltx({v}));
    eng.advance_epoch();
    (void)eng.read(b, t, "x");
    eng.write(b, u, "y", "b");
    (void)eng.read(c, u, "y");
    eng.write(c, v, "z", "c");
    const auto rb = eng.commit(b);
    const auto rc = eng.commit(c);
    ASSERT_TRUE(rb.is_waiting());
    ASSERT_TRUE(rc.is_waiting());
    for (auto w : rb.waiting_for) EXPECT_TRUE(w.has_priority_over(b.id()));
    for (auto w : rc.waiting_for) EXPECT_TRUE(w.has_priority_over(c.id()));
    EXPECT_NE(std::find(rc.waiting_for.begin(), rc.waiting_for.end(), b.id()), rc.waiting_for.end());

    eng.write(a, t, "x", "a");
    ASSERT_TRUE(eng.commit(a).is_committed());
    eng.advance_epoch();
    EXPECT_TRUE(eng.poll(b).is_committed());
    EXPECT_TRUE(eng.poll(c).is_committed());
    EXPECT_EQ(eng.stats().wait_cycles, 0u);
    EXPECT_EQ(eng.stats().priority_violations, 0u);
}

TEST_F(LtxTest, AbortWhileWaitingLandsAtBoundary) {
    auto hi = eng.begin(TxOptions::ltx({t}));
    auto lo = eng.begin(TxOptions::ltx({u}));
    eng.advance_epoch();
    (void)eng.read(lo, t, "k");
    eng.write(lo, u, "k", "v");
    ASSERT_TRUE(eng.commit(lo).is_waiting());
    eng.abort(lo);
    EXPECT_TRUE(eng.poll(lo).is_waiting());
    eng.abort(lo); // idempotent
    eng.advance_epoch();
    const auto r = eng.poll(lo);
    ASSERT_TRUE(r.is_aborted());
    EXPECT_EQ(r.reason, AbortReason::UserAbort);
    eng.abort(hi);
}

struct LtxMaxWait : LtxTest {
    static EngineConfig cfg() {
        auto c = manual();
        c.max_wait_epochs = 2;
        return c;
    }
    LtxMaxWait() : LtxTest(cfg()) {}
};

TEST_F(LtxMaxWait, GivesUpAfterLimit) {
    auto hi = eng.begin(TxOptions::ltx({t}));
    auto lo = eng.begin(TxOptions::ltx({u}));
    eng.advance_epoch();
    (void)eng.read(lo, t, "k");
    eng.write(lo, u, "k", "v");
    ASSERT_TRUE(eng.commit(lo).is_waiting());
    eng.advance_epoch();
    eng.advance_epoch();
    EXPECT_TRUE(eng.poll(lo).is_waiting());
    eng.advance_epoch();
    EXPECT_EQ(eng.poll(lo).reason, AbortReason::UserAbort);
    eng.abort(hi);
}

// l2 reads y from l0 (epoch V) and x before l1 overwrites it at V; placing l2
// before l1 would drop l0's write from its view, so it must abort.
TEST_F(LtxTest, ReadUpperBound) {
    auto l0 = eng.begin(TxOptions::ltx({t}));
    auto l1 = eng.begin(TxOptions::ltx({t}));
    eng.advance_epoch();
    const Epoch v = l0.valid_epoch();
    eng.write(l0, t, "y", "l0");
    ASSERT_TRUE(eng.commit(l0).is_committed());
    auto l2 = eng.begin(TxOptions::ltx({u}));
    eng.advance_epoch();
    eng.write(l1, t, "x", "l1");
    EXPECT_EQ(eng.read(l2, t, "y"), "l0");
    EXPECT_EQ(eng.read(l2, t, "x"), std::nullopt);
    eng.write(l2, u, "w", "l2");
    ASSERT_TRUE(eng.commit(l2).is_waiting());
    const auto r1 = eng.commit(l1);
    ASSERT_TRUE(r1.is_committed());
    EXPECT_EQ(r1.slot.epoch, v);
    eng.advance_epoch();
    const auto r2 = eng.poll(l2);
    ASSERT_TRUE(r2.is_aborted());
    EXPECT_EQ(r2.reason, AbortReason::LtxReadUpperBound);
}

// hi scans t and commits; lo inserts into t but is forced ahead of hi by
// reading z, which hi overwrote. hi's committed scan never saw the insert.
TEST_F(LtxTest, ForwardedInsertIntoCommittedScanIsPhantom) {
    seed(t, "a", "1");
    seed(u, "z", "0");
    auto hi = eng.begin(TxOptions::ltx({u}));
    auto lo = eng.begin(TxOptions::ltx({t}));
    eng.advance_epoch();
    EXPECT_EQ(eng.scan(hi, t).size(), 1u);
    eng.write(hi, u, "z", "hi");
    (void)eng.read(lo, u, "z");
    eng.write(lo, t, "b", "insert");
    ASSERT_TRUE(eng.commit(hi).is_committed());
    const auto r = eng.commit(lo);
    ASSERT_TRUE(r.is_aborted());
    EXPECT_EQ(r.reason, AbortReason::LtxPhantom);
}

// same shape with an update of a scanned key: the read mark catches it
TEST_F(LtxTest, ForwardedOverwriteOfCommittedReadConflicts) {
    seed(t, "a", "1");
    seed(u, "z", "0");
    auto hi = eng.begin(TxOptions::ltx({u}));
    auto lo = eng.begin(TxOptions::ltx({t}));
    eng.advance_epoch();
    (void)eng.read(hi, t, "a");
    eng.write(hi, u, "z", "hi");
    (void)eng.read(lo, u, "z");
    eng.write(lo, t, "a", "lo");
    ASSERT_TRUE(eng.commit(hi).is_committed());
    const auto r = eng.commit(lo);
    ASSERT_TRUE(r.is_aborted());
    EXPECT_EQ(r.reason, AbortReason::LtxWriteConflict);
}

TEST_F(LtxTest, ForwardingPlacesBeforeOverwriter) {
    seed(t, "x", "0");
    auto hi = eng.begin(TxOptions::ltx({t}));
    auto lo = eng.begin(TxOptions::ltx({t}));
    eng.advance_epoch();
    (void)eng.read(lo, t, "x");
    eng.write(hi, t, "x", "hi");
    eng.write(lo, t, "y", "lo");
    const auto rh = eng.commit(hi);
    const auto rl = eng.commit(lo);
    ASSERT_TRUE(rh.is_committed());
    ASSERT_TRUE(rl.is_committed());
    EXPECT_LT(rl.slot, rh.slot);
    EXPECT_EQ(rl.slot.epoch, rh.slot.epoch);
    EXPECT_GE(eng.stats().forwarded, 1u);
}

struct LtxNoForwarding : LtxTest {
    static EngineConfig cfg() {
        auto c = manual();
        c.order_forwarding = false;
        return c;
    }
    LtxNoForwarding() : LtxTest(cfg()) {}
};

TEST_F(LtxNoForwarding, OverwrittenReadAborts) {
    seed(t, "x", "0");
    auto hi = eng.begin(TxOptions::ltx({t}));
    auto lo = eng.begin(TxOptions::ltx({t}));
    eng.advance_epoch();
    (void)eng.read(lo, t, "x");
    eng.write(hi, t, "x", "hi");
    eng.write(lo, t, "y", "lo");
    const auto rh = eng.commit(hi);
    const auto rl = eng.commit(lo);
    EXPECT_TRUE(rh.is_aborted()) << "a live later reader of x exists";
    EXPECT_TRUE(rl.is_committed());
}
