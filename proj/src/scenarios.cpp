#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <unistd.h>

#include "hcc/bench.h"

namespace hcc::bench {

namespace {

struct Harness {
    explicit Harness(EngineConfig cfg = manual()) : eng(std::move(cfg)) { eng.set_trace_sink(&sink); }

    static EngineConfig manual() {
        EngineConfig c;
        c.epoch_period = std::chrono::milliseconds(0);
        return c;
    }

    TableId table_with(const std::string& name, const std::vector<std::string>& keys) {
        const auto t = eng.create_table(name);
        auto h = eng.begin();
        for (const auto& k : keys) eng.write(h, t, k, "init");
        eng.commit(h);
        return t;
    }

    Engine eng;
    oracle::MemoryTraceSink sink;
};

std::string describe(const TransactionHandle& h, const CommitResult& r) {
    std::string s = h.id().str() + " ";
    if (r.is_committed()) return s + "committed at " + r.slot.str();
    if (r.is_waiting()) return s + "waiting";
    return s + "aborted: " + std::string(to_string(r.reason));
}

void expect(ScenarioResult& out, bool ok, const std::string& what) {
    out.lines.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
    if (!ok) out.pass = false;
}

// Ring schedule: one table, four keys a..d, transaction i reads key i and
// writes key i+1 (mod 4), so the read-write dependencies form a ring
// t1 -> t2 -> t3 -> t4 -> t1. All reads happen before any commit; commits
// are requested in begin order.
//  - long transactions: t2, t3 and t4 forward ahead of their predecessor's
//    write; t4 would then sit before t1 while overwriting a, which t1 already
//    read, so only t4 aborts (3 of 4).
//  - short transactions: t1 commits, t2's read of b is stale, t3 commits,
//    t4's read of d is stale (2 of 4).
//  - without forwarding every write below a live later reader aborts, which
//    leaves only t4 (1 of 4).
ScenarioResult fig1(TxMode mode, bool forwarding, std::size_t expected) {
    auto cfg = Harness::manual();
    cfg.order_forwarding = forwarding;
    Harness hs(cfg);
    auto& eng = hs.eng;
    const std::vector<std::string> keys{"a", "b", "c", "d"};
    const auto t = hs.table_with("fig1", keys);
    eng.advance_epoch();

    std::vector<TransactionHandle> txs;
    for (std::size_t i = 0; i < 4; ++i) {
        txs.push_back(eng.begin(mode == TxMode::Ltx ? TxOptions::ltx({t}) : TxOptions::occ()));
    }
    if (mode == TxMode::Ltx) eng.advance_epoch();
    for (std::size_t i = 0; i < 4; ++i) (void)eng.read(txs[i], t, keys[i]);
    for (std::size_t i = 0; i < 4; ++i) eng.write(txs[i], t, keys[(i + 1) % 4], "t" + std::to_string(i + 1));

    ScenarioResult out;
    out.pass = true;
    std::size_t committed = 0;
    for (auto& h : txs) {
        const auto r = eng.commit(h);
        committed += r.is_committed() ? 1 : 0;
        out.lines.push_back(describe(h, r));
    }
    eng.advance_epoch();
    out.trace = hs.sink.take();
    expect(out, committed == expected,
           std::to_string(committed) + " of 4 committed, expected " + std::to_string(expected));
    expect(out, oracle::check_witness(out.trace).pass, "witness check");
    return out;
}

ScenarioResult fig2() {
    Harness hs;
    auto& eng = hs.eng;
    std::vector<durability::LogRecord> flushed;
    eng.logger().set_flush_observer([&flushed](Epoch, const std::vector<durability::LogRecord>& recs) {
        flushed.insert(flushed.end(), recs.begin(), recs.end());
    });
    const auto t = hs.table_with("fig2", {"x", "z", "d"});
    eng.advance_epoch();
    flushed.clear();

    auto t1 = eng.begin(TxOptions::ltx({t}));
    auto t2 = eng.begin(TxOptions::ltx({t}));
    auto t3 = eng.begin(TxOptions::ltx({t}));
    eng.advance_epoch();

    (void)eng.read(t2, t, "x");
    (void)eng.read(t3, t, "z");
    eng.write(t1, t, "x", "x1");
    eng.write(t1, t, "z", "z1");
    eng.write(t1, t, "d", "d1");
    eng.write(t2, t, "d", "d2");
    eng.write(t3, t, "d", "d3");

    ScenarioResult out;
    out.pass = true;
    std::size_t committed = 0;
    for (auto* h : {&t1, &t2, &t3}) {
        const auto r = eng.commit(*h);
        committed += r.is_committed() ? 1 : 0;
        out.lines.push_back(describe(*h, r));
    }
    const Epoch commit_epoch = eng.current_epoch();
    eng.advance_epoch();
    out.trace = hs.sink.take();

    std::size_t d_records = 0;
    std::string d_value;
    for (const auto& r : flushed) {
        if (r.epoch == commit_epoch && r.key == "d") {
            ++d_records;
            d_value = r.value.value_or("<delete>");
        }
    }
    expect(out, committed == 3, std::to_string(committed) + " of 3 committed");
    expect(out, d_records == 1, std::to_string(d_records) + " log record(s) for d in epoch " + std::to_string(commit_epoch));
    expect(out, d_value == "d1", "persisted d = " + d_value + " (written by " + t1.id().str() + ")");
    expect(out, !oracle::check_csr(out.trace), "conflict graph is cyclic");
    const auto w = oracle::check_witness(out.trace);
    expect(out, w.pass, "witness check " + w.description);
    expect(out, oracle::check_mvsr_bruteforce(out.trace).pass, "brute-force MVSR check");
    return out;
}

ScenarioResult wp_visibility() {
    Harness hs;
    auto& eng = hs.eng;
    const auto t = hs.table_with("wp", {"k", "j"});
    const auto other = hs.table_with("other", {"k"});
    eng.advance_epoch();
    ScenarioResult out;
    out.pass = true;

    const Epoch n = eng.current_epoch();
    auto l = eng.begin(TxOptions::ltx({t}));
    expect(out, l.valid_epoch() == n + 1, "long transaction begun at " + std::to_string(n) + " is valid from " +
                                              std::to_string(l.valid_epoch()));

    auto rmw = [&](TableId table, const std::string& key) {
        auto h = eng.begin();
        (void)eng.read(h, table, key);
        eng.write(h, table, key, h.id().str());
        const auto r = eng.commit(h);
        out.lines.push_back(describe(h, r));
        return r;
    };
    expect(out, rmw(t, "k").is_committed(), "short transaction validating at N commits");
    eng.advance_epoch();
    auto r1 = rmw(t, "k");
    expect(out, r1.is_aborted() && r1.reason == AbortReason::OccWpConflict, "read-modify-write at N+1 aborts");
    auto r2 = rmw(t, "j");
    expect(out, r2.is_aborted() && r2.reason == AbortReason::OccWpConflict, "other key of the table at N+1 aborts");
    {
        auto h = eng.begin();
        eng.write(h, t, "k", "blind");
        const auto r = eng.commit(h);
        out.lines.push_back(describe(h, r));
        expect(out, r.is_aborted() && r.reason == AbortReason::OccWpConflict, "blind write at N+1 aborts");
    }
    expect(out, rmw(other, "k").is_committed(), "table outside the WP is unaffected");

    (void)eng.read(l, t, "k");
    eng.write(l, t, "k", "long");
    const auto lr = eng.commit(l);
    out.lines.push_back(describe(l, lr));
    expect(out, lr.is_committed(), "long transaction commits");
    eng.advance_epoch();
    expect(out, rmw(t, "k").is_committed(), "write preservation is gone after the boundary");
    eng.advance_epoch();
    out.trace = hs.sink.take();
    expect(out, oracle::check_witness(out.trace).pass, "witness check");
    return out;
}

ScenarioResult safe_snapshot() {
    Harness hs;
    auto& eng = hs.eng;
    const auto t = hs.table_with("s", {"x", "y"});
    eng.advance_epoch();
    ScenarioResult out;
    out.pass = true;

    auto l1 = eng.begin(TxOptions::ltx({t}));
    auto l2 = eng.begin(TxOptions::ltx({t}));
    const Epoch v = l1.valid_epoch();
    eng.advance_epoch();
    (void)eng.read(l2, t, "x");
    eng.write(l1, t, "x", "x1");

    auto ro = eng.begin(TxOptions::read_only());
    out.lines.push_back("read-only snapshot " + ro.snapshot().str());
    for (int i = 0; i < 3; ++i) {
        auto h = eng.begin();
        eng.write(h, t, "y", "busy" + std::to_string(i));
        (void)eng.commit(h); // aborts on WP; the point is the boundary
        eng.advance_epoch();
        expect(out, eng.safe_epoch() == v - 1,
               "safe epoch held at " + std::to_string(eng.safe_epoch()) + " while long transactions live");
    }
    const auto r1 = eng.commit(l1);
    out.lines.push_back(describe(l1, r1));
    eng.write(l2, t, "y", "y2");
    const Epoch safe_before = eng.safe_epoch();
    const auto r2 = eng.commit(l2);
    out.lines.push_back(describe(l2, r2));
    expect(out, r1.is_committed() && r2.is_committed(), "both long transactions commit");
    expect(out, r2.slot < r1.slot, l2.id().str() + " forwarded ahead of " + l1.id().str());
    expect(out, r2.slot.epoch == v && eng.current_epoch() > v, "forwarded into epoch " + std::to_string(v) +
                                                                  " after it ended");
    expect(out, safe_before < r2.slot.epoch, "that epoch was still classified unsafe");

    expect(out, eng.read(ro, t, "x") == "init", "read-only snapshot still sees x = init");
    const auto rr = eng.commit(ro);
    expect(out, rr.is_committed(), "read-only transaction commits");
    eng.advance_epoch();
    expect(out, eng.safe_epoch() >= v, "safe epoch moves past " + std::to_string(v) + " once both finish");
    auto ro2 = eng.begin(TxOptions::read_only());
    expect(out, eng.read(ro2, t, "x") == "x1" && eng.read(ro2, t, "y") == "y2", "next read-only snapshot sees both");
    eng.commit(ro2);
    out.trace = hs.sink.take();
    expect(out, oracle::check_witness(out.trace).pass, "witness check");
    return out;
}

ScenarioResult recovery() {
    ScenarioResult out;
    out.pass = true;
    const auto dir = std::filesystem::temp_directory_path() / ("hcc-recovery-" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const auto log = dir / "wal.log";

    std::map<Epoch, std::uint64_t> digests{{kNoEpoch, store::digest({})}};
    std::uint64_t final_digest = 0;
    {
        auto cfg = Harness::manual();
        cfg.log_path = log;
        cfg.sync_log = false;
        Harness hs(cfg);
        auto& eng = hs.eng;
        eng.set_epoch_observer([&](Epoch e) { digests[e] = store::digest(eng.store().state()); });
        std::vector<TableId> tables{eng.create_table("a"), eng.create_table("b")};
        std::mt19937_64 rng(7);
        for (int e = 0; e < 40; ++e) {
            for (int i = 0; i < 4; ++i) {
                auto h = eng.begin();
                for (int k = 0; k < 3; ++k) {
                    const auto t = tables[rng() % 2];
                    const auto key = "k" + std::to_string(rng() % 16);
                    if (rng() % 6 == 0) eng.erase(h, t, key);
                    else eng.write(h, t, key, h.id().str() + "/" + std::to_string(k));
                }
                (void)eng.commit(h);
            }
            eng.advance_epoch();
        }
        final_digest = store::digest(eng.store().state());
    }

    const auto full = durability::recover(log);
    expect(out, store::digest(full.state) == final_digest, "full log recovers the final state");

    std::ifstream in(log, std::ios::binary);
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::mt19937_64 rng(11);
    std::size_t matched = 0;
    const std::size_t runs = 10;
    for (std::size_t i = 0; i < runs; ++i) {
        const auto cut = rng() % (bytes.size() + 1);
        const auto path = dir / "cut.log";
        std::ofstream(path, std::ios::binary | std::ios::trunc).write(bytes.data(), static_cast<std::streamsize>(cut));
        const auto r = durability::recover(path);
        if (digests.contains(r.durable_epoch) && digests[r.durable_epoch] == store::digest(r.state)) ++matched;
    }
    expect(out, matched == runs, std::to_string(matched) + "/" + std::to_string(runs) + " truncated logs recover their durable prefix");

    std::string corrupt = bytes;
    corrupt[corrupt.size() / 3] ^= 0x5a;
    std::ofstream(dir / "bad.log", std::ios::binary | std::ios::trunc).write(corrupt.data(), static_cast<std::streamsize>(corrupt.size()));
    bool rejected = false;
    try {
        (void)durability::recover(dir / "bad.log");
    } catch (const error& e) {
        rejected = e.code() == ErrorCode::CorruptLog;
    }
    expect(out, rejected, "a flipped byte inside the log is reported as corruption");
    std::filesystem::remove_all(dir);
    return out;
}

} // namespace

const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names{"fig1-ltx", "fig1-occ", "fig1-mvto", "fig2-forwarding",
                                                "wp-visibility", "safe-snapshot", "recovery"};
    return names;
}

ScenarioResult run_scenario(const std::string& name) {
    if (name == "fig1-ltx") return fig1(TxMode::Ltx, true, 3);
    if (name == "fig1-occ") return fig1(TxMode::Occ, true, 2);
    if (name == "fig1-mvto") return fig1(TxMode::Ltx, false, 1);
    if (name == "fig2-forwarding") return fig2();
    if (name == "wp-visibility") return wp_visibility();
    if (name == "safe-snapshot") return safe_snapshot();
    if (name == "recovery") return recovery();
    throw error(ErrorCode::UnknownScenario, "unknown scenario '" + name + "'");
}

} // namespace hcc::bench
