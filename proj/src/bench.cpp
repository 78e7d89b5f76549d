#include "hcc/bench.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <thread>

namespace hcc::bench {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad(const std::string& key, const std::string& value) {
    throw error(ErrorCode::ConfigError, "bad value for " + key + ": '" + value + "'");
}

std::size_t as_size(const std::string& key, const std::string& v) {
    std::size_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) bad(key, v);
    return out;
}

double as_ratio(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double d = 0;
    try {
        d = std::stod(v, &used);
    } catch (const std::exception&) {
        bad(key, v);
    }
    if (used != v.size() || d < 0.0 || d > 1.0) bad(key, v);
    return d;
}

bool as_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    bad(key, v);
}

std::string key_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "k%04zu", i);
    return buf;
}

std::string make_value(TransactionId tx, std::size_t n, std::size_t size) {
    std::string v = tx.str() + "." + std::to_string(n);
    if (v.size() < size) v.append(size - v.size(), '_');
    return v;
}

struct Op {
    enum class Kind : std::uint8_t { Read, Write, Erase, Scan } kind;
    TableId table;
    std::string key;
    KeyRange range;
};

struct Script {
    TxOptions opts;
    std::vector<Op> ops;
};

Script make_script(std::mt19937_64& rng, const WorkloadConfig& cfg, const std::vector<TableId>& tables) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto pick_table = [&] { return tables[rng() % tables.size()]; };
    auto pick_key = [&] { return key_name(rng() % cfg.keys_per_table); };
    auto range_from = [&](std::size_t len) {
        const auto start = rng() % cfg.keys_per_table;
        KeyRange r{key_name(start), std::nullopt};
        if (start + len < cfg.keys_per_table) r.high = key_name(start + len);
        return r;
    };

    Script s;
    const double roll = u(rng);
    if (roll < cfg.long_ratio) {
        std::set<TableId> wp;
        const auto want = 1 + rng() % std::min<std::size_t>(2, tables.size());
        while (wp.size() < want) wp.insert(pick_table());
        std::set<TableId> read;
        if (cfg.long_scan > 0) {
            const auto t = pick_table();
            read.insert(t);
            s.ops.push_back({Op::Kind::Scan, t, {}, range_from(cfg.long_scan)});
        }
        for (std::size_t i = 0; i < cfg.ops_per_tx; ++i) {
            const auto t = pick_table();
            read.insert(t);
            s.ops.push_back({Op::Kind::Read, t, pick_key(), {}});
        }
        const std::vector<TableId> wpv(wp.begin(), wp.end());
        for (std::size_t i = 0; i < cfg.long_writes; ++i) {
            const auto t = wpv[rng() % wpv.size()];
            const auto kind = u(rng) < cfg.delete_ratio ? Op::Kind::Erase : Op::Kind::Write;
            s.ops.push_back({kind, t, pick_key(), {}});
        }
        if (cfg.long_mode == TxMode::Ltx) {
            std::optional<std::set<TableId>> area;
            if (u(rng) < cfg.read_area_ratio) area = read;
            s.opts = TxOptions::ltx(wp, area);
        }
        return s;
    }
    if (roll < cfg.long_ratio + cfg.read_only_ratio) {
        s.opts = TxOptions::read_only();
        for (std::size_t i = 0; i < cfg.ops_per_tx; ++i) s.ops.push_back({Op::Kind::Read, pick_table(), pick_key(), {}});
        return s;
    }
    for (std::size_t i = 0; i < cfg.ops_per_tx; ++i) {
        const double r = u(rng);
        if (r < cfg.scan_ratio) {
            s.ops.push_back({Op::Kind::Scan, pick_table(), {}, range_from(4)});
        } else if (r < cfg.scan_ratio + cfg.read_ratio) {
            s.ops.push_back({Op::Kind::Read, pick_table(), pick_key(), {}});
        } else {
            const auto kind = u(rng) < cfg.delete_ratio ? Op::Kind::Erase : Op::Kind::Write;
            s.ops.push_back({kind, pick_table(), pick_key(), {}});
        }
    }
    return s;
}

void exec(Engine& eng, TransactionHandle& h, const Op& op, std::size_t n, std::size_t value_size) {
    switch (op.kind) {
    case Op::Kind::Read: (void)eng.read(h, op.table, op.key); break;
    case Op::Kind::Scan: (void)eng.scan(h, op.table, op.range); break;
    case Op::Kind::Write: eng.write(h, op.table, op.key, make_value(h.id(), n, value_size)); break;
    case Op::Kind::Erase: eng.erase(h, op.table, op.key); break;
    }
}

std::vector<TableId> load(Engine& eng, const WorkloadConfig& cfg) {
    std::vector<TableId> tables;
    for (std::size_t t = 0; t < cfg.tables; ++t) tables.push_back(eng.create_table("t" + std::to_string(t)));
    for (auto t : tables) {
        auto h = eng.begin();
        for (std::size_t k = 0; k < cfg.keys_per_table; ++k) eng.write(h, t, key_name(k), make_value(h.id(), k, cfg.value_size));
        if (!eng.commit(h).is_committed()) throw error(ErrorCode::ConfigError, "initial load did not commit");
    }
    return tables;
}

EngineConfig engine_config(const WorkloadConfig& cfg, const RunOptions& opts) {
    EngineConfig ec;
    ec.epoch_period = std::chrono::milliseconds(cfg.epoch_period_ms);
    ec.order_forwarding = cfg.order_forwarding;
    ec.aggressive_forwarding = cfg.aggressive_forwarding;
    ec.max_wait_epochs = cfg.max_wait_epochs;
    ec.wp_capacity = std::max<std::size_t>(64, cfg.threads * 2 + 2);
    if (opts.log_dir) {
        ec.log_path = *opts.log_dir / "wal.log";
        ec.sync_log = false;
    }
    return ec;
}

class Recorder {
public:
    explicit Recorder(MetricsReport& r) : r_(r) {}

    void started() {
        std::lock_guard lock(mutex_);
        ++r_.started;
    }
    void waiting(const TransactionHandle& h, const CommitResult& res) {
        std::lock_guard lock(mutex_);
        ++r_.waiting_results;
        for (auto b : res.waiting_for) {
            if (!b.has_priority_over(h.id())) ++r_.blocker_priority_violations;
        }
    }
    void finished(TxMode mode, bool long_tx, const CommitResult& res, std::uint64_t epochs, double ms) {
        std::lock_guard lock(mutex_);
        const std::string m(to_string(mode));
        if (res.is_committed()) {
            ++r_.committed;
            ++r_.committed_by_mode[m];
            if (long_tx) {
                r_.long_latency_epochs.push_back(epochs);
                r_.long_latency_ms.push_back(ms);
            }
        } else {
            ++r_.aborted;
            ++r_.aborted_by_reason[m + "/" + std::string(to_string(res.reason))];
        }
    }

private:
    MetricsReport& r_;
    std::mutex mutex_;
};

struct Session {
    bool idle{true};
    bool waiting{false};
    bool long_tx{false};
    Script script;
    TransactionHandle h;
    std::size_t pc{0};
    Epoch begun{0};
};

void run_simulated(Engine& eng, const WorkloadConfig& cfg, const std::vector<TableId>& tables, Recorder& rec) {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Session> sessions(std::max<std::size_t>(1, cfg.threads));
    std::size_t started = 0;
    auto done = [&](Session& s, const CommitResult& r) {
        rec.finished(s.h.mode(), s.long_tx, r, eng.current_epoch() - s.begun, 0.0);
        s = Session{};
    };

    for (std::size_t steps = 0;; ++steps) {
        if (steps > 50'000'000) throw error(ErrorCode::ConfigError, "simulation did not terminate");
        const bool all_idle = std::all_of(sessions.begin(), sessions.end(), [](const Session& s) { return s.idle; });
        if (all_idle && started >= cfg.tx_budget) break;
        if (u(rng) < cfg.advance_probability) {
            eng.advance_epoch();
            continue;
        }
        auto& s = sessions[rng() % sessions.size()];
        if (s.idle) {
            if (started >= cfg.tx_budget) continue;
            s.idle = false;
            s.script = make_script(rng, cfg, tables);
            s.long_tx = s.script.ops.size() > cfg.ops_per_tx || s.script.opts.mode == TxMode::Ltx;
            s.h = eng.begin(s.script.opts);
            s.begun = eng.current_epoch();
            ++started;
            rec.started();
            continue;
        }
        if (s.waiting) {
            const auto r = eng.poll(s.h);
            if (r.is_waiting()) {
                eng.advance_epoch();
                continue;
            }
            done(s, r);
            continue;
        }
        if (s.h.mode() == TxMode::Ltx && eng.current_epoch() < s.h.valid_epoch()) {
            eng.advance_epoch();
            continue;
        }
        if (s.pc < s.script.ops.size()) {
            exec(eng, s.h, s.script.ops[s.pc], s.pc, cfg.value_size);
            ++s.pc;
            continue;
        }
        const auto r = eng.commit(s.h);
        if (r.is_waiting()) {
            rec.waiting(s.h, r);
            s.waiting = true;
            continue;
        }
        done(s, r);
    }
    eng.advance_epoch();
}

void run_threaded(Engine& eng, const WorkloadConfig& cfg, const std::vector<TableId>& tables, Recorder& rec) {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (std::size_t i = 0; i < cfg.threads; ++i) {
        workers.emplace_back([&, i] {
            std::mt19937_64 rng(cfg.seed * 7919 + i + 1);
            while (next.fetch_add(1) < cfg.tx_budget) {
                auto script = make_script(rng, cfg, tables);
                const bool long_tx = script.ops.size() > cfg.ops_per_tx || script.opts.mode == TxMode::Ltx;
                const auto t0 = std::chrono::steady_clock::now();
                auto h = eng.begin(script.opts);
                const auto e0 = eng.current_epoch();
                rec.started();
                for (std::size_t pc = 0; pc < script.ops.size(); ++pc) exec(eng, h, script.ops[pc], pc, cfg.value_size);
                auto r = eng.commit(h);
                if (r.is_waiting()) {
                    rec.waiting(h, r);
                    r = eng.wait(h);
                }
                const std::chrono::duration<double, std::milli> ms = std::chrono::steady_clock::now() - t0;
                rec.finished(h.mode(), long_tx, r, eng.current_epoch() - e0, ms.count());
            }
        });
    }
    for (auto& w : workers) w.join();
    eng.shutdown();
}

void run_liveness(Engine& eng, const WorkloadConfig& cfg, MetricsReport& report) {
    WorkloadConfig one = cfg;
    one.tables = 1;
    const auto table = load(eng, one).front();

    std::atomic<bool> stop{false};
    std::vector<std::thread> updaters;
    for (std::size_t i = 0; i < cfg.updaters; ++i) {
        updaters.emplace_back([&, i] {
            std::mt19937_64 rng(cfg.seed * 31 + i);
            std::size_t n = 0;
            while (!stop.load()) {
                auto h = eng.begin();
                const auto key = key_name(rng() % cfg.keys_per_table);
                (void)eng.read(h, table, key);
                eng.write(h, table, key, make_value(h.id(), n++, cfg.value_size));
                (void)eng.commit(h);
            }
        });
    }

    std::mt19937_64 rng(cfg.seed);
    for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
        ++report.trials;
        std::size_t attempts = 0;
        bool committed = false;
        while (!committed && attempts < cfg.max_attempts) {
            ++attempts;
            ++report.attempts;
            ++report.started;
            const auto t0 = std::chrono::steady_clock::now();
            auto h = eng.begin(cfg.long_mode == TxMode::Ltx ? TxOptions::ltx({table}) : TxOptions::occ());
            const auto e0 = eng.current_epoch();
            const auto rows = eng.scan(h, table);
            // aggregate with think time, the part that makes the transaction long
            std::uint64_t sum = 0;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                sum += rows[i].second.size();
                if (cfg.think_every > 0 && i % cfg.think_every == 0) {
                    std::this_thread::sleep_for(std::chrono::microseconds(cfg.think_us));
                }
            }
            std::set<std::size_t> picked;
            while (picked.size() < std::min(cfg.long_writes, cfg.keys_per_table)) picked.insert(rng() % cfg.keys_per_table);
            for (auto k : picked) eng.write(h, table, key_name(k), "sum" + std::to_string(sum) + "." + std::to_string(trial));
            auto r = eng.commit(h);
            if (r.is_waiting()) r = eng.wait(h);
            const std::chrono::duration<double, std::milli> ms = std::chrono::steady_clock::now() - t0;
            const std::string m(to_string(h.mode()));
            if (r.is_committed()) {
                committed = true;
                ++report.committed;
                ++report.committed_by_mode[m];
                report.long_latency_epochs.push_back(eng.current_epoch() - e0);
                report.long_latency_ms.push_back(ms.count());
            } else {
                ++report.aborted;
                ++report.attempts_aborted;
                ++report.aborted_by_reason[m + "/" + std::string(to_string(r.reason))];
            }
        }
        if (committed) {
            ++report.trials_committed;
            report.max_retries = std::max(report.max_retries, attempts - 1);
        }
    }
    stop.store(true);
    for (auto& t : updaters) t.join();
    eng.shutdown();
}

template <class T>
std::string percentile_line(std::vector<T> v) {
    if (v.empty()) return "-";
    std::sort(v.begin(), v.end());
    auto at = [&v](double q) { return v[static_cast<std::size_t>(q * static_cast<double>(v.size() - 1))]; };
    std::ostringstream out;
    out << "p50=" << at(0.5) << " p90=" << at(0.9) << " max=" << v.back();
    return out.str();
}

} // namespace

WorkloadConfig WorkloadConfig::parse(std::istream& in) {
    WorkloadConfig c;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw error(ErrorCode::ConfigError, "line " + std::to_string(lineno) + ": expected key = value");
        }
        const auto key = trim(std::string_view(line).substr(0, eq));
        const auto v = trim(std::string_view(line).substr(eq + 1));
        if (key == "workload") {
            if (v == "mixed") c.workload = WorkloadKind::Mixed;
            else if (v == "liveness") c.workload = WorkloadKind::Liveness;
            else bad(key, v);
        } else if (key == "tables") c.tables = as_size(key, v);
        else if (key == "keys_per_table") c.keys_per_table = as_size(key, v);
        else if (key == "value_size") c.value_size = as_size(key, v);
        else if (key == "threads") c.threads = as_size(key, v);
        else if (key == "ops_per_tx") c.ops_per_tx = as_size(key, v);
        else if (key == "read_ratio") c.read_ratio = as_ratio(key, v);
        else if (key == "scan_ratio") c.scan_ratio = as_ratio(key, v);
        else if (key == "delete_ratio") c.delete_ratio = as_ratio(key, v);
        else if (key == "long_ratio") c.long_ratio = as_ratio(key, v);
        else if (key == "read_only_ratio") c.read_only_ratio = as_ratio(key, v);
        else if (key == "long_scan") c.long_scan = as_size(key, v);
        else if (key == "long_writes") c.long_writes = as_size(key, v);
        else if (key == "long_mode") {
            if (v == "ltx") c.long_mode = TxMode::Ltx;
            else if (v == "occ") c.long_mode = TxMode::Occ;
            else bad(key, v);
        } else if (key == "read_area_ratio") c.read_area_ratio = as_ratio(key, v);
        else if (key == "tx_budget") c.tx_budget = as_size(key, v);
        else if (key == "seed") c.seed = as_size(key, v);
        else if (key == "epoch_period_ms") c.epoch_period_ms = as_size(key, v);
        else if (key == "advance_probability") c.advance_probability = as_ratio(key, v);
        else if (key == "aggressive_forwarding") c.aggressive_forwarding = as_bool(key, v);
        else if (key == "order_forwarding") c.order_forwarding = as_bool(key, v);
        else if (key == "max_wait_epochs") c.max_wait_epochs = as_size(key, v);
        else if (key == "trials") c.trials = as_size(key, v);
        else if (key == "updaters") c.updaters = as_size(key, v);
        else if (key == "think_every") c.think_every = as_size(key, v);
        else if (key == "think_us") c.think_us = as_size(key, v);
        else if (key == "max_attempts") c.max_attempts = as_size(key, v);
        else throw error(ErrorCode::ConfigError, "unknown key '" + key + "'");
    }
    if (c.tables == 0 || c.keys_per_table == 0) throw error(ErrorCode::ConfigError, "need at least one table and key");
    if (c.long_ratio + c.read_only_ratio > 1.0) throw error(ErrorCode::ConfigError, "long_ratio + read_only_ratio > 1");
    if (c.workload == WorkloadKind::Liveness && c.epoch_period_ms == 0) {
        throw error(ErrorCode::ConfigError, "the liveness workload needs epoch_period_ms > 0");
    }
    if (c.workload == WorkloadKind::Mixed && c.threads == 0) throw error(ErrorCode::ConfigError, "threads must be > 0");
    return c;
}

WorkloadConfig WorkloadConfig::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw error(ErrorCode::ConfigError, "cannot read " + path.string());
    return parse(in);
}

std::string MetricsReport::to_text() const {
    std::ostringstream out;
    out << "started: " << started << "\n";
    out << "committed: " << committed << "\n";
    out << "aborted: " << aborted << "\n";
    out << "in_flight: " << in_flight << "\n";
    for (const auto& [m, n] : committed_by_mode) out << "committed." << m << ": " << n << "\n";
    for (const auto& [m, n] : aborted_by_reason) out << "aborted." << m << ": " << n << "\n";
    out << "waiting_results: " << waiting_results << "\n";
    out << "blocker_priority_violations: " << blocker_priority_violations << "\n";
    out << "ltx_waits: " << engine.waits << "\n";
    out << "ltx_forwarded: " << engine.forwarded << "\n";
    out << "priority_violations: " << engine.priority_violations << "\n";
    out << "wait_cycles: " << engine.wait_cycles << "\n";
    out << "log_records: " << engine.log_records << "\n";
    out << "long_latency_epochs: " << percentile_line(long_latency_epochs) << "\n";
    if (trials > 0) {
        out << "trials: " << trials << "\n";
        out << "trials_committed: " << trials_committed << "\n";
        out << "max_retries: " << max_retries << "\n";
        out << "attempts: " << attempts << "\n";
        out << "attempts_aborted: " << attempts_aborted << "\n";
    }
    if (!manual) {
        out << "long_latency_ms: " << percentile_line(long_latency_ms) << "\n";
        out << "elapsed_s: " << elapsed_s << "\n";
        out << "throughput_tps: " << (elapsed_s > 0 ? static_cast<double>(committed) / elapsed_s : 0.0) << "\n";
    }
    char digest[20];
    std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(final_digest));
    out << "final_digest: " << digest << "\n";
    if (witness) out << "witness: " << (witness->pass ? "pass" : "violation: " + witness->description) << "\n";
    if (mvsr) out << "mvsr: " << (mvsr->pass ? "pass" : "fail: " + mvsr->description) << "\n";
    return out.str();
}

RunResult run(const WorkloadConfig& cfg, const RunOptions& opts) {
    RunResult out;
    auto& report = out.report;
    report.manual = cfg.epoch_period_ms == 0;
    Engine eng(engine_config(cfg, opts));
    oracle::MemoryTraceSink sink;
    eng.set_trace_sink(&sink);

    const auto t0 = std::chrono::steady_clock::now();
    if (cfg.workload == WorkloadKind::Liveness) {
        run_liveness(eng, cfg, report);
    } else {
        const auto tables = load(eng, cfg);
        Recorder rec(report);
        if (report.manual) run_simulated(eng, cfg, tables, rec);
        else run_threaded(eng, cfg, tables, rec);
    }
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - t0;
    report.elapsed_s = elapsed.count();
    report.in_flight = report.started - report.committed - report.aborted;
    report.engine = eng.stats();
    report.final_digest = store::digest(eng.store().state());
    out.history = sink.take();

    if (opts.verify) {
        report.witness = oracle::check_witness(out.history);
        const auto s = oracle::summarize(out.history);
        if (s.committed.size() <= oracle::kMaxBruteForceTxs) report.mvsr = oracle::check_mvsr_bruteforce(out.history);
    }
    return out;
}

} // namespace hcc::bench
