#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "hcc/bench.h"

namespace {

using namespace hcc;

void dump_trace(const oracle::History& h, const std::string& path) {
    if (path.empty()) return;
    std::ofstream out(path);
    if (!out) throw error(ErrorCode::ConfigError, "cannot write " + path);
    oracle::write_history(out, h);
}

int bench_run(const std::string& config, bool verify, const std::string& log_dir, const std::string& trace_out) {
    const auto cfg = bench::WorkloadConfig::parse_file(config);
    bench::RunOptions opts;
    opts.verify = verify;
    if (!log_dir.empty()) {
        std::filesystem::create_directories(log_dir);
        opts.log_dir = log_dir;
    }
    const auto res = bench::run(cfg, opts);
    std::cout << res.report.to_text();
    dump_trace(res.history, trace_out);
    if (verify) {
        const bool ok = (!res.report.witness || res.report.witness->pass) && (!res.report.mvsr || res.report.mvsr->pass);
        return ok ? 0 : 1;
    }
    return 0;
}

int bench_scenario(const std::string& name, const std::string& trace_out) {
    const auto res = bench::run_scenario(name);
    std::cout << "scenario: " << name << "\n";
    for (const auto& l : res.lines) std::cout << "  " << l << "\n";
    std::cout << "result: " << (res.pass ? "pass" : "fail") << "\n";
    if (trace_out.empty()) {
        std::cout << "trace:\n";
        oracle::write_history(std::cout, res.trace);
    }
    dump_trace(res.trace, trace_out);
    return res.pass ? 0 : 1;
}

int oracle_check(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw error(ErrorCode::ConfigError, "cannot open " + path);
    const auto h = oracle::read_history(in);
    const auto s = oracle::summarize(h);
    const auto w = oracle::check_witness(h);
    std::cout << "committed: " << s.committed.size() << "\n";
    std::cout << "witness: " << (w.pass ? "pass" : "violation " + w.description) << "\n";
    std::cout << "csr: " << (oracle::check_csr(h) ? "acyclic" : "cyclic") << "\n";
    bool ok = w.pass;
    if (s.committed.size() <= oracle::kMaxBruteForceTxs) {
        const auto m = oracle::check_mvsr_bruteforce(h);
        std::cout << "mvsr: " << (m.pass ? "pass" : "violation " + m.description) << "\n";
        ok = ok && m.pass;
    }
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hcc: hybrid concurrency-control KV engine tools"};
    app.require_subcommand(1);

    auto* bench = app.add_subcommand("bench", "workloads and scripted scenarios");
    bench->require_subcommand(1);
    std::string config, log_dir, trace_out, scenario;
    bool verify = false;
    auto* run = bench->add_subcommand("run", "run a workload from a key=value config file");
    run->add_option("--config", config)->required();
    run->add_flag("--verify", verify, "check the trace with the oracle");
    run->add_option("--log-dir", log_dir, "write the WAL here");
    run->add_option("--trace-out", trace_out, "dump the trace to a file");
    auto* scen = bench->add_subcommand("scenario", "run a scripted scenario");
    scen->add_option("name", scenario)->required();
    scen->add_option("--trace-out", trace_out, "dump the trace to a file instead of stdout");
    auto* list = bench->add_subcommand("list", "list scenario names");

    auto* orc = app.add_subcommand("oracle", "offline history checks");
    orc->require_subcommand(1);
    std::string trace;
    auto* check = orc->add_subcommand("check", "check a trace file");
    check->add_option("trace", trace)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (*run) return bench_run(config, verify, log_dir, trace_out);
        if (*scen) return bench_scenario(scenario, trace_out);
        if (*list) {
            for (const auto& n : bench::scenario_names()) std::cout << n << "\n";
            return 0;
        }
        if (*check) return oracle_check(trace);
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::MalformedHistory ? 1 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
