#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hcc/engine.h"
#include "hcc/oracle.h"

namespace hcc::bench {

enum class WorkloadKind : std::uint8_t { Mixed, Liveness };

struct WorkloadConfig {
    WorkloadKind workload{WorkloadKind::Mixed};
    std::size_t tables{3};
    std::size_t keys_per_table{64};
    std::size_t value_size{8};

    // short transactions
    std::size_t threads{4};
    std::size_t ops_per_tx{4};
    double read_ratio{0.5};
    double scan_ratio{0.05};
    double delete_ratio{0.05};

    // long transactions
    double long_ratio{0.0};
    double read_only_ratio{0.0};
    std::size_t long_scan{16};
    std::size_t long_writes{4};
    TxMode long_mode{TxMode::Ltx};
    double read_area_ratio{0.5};

    std::size_t tx_budget{1000};
    std::uint64_t seed{1};
    /// Zero: single-threaded simulated interleaving with manual epochs.
    std::size_t epoch_period_ms{5};
    double advance_probability{0.05};
    bool aggressive_forwarding{true};
    bool order_forwarding{true};
    std::optional<std::size_t> max_wait_epochs;

    // liveness workload
    std::size_t trials{100};
    std::size_t updaters{4};
    std::size_t think_every{10};
    std::size_t think_us{50};
    std::size_t max_attempts{20};

    /// `key = value` lines; `#` starts a comment. Throws error(ConfigError).
    static WorkloadConfig parse(std::istream& in);
    static WorkloadConfig parse_file(const std::filesystem::path& path);
};

struct MetricsReport {
    bool manual{false};
    std::size_t started{0};
    std::size_t committed{0};
    std::size_t aborted{0};
    std::size_t in_flight{0};
    std::map<std::string, std::size_t> committed_by_mode;
    std::map<std::string, std::size_t> aborted_by_reason; // "mode/reason"
    std::size_t waiting_results{0};
    std::size_t blocker_priority_violations{0};
    EngineStats engine;
    std::vector<std::uint64_t> long_latency_epochs;
    std::vector<double> long_latency_ms;
    double elapsed_s{0};
    std::uint64_t final_digest{0};
    std::optional<oracle::Verdict> witness;
    std::optional<oracle::Verdict> mvsr;

    // liveness workload
    std::size_t trials{0};
    std::size_t trials_committed{0};
    std::size_t max_retries{0};
    std::size_t attempts_aborted{0};
    std::size_t attempts{0};

    /// Structured `key: value` text. Timing lines are left out in manual mode
    /// so that reports reproduce exactly.
    [[nodiscard]] std::string to_text() const;
};

struct RunOptions {
    bool verify{false};
    std::optional<std::filesystem::path> log_dir;
};

struct RunResult {
    MetricsReport report;
    oracle::History history;
};

RunResult run(const WorkloadConfig& cfg, const RunOptions& opts = {});

struct ScenarioResult {
    bool pass{false};
    std::vector<std::string> lines; // observations, one per line
    oracle::History trace;
};

[[nodiscard]] const std::vector<std::string>& scenario_names();
/// Throws error(UnknownScenario).
ScenarioResult run_scenario(const std::string& name);

} // namespace hcc::bench
