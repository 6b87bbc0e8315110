#pragma once

#include <atomic>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "pdrtune/params.hpp"
#include "pdrtune/predict.hpp"

namespace pdrtune::runner {

/// Describes how to launch the external PDR engine. The command template is
/// run through `/bin/sh -c` after substituting `{aig}` and `{flags}`;
/// `{flags}` expands to the `pdr -x ...` flag string of the configuration.
struct RunSpec {
  std::string engine_template;
  double wall_limit = 3600.0;  // seconds
  int max_parallel = 1;
  std::string safe_pattern = "Property proved";
  std::string unsafe_pattern = "was asserted";
  bool early_cancel = false;   // kill the surviving siblings once one run solves
  std::string log_dir = ".";
  double grace_seconds = 2.0;  // between SIGTERM and SIGKILL of the process group

  void validate() const;
};

enum class Outcome : unsigned char { Safe, Unsafe, Timeout, Error };

std::string_view outcome_name(Outcome o);
Outcome outcome_from_name(std::string_view name);

struct RunResult {
  std::string circuit_id;
  params::PdrConfig config;
  Outcome outcome = Outcome::Error;
  double wall_seconds = 0;
  int exit_code = 0;         // negative: terminated by that signal
  std::string output_path;
  long peak_rss_kb = -1;     // from wait4 rusage when the platform reports it
  std::string diagnostic;

  bool solved() const { return outcome == Outcome::Safe || outcome == Outcome::Unsafe; }
};

/// Shared kill switch for portfolio runs: cancel() signals every registered
/// engine process group and prevents new launches.
class CancelToken {
public:
  bool cancelled() const { return cancelled_.load(std::memory_order_acquire); }
  void cancel();

  /// Returns false when already cancelled (the caller must not start).
  bool register_group(int pgid);
  void unregister_group(int pgid);

private:
  std::atomic<bool> cancelled_{false};
  std::mutex mutex_;
  std::set<int> groups_;
};

/// Launches one engine run in its own process group, kills the whole group
/// at the wall limit (TERM, then KILL after the grace period), captures
/// stdout+stderr to a log file, and classifies the outcome by pattern match,
/// then exit status, then timeout.
RunResult run_one(const RunSpec& spec, const std::string& aig_path,
                  const params::PdrConfig& config, CancelToken* cancel = nullptr);

struct PortfolioResult {
  RunResult best;
  std::vector<RunResult> all;
};

/// Runs the Top-k configurations with at most max_parallel engines alive at
/// once. Best is the fastest solved run, otherwise a timeout, otherwise an
/// error result.
PortfolioResult run_portfolio(const RunSpec& spec, const std::string& aig_path,
                              const predict::TopK& configs);

std::string results_csv_header();
std::string to_csv_row(const RunResult& r);
std::vector<RunResult> load_results_csv(const std::string& path);

struct MethodCounts {
  int safe = 0, unsafe_count = 0, timeout = 0, error = 0;
  int solved() const { return safe + unsafe_count; }
};

struct ScatterRow {
  std::string circuit;
  double baseline_seconds = 0;  // timeouts plotted at the wall limit
  double method_seconds = 0;
  Outcome baseline_outcome = Outcome::Timeout;
};

struct EvalSummary {
  MethodCounts baseline, method;
  int improvement = 0;
  double improvement_percent = 0;
  bool percent_defined = false;
  std::vector<ScatterRow> scatter;
  std::string table_text;
  std::vector<std::string> warnings;
};

/// `+72 (90.0%)` style rendering; `n/a` when the baseline solved nothing.
std::string format_improvement(int solved_method, int solved_baseline);

/// Compares two result sets keyed by circuit. Circuits present in only one
/// set are excluded with a warning; multiple rows per circuit collapse with
/// portfolio-min semantics.
EvalSummary evaluate(const std::vector<RunResult>& baseline,
                     const std::vector<RunResult>& method, double wall_limit);

/// `circuit,baseline_seconds,method_seconds,baseline_outcome`
std::string scatter_csv(const EvalSummary& summary);

} // namespace pdrtune::runner
