#include "pdrtune/runner.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <map>
#include <regex>
#include <thread>

#include "pdrtune/util.hpp"

namespace pdrtune::runner {

namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

// ------------------------------------------------------------------- spec

void RunSpec::validate() const {
  if (engine_template.find("{aig}") == std::string::npos ||
      engine_template.find("{flags}") == std::string::npos)
    throw Error("engine template must contain both {aig} and {flags}");
  if (!(wall_limit > 0))
    throw Error("wall limit must be positive");
  if (max_parallel < 1)
    throw Error("max_parallel must be at least 1");
  try {
    std::regex safe(safe_pattern);
    std::regex unsafe(unsafe_pattern);
  } catch (const std::regex_error& e) {
    throw Error(std::string("bad outcome pattern: ") + e.what());
  }
}

std::string_view outcome_name(Outcome o) {
  switch (o) {
  case Outcome::Safe: return "SAFE";
  case Outcome::Unsafe: return "UNSAFE";
  case Outcome::Timeout: return "TIMEOUT";
  case Outcome::Error: return "ERROR";
  }
  return "?";
}

Outcome outcome_from_name(std::string_view name) {
  if (name == "SAFE")
    return Outcome::Safe;
  if (name == "UNSAFE")
    return Outcome::Unsafe;
  if (name == "TIMEOUT")
    return Outcome::Timeout;
  if (name == "ERROR")
    return Outcome::Error;
  throw Error("unknown outcome '" + std::string(name) + "'");
}

// ------------------------------------------------------------ cancel token

void CancelToken::cancel() {
  std::lock_guard lock(mutex_);
  cancelled_.store(true, std::memory_order_release);
  for (int pgid : groups_)
    ::killpg(pgid, SIGTERM);
}

bool CancelToken::register_group(int pgid) {
  std::lock_guard lock(mutex_);
  if (cancelled_.load(std::memory_order_acquire))
    return false;
  groups_.insert(pgid);
  return true;
}

void CancelToken::unregister_group(int pgid) {
  std::lock_guard lock(mutex_);
  groups_.erase(pgid);
}

// ---------------------------------------------------------------- run_one

namespace {

std::string substitute(std::string templ, const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  while ((pos = templ.find(key, pos)) != std::string::npos) {
    templ.replace(pos, key.size(), value);
    pos += value.size();
  }
  return templ;
}

std::string log_path_for(const RunSpec& spec, const std::string& circuit,
                         const params::PdrConfig& config) {
  std::string bits = params::to_bit_string(config).substr(10);
  return (fs::path(spec.log_dir) / (circuit + "." + bits + ".log")).string();
}

RunResult error_result(const std::string& circuit, const params::PdrConfig& config,
                       std::string diagnostic) {
  RunResult r;
  r.circuit_id = circuit;
  r.config = config;
  r.outcome = Outcome::Error;
  r.diagnostic = std::move(diagnostic);
  return r;
}

} // namespace

RunResult run_one(const RunSpec& spec, const std::string& aig_path,
                  const params::PdrConfig& config, CancelToken* cancel) {
  spec.validate();
  if (!params::is_valid(config))
    throw Error("cannot run an invalid configuration");
  const std::string circuit = fs::path(aig_path).stem().string();
  if (cancel && cancel->cancelled())
    return error_result(circuit, config, "cancelled");

  const std::string command =
      substitute(substitute(spec.engine_template, "{aig}", aig_path), "{flags}",
                 params::to_flag_string(config));
  const std::string log_path = log_path_for(spec, circuit, config);
  std::error_code ec;
  fs::create_directories(spec.log_dir, ec);

  int err_pipe[2];
  if (::pipe2(err_pipe, O_CLOEXEC) != 0)
    return error_result(circuit, config, std::string("pipe2: ") + std::strerror(errno));

  auto start = clock_type::now();
  pid_t pid = ::fork();
  if (pid < 0) {
    ::close(err_pipe[0]);
    ::close(err_pipe[1]);
    return error_result(circuit, config, std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::setpgid(0, 0);
    int fd = ::open(log_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd >= 0) {
      ::dup2(fd, 1);
      ::dup2(fd, 2);
      ::close(fd);
    }
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    int e = errno;
    ssize_t ignored = ::write(err_pipe[1], &e, sizeof(e));
    (void)ignored;
    ::_exit(127);
  }

  ::close(err_pipe[1]);
  ::setpgid(pid, pid);  // both sides set it; whichever wins, the group exists
  bool registered = !cancel || cancel->register_group(pid);
  if (!registered)
    ::killpg(pid, SIGKILL);

  int exec_errno = 0;
  ssize_t n = ::read(err_pipe[0], &exec_errno, sizeof(exec_errno));
  ::close(err_pipe[0]);
  if (n > 0) {
    int status = 0;
    ::waitpid(pid, &status, 0);
    if (cancel)
      cancel->unregister_group(pid);
    return error_result(circuit, config,
                        std::string("spawn failed: ") + std::strerror(exec_errno));
  }

  bool timed_out = false;
  bool cancel_kill = !registered;
  bool soft_killed = false, hard_killed = false;
  clock_type::time_point kill_deadline{};
  int status = 0;
  struct rusage ru {};
  for (;;) {
    pid_t r = ::wait4(pid, &status, WNOHANG, &ru);
    if (r == pid)
      break;
    if (r < 0) {
      status = 0;
      break;
    }
    auto now = clock_type::now();
    double elapsed = std::chrono::duration<double>(now - start).count();
    bool want_kill = false;
    if (!soft_killed && elapsed >= spec.wall_limit) {
      timed_out = true;
      want_kill = true;
    }
    if (!soft_killed && cancel && cancel->cancelled()) {
      cancel_kill = true;
      want_kill = true;
    }
    if (want_kill) {
      ::killpg(pid, SIGTERM);
      soft_killed = true;
      kill_deadline = now + std::chrono::duration_cast<clock_type::duration>(
                                std::chrono::duration<double>(spec.grace_seconds));
    }
    if (soft_killed && !hard_killed && now >= kill_deadline) {
      ::killpg(pid, SIGKILL);
      hard_killed = true;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  double wall = std::chrono::duration<double>(clock_type::now() - start).count();
  if (cancel && cancel->cancelled())  // the token may have signalled the group itself
    cancel_kill = true;
  if (soft_killed || cancel_kill)  // sweep up grandchildren that survived the leader
    ::killpg(pid, SIGKILL);
  if (cancel)
    cancel->unregister_group(pid);

  RunResult res;
  res.circuit_id = circuit;
  res.config = config;
  res.wall_seconds = wall;
  res.output_path = log_path;
  res.peak_rss_kb = ru.ru_maxrss > 0 ? ru.ru_maxrss : -1;
  if (WIFEXITED(status))
    res.exit_code = WEXITSTATUS(status);
  else if (WIFSIGNALED(status))
    res.exit_code = -WTERMSIG(status);

  std::string output;
  try {
    output = util::read_file(log_path);
  } catch (const Error&) {
    output.clear();
  }
  bool safe = std::regex_search(output, std::regex(spec.safe_pattern));
  bool unsafe = std::regex_search(output, std::regex(spec.unsafe_pattern));

  if (safe && unsafe) {
    res.outcome = Outcome::Error;
    res.diagnostic = "ambiguous output: both SAFE and UNSAFE patterns matched";
  } else if (safe) {
    res.outcome = Outcome::Safe;
  } else if (unsafe) {
    res.outcome = Outcome::Unsafe;
  } else if (timed_out) {
    res.outcome = Outcome::Timeout;
    res.wall_seconds = std::max(res.wall_seconds, spec.wall_limit);
  } else if (cancel_kill) {
    res.outcome = Outcome::Error;
    res.diagnostic = "cancelled";
  } else {
    res.outcome = Outcome::Error;
    res.diagnostic = "engine exited with code " + std::to_string(res.exit_code) +
                     " and no recognized verdict";
  }
  return res;
}

// ---------------------------------------------------------------- portfolio

PortfolioResult run_portfolio(const RunSpec& spec, const std::string& aig_path,
                              const predict::TopK& configs) {
  spec.validate();
  const std::size_t k = configs.entries.size();
  if (k == 0)
    throw Error("portfolio needs at least one configuration");

  std::vector<RunResult> results(k);
  CancelToken token;
  std::atomic<std::size_t> next{0};
  const std::string circuit = fs::path(aig_path).stem().string();

  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= k)
        return;
      const params::PdrConfig& cfg = configs.entries[i].config;
      if (spec.early_cancel && token.cancelled()) {
        results[i] = error_result(circuit, cfg, "cancelled");
        continue;
      }
      RunResult r = run_one(spec, aig_path, cfg, spec.early_cancel ? &token : nullptr);
      if (spec.early_cancel && r.solved())
        token.cancel();
      results[i] = std::move(r);
    }
  };

  std::vector<std::thread> threads;
  std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(spec.max_parallel), k);
  for (std::size_t t = 0; t < n_threads; ++t)
    threads.emplace_back(worker);
  for (std::thread& t : threads)
    t.join();

  PortfolioResult out;
  out.all = results;
  const RunResult* best = nullptr;
  for (const RunResult& r : results)
    if (r.solved() && (!best || r.wall_seconds < best->wall_seconds))
      best = &r;
  if (!best)
    for (const RunResult& r : results)
      if (r.outcome == Outcome::Timeout && (!best || r.wall_seconds < best->wall_seconds))
        best = &r;
  out.best = best ? *best : results.front();
  return out;
}

// --------------------------------------------------------------------- CSV

std::string results_csv_header() {
  return "circuit,config_flags,outcome,seconds,exit_code,log";
}

std::string to_csv_row(const RunResult& r) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6f", r.wall_seconds);
  return r.circuit_id + "," + params::to_flag_string(r.config) + "," +
         std::string(outcome_name(r.outcome)) + "," + buf + "," +
         std::to_string(r.exit_code) + "," + r.output_path;
}

std::vector<RunResult> load_results_csv(const std::string& path) {
  std::string text = util::read_file(path);
  auto lines = util::split(text, '\n');
  if (lines.empty() || util::trim(lines[0]) != results_csv_header())
    throw Error("results file is missing the '" + results_csv_header() + "' header");
  std::vector<RunResult> out;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    std::string_view line = util::trim(lines[k]);
    if (line.empty())
      continue;
    auto fields = util::split(line, ',');
    if (fields.size() != 6)
      throw Error("results row has " + std::to_string(fields.size()) + " fields, expected 6",
                  k + 1);
    RunResult r;
    r.circuit_id = std::string(util::trim(fields[0]));
    r.config = params::from_flag_string(util::trim(fields[1]));
    r.outcome = outcome_from_name(util::trim(fields[2]));
    std::string_view sec = util::trim(fields[3]);
    auto [p, ec] = std::from_chars(sec.data(), sec.data() + sec.size(), r.wall_seconds);
    if (ec != std::errc{} || p != sec.data() + sec.size())
      throw Error("malformed seconds field", k + 1);
    std::string_view code = util::trim(fields[4]);
    auto [p2, ec2] = std::from_chars(code.data(), code.data() + code.size(), r.exit_code);
    if (ec2 != std::errc{} || p2 != code.data() + code.size())
      throw Error("malformed exit code field", k + 1);
    r.output_path = std::string(util::trim(fields[5]));
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------- evaluate

std::string format_improvement(int solved_method, int solved_baseline) {
  int imp = solved_method - solved_baseline;
  char buf[64];
  if (solved_baseline > 0)
    std::snprintf(buf, sizeof(buf), "%+d (%.1f%%)", imp,
                  100.0 * imp / static_cast<double>(solved_baseline));
  else
    std::snprintf(buf, sizeof(buf), "%+d (n/a)", imp);
  return buf;
}

namespace {

std::map<std::string, RunResult> collapse_by_circuit(const std::vector<RunResult>& results) {
  std::map<std::string, std::vector<const RunResult*>> groups;
  for (const RunResult& r : results)
    groups[r.circuit_id].push_back(&r);
  std::map<std::string, RunResult> out;
  for (auto& [circuit, rows] : groups) {
    const RunResult* pick = nullptr;
    for (const RunResult* r : rows)
      if (r->solved() && (!pick || !pick->solved() || r->wall_seconds < pick->wall_seconds))
        pick = r;
    if (!pick)
      for (const RunResult* r : rows)
        if (r->outcome == Outcome::Timeout &&
            (!pick || pick->outcome != Outcome::Timeout || r->wall_seconds < pick->wall_seconds))
          pick = r;
    if (!pick)
      pick = rows.front();
    out.emplace(circuit, *pick);
  }
  return out;
}

void count_into(MethodCounts& counts, const RunResult& r) {
  switch (r.outcome) {
  case Outcome::Safe: ++counts.safe; break;
  case Outcome::Unsafe: ++counts.unsafe_count; break;
  case Outcome::Timeout: ++counts.timeout; break;
  case Outcome::Error: ++counts.error; break;
  }
}

double plot_seconds(const RunResult& r, double wall_limit) {
  return r.solved() ? std::min(r.wall_seconds, wall_limit) : wall_limit;
}

} // namespace

EvalSummary evaluate(const std::vector<RunResult>& baseline,
                     const std::vector<RunResult>& method, double wall_limit) {
  EvalSummary s;
  auto base_map = collapse_by_circuit(baseline);
  auto method_map = collapse_by_circuit(method);

  for (const auto& [circuit, r] : base_map)
    if (!method_map.count(circuit))
      s.warnings.push_back("circuit '" + circuit + "' only in the baseline set; excluded");
  for (const auto& [circuit, r] : method_map)
    if (!base_map.count(circuit))
      s.warnings.push_back("circuit '" + circuit + "' only in the method set; excluded");

  for (const auto& [circuit, base_r] : base_map) {
    auto it = method_map.find(circuit);
    if (it == method_map.end())
      continue;
    const RunResult& method_r = it->second;
    count_into(s.baseline, base_r);
    count_into(s.method, method_r);
    s.scatter.push_back({circuit, plot_seconds(base_r, wall_limit),
                         plot_seconds(method_r, wall_limit), base_r.outcome});
  }

  s.improvement = s.method.solved() - s.baseline.solved();
  if (s.baseline.solved() > 0) {
    s.percent_defined = true;
    s.improvement_percent = 100.0 * s.improvement / static_cast<double>(s.baseline.solved());
  }

  char line[160];
  std::string table = "Method      Safe  Unsafe  Timeout  Error  Solved  Improvement\n";
  std::snprintf(line, sizeof(line), "%-10s %5d %7d %8d %6d %7d  %s\n", "baseline",
                s.baseline.safe, s.baseline.unsafe_count, s.baseline.timeout, s.baseline.error,
                s.baseline.solved(), "baseline");
  table += line;
  std::snprintf(line, sizeof(line), "%-10s %5d %7d %8d %6d %7d  %s\n", "method", s.method.safe,
                s.method.unsafe_count, s.method.timeout, s.method.error, s.method.solved(),
                format_improvement(s.method.solved(), s.baseline.solved()).c_str());
  table += line;
  s.table_text = table;
  return s;
}

std::string scatter_csv(const EvalSummary& summary) {
  std::string out = "circuit,baseline_seconds,method_seconds,baseline_outcome\n";
  for (const ScatterRow& row : summary.scatter) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f", row.baseline_seconds, row.method_seconds);
    out += row.circuit + "," + buf + "," + std::string(outcome_name(row.baseline_outcome)) + "\n";
  }
  return out;
}

} // namespace pdrtune::runner
