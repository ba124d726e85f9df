#pragma once
// Subcommand drivers shared by the command-line tool and its tests.

#include "vhip/io/output.hpp"
#include "vhip/io/scenario.hpp"
#include "vhip/random_problems.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <thread>

namespace vhip::io {

enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitInfeasible = 2 };

/// Command-line overrides; absent fields keep the scenario's values.
struct RunOptions {
  std::optional<int> n;
  std::optional<double> alpha;
  std::optional<int> n_alpha;
  std::optional<double> mu;
  bool qr_cache{false};
  bool equality{false};  // one-step: t_c = t_swing instead of t_c >= t_swing
  unsigned threads{1};
};

/// Bounded by CAPTURE_SOLVER_THREADS; 1 when unset or malformed.
inline unsigned threads_from_env() {
  const char* v = std::getenv("CAPTURE_SOLVER_THREADS");
  if (!v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (end == v || *end != '\0' || n < 1) return 1;
  return static_cast<unsigned>(std::min<long>(n, 256));
}

namespace detail {

inline void apply(Scenario& s, const RunOptions& o) {
  if (o.n) s.config.n = *o.n;
  if (o.alpha) s.config.alpha = *o.alpha;
  if (o.n_alpha) {
    s.config.n_alpha = *o.n_alpha;
    if (!o.alpha) s.config.alpha.reset();
  }
  if (o.mu) s.config.mu = *o.mu;
  if (s.config.n < 2) throw ScenarioError("n must be >= 2");
  if (s.config.n_alpha < 1) throw ScenarioError("n_alpha must be >= 1");
  if (s.config.alpha && !(*s.config.alpha > 0. && *s.config.alpha < 1.)) throw ScenarioError("alpha must lie in (0, 1)");
  if (!(s.config.mu > 0.)) throw ScenarioError("mu must be positive");
}

inline StepperSettings stepper(const Scenario& s, const RunOptions& o) {
  StepperSettings st;
  st.n = s.config.n;
  st.n_alpha = s.config.n_alpha;
  st.bounds = s.bounds();
  st.g = s.g;
  st.threads = o.threads;
  st.solver.mu = s.config.mu;
  st.solver.use_qr_cache = o.qr_cache;
  if (o.qr_cache) st.qr_cache = std::make_shared<const QrCache>(s.config.n, uniform_partition(s.config.n));
  return st;
}

inline std::filesystem::path summary_path(const std::string& out) {
  return std::filesystem::path(out).replace_extension(".json");
}

inline void write_outputs(const std::string& out, const std::vector<CsvRow>& rows, const nlohmann::json& summary,
                          std::ostream& os) {
  if (!out.empty()) {
    if (std::filesystem::path(out).extension() == ".json")
      throw ScenarioError(out + ": output path is for the CSV; the summary goes next to it as .json");
    std::ofstream csv(out);
    if (!csv) throw ScenarioError(out + ": cannot write");
    write_csv(csv, rows);
    std::ofstream js(summary_path(out));
    if (!js) throw ScenarioError(summary_path(out).string() + ": cannot write");
    js << summary.dump(2) << '\n';
  }
  os << summary.dump(2) << '\n';
}

/// Writes outputs for a solved choice (exit 0) or the failed solve's summary (exit 2).
inline int finish_capture(const std::optional<CaptureChoice>& choice, const CaptureProblem* fixed_pb,
                          const SolverOutcome* fixed_out, const PendulumState& x0, const std::string& out,
                          std::ostream& os) {
  if (choice) {
    const double horizon = settling_horizon(choice->trajectory);
    write_outputs(out, trajectory_rows(x0, choice->trajectory, horizon),
                  capture_summary(choice->problem, choice->outcome, &choice->trajectory), os);
    return kExitOk;
  }
  nlohmann::json j;
  if (fixed_pb && fixed_out)
    j = capture_summary(*fixed_pb, *fixed_out, nullptr);
  else
    j["status"] = "infeasible";
  write_outputs(out, {}, j, os);
  return kExitInfeasible;
}

inline std::optional<CaptureChoice> solve_fixed(CaptureProblem pb, const StepperSettings& st, SolverOutcome& out) {
  out = solve(pb.spec, st.solver, st.qr_cache.get());
  if (!out.converged()) return std::nullopt;
  CaptureTrajectory tr = make_trajectory(pb, out.phi.phi);
  return CaptureChoice{pb.context.alpha, std::move(pb), out, std::move(tr)};
}

template <class F>
int guarded(std::ostream& err, F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace detail

inline int run_zero_step(const std::string& scenario, const std::string& out, const RunOptions& opt, std::ostream& os,
                         std::ostream& err) {
  return detail::guarded(err, [&] {
    Scenario s = load_scenario(scenario);
    detail::apply(s, opt);
    if (s.contacts.size() != 1) throw ScenarioError(scenario + ": zero-step needs exactly one contact");
    const StepperSettings st = detail::stepper(s, opt);
    const auto eq = StaticEquilibrium::above(s.contacts[0], s.config.h_f);
    if (s.config.alpha) {
      auto pb = assemble_zero_step(s.initial, eq, *s.config.alpha, uniform_partition(st.n), st.bounds, s.g);
      SolverOutcome o;
      auto c = detail::solve_fixed(pb, st, o);
      return detail::finish_capture(c, &pb, &o, s.initial, out, os);
    }
    return detail::finish_capture(solve_zero_step_sampled(s.initial, eq, st), nullptr, nullptr, s.initial, out, os);
  });
}

inline int run_one_step(const std::string& scenario, const std::string& out, const RunOptions& opt, std::ostream& os,
                        std::ostream& err) {
  return detail::guarded(err, [&] {
    Scenario s = load_scenario(scenario);
    detail::apply(s, opt);
    if (s.contacts.size() != 2) throw ScenarioError(scenario + ": one-step needs exactly two contacts");
    const StepperSettings st = detail::stepper(s, opt);
    const auto eq = StaticEquilibrium::above(s.contacts[1], s.config.h_f);
    if (s.config.alpha) {
      auto pb = assemble_one_step(s.initial, s.contacts[0], eq, *s.config.alpha, uniform_partition(st.n), st.bounds,
                                  s.g);
      SolverOutcome o;
      auto c = detail::solve_fixed(pb, st, o);
      return detail::finish_capture(c, &pb, &o, s.initial, out, os);
    }
    if (s.config.t_swing.empty()) throw ScenarioError(scenario + ": one-step without alpha needs config.t_swing");
    const double t_swing = s.config.t_swing.front();
    auto c = opt.equality ? solve_one_step_equality(s.initial, s.contacts[0], eq, t_swing, st)
                          : solve_one_step_inequality(s.initial, s.contacts[0], eq, t_swing, st);
    return detail::finish_capture(c, nullptr, nullptr, s.initial, out, os);
  });
}

inline int run_walk(const std::string& scenario, const std::string& out, const RunOptions& opt, std::ostream& os,
                    std::ostream& err) {
  return detail::guarded(err, [&] {
    Scenario s = load_scenario(scenario);
    detail::apply(s, opt);
    if (s.contacts.size() < 2) throw ScenarioError(scenario + ": walk needs at least two contacts");
    if (s.config.t_swing.size() != s.contacts.size() - 1)
      throw ScenarioError(scenario + ": config.t_swing needs one duration per step");
    WalkerConfig cfg;
    cfg.stepper = detail::stepper(s, opt);
    cfg.h_f = s.config.h_f;
    cfg.control_period = s.config.control_period;
    const FootstepPlan plan{s.contacts, s.config.t_swing};
    const WalkerLog log = walk(plan, s.initial, cfg);
    detail::write_outputs(out, walker_rows(log), walk_summary(log), os);
    return log.status == WalkStatus::Completed ? kExitOk : kExitInfeasible;
  });
}

struct BenchOptions {
  std::vector<int> sizes{10};
  int count{1000};
  std::uint64_t seed{1};
  double mu{1e6};
  unsigned threads{1};
};

struct BenchRow {
  int n;
  bool cached;
  int count;
  int converged;
  int infeasible;
  double mean_us;
  double stddev_us;
  double median_us;
  double mean_iterations;
};

/// Per-solve wall times over a seeded problem set, without and with the QR cache.
inline std::vector<BenchRow> bench(const BenchOptions& opt) {
  std::vector<BenchRow> rows;
  if (opt.count <= 0) return rows;
  for (int n : opt.sizes) {
    RandomProblemOptions po;
    po.n = n;
    const auto problems = random_zero_step_suite(opt.seed, opt.count, po);
    const QrCache cache(n, uniform_partition(n));
    for (bool cached : {false, true}) {
      SolverSettings st;
      st.mu = opt.mu;
      st.use_qr_cache = cached;
      std::vector<double> times(problems.size());
      std::vector<SolverOutcome> outs(problems.size());
      auto work = [&](std::size_t begin, std::size_t step) {
        for (std::size_t i = begin; i < problems.size(); i += step) {
          const auto t0 = std::chrono::steady_clock::now();
          outs[i] = solve(problems[i].spec, st, &cache);
          const auto t1 = std::chrono::steady_clock::now();
          times[i] = std::chrono::duration<double, std::micro>(t1 - t0).count();
        }
      };
      const unsigned workers = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(problems.size())));
      if (workers == 1) {
        work(0, 1);
      } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
        for (auto& th : pool) th.join();
      }
      BenchRow r{n, cached, opt.count, 0, 0, 0., 0., 0., 0.};
      for (const auto& o : outs) {
        r.converged += o.converged() ? 1 : 0;
        r.infeasible += o.status == SolverStatus::Infeasible ? 1 : 0;
        r.mean_iterations += o.iterations;
      }
      r.mean_iterations /= opt.count;
      r.mean_us = std::accumulate(times.begin(), times.end(), 0.) / opt.count;
      double var = 0.;
      for (double t : times) var += (t - r.mean_us) * (t - r.mean_us);
      r.stddev_us = std::sqrt(var / opt.count);
      std::vector<double> sorted = times;
      std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2), sorted.end());
      r.median_us = sorted[sorted.size() / 2];
      if (sorted.size() % 2 == 0) {
        const double lower = *std::max_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2));
        r.median_us = 0.5 * (r.median_us + lower);
      }
      rows.push_back(r);
    }
  }
  return rows;
}

inline void write_bench_table(std::ostream& os, const std::vector<BenchRow>& rows, bool csv) {
  if (csv) {
    os << "n,qr_cache,count,converged,infeasible,mean_us,stddev_us,median_us,mean_iterations\n";
    for (const auto& r : rows)
      os << r.n << ',' << (r.cached ? 1 : 0) << ',' << r.count << ',' << r.converged << ',' << r.infeasible << ','
         << r.mean_us << ',' << r.stddev_us << ',' << r.median_us << ',' << r.mean_iterations << '\n';
    return;
  }
  os << std::left << std::setw(5) << "n" << std::setw(10) << "qr_cache" << std::setw(8) << "count" << std::setw(11)
     << "converged" << std::setw(12) << "infeasible" << std::setw(12) << "mean_us" << std::setw(12) << "stddev_us"
     << std::setw(12) << "median_us" << "mean_iter\n";
  for (const auto& r : rows)
    os << std::left << std::setw(5) << r.n << std::setw(10) << (r.cached ? "yes" : "no") << std::setw(8) << r.count
       << std::setw(11) << r.converged << std::setw(12) << r.infeasible << std::fixed << std::setprecision(2)
       << std::setw(12) << r.mean_us << std::setw(12) << r.stddev_us << std::setw(12) << r.median_us
       << std::setprecision(3) << r.mean_iterations << std::defaultfloat << '\n';
}

inline int run_bench(const BenchOptions& opt, const std::string& out, std::ostream& os, std::ostream& err) {
  return detail::guarded(err, [&] {
    for (int n : opt.sizes)
      if (n < 2 || n > QrCache::kMaxN) throw ScenarioError("bench sizes must lie in [2, 20]");
    if (opt.count < 0) throw ScenarioError("count must be non-negative");
    const auto rows = bench(opt);
    write_bench_table(os, rows, false);
    if (!out.empty()) {
      std::ofstream f(out);
      if (!f) throw ScenarioError(out + ": cannot write");
      write_bench_table(f, rows, true);
    }
    return kExitOk;
  });
}

}  // namespace vhip::io
