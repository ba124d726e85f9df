#pragma once
// External optimization over alpha and the two-state walking pattern generator.

#include "vhip/capture_problem.hpp"
#include "vhip/solver/sqp.hpp"
#include "vhip/trajectory.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace vhip {

// ---------------------------------------------------------------------------------------------
// Alpha feasibility intervals

struct AlphaInterval {
  double min;
  double max;
  [[nodiscard]] double width() const { return max - min; }
  [[nodiscard]] bool contains(double a) const { return a >= min && a <= max; }
};

using AlphaIntervalSet = std::vector<AlphaInterval>;

/// Rows (u - alpha v) omega >= w, extended with the two omega bound lines.
struct AlphaRows {
  Eigen::VectorXd u;
  Eigen::VectorXd v;
  Eigen::VectorXd w;
};

inline AlphaRows alpha_rows(const Vector2& c_xy, const Vector2& cdot_xy, const Vector2& r_f_xy,
                            const HalfspaceRep& hs, const StiffnessBounds& bounds) {
  const Eigen::Index m = hs.p.size();
  AlphaRows rows;
  rows.u.resize(m + 2);
  rows.v.resize(m + 2);
  rows.w.resize(m + 2);
  rows.u.head(m) = hs.p - hs.H * c_xy;
  rows.v.head(m) = hs.p - hs.H * r_f_xy;
  rows.w.head(m) = hs.H * cdot_xy;
  rows.u(m) = 1.;
  rows.v(m) = 0.;
  rows.w(m) = std::sqrt(bounds.lambda_min);
  rows.u(m + 1) = -1.;
  rows.v(m + 1) = 0.;
  rows.w(m + 1) = -std::sqrt(bounds.lambda_max);
  return rows;
}

/// Cells of (0, 1) split at the roots u_j / v_j; in each cell the pairwise conditions between
/// lower-bounding and upper-bounding rows reduce to one interval.
inline AlphaIntervalSet alpha_feasible_intervals(const AlphaRows& rows) {
  const Eigen::Index m = rows.u.size();
  if (rows.v.size() != m || rows.w.size() != m) throw std::invalid_argument("alpha rows: size mismatch");
  std::vector<double> cuts{0.};
  for (Eigen::Index j = 0; j < m; ++j) {
    if (rows.v(j) == 0.) continue;
    const double r = rows.u(j) / rows.v(j);
    if (r > 0. && r < 1.) cuts.push_back(r);
  }
  cuts.push_back(1.);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  AlphaIntervalSet out;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    double lo = cuts[k], hi = cuts[k + 1];
    const double mid = 0.5 * (lo + hi);
    std::vector<Eigen::Index> amin, amax;
    for (Eigen::Index j = 0; j < m; ++j) {
      const double d = rows.u(j) - mid * rows.v(j);
      if (d >= 0.) amin.push_back(j);
      if (d <= 0.) amax.push_back(j);
    }
    bool empty = false;
    for (Eigen::Index i : amin) {
      for (Eigen::Index j : amax) {
        // u_i w_j - u_j w_i <= alpha (v_i w_j - v_j w_i)
        const double lhs = rows.u(i) * rows.w(j) - rows.u(j) * rows.w(i);
        const double coef = rows.v(i) * rows.w(j) - rows.v(j) * rows.w(i);
        if (coef > 0.)
          lo = std::max(lo, lhs / coef);
        else if (coef < 0.)
          hi = std::min(hi, lhs / coef);
        else if (lhs > 0.)
          empty = true;
      }
    }
    if (empty || lo > hi) continue;
    // Cells meeting at a shared cut are one interval.
    if (!out.empty() && lo <= out.back().max)
      out.back().max = std::max(out.back().max, hi);
    else
      out.push_back({lo, hi});
  }
  std::erase_if(out, [](const AlphaInterval& iv) { return iv.width() <= 0.; });
  return out;
}

/// n_alpha evenly spaced interior samples of each interval.
inline std::vector<double> sample_alphas(const AlphaIntervalSet& set, int n_alpha) {
  if (n_alpha < 1) throw std::invalid_argument("n_alpha must be >= 1");
  std::vector<double> out;
  for (const auto& iv : set)
    for (int k = 1; k <= n_alpha; ++k) {
      const double a = iv.min + iv.width() * k / (n_alpha + 1);
      if (a > 0. && a < 1.) out.push_back(a);
    }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Sampled solves

struct StepperSettings {
  int n{10};
  int n_alpha{5};
  StiffnessBounds bounds{StiffnessBounds::defaults()};
  SolverSettings solver{};
  std::shared_ptr<const QrCache> qr_cache;  // used when solver.use_qr_cache is set
  double g{kGravity};
  unsigned threads{1};             // concurrent solves over alpha samples
  double time_tolerance{1e-3};     // equality mode: |t_c - t_swing|
  double zero_step_alpha{0.5};     // preferred alpha for sampled zero-step solves
  int max_root_iterations{60};
  int end_refinement{12};  // geometric samples toward each interval end (equality mode)

  void validate() const {
    if (n < 2) throw std::invalid_argument("n must be >= 2");
    if (n_alpha < 1) throw std::invalid_argument("n_alpha must be >= 1");
    if (threads < 1) throw std::invalid_argument("threads must be >= 1");
    if (max_root_iterations < 1 || end_refinement < 0) throw std::invalid_argument("bad root-finder settings");
    if (!(time_tolerance > 0.)) throw std::invalid_argument("time tolerance must be positive");
    if (!(zero_step_alpha > 0. && zero_step_alpha < 1.)) throw std::invalid_argument("zero_step_alpha must lie in (0, 1)");
    bounds.validate();
    solver.validate();
  }
};

struct CaptureChoice {
  double alpha{0.};
  CaptureProblem problem;
  SolverOutcome outcome;
  CaptureTrajectory trajectory;
  [[nodiscard]] double t_c() const { return trajectory.t_c; }
};

template <class Make>
std::vector<std::optional<CaptureChoice>> solve_at_alphas(const std::vector<double>& alphas, Make&& make,
                                                          const StepperSettings& settings) {
  auto one = [&](double a) -> std::optional<CaptureChoice> {
    CaptureProblem pb = make(a);
    SolverOutcome out = solve(pb.spec, settings.solver, settings.qr_cache.get());
    if (!out.converged()) return std::nullopt;
    CaptureTrajectory tr = make_trajectory(pb, out.phi.phi);
    return CaptureChoice{a, std::move(pb), std::move(out), std::move(tr)};
  };
  std::vector<std::optional<CaptureChoice>> res(alphas.size());
  if (settings.threads <= 1 || alphas.size() < 2) {
    for (std::size_t i = 0; i < alphas.size(); ++i) res[i] = one(alphas[i]);
    return res;
  }
  const std::size_t workers = std::min<std::size_t>(settings.threads, alphas.size());
  std::vector<std::future<void>> jobs;
  for (std::size_t w = 0; w < workers; ++w)
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = w; i < alphas.size(); i += workers) res[i] = one(alphas[i]);
    }));
  for (auto& j : jobs) j.get();
  return res;
}

inline AlphaIntervalSet one_step_intervals(const PendulumState& x, const ContactArea& current,
                                           const StaticEquilibrium& target, const StiffnessBounds& bounds,
                                           double g = kGravity) {
  const Vector3 r_f = equilibrium_input(target, g).r_f;
  return alpha_feasible_intervals(
      alpha_rows(x.c.head<2>(), x.cdot.head<2>(), r_f.head<2>(), halfspace_rep(current), bounds));
}

/// Sampled one-step solve: among samples with t_c >= t_swing, lowest cost, then largest margin.
inline std::optional<CaptureChoice> solve_one_step_inequality(const PendulumState& x, const ContactArea& current,
                                                              const StaticEquilibrium& target, double t_swing,
                                                              const StepperSettings& settings = {},
                                                              const std::vector<double>& extra_alphas = {}) {
  settings.validate();
  const Partition part = uniform_partition(settings.n);
  const auto intervals = one_step_intervals(x, current, target, settings.bounds, settings.g);
  auto alphas = sample_alphas(intervals, settings.n_alpha);
  for (double a : extra_alphas)
    if (std::any_of(intervals.begin(), intervals.end(), [a](const AlphaInterval& iv) { return iv.contains(a); }))
      alphas.push_back(a);
  auto make = [&](double a) { return assemble_one_step(x, current, target, a, part, settings.bounds, settings.g); };
  std::optional<CaptureChoice> best;
  for (auto& c : solve_at_alphas(alphas, make, settings)) {
    if (!c || c->t_c() < t_swing) continue;
    if (!best || c->outcome.cost < best->outcome.cost ||
        (c->outcome.cost == best->outcome.cost && c->t_c() > best->t_c()))
      best = std::move(c);
  }
  return best;
}

/// One-step solve with t_c(alpha) = t_swing: bracket on a per-interval grid, then bisection with
/// secant proposals until |t_c - t_swing| <= time_tolerance.
inline std::optional<CaptureChoice> solve_one_step_equality(const PendulumState& x, const ContactArea& current,
                                                            const StaticEquilibrium& target, double t_swing,
                                                            const StepperSettings& settings = {}) {
  settings.validate();
  if (!(t_swing > 0.)) throw std::invalid_argument("t_swing must be positive");
  const Partition part = uniform_partition(settings.n);
  auto eval = [&](double a) -> std::optional<CaptureChoice> {
    CaptureProblem pb = assemble_one_step(x, current, target, a, part, settings.bounds, settings.g);
    SolverOutcome out = solve(pb.spec, settings.solver, settings.qr_cache.get());
    if (!out.converged()) return std::nullopt;
    CaptureTrajectory tr = make_trajectory(pb, out.phi.phi);
    return CaptureChoice{a, std::move(pb), std::move(out), std::move(tr)};
  };
  for (const auto& iv : one_step_intervals(x, current, target, settings.bounds, settings.g)) {
    const int grid = std::max(settings.n_alpha, 2) + 1;
    std::vector<double> alphas;
    for (int k = 1; k < grid; ++k) alphas.push_back(iv.min + iv.width() * k / grid);
    // t_c grows without bound as alpha -> 0, so the end cells are refined geometrically.
    for (int j = 1; j <= settings.end_refinement; ++j) {
      const double d = iv.width() / grid * std::ldexp(1., -j);
      alphas.push_back(iv.min + d);
      alphas.push_back(iv.max - d);
    }
    std::sort(alphas.begin(), alphas.end());
    std::erase_if(alphas, [](double a) { return !(a > 0. && a < 1.); });
    auto samples = solve_at_alphas(alphas, [&](double a) {
      return assemble_one_step(x, current, target, a, part, settings.bounds, settings.g);
    }, settings);
    for (auto& s : samples)
      if (s && std::abs(s->t_c() - t_swing) <= settings.time_tolerance) return s;
    for (std::size_t k = 0; k + 1 < samples.size(); ++k) {
      if (!samples[k] || !samples[k + 1]) continue;
      CaptureChoice a = *samples[k], b = *samples[k + 1];
      double fa = a.t_c() - t_swing, fb = b.t_c() - t_swing;
      if (fa * fb > 0.) continue;
      for (int it = 0; it < settings.max_root_iterations; ++it) {
        double next = a.alpha - fa * (b.alpha - a.alpha) / (fb - fa);
        const double lo = std::min(a.alpha, b.alpha), hi = std::max(a.alpha, b.alpha);
        // Fall back to bisection when the secant proposal hugs an end of the bracket.
        if (!(next > lo + 0.1 * (hi - lo) && next < hi - 0.1 * (hi - lo))) next = 0.5 * (lo + hi);
        auto c = eval(next);
        if (!c) {
          next = 0.5 * (lo + hi);
          c = eval(next);
          if (!c) break;
        }
        const double fc = c->t_c() - t_swing;
        if (std::abs(fc) <= settings.time_tolerance) return c;
        if (fc * fa < 0.) {
          b = *c;
          fb = fc;
        } else {
          a = *c;
          fa = fc;
        }
      }
    }
  }
  return std::nullopt;
}

struct MonotonicityProbe {
  std::vector<std::pair<double, double>> samples;  // (alpha, t_c) over feasible solves
  int violations{0};
  [[nodiscard]] bool monotone() const { return violations == 0; }
};

/// t_c(alpha) on `count` points per feasible interval; counts sign changes of the increments.
inline MonotonicityProbe probe_tc_monotonicity(const PendulumState& x, const ContactArea& current,
                                               const StaticEquilibrium& target, const StepperSettings& settings = {},
                                               int count = 64) {
  settings.validate();
  const Partition part = uniform_partition(settings.n);
  MonotonicityProbe probe;
  for (const auto& iv : one_step_intervals(x, current, target, settings.bounds, settings.g)) {
    std::vector<double> alphas;
    for (int k = 1; k <= count; ++k) alphas.push_back(iv.min + iv.width() * k / (count + 1));
    auto res = solve_at_alphas(alphas, [&](double a) {
      return assemble_one_step(x, current, target, a, part, settings.bounds, settings.g);
    }, settings);
    std::vector<double> tcs;
    for (auto& r : res)
      if (r) {
        probe.samples.emplace_back(r->alpha, r->t_c());
        tcs.push_back(r->t_c());
      }
    int sign = 0;
    for (std::size_t k = 1; k < tcs.size(); ++k) {
      const double d = tcs[k] - tcs[k - 1];
      if (std::abs(d) < 1e-12) continue;
      const int s = d > 0. ? 1 : -1;
      if (sign != 0 && s != sign) ++probe.violations;
      sign = s;
    }
  }
  return probe;
}

/// Sampled zero-step solve. Among converged samples the one closest to `zero_step_alpha` wins:
/// small alpha gives a slow CoP tail (exponent alpha / (1 - alpha)), alpha near 1 pins omega_i to
/// the horizontal state. A `preferred` alpha (the plan being followed) joins the candidates, so
/// the receding-horizon update only moves toward the target value.
inline std::optional<CaptureChoice> solve_zero_step_sampled(const PendulumState& x, const StaticEquilibrium& eq,
                                                            const StepperSettings& settings = {},
                                                            const HalfspaceRep* support = nullptr,
                                                            std::optional<double> preferred = std::nullopt) {
  settings.validate();
  const Partition part = uniform_partition(settings.n);
  const HalfspaceRep hs = support ? *support : halfspace_rep(eq.contact);
  const Vector3 r_f = equilibrium_input(eq, settings.g).r_f;
  const auto intervals =
      alpha_feasible_intervals(alpha_rows(x.c.head<2>(), x.cdot.head<2>(), r_f.head<2>(), hs, settings.bounds));
  auto alphas = sample_alphas(intervals, settings.n_alpha);
  if (preferred && std::any_of(intervals.begin(), intervals.end(),
                               [&](const AlphaInterval& iv) { return iv.contains(*preferred); }))
    alphas.push_back(*preferred);
  auto make = [&](double a) { return assemble_zero_step(x, eq, a, part, settings.bounds, settings.g, &hs); };
  const double target = settings.zero_step_alpha;
  std::optional<CaptureChoice> best;
  for (auto& c : solve_at_alphas(alphas, make, settings))
    if (c && (!best || std::abs(c->alpha - target) < std::abs(best->alpha - target))) best = std::move(c);
  return best;
}

// ---------------------------------------------------------------------------------------------
// Walking

struct FootstepPlan {
  std::vector<ContactArea> contacts;   // contacts[0]: initial support
  std::vector<double> swing_durations; // one per step, size contacts.size() - 1

  void validate() const {
    if (contacts.empty()) throw std::invalid_argument("footstep plan is empty");
    if (swing_durations.size() + 1 != contacts.size())
      throw std::invalid_argument("footstep plan needs one swing duration per step");
    for (const auto& c : contacts) c.validate();
    for (double t : swing_durations)
      if (!(t > 0.)) throw std::invalid_argument("swing durations must be positive");
  }
};

struct WalkerConfig {
  StepperSettings stepper{};
  double h_f{0.8};
  double control_period{0.01};
  double integration_step{1e-3};
  int max_misses{5};
  double max_duration{60.};
  double settle_position{5e-3};
  double settle_velocity{1e-2};
  bool hull_when_coplanar{true};

  void validate() const {
    stepper.validate();
    if (!(h_f > 0.)) throw std::invalid_argument("h_f must be positive");
    if (!(control_period > 0.)) throw std::invalid_argument("control period must be positive");
    if (!(integration_step > 0.)) throw std::invalid_argument("integration step must be positive");
    if (max_misses < 0) throw std::invalid_argument("max_misses must be non-negative");
    if (!(max_duration > 0.)) throw std::invalid_argument("max duration must be positive");
  }
};

enum class WalkPhase { SingleSupport, DoubleSupport };
enum class WalkStatus { Completed, BalancedInPlace, Failed, NotCapturable, Timeout };

inline const char* to_string(WalkPhase p) {
  return p == WalkPhase::SingleSupport ? "single_support" : "double_support";
}

inline const char* to_string(WalkStatus s) {
  switch (s) {
    case WalkStatus::Completed: return "completed";
    case WalkStatus::BalancedInPlace: return "balanced_in_place";
    case WalkStatus::Failed: return "failed";
    case WalkStatus::NotCapturable: return "not_capturable";
    case WalkStatus::Timeout: return "timeout";
  }
  return "unknown";
}

struct WalkerRecord {
  double t{0.};
  WalkPhase phase{WalkPhase::DoubleSupport};
  int support{0};      // stance contact index
  int target{0};       // contact index of the capture target
  bool fresh{true};    // false: previous trajectory reused this cycle
  bool miss{false};    // a solve was required and failed
  double alpha{0.};
  double omega_i{0.};
  double t_c{std::numeric_limits<double>::quiet_NaN()};
  int iterations{0};
  PendulumState x;
  Vector3 cop{Vector3::Zero()};
  double lambda{0.};
  bool cop_feasible{true};
};

struct WalkerLog {
  std::vector<WalkerRecord> records;
  WalkStatus status{WalkStatus::Failed};
  int steps_completed{0};
  PendulumState final_state;
  Vector3 final_target{Vector3::Zero()};
  std::string message;
};

namespace detail {

inline bool coplanar(const ContactArea& a, const ContactArea& b, double tol = 1e-9) {
  return a.n.cross(b.n).norm() <= tol && std::abs((b.o - a.o).dot(a.n)) <= tol;
}

/// The plan being followed, with the time at which it was computed.
struct ActivePlan {
  CaptureChoice choice;
  double start{0.};
  int cop_before{0};  // contact index carrying the CoP before t_c (zero-step: the support)
  int cop_after{0};
  std::optional<HalfspaceRep> region;  // zero-step support polygon when it is a hull
};

/// Input of `tr` seen from time `offset` after its start.
inline TimeInput shifted_input(const CaptureTrajectory& tr, double offset) {
  TimeInput base = to_time_input(tr);
  if (offset <= 0.) return base;
  TimeInput in;
  const auto& br = base.lambda.breaks;
  const std::size_t first = base.lambda.segment(offset);
  in.lambda.breaks.push_back(0.);
  in.lambda.values.push_back(base.lambda.values[first]);
  for (std::size_t k = first + 1; k < br.size(); ++k) {
    in.lambda.breaks.push_back(br[k] - offset);
    in.lambda.values.push_back(base.lambda.values[k]);
  }
  for (double b : base.cop_breaks)
    if (b > offset) in.cop_breaks.push_back(b - offset);
  in.r_final = base.r_final;
  in.tail_decay = base.tail_decay;
  if (offset >= base.lambda.horizon()) {
    // Past the horizon the CoP follows the exponential tail from r(T).
    const double T = base.lambda.horizon();
    const Vector3 rT = base.cop(T, T + 1.);
    const Vector3 rf = base.r_final;
    const double k = base.tail_decay;
    in.cop = [=](double t, double) -> Vector3 { return rf + (rT - rf) * std::exp(-k * (t + offset - T)); };
  } else {
    auto cop = base.cop;
    in.cop = [cop, offset](double t, double mid) { return cop(t + offset, mid + offset); };
  }
  return in;
}

}  // namespace detail

/// Two-state walking pattern generator in receding horizon.
inline WalkerLog walk(const FootstepPlan& plan, const PendulumState& x0, const WalkerConfig& cfg = {}) {
  plan.validate();
  cfg.validate();
  const int last = static_cast<int>(plan.contacts.size()) - 1;
  const StepperSettings& st = cfg.stepper;
  std::vector<StaticEquilibrium> eqs;
  for (const auto& c : plan.contacts) eqs.push_back(StaticEquilibrium::above(c, cfg.h_f));

  WalkerLog log;
  PendulumState x = x0;
  double t = 0.;
  int k = 0;
  WalkPhase phase = WalkPhase::DoubleSupport;
  double swing_left = 0.;
  int misses = 0;
  std::optional<detail::ActivePlan> active;

  auto support_region = [&](int stance) -> std::optional<HalfspaceRep> {
    if (!cfg.hull_when_coplanar || stance == 0) return std::nullopt;
    const ContactArea& a = plan.contacts[stance - 1];
    const ContactArea& b = plan.contacts[stance];
    if (!detail::coplanar(a, b)) return std::nullopt;
    return convex_hull_rep({&a, &b});
  };
  auto try_one_step = [&](double t_swing, int from, bool keep_plan = false) -> std::optional<detail::ActivePlan> {
    // In single support the previous alpha is kept as a candidate so that an undisturbed plan
    // remains available to the receding-horizon update.
    std::vector<double> extra;
    if (active && active->choice.trajectory.mode == CaptureMode::OneStep && active->cop_before == from) {
      // Seen from time tau, the remaining plan switches where sqrt(phi) = alpha omega_i, which
      // relative to the remaining sqrt(phi(s(tau))) is alpha' = alpha omega_i / sqrt(phi(s(tau))).
      const CaptureTrajectory& prev = active->choice.trajectory;
      const double a = active->choice.alpha * prev.omega_i() / sqrt_phi_at_time(t - active->start, prev);
      if (a > 0. && a < 1.) extra.push_back(a);
      extra.push_back(active->choice.alpha);
    }
    std::optional<CaptureChoice> c;
    if (keep_plan && !extra.empty()) {
      // Continue the followed plan when it is still consistent with the current state.
      const Partition part = uniform_partition(st.n);
      auto kept = solve_at_alphas({extra.front()}, [&](double a) {
        return assemble_one_step(x, plan.contacts[from], eqs[from + 1], a, part, st.bounds, st.g);
      }, st);
      if (kept.front() && kept.front()->t_c() >= t_swing) c = std::move(kept.front());
    }
    if (!c) c = solve_one_step_inequality(x, plan.contacts[from], eqs[from + 1], t_swing, st, extra);
    if (!c) return std::nullopt;
    return detail::ActivePlan{std::move(*c), t, from, from + 1, std::nullopt};
  };
  auto try_zero_step = [&]() -> std::optional<detail::ActivePlan> {
    const auto region = support_region(k);
    std::optional<double> keep;
    if (active && active->choice.trajectory.mode == CaptureMode::ZeroStep && active->cop_after == k)
      keep = active->choice.alpha;
    auto c = solve_zero_step_sampled(x, eqs[k], st, region ? &*region : nullptr, keep);
    if (!c) return std::nullopt;
    return detail::ActivePlan{std::move(*c), t, k, k, region};
  };
  auto settled = [&](int target) {
    return (x.c - eqs[target].c_f).norm() <= cfg.settle_position && x.cdot.norm() <= cfg.settle_velocity;
  };

  // Start: the initial posture must admit a step toward the first target (a zero-step capture
  // for a single-contact plan).
  {
    const auto first = last > 0 ? try_one_step(plan.swing_durations[0], 0) : try_zero_step();
    if (!first) {
      log.status = WalkStatus::NotCapturable;
      log.message = last > 0 ? "no one-step capture toward the first target" : "initial state is not capturable";
      log.final_state = x;
      log.final_target = eqs[0].c_f;
      return log;
    }
  }

  while (true) {
    WalkerRecord rec;
    rec.t = t;
    bool one_step_failed = false;
    std::optional<detail::ActivePlan> fresh;
    if (phase == WalkPhase::DoubleSupport) {
      if (k < last) {
        fresh = try_one_step(plan.swing_durations[k], k);
        if (fresh) {
          phase = WalkPhase::SingleSupport;
          swing_left = plan.swing_durations[k];
        } else {
          one_step_failed = true;
        }
      }
      if (!fresh) fresh = try_zero_step();
      // Right after touchdown the previous step's CoP may still sit on the rear foot, which is on
      // the ground during double support: keep updating that step with no timing constraint.
      const bool carrying = active && active->cop_before == k - 1 && active->cop_after == k &&
                            t - active->start < active->choice.t_c();
      if (!fresh && carrying) fresh = try_one_step(0., k - 1, true);
      if (!fresh) rec.miss = true;
    } else {
      fresh = try_one_step(std::max(swing_left, 0.), k);
      if (!fresh) rec.miss = true;
    }

    const bool solved_now = fresh.has_value();
    if (fresh) {
      active = std::move(fresh);
      misses = 0;
    } else {
      rec.fresh = false;
      if (rec.miss) ++misses;
    }
    if (!active || misses > cfg.max_misses) {
      log.status = WalkStatus::Failed;
      log.message = "capture solve failed for " + std::to_string(misses) + " consecutive cycles";
      break;
    }

    const detail::ActivePlan& pl = *active;
    const CaptureTrajectory& tr = pl.choice.trajectory;
    const double rel = t - pl.start;
    rec.phase = phase;
    rec.support = k;
    rec.target = pl.cop_after;
    rec.alpha = pl.choice.alpha;
    rec.omega_i = tr.omega_i();
    if (tr.mode == CaptureMode::OneStep) rec.t_c = tr.t_c - rel;
    rec.iterations = solved_now ? pl.choice.outcome.iterations : 0;
    rec.x = x;
    rec.cop = cop_of_t(rel, tr);
    rec.lambda = lambda_of_t(rel, tr);
    {
      const bool before = tr.mode == CaptureMode::ZeroStep || rel < tr.t_c;
      const int idx = before ? pl.cop_before : pl.cop_after;
      const HalfspaceRep hs = (tr.mode == CaptureMode::ZeroStep && pl.region) ? *pl.region
                                                                              : halfspace_rep(plan.contacts[idx]);
      rec.cop_feasible = hs.max_violation(rec.cop.head<2>()) <= 1e-9 &&
                         std::abs(height_above(plan.contacts[idx], rec.cop)) <= 1e-9;
    }
    log.records.push_back(rec);

    // Advance one control period along the plan.
    const TimeInput in = detail::shifted_input(tr, rel);
    const auto path = integrate_input(in, x, cfg.control_period, cfg.integration_step, st.g);
    x = path.back().second;
    t += cfg.control_period;

    if (phase == WalkPhase::SingleSupport) {
      swing_left -= cfg.control_period;
      if (swing_left <= 1e-9) {
        ++k;
        ++log.steps_completed;
        phase = WalkPhase::DoubleSupport;
      }
    } else {
      if (k == last && settled(k)) {
        log.status = WalkStatus::Completed;
        break;
      }
      if (k < last && one_step_failed && settled(k)) {
        log.status = WalkStatus::BalancedInPlace;
        log.message = "next contact is not one-step capturable; balancing in place";
        break;
      }
    }
    if (t > cfg.max_duration) {
      log.status = WalkStatus::Timeout;
      log.message = "maximum duration reached";
      break;
    }
  }
  log.final_state = x;
  log.final_target = eqs[k].c_f;
  return log;
}

}  // namespace vhip
