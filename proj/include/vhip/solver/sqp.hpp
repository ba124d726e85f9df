#pragma once

#include "vhip/capture_problem.hpp"
#include "vhip/solver/active_set.hpp"
#include "vhip/solver/qr_cache.hpp"
#include "vhip/solver/structured.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <tuple>
#include <utility>

namespace vhip {

struct SolverSettings {
  double mu{1e6};
  int max_sqp_iterations{50};
  double kkt_tolerance{1e-8};
  double multiplier_tolerance{1e-10};
  double line_search_shrink{0.5};
  double armijo{1e-4};
  double boundedness_tolerance{1e-6};  // |b| above this at a stationary point: no capture input
  bool use_qr_cache{false};

  void validate() const {
    if (!(mu > 0.)) throw std::invalid_argument("mu must be positive");
    if (!(line_search_shrink > 0. && line_search_shrink < 1.))
      throw std::invalid_argument("line_search_shrink must lie in (0, 1)");
    if (max_sqp_iterations < 1) throw std::invalid_argument("max_sqp_iterations must be >= 1");
  }
};

enum class SolverStatus { Converged, Infeasible, MaxIterations };

inline const char* to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::Converged: return "converged";
    case SolverStatus::Infeasible: return "infeasible";
    case SolverStatus::MaxIterations: return "max_iterations";
  }
  return "unknown";
}

struct PhiSolution {
  Eigen::VectorXd phi;
  double b_residual{0.};
  bool feasible{false};
};

struct SolverOutcome {
  PhiSolution phi;
  Eigen::VectorXd multipliers;
  int iterations{0};
  int full_steps{0};
  int line_search_steps{0};  // accepted steps; full_steps counts those with unit length
  double full_step_fraction{0.};
  double stationarity{0.};
  double cost{0.};
  SolverStatus status{SolverStatus::Infeasible};
  ActiveSetDescriptor working_set;

  [[nodiscard]] bool converged() const { return status == SolverStatus::Converged; }
};

struct FeasibleStart {
  Eigen::VectorXd phi;
  Eigen::VectorXd l;
  Eigen::VectorXd u;
};

/// Interior point of the zonotope {phi : l <= C phi <= u}; empty optional when infeasible.
inline std::optional<FeasibleStart> feasible_init(const CaptureProblemSpec& spec) {
  if (!spec.feasible()) return std::nullopt;
  const int n = spec.n();
  auto [l, u] = spec.linear_bounds();
  const double s_l = l.head(n).sum();
  const double s_d = (u.head(n) - l.head(n)).sum();
  auto interval = [&](double lo_n) {
    return std::pair{(lo_n - s_l) / s_d, (u(n) - s_l) / s_d};
  };
  double a = 0.;
  if (s_d <= 0.) {
    if (s_l < l(n) || s_l > u(n)) return std::nullopt;
  } else {
    auto [am, ap] = interval(l(n));
    auto at_end = [](double x) { return std::abs(x) < 1e-12 || std::abs(x - 1.) < 1e-12; };
    if (at_end(am) || at_end(ap)) {
      // Keep the start off the point where every constraint is active.
      const double wmin = std::max(spec.omega_i_min - 1e-9, 0.);
      l(n) = wmin * wmin;
      std::tie(am, ap) = interval(l(n));
    }
    const double lo = std::max(am, 0.), hi = std::min(ap, 1.);
    if (lo > hi) return std::nullopt;
    a = 0.5 * (lo + hi);
  }
  FeasibleStart fs{Eigen::VectorXd(n), l, u};
  double acc = 0.;
  for (int j = 0; j < n; ++j) {
    acc += l(j) + a * (u(j) - l(j));
    fs.phi(j) = acc;
  }
  return fs;
}

namespace detail {

inline double penalty_objective(const CaptureProblemSpec& spec, double mu,
                                const Eigen::VectorXd& phi) {
  const double b = b_value(phi, spec);
  return 0.5 * apply_cost(spec.partition, phi).squaredNorm() + 0.5 * mu * mu * b * b;
}

struct LsiResult {
  Eigen::VectorXd p;
  ActiveSetDescriptor working_set;
  Eigen::VectorXd multipliers;
  int iterations{0};
};

/// Minimizer of 1/2 ||T z + u|| over the nullspace of the working set.
inline Eigen::VectorXd subspace_step(const CaptureProblemSpec& spec, const CachedFactor& f,
                                     const Eigen::VectorXd& jvec, double mu, double b,
                                     const Eigen::VectorXd& phi, const Eigen::VectorXd& p) {
  const int n = spec.n();
  const auto m = static_cast<Eigen::Index>(f.groups.size());
  if (m == 0) return Eigen::VectorXd::Zero(n);
  const Eigen::RowVectorXd top = mu * project_onto_groups(f.groups, jvec).transpose();
  const Eigen::VectorXd rhs_j = f.qr.apply_qt(apply_cost(spec.partition, phi + p));
  const HessenbergQR h = hessenberg_update_qr(top, f.qr.R, mu * (jvec.dot(p) + b), rhs_j);
  const double tnorm = std::sqrt(top.squaredNorm() + f.qr.frobenius * f.qr.frobenius);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
  Eigen::Index last = m - 1;
  if (std::abs(h.R(last, last)) < 1e-11 * tnorm) --last;  // drop the deficient direction
  for (Eigen::Index i = last; i >= 0; --i) {
    double acc = -h.qtb(i);
    for (Eigen::Index c = i + 1; c <= last; ++c) acc -= h.R(i, c) * z(c);
    z(i) = acc / h.R(i, i);
  }
  return expand_from_groups(f.groups, n, z);
}

/// Active-set solution of the Gauss-Newton least-squares subproblem from p = 0.
inline LsiResult solve_lsi(const CaptureProblemSpec& spec, const Eigen::VectorXd& l,
                           const Eigen::VectorXd& u, const Eigen::VectorXd& phi, double b,
                           const Eigen::VectorXd& jvec, const SolverSettings& settings,
                           const QrCache* cache) {
  const int n = spec.n();
  const double mu = settings.mu;
  LsiResult res;
  res.p = Eigen::VectorXd::Zero(n);
  ActiveSetDescriptor& w = res.working_set;
  w = ActiveSetDescriptor(n);
  const Eigen::VectorXd cphi = constraint_values(phi);
  for (int k = 0; k <= n; ++k) {
    const double tol = 1e-12 * std::max(1., std::abs(u(k)));
    if (l(k) == u(k))
      w.side[static_cast<std::size_t>(k)] = Side::Equal;
    else if (cphi(k) - l(k) <= tol)
      w.side[static_cast<std::size_t>(k)] = Side::Lower;
    else if (u(k) - cphi(k) <= tol)
      w.side[static_cast<std::size_t>(k)] = Side::Upper;
  }
  if (w.all_active()) w.side[static_cast<std::size_t>(n)] = Side::Inactive;

  CachedFactor local;
  auto factor_for = [&](const ActiveSetDescriptor& ws) -> const CachedFactor& {
    if (cache != nullptr) return cache->at(ws.mask());
    local.groups = free_groups(ws);
    local.columns = reduced_cost_columns(local.groups, spec.partition);
    local.qr = structured_qr(local.columns, n - 1);
    return local;
  };

  const int max_iter = 10 * (n + 1);
  for (res.iterations = 1; res.iterations <= max_iter; ++res.iterations) {
    const CachedFactor& f = factor_for(w);
    const Eigen::VectorXd d = subspace_step(spec, f, jvec, mu, b, phi, res.p);
    const Eigen::VectorXd cd = constraint_values(d);
    const Eigen::VectorXd cx = constraint_values(phi + res.p);
    double t = 1.;
    int block = -1;
    for (int k = 0; k <= n; ++k) {
      if (w.active(k) || cd(k) == 0.) continue;
      const double room = cd(k) > 0. ? u(k) - cx(k) : l(k) - cx(k);
      const double tk = std::max(0., room / cd(k));
      if (tk < t || (tk == t && block >= 0 && std::abs(cd(k)) > std::abs(cd(block)))) {
        t = tk;
        block = k;
      }
    }
    res.p += t * d;
    if (block >= 0) {
      w.side[static_cast<std::size_t>(block)] = cd(block) > 0. ? Side::Upper : Side::Lower;
      if (!w.all_active()) continue;
      w.side[static_cast<std::size_t>(block)] = Side::Inactive;  // implied by the others
    }
    // Subspace minimizer reached: inspect multiplier signs.
    const Eigen::VectorXd jtj = apply_cost_transpose(spec.partition, apply_cost(spec.partition, phi + res.p));
    const double pen = mu * mu * (jvec.dot(res.p) + b);
    const Eigen::VectorXd grad = jtj + pen * jvec;
    res.multipliers = structured_multipliers(w, grad);
    const double scale = std::max({1., jtj.lpNorm<Eigen::Infinity>(),
                                   std::abs(pen) * jvec.lpNorm<Eigen::Infinity>()});
    const double tol = settings.multiplier_tolerance * scale;
    int drop = -1;
    double worst = 0.;
    for (int k = 0; k <= n; ++k) {
      const Side s = w.side[static_cast<std::size_t>(k)];
      double viol = 0.;
      if (s == Side::Lower) viol = res.multipliers(k);
      if (s == Side::Upper) viol = -res.multipliers(k);
      if (viol > tol && viol > worst) {
        worst = viol;
        drop = k;
      }
    }
    if (drop < 0) return res;
    w.side[static_cast<std::size_t>(drop)] = Side::Inactive;
  }
  --res.iterations;
  return res;
}

}  // namespace detail

/// Relative KKT residual of the equality-constrained problem on the working set: the cost
/// gradient projected onto the free groups, minus its best fit along the projected gradient of b.
inline double projected_stationarity(const CaptureProblemSpec& spec, const Eigen::VectorXd& phi,
                                     const ActiveSetDescriptor& w) {
  if (w.all_active()) return 0.;
  const auto groups = free_groups(w);
  if (groups.empty()) return 0.;
  const Eigen::VectorXd jtj = apply_cost_transpose(spec.partition, apply_cost(spec.partition, phi));
  const Eigen::VectorXd jvec = b_gradient(phi, spec);
  const Eigen::VectorXd gz = project_onto_groups(groups, jtj);
  const Eigen::VectorXd jz = project_onto_groups(groups, jvec);
  const double nu = jz.squaredNorm() > 0. ? -gz.dot(jz) / jz.squaredNorm() : 0.;
  const double scale = std::max({1., jtj.lpNorm<Eigen::Infinity>(), std::abs(nu) * jvec.lpNorm<Eigen::Infinity>()});
  return (gz + nu * jz).lpNorm<Eigen::Infinity>() / scale;
}

/// Line-search SQP on the penalized capture problem.
inline SolverOutcome solve(const CaptureProblemSpec& spec, const SolverSettings& settings = {},
                           const QrCache* cache = nullptr) {
  settings.validate();
  const int n = spec.n();
  SolverOutcome out;
  out.multipliers = Eigen::VectorXd::Zero(n + 1);
  const auto start = feasible_init(spec);
  if (!start) {
    out.status = SolverStatus::Infeasible;
    return out;
  }
  const QrCache* qc = (settings.use_qr_cache && cache != nullptr && cache->matches(spec.partition)) ? cache : nullptr;
  const double mu = settings.mu;
  Eigen::VectorXd phi = start->phi;
  int steps = 0;
  out.status = SolverStatus::MaxIterations;
  for (int it = 1; it <= settings.max_sqp_iterations; ++it) {
    out.iterations = it;
    const double b = b_value(phi, spec);
    const Eigen::VectorXd jvec = b_gradient(phi, spec);
    const detail::LsiResult lsi = detail::solve_lsi(spec, start->l, start->u, phi, b, jvec, settings, qc);
    out.multipliers = lsi.multipliers;
    out.working_set = lsi.working_set;
    const double pnorm = lsi.p.lpNorm<Eigen::Infinity>();
    const double phinorm = std::max(1., phi.lpNorm<Eigen::Infinity>());
    if (pnorm <= settings.kkt_tolerance * phinorm) {
      const Eigen::VectorXd last = phi + lsi.p;
      if ((last.array() > 0.).all() &&
          detail::penalty_objective(spec, mu, last) <= detail::penalty_objective(spec, mu, phi))
        phi = last;
      if (projected_stationarity(spec, phi, lsi.working_set) <= settings.kkt_tolerance) {
        out.status = SolverStatus::Converged;
        break;
      }
      continue;
    }
    const double f0 = detail::penalty_objective(spec, mu, phi);
    const Eigen::VectorXd grad =
        apply_cost_transpose(spec.partition, apply_cost(spec.partition, phi)) + mu * mu * b * jvec;
    const double slope = grad.dot(lsi.p);
    double t = 1.;
    bool accepted = false;
    Eigen::VectorXd cand;
    if (slope < 0.) {
      while (t > 1e-10) {
        cand = phi + t * lsi.p;
        if ((cand.array() > 0.).all() &&
            detail::penalty_objective(spec, mu, cand) <= f0 + settings.armijo * t * slope) {
          accepted = true;
          break;
        }
        t *= settings.line_search_shrink;
      }
    }
    if (!accepted) {
      // No decrease available at working precision.
      if (pnorm <= 1e-6 * phinorm) out.status = SolverStatus::Converged;
      break;
    }
    ++steps;
    if (t == 1.) ++out.full_steps;
    phi = cand;
  }
  out.phi.phi = phi;
  out.phi.b_residual = b_value(phi, spec);
  if (out.status == SolverStatus::Converged && std::abs(out.phi.b_residual) > settings.boundedness_tolerance)
    out.status = SolverStatus::Infeasible;
  out.phi.feasible = out.status == SolverStatus::Converged;
  out.cost = capture_cost(spec, phi);
  out.stationarity = projected_stationarity(spec, phi, out.working_set);
  out.line_search_steps = steps;
  out.full_step_fraction = steps > 0 ? static_cast<double>(out.full_steps) / steps : 1.;
  return out;
}

}  // namespace vhip
