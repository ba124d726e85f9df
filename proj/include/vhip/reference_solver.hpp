#pragma once
// Dense reference solver: same penalized problem, generic dense linear algebra. Slow.

#include "vhip/capture_problem.hpp"
#include "vhip/solver/sqp.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

namespace vhip {

struct DenseProblem {
  Eigen::MatrixXd J;
  Eigen::MatrixXd C;
  Eigen::VectorXd l;
  Eigen::VectorXd u;
  double mu{1e6};
  CaptureProblemSpec spec;
};

inline DenseProblem make_dense_problem(const CaptureProblemSpec& spec, double mu = 1e6) {
  DenseProblem d;
  d.J = dense_cost_matrix(spec.partition);
  d.C = dense_constraint_matrix(spec.n());
  std::tie(d.l, d.u) = spec.linear_bounds();
  d.mu = mu;
  d.spec = spec;
  return d;
}

struct ReferenceResult {
  SolverStatus status{SolverStatus::Infeasible};
  Eigen::VectorXd phi;
  int iterations{0};
  double cost{0.};
};

namespace detail {

inline double dense_penalty(const DenseProblem& pb, const Eigen::VectorXd& phi) {
  const double b = b_value(phi, pb.spec);
  return 0.5 * (pb.J * phi).squaredNorm() + 0.5 * pb.mu * pb.mu * b * b;
}

/// Orthonormal basis of the nullspace of the rows of Cw.
inline Eigen::MatrixXd dense_nullspace(const Eigen::MatrixXd& Cw, int n) {
  if (Cw.rows() == 0) return Eigen::MatrixXd::Identity(n, n);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Cw.transpose());
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  return Q.rightCols(n - Cw.rows());
}

/// Dense primal active-set method for min 1/2 ||A p + r||^2, lo <= C p <= hi.
inline Eigen::VectorXd dense_lsi(const Eigen::MatrixXd& A, const Eigen::VectorXd& r,
                                 const Eigen::MatrixXd& C, const Eigen::VectorXd& lo,
                                 const Eigen::VectorXd& hi, double sign_tol) {
  const Eigen::Index n = A.cols();
  const Eigen::Index rows = C.rows();
  std::vector<int> state(static_cast<std::size_t>(rows), 0);  // 0 free, -1 lower, +1 upper, 2 fixed
  for (Eigen::Index k = 0; k < rows; ++k) {
    const double tol = 1e-12 * std::max(1., std::abs(hi(k)));
    if (lo(k) == hi(k) || (hi(k) - lo(k)) <= 0.) state[static_cast<std::size_t>(k)] = 2;
    else if (-lo(k) <= tol && lo(k) >= -tol) state[static_cast<std::size_t>(k)] = -1;
    else if (hi(k) <= tol) state[static_cast<std::size_t>(k)] = 1;
  }
  auto count_active = [&] {
    Eigen::Index c = 0;
    for (int s : state) c += s != 0 ? 1 : 0;
    return c;
  };
  if (count_active() == rows) state.back() = 0;
  Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
  for (int iter = 0; iter < 20 * static_cast<int>(rows); ++iter) {
    Eigen::MatrixXd Cw(count_active(), n);
    std::vector<Eigen::Index> idx;
    for (Eigen::Index k = 0; k < rows; ++k)
      if (state[static_cast<std::size_t>(k)] != 0) {
        Cw.row(static_cast<Eigen::Index>(idx.size())) = C.row(k);
        idx.push_back(k);
      }
    const Eigen::MatrixXd N = dense_nullspace(Cw, static_cast<int>(n));
    Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
    if (N.cols() > 0) {
      const Eigen::MatrixXd AN = A * N;
      const Eigen::VectorXd z = AN.colPivHouseholderQr().solve(-(A * p + r));
      d = N * z;
    }
    const Eigen::VectorXd cd = C * d;
    const Eigen::VectorXd cp = C * p;
    double t = 1.;
    Eigen::Index block = -1;
    for (Eigen::Index k = 0; k < rows; ++k) {
      if (state[static_cast<std::size_t>(k)] != 0 || cd(k) == 0.) continue;
      const double room = cd(k) > 0. ? hi(k) - cp(k) : lo(k) - cp(k);
      const double tk = std::max(0., room / cd(k));
      if (tk < t) {
        t = tk;
        block = k;
      }
    }
    p += t * d;
    if (block >= 0) {
      state[static_cast<std::size_t>(block)] = cd(block) > 0. ? 1 : -1;
      if (count_active() < rows) continue;
      state[static_cast<std::size_t>(block)] = 0;
    }
    if (Cw.rows() == 0) return p;
    const Eigen::VectorXd g = A.transpose() * (A * p + r);
    const Eigen::VectorXd lam = Cw.transpose().colPivHouseholderQr().solve(-g);
    const double tol = sign_tol * std::max(1., (A.transpose() * A * p).cwiseAbs().maxCoeff() +
                                                   (A.transpose() * r).cwiseAbs().maxCoeff());
    Eigen::Index drop = -1;
    double worst = 0.;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const int s = state[static_cast<std::size_t>(idx[i])];
      const double viol = s == -1 ? lam(static_cast<Eigen::Index>(i)) : s == 1 ? -lam(static_cast<Eigen::Index>(i)) : 0.;
      if (viol > tol && viol > worst) {
        worst = viol;
        drop = idx[i];
      }
    }
    if (drop < 0) return p;
    state[static_cast<std::size_t>(drop)] = 0;
  }
  return p;
}

}  // namespace detail

/// Gauss-Newton SQP with dense active-set subproblems.
inline ReferenceResult reference_solve(const DenseProblem& pb, double tolerance = 1e-8,
                                       int max_iterations = 200, double boundedness_tolerance = 1e-6) {
  ReferenceResult res;
  const auto start = feasible_init(pb.spec);
  if (!start) return res;
  const int n = pb.spec.n();
  Eigen::VectorXd phi = start->phi;
  const Eigen::VectorXd& l = start->l;
  const Eigen::VectorXd& u = start->u;
  res.status = SolverStatus::MaxIterations;
  for (int it = 1; it <= max_iterations; ++it) {
    res.iterations = it;
    const double b = b_value(phi, pb.spec);
    const Eigen::VectorXd jvec = b_gradient(phi, pb.spec);
    Eigen::MatrixXd A(n, n);
    A.topRows(n - 1) = pb.J;
    A.row(n - 1) = pb.mu * jvec.transpose();
    Eigen::VectorXd r(n);
    r.head(n - 1) = pb.J * phi;
    r(n - 1) = pb.mu * b;
    const Eigen::VectorXd cphi = pb.C * phi;
    const Eigen::VectorXd p = detail::dense_lsi(A, r, pb.C, l - cphi, u - cphi, 1e-10);
    if (p.cwiseAbs().maxCoeff() <= tolerance * std::max(1., phi.cwiseAbs().maxCoeff())) {
      const Eigen::VectorXd last = phi + p;
      if ((last.array() > 0.).all() && detail::dense_penalty(pb, last) <= detail::dense_penalty(pb, phi))
        phi = last;
      res.status = SolverStatus::Converged;
      break;
    }
    const double f0 = detail::dense_penalty(pb, phi);
    const double slope = (A.transpose() * r).dot(p);
    double t = 1.;
    bool ok = false;
    while (slope < 0. && t > 1e-12) {
      const Eigen::VectorXd cand = phi + t * p;
      if ((cand.array() > 0.).all() && detail::dense_penalty(pb, cand) <= f0 + 1e-4 * t * slope) {
        phi = cand;
        ok = true;
        break;
      }
      t *= 0.5;
    }
    if (!ok) {
      if (p.cwiseAbs().maxCoeff() <= 1e-6 * std::max(1., phi.cwiseAbs().maxCoeff()))
        res.status = SolverStatus::Converged;
      break;
    }
  }
  res.phi = phi;
  res.cost = 0.5 * (pb.J * phi).squaredNorm();
  // Same classification as the tailored solver: a stationary point that leaves b unsatisfied.
  if (res.status == SolverStatus::Converged && std::abs(b_value(phi, pb.spec)) > boundedness_tolerance)
    res.status = SolverStatus::Infeasible;
  return res;
}

struct GridResult {
  Eigen::VectorXd phi;
  double cost;
};

/// Exhaustive search for n <= 4: stiffness values on a grid, phi_n closing b = 0 by bisection.
inline std::optional<GridResult> brute_force_solve(const CaptureProblemSpec& spec,
                                                   double resolution) {
  const int n = spec.n();
  if (n > 4) throw std::invalid_argument("brute_force_solve: n must be <= 4");
  if (!(resolution > 0.)) throw std::invalid_argument("brute_force_solve: resolution must be > 0");
  const double lmin = spec.bounds.lambda_min, lmax = spec.bounds.lambda_max;
  const auto steps = static_cast<long long>(std::floor((lmax - lmin) / resolution)) + 1;
  long long total = 1;
  for (int k = 0; k < n - 2; ++k) total *= steps;
  if (total > 50'000'000LL) throw std::invalid_argument("brute_force_solve: grid too fine");
  if (!spec.feasible()) return std::nullopt;
  const Eigen::VectorXd& delta = spec.partition.delta;
  const double wlo = spec.omega_i_min * spec.omega_i_min;
  const double whi = spec.omega_i_max * spec.omega_i_max;
  std::optional<GridResult> best;
  Eigen::VectorXd phi(n);
  for (long long flat = 0; flat < total; ++flat) {
    long long rem = flat;
    phi(0) = spec.phi1_target;
    for (int k = 1; k < n - 1; ++k) {
      const long long i = rem % steps;
      rem /= steps;
      phi(k) = phi(k - 1) + (lmin + static_cast<double>(i) * resolution) * delta(k);
    }
    double lo = std::max(phi(n - 2) + lmin * delta(n - 1), wlo);
    double hi = std::min(phi(n - 2) + lmax * delta(n - 1), whi);
    if (lo > hi) continue;
    auto bval = [&](double last) {
      phi(n - 1) = last;
      return b_value(phi, spec);
    };
    // b decreases in phi_n.
    if (bval(lo) < 0. || bval(hi) > 0.) continue;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      (bval(mid) > 0. ? lo : hi) = mid;
    }
    phi(n - 1) = 0.5 * (lo + hi);
    const double cost = capture_cost(spec, phi);
    if (!best || cost < best->cost) best = GridResult{phi, cost};
  }
  return best;
}

}  // namespace vhip
