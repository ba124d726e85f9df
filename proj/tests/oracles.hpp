#pragma once
// Dense and numerical reference computations used only by the tests.

#include "vhip/capture_problem.hpp"
#include "vhip/solver/active_set.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace vhip::oracle {

/// Explicit nullspace basis assembled block by block from the run-length sequence:
/// zeros for the a_0 leading and a_p trailing variables, a ones column of length a_k + 1
/// for each interior active run, identity columns for the variables in between.
inline Eigen::MatrixXd nullspace_from_runs(int n, const std::vector<int>& runs) {
  std::vector<Eigen::VectorXd> cols;
  const int a0 = runs.front();
  const int ap = runs.back();
  int var = a0;  // first variable not tied to phi_0
  // runs = a0, j1, a1, ..., jp, ap
  const std::size_t p = (runs.size() - 1) / 2;
  for (std::size_t k = 1; k <= p; ++k) {
    const int j = runs[2 * k - 1];
    const int a = runs[2 * k];
    const bool last = k == p;
    if (!last) {
      // j - 1 singletons, then one group of a + 1 variables.
      for (int i = 0; i < j - 1; ++i) {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
        c(var++) = 1.;
        cols.push_back(c);
      }
      Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
      for (int i = 0; i <= a; ++i) c(var++) = 1.;
      cols.push_back(c);
    } else {
      // j - 1 singletons before the trailing a_p pinned variables.
      for (int i = 0; i < j - 1; ++i) {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
        c(var++) = 1.;
        cols.push_back(c);
      }
      (void)a;
    }
  }
  (void)ap;
  Eigen::MatrixXd N(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) N.col(static_cast<Eigen::Index>(c)) = cols[c];
  return N;
}

inline double max_abs(const Eigen::MatrixXd& A) { return A.size() == 0 ? 0. : A.cwiseAbs().maxCoeff(); }

inline Eigen::MatrixXd active_rows(const Eigen::MatrixXd& C, const ActiveSetDescriptor& w) {
  Eigen::MatrixXd Cw(w.count(), C.cols());
  int r = 0;
  for (int k = 0; k <= w.n; ++k)
    if (w.active(k)) Cw.row(r++) = C.row(k);
  return Cw;
}

inline Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& A) {
  return Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(A).pseudoInverse();
}

/// Upper-triangular factor of a Householder QR, first min(rows, cols) rows.
inline Eigen::MatrixXd dense_r(const Eigen::MatrixXd& A) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  const Eigen::Index r = std::min(A.rows(), A.cols());
  Eigen::MatrixXd R = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  return R;
}

/// Composite Simpson rule with an even number of intervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, int intervals) {
  if (intervals % 2 != 0) ++intervals;
  const double h = (b - a) / intervals;
  double acc = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) acc += (i % 2 == 1 ? 4. : 2.) * f(a + i * h);
  return acc * h / 3.;
}

/// Integral of ds / omega(s) over [0, 1] evaluated segment by segment.
inline double boundedness_integral(const Eigen::VectorXd& phi, const Partition& p, int per_segment) {
  double acc = 0.;
  for (int j = 0; j < p.n(); ++j) {
    const double a = p.s(j), b = p.s(j + 1);
    acc += simpson([&](double s) { return 1. / omega_of_s(phi, p, std::max(s, 1e-300)); }, a, b,
                   per_segment);
  }
  return acc;
}

/// Random feasible phi with stiffness increments within bounds.
inline Eigen::VectorXd random_phi(const Partition& p, const StiffnessBounds& bounds,
                                  std::mt19937_64& rng) {
  std::uniform_real_distribution<double> lam(bounds.lambda_min, bounds.lambda_max);
  Eigen::VectorXd phi(p.n());
  double acc = 0.;
  for (int j = 0; j < p.n(); ++j) {
    acc += lam(rng) * p.delta(j);
    phi(j) = acc;
  }
  return phi;
}

}  // namespace vhip::oracle
