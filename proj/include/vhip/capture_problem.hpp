#pragma once

#include "vhip/pendulum.hpp"

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace vhip {

struct Partition {
  Eigen::VectorXd s;      // n+1 knots, s(0) = 0, s(n) = 1
  Eigen::VectorXd delta;  // n squared increments

  [[nodiscard]] int n() const { return static_cast<int>(delta.size()); }

  static Partition from_knots(const Eigen::VectorXd& s) {
    if (s.size() < 3) throw std::invalid_argument("partition needs n >= 2 segments");
    if (s(0) != 0. || s(s.size() - 1) != 1.)
      throw std::invalid_argument("partition must span [0, 1]");
    Partition p;
    p.s = s;
    p.delta.resize(s.size() - 1);
    for (Eigen::Index j = 0; j + 1 < s.size(); ++j) {
      if (!(s(j + 1) > s(j))) throw std::invalid_argument("partition must be increasing");
      p.delta(j) = s(j + 1) * s(j + 1) - s(j) * s(j);
    }
    return p;
  }
};

inline Partition uniform_partition(int n) {
  if (n < 2) throw std::invalid_argument("uniform_partition: n must be >= 2");
  Partition p;
  p.s.resize(n + 1);
  p.delta.resize(n);
  const double n2 = static_cast<double>(n) * n;
  for (int i = 0; i <= n; ++i) p.s(i) = static_cast<double>(i) / n;
  for (int j = 0; j < n; ++j) p.delta(j) = (2. * j + 1.) / n2;
  return p;
}

/// Data of one capture problem in the phi variables.
struct CaptureProblemSpec {
  Partition partition;
  StiffnessBounds bounds;
  double omega_i_min{0.};
  double omega_i_max{0.};
  double height_term{0.};
  double height_rate{0.};
  double phi1_target{0.};
  double g{kGravity};

  [[nodiscard]] int n() const { return partition.n(); }
  [[nodiscard]] bool feasible() const { return omega_i_min <= omega_i_max; }

  /// Bounds of the n+1 linear constraints l <= C phi <= u.
  [[nodiscard]] std::pair<Eigen::VectorXd, Eigen::VectorXd> linear_bounds() const {
    const int m = n();
    Eigen::VectorXd l(m + 1), u(m + 1);
    l(0) = u(0) = phi1_target;
    for (int j = 1; j < m; ++j) {
      l(j) = bounds.lambda_min * partition.delta(j);
      u(j) = bounds.lambda_max * partition.delta(j);
    }
    l(m) = omega_i_min * omega_i_min;
    u(m) = omega_i_max * omega_i_max;
    return {l, u};
  }
};

enum class CaptureMode { ZeroStep, OneStep };

/// Physical context needed to map a solution back to CoP and time domain.
struct CaptureContext {
  CaptureMode mode{CaptureMode::ZeroStep};
  PendulumState state;
  ContactArea initial_contact;
  StaticEquilibrium target;
  Vector3 r_f{Vector3::Zero()};
  double lambda_f{0.};
  double alpha{0.5};
};

struct CaptureProblem {
  CaptureProblemSpec spec;
  CaptureContext context;
};

/// Linear constraint value C phi for row k (0-based, rows 0..n).
inline double constraint_row_value(const Eigen::VectorXd& phi, int k) {
  const int n = static_cast<int>(phi.size());
  if (k == 0) return phi(0);
  if (k == n) return phi(n - 1);
  return phi(k) - phi(k - 1);
}

inline Eigen::VectorXd constraint_values(const Eigen::VectorXd& phi) {
  const int n = static_cast<int>(phi.size());
  Eigen::VectorXd v(n + 1);
  for (int k = 0; k <= n; ++k) v(k) = constraint_row_value(phi, k);
  return v;
}

/// Inverse squared partition increments d_j = 1/delta_j.
inline Eigen::VectorXd cost_weights(const Partition& p) { return p.delta.cwiseInverse(); }

/// J phi, i.e. consecutive stiffness differences lambda_j - lambda_{j-1}, j = 1..n-1.
inline Eigen::VectorXd apply_cost(const Partition& p, const Eigen::VectorXd& phi) {
  const int n = p.n();
  Eigen::VectorXd r(n - 1);
  double lam_prev = phi(0) / p.delta(0);
  for (int j = 1; j < n; ++j) {
    const double lam = (phi(j) - phi(j - 1)) / p.delta(j);
    r(j - 1) = lam - lam_prev;
    lam_prev = lam;
  }
  return r;
}

/// J^T y for the cost operator above.
inline Eigen::VectorXd apply_cost_transpose(const Partition& p, const Eigen::VectorXd& y) {
  const int n = p.n();
  const Eigen::VectorXd d = cost_weights(p);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  for (int r = 0; r < n - 1; ++r) {
    if (r >= 1) x(r - 1) += d(r) * y(r);
    x(r) += (-d(r) - d(r + 1)) * y(r);
    x(r + 1) += d(r + 1) * y(r);
  }
  return x;
}

inline Eigen::MatrixXd dense_cost_matrix(const Partition& p) {
  const int n = p.n();
  const Eigen::VectorXd d = cost_weights(p);
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n - 1, n);
  for (int r = 0; r < n - 1; ++r) {
    if (r >= 1) J(r, r - 1) = d(r);
    J(r, r) = -d(r) - d(r + 1);
    J(r, r + 1) = d(r + 1);
  }
  return J;
}

inline Eigen::MatrixXd dense_constraint_matrix(int n) {
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n + 1, n);
  C(0, 0) = 1.;
  for (int k = 1; k < n; ++k) {
    C(k, k - 1) = -1.;
    C(k, k) = 1.;
  }
  C(n, n - 1) = 1.;
  return C;
}

inline double capture_cost(const CaptureProblemSpec& spec, const Eigen::VectorXd& phi) {
  return 0.5 * apply_cost(spec.partition, phi).squaredNorm();
}

inline void require_positive(const Eigen::VectorXd& phi) {
  if ((phi.array() <= 0.).any()) throw std::domain_error("phi entries must be positive");
}

inline double b_value(const Eigen::VectorXd& phi, const CaptureProblemSpec& spec) {
  require_positive(phi);
  const int n = spec.n();
  double sum = 0.;
  double sq_prev = 0.;
  for (int j = 0; j < n; ++j) {
    const double sq = std::sqrt(phi(j));
    sum += spec.partition.delta(j) / (sq + sq_prev);
    sq_prev = sq;
  }
  return sum - (spec.height_term * sq_prev + spec.height_rate) / spec.g;
}

inline Eigen::VectorXd b_gradient(const Eigen::VectorXd& phi, const CaptureProblemSpec& spec) {
  require_positive(phi);
  const int n = spec.n();
  const Eigen::VectorXd sq = phi.cwiseSqrt();
  const Eigen::VectorXd& delta = spec.partition.delta;
  Eigen::VectorXd grad(n);
  for (int k = 0; k < n; ++k) {
    const double below = k == 0 ? 0. : sq(k - 1);
    double acc = delta(k) / ((sq(k) + below) * (sq(k) + below));
    if (k + 1 < n) acc += delta(k + 1) / ((sq(k + 1) + sq(k)) * (sq(k + 1) + sq(k)));
    grad(k) = -acc / (2. * sq(k));
  }
  grad(n - 1) -= spec.height_term / (2. * spec.g * sq(n - 1));
  return grad;
}

inline Eigen::VectorXd phi_to_stiffness(const Eigen::VectorXd& phi, const Partition& p) {
  const int n = p.n();
  Eigen::VectorXd lam(n);
  double prev = 0.;
  for (int j = 0; j < n; ++j) {
    lam(j) = (phi(j) - prev) / p.delta(j);
    prev = phi(j);
  }
  return lam;
}

/// Index j of the segment [s_j, s_{j+1}] that contains s.
inline int segment_of(const Partition& p, double s) {
  const int n = p.n();
  int j = 0;
  while (j + 1 < n && s > p.s(j + 1)) ++j;
  return j;
}

/// phi(s) = s^2 omega(s)^2, piecewise affine in s^2.
inline double phi_of_s(const Eigen::VectorXd& phi, const Partition& p, double s) {
  const int j = segment_of(p, s);
  const double phi_j = j == 0 ? 0. : phi(j - 1);
  const double lam = (phi(j) - phi_j) / p.delta(j);
  return phi_j + lam * (s * s - p.s(j) * p.s(j));
}

inline double omega_of_s(const Eigen::VectorXd& phi, const Partition& p, double s) {
  if (s <= 0.) return std::sqrt(phi(0) / p.delta(0));
  return std::sqrt(phi_of_s(phi, p, s)) / s;
}

/// Horizontal CoP at t = 0 of the capture input for a given omega_i.
inline Vector2 instant_cop_xy(const PendulumState& x, const Vector2& r_f_xy, double alpha,
                              double omega_i) {
  return r_f_xy +
         (x.c.head<2>() + x.cdot.head<2>() / omega_i - r_f_xy) / (1. - alpha);
}

inline Vector3 recover_instant_cop(const PendulumState& x, const Vector3& r_f, double alpha,
                                   double omega_i, const ContactArea& support) {
  if (!(omega_i > 0.)) throw std::invalid_argument("omega_i must be positive");
  if (!(alpha > 0. && alpha < 1.)) throw std::invalid_argument("alpha must lie in (0, 1)");
  return project_to_plane(support, instant_cop_xy(x, r_f.head<2>(), alpha, omega_i));
}

struct OmegaInterval {
  double min;
  double max;
  [[nodiscard]] bool empty() const { return min > max; }
};

/// Rows u_j omega >= v_j from H r_i <= p, reduced to an interval on omega_i.
inline OmegaInterval omega_bounds_from_cop(const Vector2& c_xy, const Vector2& cdot_xy,
                                           const Vector2& r_f_xy, const HalfspaceRep& hs,
                                           double alpha, const StiffnessBounds& bounds) {
  if (!(alpha > 0. && alpha < 1.)) throw std::invalid_argument("alpha must lie in (0, 1)");
  const Eigen::VectorXd u = alpha * (hs.H * r_f_xy) + (1. - alpha) * hs.p - hs.H * c_xy;
  const Eigen::VectorXd v = hs.H * cdot_xy;
  OmegaInterval iv{std::sqrt(bounds.lambda_min), std::sqrt(bounds.lambda_max)};
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    if (u(j) > 0.)
      iv.min = std::max(iv.min, v(j) / u(j));
    else if (u(j) < 0.)
      iv.max = std::min(iv.max, v(j) / u(j));
    else if (v(j) > 0.)
      return {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  }
  return iv;
}

inline void check_alpha(double alpha) {
  if (!(alpha > 0. && alpha < 1.)) throw std::invalid_argument("alpha must lie in (0, 1)");
}

inline double phi1_target_for(const Partition& p, const StiffnessBounds& bounds, double h_f,
                              double g) {
  const double lambda_f = g / h_f;
  if (lambda_f < bounds.lambda_min || lambda_f > bounds.lambda_max)
    throw std::invalid_argument("target stiffness g/h_f outside stiffness bounds");
  return p.delta(0) * lambda_f;
}

/// Zero-step problem: the CoP slides from r_i to r_f on a single stationary contact.
/// `support` replaces the contact's own polygon, e.g. by the hull of two coplanar feet.
inline CaptureProblem assemble_zero_step(const PendulumState& x, const StaticEquilibrium& eq,
                                         double alpha, const Partition& partition,
                                         const StiffnessBounds& bounds,
                                         double g = kGravity,
                                         const HalfspaceRep* support = nullptr) {
  check_alpha(alpha);
  bounds.validate();
  const EquilibriumInput in = equilibrium_input(eq, g);
  const ContactArea& contact = eq.contact;
  CaptureProblem pb;
  pb.spec.partition = partition;
  pb.spec.bounds = bounds;
  pb.spec.g = g;
  pb.spec.height_term = height_above(contact, x.c);
  pb.spec.height_rate = height_rate(contact, x.cdot);
  pb.spec.phi1_target = phi1_target_for(partition, bounds, eq.h_f, g);
  const OmegaInterval iv = omega_bounds_from_cop(x.c.head<2>(), x.cdot.head<2>(),
                                                 in.r_f.head<2>(),
                                                 support ? *support : halfspace_rep(contact),
                                                 alpha, bounds);
  pb.spec.omega_i_min = iv.min;
  pb.spec.omega_i_max = iv.max;
  pb.context = {CaptureMode::ZeroStep, x, contact, eq, in.r_f, in.lambda_f, alpha};
  return pb;
}

/// Height of c_i above the equivalent CoP alpha r_f + (1 - alpha) r_i along e_z.
/// r_i lies in the initial contact plane, so r_i . n_i = o_i . n_i and the result does not
/// depend on omega_i.
inline double equivalent_cop_height(const PendulumState& x, const ContactArea& initial,
                                    const Vector3& r_f, double alpha) {
  require_upward(initial);
  const Vector3 anchor = alpha * r_f + (1. - alpha) * initial.o;
  return (x.c - anchor).dot(initial.n) / initial.n.z();
}

/// One-step problem: CoP at r_i on the initial contact, then at r_f on the target.
inline CaptureProblem assemble_one_step(const PendulumState& x, const ContactArea& initial,
                                        const StaticEquilibrium& eq, double alpha,
                                        const Partition& partition,
                                        const StiffnessBounds& bounds, double g = kGravity) {
  check_alpha(alpha);
  bounds.validate();
  const EquilibriumInput in = equilibrium_input(eq, g);
  CaptureProblem pb;
  pb.spec.partition = partition;
  pb.spec.bounds = bounds;
  pb.spec.g = g;
  pb.spec.height_term = equivalent_cop_height(x, initial, in.r_f, alpha);
  pb.spec.height_rate = height_rate(initial, x.cdot);
  pb.spec.phi1_target = phi1_target_for(partition, bounds, eq.h_f, g);
  const OmegaInterval iv = omega_bounds_from_cop(x.c.head<2>(), x.cdot.head<2>(),
                                                 in.r_f.head<2>(), halfspace_rep(initial),
                                                 alpha, bounds);
  pb.spec.omega_i_min = iv.min;
  pb.spec.omega_i_max = iv.max;
  pb.context = {CaptureMode::OneStep, x, initial, eq, in.r_f, in.lambda_f, alpha};
  return pb;
}

}  // namespace vhip
