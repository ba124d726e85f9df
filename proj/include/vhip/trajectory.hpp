#pragma once
// Time-domain reconstruction of capture inputs solved in the s variable.

#include "vhip/capture_problem.hpp"
#include "vhip/riccati.hpp"

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace vhip {

struct CaptureTrajectory {
  CaptureMode mode{CaptureMode::ZeroStep};
  Partition partition;
  Eigen::VectorXd phi;
  Eigen::VectorXd lambda;        // lambda_j on [s_j, s_{j+1}]
  Eigen::VectorXd switch_times;  // t_j = t(s_j), t_n = 0, t_0 = +inf
  double alpha{0.5};
  Vector3 r_i{Vector3::Zero()};
  Vector3 r_f{Vector3::Zero()};
  double s_c{0.};
  double t_c{0.};
  double g{kGravity};

  [[nodiscard]] int n() const { return partition.n(); }
  /// phi at knot j, with phi(s_0) = 0.
  [[nodiscard]] double phi_at(int j) const { return j == 0 ? 0. : phi(j - 1); }
  [[nodiscard]] double omega_i() const { return std::sqrt(phi(n() - 1)); }
  [[nodiscard]] double lambda_final() const { return lambda(0); }
};

inline Eigen::VectorXd switch_times(const Eigen::VectorXd& phi, const Partition& p) {
  const int n = p.n();
  const Eigen::VectorXd lam = phi_to_stiffness(phi, p);
  Eigen::VectorXd t(n + 1);
  t(n) = 0.;
  for (int j = n - 1; j >= 1; --j) {
    const double sl = std::sqrt(lam(j));
    const double up = std::sqrt(phi(j)) + sl * p.s(j + 1);
    const double down = std::sqrt(phi(j - 1)) + sl * p.s(j);
    t(j) = t(j + 1) + std::log(up / down) / sl;
  }
  t(0) = std::numeric_limits<double>::infinity();
  return t;
}

/// Segment j containing time t: t_{j+1} <= t < t_j.
inline int segment_at_time(const CaptureTrajectory& tr, double t) {
  int j = tr.n() - 1;
  while (j > 0 && t >= tr.switch_times(j)) --j;
  return j;
}

inline double s_of_t(double t, const CaptureTrajectory& tr) {
  if (t <= 0.) return 1.;
  const int j = segment_at_time(tr, t);
  const double sl = std::sqrt(tr.lambda(j));
  const double dt = t - tr.switch_times(j + 1);
  const double s1 = tr.partition.s(j + 1);
  if (j == 0) return s1 * std::exp(-sl * dt);
  const double a = std::sqrt(tr.phi_at(j + 1)) + sl * s1;
  const double b = a * std::exp(-sl * dt);
  const double c = tr.phi_at(j) - tr.lambda(j) * tr.partition.s(j) * tr.partition.s(j);
  return (b * b - c) / (2. * b * sl);
}

/// Inverse of s_of_t: time at which the trajectory reaches s in (0, 1].
inline double t_of_s(double s, const CaptureTrajectory& tr) {
  if (!(s > 0.) || s > 1.) throw std::invalid_argument("t_of_s: s must lie in (0, 1]");
  const int j = segment_of(tr.partition, s);
  const double sl = std::sqrt(tr.lambda(j));
  const double s1 = tr.partition.s(j + 1);
  const double up = std::sqrt(tr.phi_at(j + 1)) + sl * s1;
  const double down = std::sqrt(phi_of_s(tr.phi, tr.partition, s)) + sl * s;
  return tr.switch_times(j + 1) + std::log(up / down) / sl;
}

/// sqrt(phi(s)) = s omega(s).
inline double sqrt_phi_at_time(double t, const CaptureTrajectory& tr) {
  return std::sqrt(phi_of_s(tr.phi, tr.partition, s_of_t(t, tr)));
}

inline double omega_of_t(double t, const CaptureTrajectory& tr) {
  const double s = s_of_t(t, tr);
  return omega_of_s(tr.phi, tr.partition, s);
}

inline double lambda_of_t(double t, const CaptureTrajectory& tr) { return tr.lambda(segment_at_time(tr, t)); }

inline Vector3 cop_of_t(double t, const CaptureTrajectory& tr) {
  if (tr.mode == CaptureMode::OneStep) return t < tr.t_c ? tr.r_i : tr.r_f;
  const double ratio = sqrt_phi_at_time(t, tr) / tr.omega_i();
  return tr.r_f + (tr.r_i - tr.r_f) * std::pow(ratio, tr.alpha / (1. - tr.alpha));
}

/// s_c with sqrt(phi(s_c)) = alpha sqrt(phi_n), then t_c = t(s_c).
inline std::pair<double, double> contact_switch_time(const Eigen::VectorXd& phi, const Partition& p,
                                                     double alpha, const CaptureTrajectory& tr) {
  check_alpha(alpha);
  const int n = p.n();
  const double target = alpha * alpha * phi(n - 1);
  int j = 0;
  while (j < n && !(target <= phi(j))) ++j;
  if (j == n) throw std::logic_error("contact_switch_time: phi is not increasing");
  const double lo = j == 0 ? 0. : phi(j - 1);
  if (target < lo) throw std::logic_error("contact_switch_time: phi is not increasing");
  const double lam = (phi(j) - lo) / p.delta(j);
  const double s_c = std::sqrt(p.s(j) * p.s(j) + (target - lo) / lam);
  return {s_c, t_of_s(s_c, tr)};
}

inline CaptureTrajectory make_trajectory(const CaptureProblem& pb, const Eigen::VectorXd& phi) {
  CaptureTrajectory tr;
  tr.mode = pb.context.mode;
  tr.partition = pb.spec.partition;
  tr.phi = phi;
  tr.lambda = phi_to_stiffness(phi, tr.partition);
  tr.switch_times = switch_times(phi, tr.partition);
  tr.alpha = pb.context.alpha;
  tr.g = pb.spec.g;
  tr.r_f = pb.context.r_f;
  tr.r_i = recover_instant_cop(pb.context.state, pb.context.r_f, tr.alpha, tr.omega_i(),
                               pb.context.initial_contact);
  if (tr.mode == CaptureMode::OneStep) {
    const auto [s_c, t_c] = contact_switch_time(phi, tr.partition, tr.alpha, tr);
    tr.s_c = s_c;
    tr.t_c = t_c;
  }
  return tr;
}

/// Time-domain input for the oracles in riccati.hpp.
inline TimeInput to_time_input(const CaptureTrajectory& tr) {
  TimeInput in;
  const int n = tr.n();
  for (int j = n - 1; j >= 0; --j) {
    in.lambda.breaks.push_back(tr.switch_times(j + 1));
    in.lambda.values.push_back(tr.lambda(j));
  }
  in.r_final = tr.r_f;
  if (tr.mode == CaptureMode::OneStep) {
    if (tr.t_c >= in.lambda.horizon()) {
      in.lambda.breaks.push_back(tr.t_c);
      in.lambda.values.push_back(tr.lambda(0));
    }
    in.cop_breaks.push_back(tr.t_c);
    in.cop = [tr](double t, double mid) -> Vector3 {
      if (t < tr.t_c || (t == tr.t_c && mid < tr.t_c)) return tr.r_i;
      return tr.r_f;
    };
    in.tail_decay = 0.;
  } else {
    in.cop = [tr](double t, double) { return cop_of_t(t, tr); };
    in.tail_decay = std::sqrt(tr.lambda(0)) * tr.alpha / (1. - tr.alpha);
  }
  return in;
}

struct TrajectorySample {
  double t;
  PendulumState x;
  Vector3 cop;
  double lambda;
  double omega;
};

/// RK4 integration of the CoM along the trajectory's input up to `horizon`.
inline std::vector<TrajectorySample> integrate_com(const PendulumState& x0, const CaptureTrajectory& tr,
                                                   double horizon, double step = 1e-3) {
  if (!(step > 0.)) throw std::invalid_argument("integration step must be positive");
  if (!(horizon >= 0.) || !std::isfinite(horizon)) throw std::invalid_argument("horizon must be finite");
  const TimeInput in = to_time_input(tr);
  const auto raw = integrate_input(in, x0, horizon, step, tr.g);
  std::vector<TrajectorySample> out;
  out.reserve(raw.size());
  for (const auto& [t, x] : raw)
    out.push_back({t, x, cop_of_t(t, tr), lambda_of_t(t, tr), omega_of_t(t, tr)});
  return out;
}

/// Horizon at which the capture trajectory is considered settled.
inline double settling_horizon(const CaptureTrajectory& tr, double time_constants = 5.) {
  const double last = tr.mode == CaptureMode::OneStep ? std::max(tr.switch_times(1), tr.t_c) : tr.switch_times(1);
  return last + time_constants / std::sqrt(tr.lambda_final());
}

}  // namespace vhip
