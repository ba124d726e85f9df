#pragma once
// Time-domain oracles: bounded Riccati solutions and the boundedness residual.

#include "vhip/pendulum.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace vhip {

/// lambda(t) = values[k] on [breaks[k], breaks[k+1]), values.back() for t >= breaks.back().
struct PiecewiseStiffness {
  std::vector<double> breaks;  // breaks[0] = 0, increasing
  std::vector<double> values;  // same size as breaks

  [[nodiscard]] double horizon() const { return breaks.back(); }
  [[nodiscard]] double final_value() const { return values.back(); }

  [[nodiscard]] std::size_t segment(double t) const {
    const auto it = std::upper_bound(breaks.begin(), breaks.end(), t);
    return it == breaks.begin() ? 0 : static_cast<std::size_t>(it - breaks.begin() - 1);
  }
  [[nodiscard]] double operator()(double t) const { return values[segment(t)]; }

  void validate() const {
    if (breaks.empty() || breaks.size() != values.size())
      throw std::invalid_argument("piecewise stiffness: breaks and values must match");
    if (breaks.front() != 0.) throw std::invalid_argument("piecewise stiffness must start at t = 0");
    for (std::size_t k = 1; k < breaks.size(); ++k)
      if (!(breaks[k] > breaks[k - 1])) throw std::invalid_argument("breaks must increase");
    for (double v : values)
      if (!(v > 0.)) throw std::invalid_argument("stiffness must be positive");
  }

  static PiecewiseStiffness constant(double lambda) { return {{0.}, {lambda}}; }
};

namespace detail {

/// Calls step(t0, t1) over [a, b] with steps of at most h, split at the given knots.
template <class Step>
void march(double a, double b, double h, const std::vector<double>& knots, Step&& step) {
  std::vector<double> cuts{a};
  for (double k : knots)
    if (k > a && k < b) cuts.push_back(k);
  cuts.push_back(b);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i], hi = cuts[i + 1];
    const int m = std::max(1, static_cast<int>(std::ceil((hi - lo) / h - 1e-9)));
    const double dt = (hi - lo) / m;
    for (int j = 0; j < m; ++j) step(lo + j * dt, j + 1 == m ? hi : lo + (j + 1) * dt);
  }
}

/// Forward RK4 for omega' = omega^2 - lambda with lambda constant on each step.
inline double riccati_step(double w, double lambda, double h) {
  auto f = [&](double x) { return x * x - lambda; };
  const double k1 = f(w), k2 = f(w + .5 * h * k1), k3 = f(w + .5 * h * k2), k4 = f(w + h * k3);
  return w + h / 6. * (k1 + 2. * k2 + 2. * k3 + k4);
}

}  // namespace detail

/// omega(0) of the unique solution of omega' = omega^2 - lambda(t) that stays bounded, by
/// bisection on forward integrations.
inline double bounded_riccati_initial(const PiecewiseStiffness& lambda, const StiffnessBounds& bounds,
                                      double step = 1e-3, double tolerance = 1e-10) {
  lambda.validate();
  bounds.validate();
  const double lo_bound = std::sqrt(bounds.lambda_min), hi_bound = std::sqrt(bounds.lambda_max);
  const double w_final = std::sqrt(lambda.final_value());
  const double T = lambda.horizon();
  // +1: omega(0) too high (escapes upward), -1: too low.
  auto classify = [&](double w0) {
    double w = w0;
    int verdict = 0;
    detail::march(0., T, step, lambda.breaks, [&](double t0, double t1) {
      if (verdict != 0) return;
      w = detail::riccati_step(w, lambda(0.5 * (t0 + t1)), t1 - t0);
      if (w > hi_bound + 1e-9) verdict = 1;
      if (w < lo_bound - 1e-9) verdict = -1;
    });
    if (verdict != 0) return verdict;
    return w > w_final ? 1 : -1;
  };
  double lo = lo_bound, hi = hi_bound;
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    (classify(mid) > 0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Capture input in the time domain. Past the horizon of `lambda`, the stiffness is constant and
/// the CoP relaxes to r_final as r_final + (cop(T) - r_final) exp(-tail_decay (t - T)).
struct TimeInput {
  PiecewiseStiffness lambda;
  std::function<Vector3(double t, double t_mid)> cop;  // t_mid picks the side of a discontinuity
  std::vector<double> cop_breaks;                      // CoP discontinuities inside [0, T]
  Vector3 r_final{Vector3::Zero()};
  double tail_decay{0.};
};

struct BoundednessReport {
  Vector3 residual;
  double omega_i;
};

/// int_0^inf (lambda r - g) exp(-Omega) dt - (omega_i c_i + cdot_i), with omega the bounded Riccati
/// solution. Evaluated as K(0) of K' = omega K - (lambda r - g), integrated backward from the
/// closed-form tail value at T together with omega' = omega^2 - lambda (both stable backward).
inline BoundednessReport boundedness_residual(const TimeInput& in, const PendulumState& x,
                                              double g = kGravity, double step = 1e-3) {
  in.lambda.validate();
  if (in.tail_decay < 0.) throw std::invalid_argument("tail decay must be non-negative");
  const double T = in.lambda.horizon();
  const double lf = in.lambda.final_value();
  const double wf = std::sqrt(lf);
  const Vector3 gv = gravity_vector(g);
  const Vector3 rT = in.cop(T, T + 1.);
  Vector3 K = (lf * in.r_final - gv) / wf + lf * (rT - in.r_final) / (wf + in.tail_decay);
  double w = wf;
  std::vector<double> knots = in.lambda.breaks;
  knots.insert(knots.end(), in.cop_breaks.begin(), in.cop_breaks.end());
  std::vector<std::pair<double, double>> steps;
  detail::march(0., T, step, knots, [&](double t0, double t1) { steps.emplace_back(t0, t1); });
  // Backward in time: d/dtau (w, K) = (lambda - w^2, (lambda r - g) - w K).
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
    const double t1 = it->second, t0 = it->first, h = t1 - t0, mid = 0.5 * (t0 + t1);
    const double lam = in.lambda(mid);
    auto src = [&](double t) -> Vector3 { return lam * in.cop(t, mid) - gv; };
    auto fw = [&](double ww) { return lam - ww * ww; };
    auto fk = [&](double t, double ww, const Vector3& k) -> Vector3 { return src(t) - ww * k; };
    const double w1 = fw(w);
    const Vector3 k1 = fk(t1, w, K);
    const double wa = w + .5 * h * w1;
    const Vector3 Ka = K + .5 * h * k1;
    const double w2 = fw(wa);
    const Vector3 k2 = fk(mid, wa, Ka);
    const double wb = w + .5 * h * w2;
    const Vector3 Kb = K + .5 * h * k2;
    const double w3 = fw(wb);
    const Vector3 k3 = fk(mid, wb, Kb);
    const double wc = w + h * w3;
    const Vector3 Kc = K + h * k3;
    const double w4 = fw(wc);
    const Vector3 k4 = fk(t0, wc, Kc);
    w += h / 6. * (w1 + 2. * w2 + 2. * w3 + w4);
    K += h / 6. * (k1 + 2. * k2 + 2. * k3 + k4);
  }
  return {K - (w * x.c + x.cdot), w};
}

/// Forward RK4 integration of the VHIP with the given input, steps split at all breaks.
inline std::vector<std::pair<double, PendulumState>> integrate_input(const TimeInput& in,
                                                                     const PendulumState& x0,
                                                                     double horizon,
                                                                     double step = 1e-3,
                                                                     double g = kGravity) {
  std::vector<double> knots = in.lambda.breaks;
  knots.insert(knots.end(), in.cop_breaks.begin(), in.cop_breaks.end());
  const double T = in.lambda.horizon();
  const Vector3 rT = in.cop(T, T + 1.);
  auto cop = [&](double t, double mid) -> Vector3 {
    if (t <= T) return in.cop(t, mid);
    return in.r_final + (rT - in.r_final) * std::exp(-in.tail_decay * (t - T));
  };
  std::vector<std::pair<double, PendulumState>> out{{0., x0}};
  PendulumState x = x0;
  detail::march(0., horizon, step, knots, [&](double t0, double t1) {
    const double mid = 0.5 * (t0 + t1);
    const double lam = in.lambda(mid);
    x = rk4_step(x, t0, t1 - t0, [&](double) { return lam; }, [&](double t) { return cop(t, mid); }, g);
    out.emplace_back(t1, x);
  });
  return out;
}

}  // namespace vhip
