#include "vhip/solver/sqp.hpp"
#include "vhip/trajectory.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace vhip;

namespace {

CaptureProblem lip_problem(CaptureMode mode, double alpha = 0.5) {
  const ContactArea foot = ContactArea::flat(Vector3::Zero(), 0.11, 0.05);
  const PendulumState x{Vector3(0., 0., 0.8), Vector3::Zero()};
  const auto eq = StaticEquilibrium::above(foot, 0.8);
  if (mode == CaptureMode::OneStep)
    return assemble_one_step(x, foot, eq, alpha, uniform_partition(10), StiffnessBounds::defaults());
  return assemble_zero_step(x, eq, alpha, uniform_partition(10), StiffnessBounds::defaults());
}

Eigen::VectorXd constant_phi(const Partition& p, double wc) {
  Eigen::VectorXd phi(p.n());
  for (int j = 0; j < p.n(); ++j) phi(j) = wc * wc * p.s(j + 1) * p.s(j + 1);
  return phi;
}

// Pushed state with a varying-stiffness solution on the default sole.
CaptureProblem pushed(double alpha = 0.3, Vector3 cdot = Vector3(0.3, 0., 0.)) {
  const ContactArea foot = ContactArea::flat(Vector3::Zero(), 0.11, 0.05);
  const PendulumState x{Vector3(0., 0., 0.8), cdot};
  return assemble_zero_step(x, StaticEquilibrium::above(foot, 0.8), alpha, uniform_partition(10),
                            StiffnessBounds::defaults());
}

CaptureTrajectory solved(const CaptureProblem& pb) {
  const auto out = solve(pb.spec);
  if (!out.converged()) throw std::runtime_error("test problem did not converge");
  return make_trajectory(pb, out.phi.phi);
}

}  // namespace

TEST(SwitchTimes, ConstantStiffness) {
  const Partition p = uniform_partition(10);
  const Eigen::VectorXd t = switch_times(constant_phi(p, 3.5), p);
  EXPECT_NEAR(t(1), std::log(10.) / 3.5, 1e-12);
  EXPECT_NEAR(t(1), 0.6579, 1e-4);
  for (int j = 1; j < 10; ++j) EXPECT_NEAR(t(j) - t(j + 1), std::log(p.s(j + 1) / p.s(j)) / 3.5, 1e-12);
  EXPECT_TRUE(std::isinf(t(0)));
}

TEST(SwitchTimes, MatchOdeInversion) {
  // Integrate s' = -omega(s) s from s = 1 and read the knot crossing times.
  const auto tr = solved(pushed());
  double s = 1., t = 0.;
  const double h = 1e-5;
  auto f = [&](double ss) { return -omega_of_s(tr.phi, tr.partition, ss) * ss; };
  for (int j = tr.n() - 1; j >= 1; --j) {
    for (;;) {
      const double k1 = f(s), k2 = f(s + .5 * h * k1), k3 = f(s + .5 * h * k2), k4 = f(s + h * k3);
      const double next = s + h / 6. * (k1 + 2. * k2 + 2. * k3 + k4);
      if (next <= tr.partition.s(j)) {
        t += h * (s - tr.partition.s(j)) / (s - next);
        s = tr.partition.s(j);  // restart on the knot: omega(s) has a kink there
        break;
      }
      s = next;
      t += h;
    }
    EXPECT_NEAR(t, tr.switch_times(j), 1e-6) << "knot " << j;
    EXPECT_GT(tr.switch_times(j), tr.switch_times(j + 1));
  }
}

TEST(SOfT, Examples) {
  auto tr = make_trajectory(lip_problem(CaptureMode::ZeroStep), constant_phi(uniform_partition(10), 3.5));
  EXPECT_DOUBLE_EQ(s_of_t(0., tr), 1.);
  for (double t : {0.01, 0.2, 0.5, 0.65, 1.3, 3.})
    EXPECT_NEAR(s_of_t(t, tr), std::exp(-3.5 * t), 1e-12);
}

TEST(SOfT, KnotsMonotonicityAndDerivative) {
  const auto tr = solved(pushed());
  for (int j = 1; j <= tr.n(); ++j) EXPECT_NEAR(s_of_t(tr.switch_times(j), tr), tr.partition.s(j), 1e-12);
  double prev = 2.;
  for (double t = 0.; t < 3.; t += 0.01) {
    const double s = s_of_t(t, tr);
    EXPECT_LT(s, prev);
    prev = s;
    if (t > 0.) {
      const double h = 1e-6;
      const double fd = (s_of_t(t + h, tr) - s_of_t(t - h, tr)) / (2. * h);
      const double exact = -omega_of_s(tr.phi, tr.partition, s) * s;
      EXPECT_NEAR(fd, exact, 1e-6 * std::abs(exact));
    }
    EXPECT_NEAR(t_of_s(s, tr), t, 1e-9);
  }
}

TEST(Omega, AsymptoticValue) {
  const auto tr = solved(pushed());
  EXPECT_NEAR(omega_of_t(20., tr), std::sqrt(tr.lambda_final()), 1e-9);
  EXPECT_NEAR(tr.lambda_final(), kGravity / 0.8, 1e-12);
  EXPECT_NEAR(omega_of_t(0., tr), tr.omega_i(), 1e-12);
}

TEST(Cop, ZeroStepClosedForm) {
  auto pb = lip_problem(CaptureMode::ZeroStep);
  pb.context.state.cdot = Vector3(0.1, 0.02, 0.);
  const auto tr = make_trajectory(pb, constant_phi(uniform_partition(10), std::sqrt(kGravity / 0.8)));
  const double w = std::sqrt(kGravity / 0.8);
  EXPECT_LE((cop_of_t(0., tr) - tr.r_i).norm(), 1e-15);
  for (double t : {0.1, 0.5, 1.})
    EXPECT_LE((cop_of_t(t, tr) - (tr.r_f + (tr.r_i - tr.r_f) * std::exp(-w * t))).norm(), 1e-12);
  EXPECT_LE((cop_of_t(30., tr) - tr.r_f).norm(), 1e-12);
}

TEST(Cop, FeasibleAlongPath) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> v(-0.3, 0.3);
  const ContactArea foot = ContactArea::flat(Vector3::Zero(), 0.11, 0.05);
  const auto hs = halfspace_rep(foot);
  int checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const PendulumState x{Vector3(0.02, 0.01, 0.8), Vector3(v(rng), 0.2 * v(rng), 0.)};
    const auto pb = assemble_zero_step(x, StaticEquilibrium::above(foot, 0.8), 0.3, uniform_partition(10),
                                       StiffnessBounds::defaults());
    const auto out = solve(pb.spec);
    if (!out.converged()) continue;
    ++checked;
    const auto tr = make_trajectory(pb, out.phi.phi);
    for (double t = 0.; t < 3.; t += 0.005) EXPECT_LE(hs.max_violation(cop_of_t(t, tr).head<2>()), 1e-9);
  }
  EXPECT_GT(checked, 10);
}

TEST(ContactSwitch, LipLimit) {
  const auto tr = make_trajectory(lip_problem(CaptureMode::OneStep, 0.5), constant_phi(uniform_partition(10), 3.5));
  EXPECT_NEAR(tr.t_c, std::log(2.) / 3.5, 1e-12);
  EXPECT_NEAR(tr.t_c, 0.1981, 1e-4);
  EXPECT_NEAR(std::sqrt(phi_of_s(tr.phi, tr.partition, tr.s_c)), 0.5 * std::sqrt(tr.phi(9)), 1e-10);
  EXPECT_LE((cop_of_t(tr.t_c - 1e-9, tr) - tr.r_i).norm(), 0.);
  EXPECT_LE((cop_of_t(tr.t_c, tr) - tr.r_f).norm(), 0.);
}

TEST(ContactSwitch, MonotoneInAlpha) {
  double prev = std::numeric_limits<double>::infinity();
  for (double alpha = 0.05; alpha < 1.; alpha += 0.05) {
    const auto tr = make_trajectory(lip_problem(CaptureMode::OneStep, alpha),
                                    constant_phi(uniform_partition(10), 3.5));
    EXPECT_LT(tr.t_c, prev);
    EXPECT_NEAR(tr.t_c, -std::log(alpha) / 3.5, 1e-12);
    prev = tr.t_c;
  }
}

TEST(ContactSwitch, MatchesBisectionOnSOfT) {
  const auto base = solved(pushed());
  for (double alpha : {0.2, 0.5, 0.8}) {
    CaptureTrajectory tr = base;
    tr.mode = CaptureMode::OneStep;
    tr.alpha = alpha;
    const auto [s_c, t_c] = contact_switch_time(tr.phi, tr.partition, alpha, tr);
    double lo = 0., hi = 10.;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (std::sqrt(phi_of_s(tr.phi, tr.partition, s_of_t(mid, tr))) > alpha * tr.omega_i() ? lo : hi) = mid;
    }
    EXPECT_NEAR(t_c, 0.5 * (lo + hi), 1e-9);
    EXPECT_NEAR(s_of_t(t_c, tr), s_c, 1e-10);
  }
}

TEST(Integration, StationaryAtEquilibrium) {
  const auto tr = make_trajectory(lip_problem(CaptureMode::ZeroStep),
                                  constant_phi(uniform_partition(10), std::sqrt(kGravity / 0.8)));
  const auto samples = integrate_com({Vector3(0., 0., 0.8), Vector3::Zero()}, tr, 2.);
  for (const auto& s : samples) {
    EXPECT_LE((s.x.c - Vector3(0., 0., 0.8)).norm(), 1e-12);
    EXPECT_LE(s.x.cdot.norm(), 1e-12);
  }
  EXPECT_NEAR(samples.back().t, 2., 1e-12);
}

TEST(Integration, LipAnalytic) {
  // LIP-consistent push: constant stiffness, CoP decaying as exp(-w t) with alpha = 0.5.
  const ContactArea foot = ContactArea::flat(Vector3::Zero(), 0.11, 0.05);
  const PendulumState x{Vector3(0.01, -0.005, 0.8), Vector3(0.1, 0.03, 0.)};
  const auto pb = assemble_zero_step(x, StaticEquilibrium::above(foot, 0.8), 0.5, uniform_partition(10),
                                     StiffnessBounds::defaults());
  const auto tr = solved(pb);
  const double w = std::sqrt(kGravity / 0.8);
  ASSERT_LE((tr.lambda.array() - w * w).abs().maxCoeff(), 1e-6 * w * w);
  const auto samples = integrate_com(x, tr, 2.);
  for (const auto& s : samples) {
    // c'' = w^2 (c - r_f - d e^{-wt}): particular solution (w/2) d t e^{-wt} plus the bounded homogeneous part.
    const Eigen::Vector2d d = (tr.r_i - tr.r_f).head<2>();
    const Eigen::Vector2d c0 = (x.c - tr.r_f).head<2>();
    const Eigen::Vector2d expected = tr.r_f.head<2>() + (c0 + 0.5 * w * d * s.t) * std::exp(-w * s.t);
    EXPECT_LE((s.x.c.head<2>() - expected).cwiseAbs().maxCoeff(), 1e-6) << "t = " << s.t;
  }
}

TEST(Integration, BoundednessResidualOnSolvedTrajectories) {
  for (double vx : {0.1, 0.25, 0.3}) {
    const auto pb = pushed(0.3, Vector3(vx, 0.05, 0.02));
    const auto out = solve(pb.spec);
    ASSERT_TRUE(out.converged());
    const auto tr = make_trajectory(pb, out.phi.phi);
    const auto rep = boundedness_residual(to_time_input(tr), pb.context.state);
    EXPECT_LE(rep.residual.norm(), 1e-6);
    EXPECT_NEAR(rep.omega_i, tr.omega_i(), 1e-6);
    EXPECT_NEAR(bounded_riccati_initial(to_time_input(tr).lambda, pb.spec.bounds), tr.omega_i(), 1e-6);
  }
}

TEST(Integration, ConvergesToEquilibrium) {
  const auto pb = pushed(0.3, Vector3(0.2, 0.05, 0.));
  const auto tr = solved(pb);
  const auto samples = integrate_com(pb.context.state, tr, settling_horizon(tr) + 3.);
  const auto& last = samples.back();
  EXPECT_LE((last.x.c - pb.context.target.c_f).norm(), 5e-3);
  EXPECT_LE(last.x.cdot.norm(), 1e-2);
}

TEST(Bookkeeping, HeightPropagatesAlongTrajectory) {
  // At knot j the remaining integral of ds / omega, rescaled to the sub-interval [0, s_j], equals
  // (omega h + hdot) / g evaluated on the integrated state.
  const auto pb = pushed(0.3, Vector3(0.25, 0.05, 0.05));
  const auto tr = solved(pb);
  const auto in = to_time_input(tr);
  const ContactArea& foot = pb.context.initial_contact;
  for (int j = tr.n() - 1; j >= 2; --j) {
    const double tj = tr.switch_times(j);
    const auto samples = integrate_input(in, pb.context.state, tj, 1e-4);
    const PendulumState& x = samples.back().second;
    double sum = 0.;
    for (int k = 0; k < j; ++k)
      sum += tr.partition.delta(k) / (std::sqrt(tr.phi_at(k + 1)) + std::sqrt(tr.phi_at(k)));
    const double sj = tr.partition.s(j);
    const double wj = std::sqrt(tr.phi_at(j)) / sj;
    const double lhs = sum / sj;
    const double rhs = (wj * height_above(foot, x.c) + height_rate(foot, x.cdot)) / kGravity;
    EXPECT_NEAR(lhs, rhs, 1e-7) << "knot " << j;
  }
}
