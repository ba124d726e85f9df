#pragma once
// Seeded zero-step problems drawn around typical walking states.

#include "vhip/capture_problem.hpp"

#include <random>
#include <vector>

namespace vhip {

struct RandomProblemOptions {
  int n{10};
  double alpha{0.5};
  double foot_x{0.11};
  double foot_y{0.05};
  double h_f{0.8};
};

/// CoM within 5x2 cm of the foot center, height 0.7-0.9 m, speed up to 0.4 m/s forward,
/// 0.1 m/s sideways and vertically. Both feasible and infeasible draws occur.
inline CaptureProblem random_zero_step(std::mt19937_64& rng, const RandomProblemOptions& opt = {}) {
  std::uniform_real_distribution<double> ux(-0.05, 0.05), uy(-0.02, 0.02), uz(0.7, 0.9);
  std::uniform_real_distribution<double> vx(-0.4, 0.4), vy(-0.1, 0.1), vz(-0.1, 0.1);
  PendulumState x;
  x.c = Vector3(ux(rng), uy(rng), uz(rng));
  x.cdot = Vector3(vx(rng), vy(rng), vz(rng));
  ContactArea foot = ContactArea::flat(Vector3::Zero(), opt.foot_x, opt.foot_y);
  StaticEquilibrium eq{Vector3(0., 0., opt.h_f), foot, opt.h_f};
  return assemble_zero_step(x, eq, opt.alpha, uniform_partition(opt.n), StiffnessBounds::defaults());
}

inline std::vector<CaptureProblem> random_zero_step_suite(std::uint64_t seed, int count,
                                                          const RandomProblemOptions& opt = {}) {
  std::mt19937_64 rng(seed);
  std::vector<CaptureProblem> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(random_zero_step(rng, opt));
  return out;
}

}  // namespace vhip
