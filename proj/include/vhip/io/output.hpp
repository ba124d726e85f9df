#pragma once
// CSV trajectories and JSON summaries.

#include "vhip/stepping.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace vhip::io {

inline constexpr const char* kCsvHeader = "t,cx,cy,cz,cdx,cdy,cdz,rx,ry,rz,lambda,omega,phase";

struct CsvRow {
  double t;
  PendulumState x;
  Vector3 cop;
  double lambda;
  double omega;
  std::string phase;
};

inline void write_csv(std::ostream& os, const std::vector<CsvRow>& rows) {
  const auto old = os.precision(std::numeric_limits<double>::max_digits10);
  os << kCsvHeader << '\n';
  for (const auto& r : rows) {
    os << r.t;
    for (double v : {r.x.c.x(), r.x.c.y(), r.x.c.z(), r.x.cdot.x(), r.x.cdot.y(), r.x.cdot.z(), r.cop.x(), r.cop.y(),
                     r.cop.z(), r.lambda, r.omega})
      os << ',' << v;
    os << ',' << r.phase << '\n';
  }
  os.precision(old);
}

/// Samples of a single capture trajectory; one-step rows are tagged by the contact in use.
inline std::vector<CsvRow> trajectory_rows(const PendulumState& x0, const CaptureTrajectory& tr, double horizon,
                                           double step = 1e-3) {
  std::vector<CsvRow> rows;
  for (const auto& s : integrate_com(x0, tr, horizon, step)) {
    std::string phase = "zero_step";
    if (tr.mode == CaptureMode::OneStep) phase = s.t < tr.t_c ? "initial_contact" : "target_contact";
    rows.push_back({s.t, s.x, s.cop, s.lambda, s.omega, std::move(phase)});
  }
  return rows;
}

inline std::vector<CsvRow> walker_rows(const WalkerLog& log) {
  std::vector<CsvRow> rows;
  rows.reserve(log.records.size());
  for (const auto& r : log.records)
    rows.push_back({r.t, r.x, r.cop, r.lambda, std::sqrt(r.lambda), to_string(r.phase)});
  return rows;
}

/// JSON number, or null when not finite (JSON has no infinity).
inline nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

inline nlohmann::json to_json(const Vector3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

inline nlohmann::json to_json(const Eigen::VectorXd& v) {
  auto a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(finite_or_null(v(i)));
  return a;
}

inline nlohmann::json capture_summary(const CaptureProblem& pb, const SolverOutcome& out, const CaptureTrajectory* tr) {
  nlohmann::json j;
  j["status"] = to_string(out.status);
  j["mode"] = pb.context.mode == CaptureMode::ZeroStep ? "zero_step" : "one_step";
  j["alpha"] = pb.context.alpha;
  j["iterations"] = out.iterations;
  j["phi"] = to_json(out.phi.phi);
  if (out.phi.phi.size() == pb.spec.n() && (out.phi.phi.array() > 0.).all())
    j["b_residual"] = b_value(out.phi.phi, pb.spec);
  else
    j["b_residual"] = nullptr;
  if (tr) {
    j["omega_i"] = tr->omega_i();
    j["r_i"] = to_json(tr->r_i);
    j["r_f"] = to_json(tr->r_f);
    j["lambda"] = to_json(tr->lambda);
    j["t_j"] = to_json(tr->switch_times);
    if (tr->mode == CaptureMode::OneStep) j["t_c"] = tr->t_c;
    j["cost"] = out.cost;
  }
  return j;
}

/// One entry per single-support phase of a walk.
inline nlohmann::json walk_summary(const WalkerLog& log) {
  nlohmann::json j;
  j["status"] = to_string(log.status);
  j["steps_completed"] = log.steps_completed;
  j["message"] = log.message;
  j["final_c"] = to_json(log.final_state.c);
  j["final_cdot"] = to_json(log.final_state.cdot);
  j["final_target"] = to_json(log.final_target);
  j["position_error"] = (log.final_state.c - log.final_target).norm();
  int misses = 0, infeasible_cop = 0;
  for (const auto& r : log.records) {
    misses += r.miss ? 1 : 0;
    infeasible_cop += r.cop_feasible ? 0 : 1;
  }
  j["cycles"] = log.records.size();
  j["misses"] = misses;
  j["infeasible_cop_cycles"] = infeasible_cop;
  auto steps = nlohmann::json::array();
  for (std::size_t i = 0; i < log.records.size();) {
    const auto& first = log.records[i];
    std::size_t k = i;
    double lmin = first.lambda, lmax = first.lambda;
    while (k < log.records.size() && log.records[k].phase == first.phase && log.records[k].support == first.support) {
      lmin = std::min(lmin, log.records[k].lambda);
      lmax = std::max(lmax, log.records[k].lambda);
      ++k;
    }
    if (first.phase == WalkPhase::SingleSupport) {
      nlohmann::json s;
      s["from"] = first.support;
      s["to"] = first.target;
      s["lift_off"] = first.t;
      s["touchdown"] = k < log.records.size() ? nlohmann::json(log.records[k].t) : nlohmann::json();
      s["alpha"] = first.alpha;
      s["t_c"] = finite_or_null(first.t_c);
      s["lambda_min"] = lmin;
      s["lambda_max"] = lmax;
      steps.push_back(std::move(s));
    }
    i = k;
  }
  j["steps"] = std::move(steps);
  return j;
}

}  // namespace vhip::io
