#pragma once

#include "vhip/capture_problem.hpp"
#include "vhip/solver/active_set.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace vhip {

/// Column of J N_W: at most four nonzeros, plus the sum of j over the group.
struct ReducedColumn {
  int count{0};
  std::array<int, 4> row{};
  std::array<double, 4> value{};
  FreeGroup group{0, 0};

  void add(int r, double v) {
    for (int i = 0; i < count; ++i)
      if (row[static_cast<std::size_t>(i)] == r) {
        value[static_cast<std::size_t>(i)] += v;
        return;
      }
    row[static_cast<std::size_t>(count)] = r;
    value[static_cast<std::size_t>(count)] = v;
    ++count;
  }
};

/// J N_W in column form. Interior rows of a group cancel exactly and are never formed.
inline std::vector<ReducedColumn> reduced_cost_columns(const std::vector<FreeGroup>& groups,
                                                       const Partition& partition) {
  const int n = partition.n();
  const int rows = n - 1;
  std::vector<ReducedColumn> cols(groups.size());
  for (std::size_t c = 0; c < groups.size(); ++c) {
    const auto [a, b] = groups[c];
    ReducedColumn& col = cols[c];
    col.group = groups[c];
    const double da = 1. / partition.delta(a);
    if (a - 1 >= 0) col.add(a - 1, da);
    if (a < rows) col.add(a, -da);
    if (b + 1 < n) {
      const double db = 1. / partition.delta(b + 1);
      if (b < rows) col.add(b, -db);
      if (b + 1 < rows) col.add(b + 1, db);
    }
    // Keep rows sorted for predictable traversal.
    for (int i = 1; i < col.count; ++i)
      for (int k = i; k > 0 && col.row[static_cast<std::size_t>(k - 1)] > col.row[static_cast<std::size_t>(k)]; --k) {
        std::swap(col.row[static_cast<std::size_t>(k - 1)], col.row[static_cast<std::size_t>(k)]);
        std::swap(col.value[static_cast<std::size_t>(k - 1)], col.value[static_cast<std::size_t>(k)]);
      }
  }
  return cols;
}

/// Group sums N_W^T v.
inline Eigen::VectorXd project_onto_groups(const std::vector<FreeGroup>& groups,
                                           const Eigen::VectorXd& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(groups.size()));
  for (std::size_t c = 0; c < groups.size(); ++c)
    out(static_cast<Eigen::Index>(c)) =
        v.segment(groups[c].first, groups[c].last - groups[c].first + 1).sum();
  return out;
}

/// N_W z.
inline Eigen::VectorXd expand_from_groups(const std::vector<FreeGroup>& groups, int n,
                                          const Eigen::VectorXd& z) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (std::size_t c = 0; c < groups.size(); ++c)
    out.segment(groups[c].first, groups[c].last - groups[c].first + 1)
        .setConstant(z(static_cast<Eigen::Index>(c)));
  return out;
}

struct ReducedCost {
  Eigen::MatrixXd T;  // n x m
  Eigen::VectorXd u;  // n
};

/// T = [mu j^T; J] N_W and u = [mu (j^T p + b); J (phi + p)].
inline ReducedCost build_reduced_cost(const ActiveSetDescriptor& w, const Partition& partition,
                                      const Eigen::VectorXd& jvec, double mu, double b,
                                      const Eigen::VectorXd& phi, const Eigen::VectorXd& p) {
  const int n = partition.n();
  const auto groups = free_groups(w);
  const auto cols = reduced_cost_columns(groups, partition);
  const auto m = static_cast<Eigen::Index>(cols.size());
  ReducedCost rc;
  rc.T = Eigen::MatrixXd::Zero(n, m);
  rc.T.row(0) = mu * project_onto_groups(groups, jvec).transpose();
  for (Eigen::Index c = 0; c < m; ++c) {
    const auto& col = cols[static_cast<std::size_t>(c)];
    for (int i = 0; i < col.count; ++i)
      rc.T(1 + col.row[static_cast<std::size_t>(i)], c) = col.value[static_cast<std::size_t>(i)];
  }
  rc.u.resize(n);
  rc.u(0) = mu * (jvec.dot(p) + b);
  rc.u.tail(n - 1) = apply_cost(partition, phi + p);
  return rc;
}

struct Givens {
  int i;  // kept row
  int k;  // eliminated row
  double c;
  double s;

  template <class Vec>
  void apply(Vec& v) const {
    const double a = v(i), bb = v(k);
    v(i) = c * a + s * bb;
    v(k) = -s * a + c * bb;
  }
};

inline Givens make_givens(int i, int k, double a, double b) {
  const double r = std::hypot(a, b);
  if (r == 0.) return {i, k, 1., 0.};
  return {i, k, a / r, b / r};
}

/// QR factors of J_W = J N_W with an implicit orthogonal factor.
struct StructuredQR {
  int rows{0};                  // n - 1
  int m{0};                     // free columns
  Eigen::MatrixXd R;            // r x m upper triangular, r <= m
  std::vector<int> pivot;       // original row index holding R row k, -1 for an empty pivot
  std::vector<Givens> rotations;
  double frobenius{0.};         // ||J_W||_F

  /// First r entries of Q^T y, one per R row.
  [[nodiscard]] Eigen::VectorXd apply_qt(Eigen::VectorXd y) const {
    for (const Givens& g : rotations) g.apply(y);
    Eigen::VectorXd out(R.rows());
    for (Eigen::Index k = 0; k < R.rows(); ++k)
      out(k) = pivot[static_cast<std::size_t>(k)] < 0 ? 0. : y(pivot[static_cast<std::size_t>(k)]);
    return out;
  }
};

/// Sparse Givens QR with row selection. Each column is reduced using only the rows whose
/// leading nonzero sits in that column; all-zero rows sink below R.
inline StructuredQR structured_qr(const std::vector<ReducedColumn>& cols, int rows) {
  const int m = static_cast<int>(cols.size());
  StructuredQR out;
  out.rows = rows;
  out.m = m;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, std::max(m, 1));
  std::vector<int> first(static_cast<std::size_t>(rows), -1);
  std::vector<int> last(static_cast<std::size_t>(rows), -1);
  double fro2 = 0.;
  for (int c = 0; c < m; ++c) {
    const auto& col = cols[static_cast<std::size_t>(c)];
    for (int i = 0; i < col.count; ++i) {
      const int r = col.row[static_cast<std::size_t>(i)];
      const double v = col.value[static_cast<std::size_t>(i)];
      A(r, c) = v;
      fro2 += v * v;
      if (v != 0.) {
        auto& f = first[static_cast<std::size_t>(r)];
        if (f < 0) f = c;
        last[static_cast<std::size_t>(r)] = c;
      }
    }
  }
  out.frobenius = std::sqrt(fro2);
  std::vector<std::vector<int>> bucket(static_cast<std::size_t>(std::max(m, 1)));
  for (int r = 0; r < rows; ++r)
    if (first[static_cast<std::size_t>(r)] >= 0) bucket[static_cast<std::size_t>(first[static_cast<std::size_t>(r)])].push_back(r);

  const int rmax = std::min(m, rows);
  out.R = Eigen::MatrixXd::Zero(rmax, m);
  out.pivot.assign(static_cast<std::size_t>(rmax), -1);
  for (int k = 0; k < m; ++k) {
    auto& cand = bucket[static_cast<std::size_t>(k)];
    if (cand.empty()) {
      if (k < rmax) continue;  // structurally zero pivot, left as a zero row of R
      break;
    }
    std::sort(cand.begin(), cand.end());
    if (k >= rmax) break;
    const int piv = cand.front();
    for (std::size_t idx = 1; idx < cand.size(); ++idx) {
      const int q = cand[idx];
      const Givens g = make_givens(piv, q, A(piv, k), A(q, k));
      const int hi = std::max(last[static_cast<std::size_t>(piv)], last[static_cast<std::size_t>(q)]);
      for (int c = k; c <= hi; ++c) {
        const double a = A(piv, c), bq = A(q, c);
        A(piv, c) = g.c * a + g.s * bq;
        A(q, c) = -g.s * a + g.c * bq;
      }
      A(q, k) = 0.;
      out.rotations.push_back(g);
      last[static_cast<std::size_t>(piv)] = hi;
      int f = -1;
      for (int c = k + 1; c <= hi; ++c)
        if (A(q, c) != 0.) {
          f = c;
          break;
        }
      first[static_cast<std::size_t>(q)] = f;
      if (f < 0) {
        last[static_cast<std::size_t>(q)] = -1;
      } else {
        last[static_cast<std::size_t>(q)] = hi;
        bucket[static_cast<std::size_t>(f)].push_back(q);
      }
    }
    out.pivot[static_cast<std::size_t>(k)] = piv;
    for (int c = k; c <= last[static_cast<std::size_t>(piv)]; ++c) out.R(k, c) = A(piv, c);
    cand.clear();
  }
  return out;
}

inline StructuredQR structured_qr(const ActiveSetDescriptor& w, const Partition& partition) {
  return structured_qr(reduced_cost_columns(free_groups(w), partition), partition.n() - 1);
}

struct HessenbergQR {
  Eigen::MatrixXd R;  // m x m
  Eigen::VectorXd qtb;  // first m entries of the rotated right-hand side
};

/// QR of [top; R_W] (upper Hessenberg) by adjacent-row Givens eliminations.
inline HessenbergQR hessenberg_update_qr(const Eigen::RowVectorXd& top, const Eigen::MatrixXd& Rw,
                                         double rhs_top, const Eigen::VectorXd& rhs_rest) {
  const Eigen::Index m = top.size();
  const Eigen::Index rows = Rw.rows() + 1;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(std::max(rows, m), m);
  M.row(0) = top;
  M.block(1, 0, Rw.rows(), m) = Rw;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(M.rows());
  rhs(0) = rhs_top;
  rhs.segment(1, rhs_rest.size()) = rhs_rest;
  const Eigen::Index steps = std::min(m, rows - 1);
  for (Eigen::Index i = 0; i < steps; ++i) {
    const Givens g = make_givens(static_cast<int>(i), static_cast<int>(i + 1), M(i, i), M(i + 1, i));
    for (Eigen::Index c = i; c < m; ++c) {
      const double a = M(i, c), b = M(i + 1, c);
      M(i, c) = g.c * a + g.s * b;
      M(i + 1, c) = -g.s * a + g.c * b;
    }
    M(i + 1, i) = 0.;
    g.apply(rhs);
  }
  return {M.topRows(m), rhs.head(m)};
}

/// Lagrange multipliers -C_W^{+T} grad from the closed-form block pseudoinverses.
inline Eigen::VectorXd structured_multipliers(const ActiveSetDescriptor& w,
                                              const Eigen::VectorXd& grad) {
  if (w.all_active()) throw std::invalid_argument("all constraints active: multipliers undefined");
  const int n = w.n;
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(n + 1);
  int k = 0;
  while (k <= n) {
    if (!w.active(k)) {
      ++k;
      continue;
    }
    const int cs = k;
    while (k <= n && w.active(k)) ++k;
    const int ce = k - 1;
    const int a = ce - cs + 1;
    if (cs == 0) {
      // C_0^{-1} is lower triangular ones on variables 0..a-1.
      double acc = 0.;
      for (int c = ce; c >= 0; --c) {
        acc += grad(c);
        lam(c) = -acc;
      }
    } else if (ce == n) {
      // C_p^{-1}: rows (-1 ... -1 1), variables cs-1 .. n-1.
      const int v0 = cs - 1;
      double acc = 0.;
      for (int r = 0; r + 1 < a; ++r) {
        acc += grad(v0 + r);
        lam(cs + r) = acc;
      }
      acc += grad(n - 1);
      lam(n) = -acc;
    } else {
      // Interior run: a constraints tying a+1 variables cs-1 .. ce.
      const int v0 = cs - 1;
      const double total = grad.segment(v0, a + 1).sum();
      double prefix = 0.;
      for (int j = 0; j < a; ++j) {
        prefix += grad(v0 + j);
        lam(cs + j) = -((j + 1.) * (total - prefix) - (a - j) * prefix) / (a + 1.);
      }
    }
  }
  return lam;
}

}  // namespace vhip
