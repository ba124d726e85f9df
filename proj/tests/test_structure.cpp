#include "oracles.hpp"
#include "vhip/solver/qr_cache.hpp"
#include "vhip/solver/structured.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace vhip;

namespace {

ActiveSetDescriptor run_length_example() {
  // Working set {1, 2, 6, 9, 10, 11, 13, 14} in one-based constraint numbering, n = 15.
  ActiveSetDescriptor w(15);
  for (int k : {1, 2, 6, 9, 10, 11, 13, 14}) w.side[static_cast<std::size_t>(k - 1)] = Side::Lower;
  return w;
}

Eigen::MatrixXd dense_t(const Partition& p, const ActiveSetDescriptor& w, const Eigen::VectorXd& j,
                        double mu) {
  const int n = p.n();
  Eigen::MatrixXd A(n, n);
  A.row(0) = mu * j.transpose();
  A.bottomRows(n - 1) = dense_cost_matrix(p);
  return A * oracle::nullspace_from_runs(n, w.runs());
}

}  // namespace

TEST(ActiveSet, RunLengthOfWorkedExample) {
  const auto w = run_length_example();
  EXPECT_EQ(w.runs(), (std::vector<int>{2, 3, 1, 2, 3, 1, 2, 2, 0}));
  EXPECT_EQ(w.count(), 8);
}

TEST(ActiveSet, EmptyAndTrailingRuns) {
  EXPECT_EQ(ActiveSetDescriptor(4).runs(), (std::vector<int>{0, 5, 0}));
  EXPECT_EQ(ActiveSetDescriptor::from_mask(4, 0b10001).runs(), (std::vector<int>{1, 3, 1}));
}

TEST(ActiveSet, NullspaceBasisAnnihilatesActiveRows) {
  for (int n = 2; n <= 8; ++n) {
    const Eigen::MatrixXd C = dense_constraint_matrix(n);
    for (std::uint64_t mask = 0; mask + 1 < (std::uint64_t{1} << (n + 1)); ++mask) {
      const auto w = ActiveSetDescriptor::from_mask(n, mask);
      const Eigen::MatrixXd N = oracle::nullspace_from_runs(n, w.runs());
      ASSERT_EQ(N.cols(), n - w.count());
      ASSERT_LT(oracle::max_abs(oracle::active_rows(C, w) * N), 1e-15);
      const auto groups = free_groups(w);
      ASSERT_EQ(static_cast<Eigen::Index>(groups.size()), N.cols());
      Eigen::VectorXd z = Eigen::VectorXd::LinSpaced(N.cols(), 1., 2.);
      ASSERT_EQ(oracle::max_abs(expand_from_groups(groups, n, z) - N * z), 0.);
    }
  }
}

TEST(ActiveSet, AllActiveRejected) {
  const auto w = ActiveSetDescriptor::from_mask(3, 0b1111);
  EXPECT_THROW(free_groups(w), std::invalid_argument);
  EXPECT_THROW(structured_multipliers(w, Eigen::VectorXd::Ones(3)), std::invalid_argument);
}

TEST(ReducedCost, EmptyWorkingSetIsVerbatim) {
  const Partition p = uniform_partition(6);
  const Eigen::VectorXd j = Eigen::VectorXd::LinSpaced(6, -1., 0.5);
  const Eigen::VectorXd phi = Eigen::VectorXd::LinSpaced(6, 0.1, 12.);
  const auto rc = build_reduced_cost(ActiveSetDescriptor(6), p, j, 1e3, 0.2, phi, Eigen::VectorXd::Zero(6));
  Eigen::MatrixXd A(6, 6);
  A.row(0) = 1e3 * j.transpose();
  A.bottomRows(5) = dense_cost_matrix(p);
  EXPECT_LE((rc.T - A).cwiseAbs().maxCoeff(), 1e-14 * A.cwiseAbs().maxCoeff());
  EXPECT_NEAR(rc.u(0), 1e3 * 0.2, 1e-12);
  EXPECT_LE((rc.u.tail(5) - dense_cost_matrix(p) * phi).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ReducedCost, WorkedExampleMatchesDenseProduct) {
  const Partition p = uniform_partition(15);
  const auto w = run_length_example();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-1., 1.);
  Eigen::VectorXd j(15);
  for (int i = 0; i < 15; ++i) j(i) = U(rng);
  const auto rc = build_reduced_cost(w, p, j, 1e6, 0., Eigen::VectorXd::Ones(15), Eigen::VectorXd::Zero(15));
  const Eigen::MatrixXd T = dense_t(p, w, j, 1e6);
  ASSERT_EQ(rc.T.cols(), 7);
  EXPECT_LE((rc.T - T).cwiseAbs().maxCoeff(), 1e-14 * T.cwiseAbs().maxCoeff());
}

TEST(StructuredQR, EmptyWorkingSetMatchesDense) {
  const Partition p = uniform_partition(10);
  const auto qr = structured_qr(ActiveSetDescriptor(10), p);
  const Eigen::MatrixXd R = oracle::dense_r(dense_cost_matrix(p));
  ASSERT_EQ(qr.R.rows(), R.rows());
  EXPECT_LE((qr.R.cwiseAbs() - R.cwiseAbs()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(StructuredQR, WorkedExampleSparsity) {
  const Partition p = uniform_partition(15);
  const auto qr = structured_qr(run_length_example(), p);
  ASSERT_EQ(qr.R.rows(), 7);
  ASSERT_EQ(qr.R.cols(), 7);
  // Upper triangular with at most two superdiagonals.
  for (int i = 0; i < 7; ++i)
    for (int c = 0; c < 7; ++c)
      if (c < i || c > i + 2) {
        EXPECT_EQ(qr.R(i, c), 0.) << i << "," << c;
      }
  // Two coupled singleton groups (columns 0 and 1) followed by grouped columns.
  EXPECT_NE(qr.R(0, 2), 0.);
  EXPECT_EQ(qr.R(1, 3), 0.);
  EXPECT_NE(qr.R(2, 4), 0.);
  const Eigen::MatrixXd dense = oracle::dense_r(dense_cost_matrix(p) *
                                                oracle::nullspace_from_runs(15, run_length_example().runs()));
  EXPECT_LE((qr.R.cwiseAbs() - dense.cwiseAbs()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(StructuredQR, RotationsReproduceFactor) {
  // Q^T J_W = [R; 0] rowwise after the recorded rotations.
  const Partition p = uniform_partition(12);
  const auto w = ActiveSetDescriptor::from_mask(12, 0b0011000110001);
  const auto qr = structured_qr(w, p);
  const Eigen::MatrixXd Jw = dense_cost_matrix(p) * oracle::nullspace_from_runs(12, w.runs());
  for (Eigen::Index c = 0; c < Jw.cols(); ++c) {
    const Eigen::VectorXd col = qr.apply_qt(Jw.col(c));
    for (Eigen::Index r = 0; r < qr.R.rows(); ++r) EXPECT_NEAR(col(r), qr.R(r, c), 1e-12);
  }
  EXPECT_LE(static_cast<int>(qr.rotations.size()), 3 * 12);
}

TEST(Hessenberg, ZeroTopRowLeavesFactor) {
  const Partition p = uniform_partition(8);
  const auto qr = structured_qr(ActiveSetDescriptor::from_mask(8, 1), p);
  const auto h = hessenberg_update_qr(Eigen::RowVectorXd::Zero(qr.m), qr.R, 0.,
                                      Eigen::VectorXd::Zero(qr.R.rows()));
  EXPECT_LE((h.R.cwiseAbs() - qr.R.cwiseAbs()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Hessenberg, MatchesDenseStackedQR) {
  const Partition p = uniform_partition(9);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1., 1.);
  for (std::uint64_t mask : {0b0000000001ULL, 0b1000110001ULL, 0b0110000011ULL}) {
    const auto w = ActiveSetDescriptor::from_mask(9, mask);
    const auto qr = structured_qr(w, p);
    Eigen::RowVectorXd top(qr.m);
    for (int i = 0; i < qr.m; ++i) top(i) = 50. * U(rng);
    const auto h = hessenberg_update_qr(top, qr.R, 0., Eigen::VectorXd::Zero(qr.R.rows()));
    Eigen::MatrixXd S(qr.rows + 1, qr.m);
    S.row(0) = top;
    S.bottomRows(qr.rows) = dense_cost_matrix(p) * oracle::nullspace_from_runs(9, w.runs());
    const Eigen::MatrixXd R = oracle::dense_r(S);
    EXPECT_LE((h.R.cwiseAbs() - R.cwiseAbs()).cwiseAbs().maxCoeff(), 1e-12 * R.cwiseAbs().maxCoeff());
  }
}

TEST(Hessenberg, TopRowRestoresRank) {
  // With no active constraint J_W is wide and rank deficient; the gradient row completes it.
  const Partition p = uniform_partition(6);
  const auto qr = structured_qr(ActiveSetDescriptor(6), p);
  ASSERT_EQ(qr.R.rows(), 5);
  ASSERT_EQ(qr.m, 6);
  Eigen::RowVectorXd top = Eigen::RowVectorXd::Ones(6);
  const auto h = hessenberg_update_qr(top, qr.R, 0., Eigen::VectorXd::Zero(5));
  Eigen::MatrixXd S(6, 6);
  S.row(0) = top;
  S.bottomRows(5) = dense_cost_matrix(p);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
  EXPECT_EQ(lu.rank(), 6);
  EXPECT_GT(std::abs(h.R(5, 5)), 1e-6);
}

TEST(Multipliers, SingleEqualityRow) {
  const auto w = ActiveSetDescriptor::from_mask(5, 1);
  const Eigen::VectorXd g = Eigen::VectorXd::LinSpaced(5, 1., 3.);
  const Eigen::VectorXd lam = structured_multipliers(w, g);
  EXPECT_DOUBLE_EQ(lam(0), -g(0));
  EXPECT_EQ(lam.tail(5).cwiseAbs().maxCoeff(), 0.);
}

TEST(Multipliers, InteriorRunMatchesPseudoInverse) {
  const int n = 7;
  const auto w = ActiveSetDescriptor::from_mask(n, 0b00011100);
  const Eigen::VectorXd g = Eigen::VectorXd::LinSpaced(n, -2., 1.5);
  const Eigen::MatrixXd Cw = oracle::active_rows(dense_constraint_matrix(n), w);
  const Eigen::VectorXd dense = -oracle::pseudo_inverse(Cw).transpose() * g;
  const Eigen::VectorXd lam = structured_multipliers(w, g);
  int r = 0;
  for (int k = 0; k <= n; ++k)
    if (w.active(k)) {
      EXPECT_NEAR(lam(k), dense(r++), 1e-10);
    }
}

TEST(Exhaustive, StructuresAgreeWithDenseUpToEight) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-1., 1.);
  for (int n = 2; n <= 8; ++n) {
    const Partition p = uniform_partition(n);
    const Eigen::MatrixXd J = dense_cost_matrix(p);
    const Eigen::MatrixXd C = dense_constraint_matrix(n);
    Eigen::VectorXd j(n), g(n);
    for (int i = 0; i < n; ++i) {
      j(i) = U(rng);
      g(i) = U(rng);
    }
    for (std::uint64_t mask = 0; mask + 1 < (std::uint64_t{1} << (n + 1)); ++mask) {
      const auto w = ActiveSetDescriptor::from_mask(n, mask);
      const Eigen::MatrixXd N = oracle::nullspace_from_runs(n, w.runs());
      const auto rc = build_reduced_cost(w, p, j, 1e6, 0., Eigen::VectorXd::Ones(n), Eigen::VectorXd::Zero(n));
      const Eigen::MatrixXd T = dense_t(p, w, j, 1e6);
      // Group sums of j are reassociated, so compare against the unreduced entry scale.
      const double scale = std::max(1e6 * j.cwiseAbs().maxCoeff(), J.cwiseAbs().maxCoeff());
      ASSERT_LE(oracle::max_abs(rc.T - T), 1e-14 * n * scale)
          << "n=" << n << " mask=" << mask;
      if (N.cols() > 0) {
        const auto qr = structured_qr(w, p);
        const Eigen::MatrixXd R = oracle::dense_r(J * N);
        ASSERT_EQ(qr.R.rows(), R.rows());
        ASSERT_LE((qr.R.cwiseAbs() - R.cwiseAbs()).cwiseAbs().maxCoeff(), 1e-10)
            << "n=" << n << " mask=" << mask;
      }
      const Eigen::VectorXd lam = structured_multipliers(w, g);
      const Eigen::VectorXd dense = -oracle::pseudo_inverse(oracle::active_rows(C, w)).transpose() * g;
      int r = 0;
      for (int k = 0; k <= n; ++k) {
        if (w.active(k)) {
          ASSERT_NEAR(lam(k), dense(r++), 1e-10) << "n=" << n << " mask=" << mask << " k=" << k;
        } else {
          ASSERT_EQ(lam(k), 0.);
        }
      }
    }
  }
}

TEST(QrCache, SizeAndDeterminism) {
  const Partition p = uniform_partition(10);
  const QrCache cache(10, p);
  EXPECT_EQ(cache.size(), 2047U);
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::uint64_t> pick(0, 2046);
  for (int i = 0; i < 100; ++i) {
    const std::uint64_t mask = pick(rng);
    const auto fresh = cache.factor(mask);
    const auto& stored = cache.at(mask);
    ASSERT_EQ(fresh.qr.R.size(), stored.qr.R.size());
    for (Eigen::Index k = 0; k < fresh.qr.R.size(); ++k)
      ASSERT_EQ(fresh.qr.R.data()[k], stored.qr.R.data()[k]);
  }
}

TEST(QrCache, SizeGuard) {
  EXPECT_THROW(QrCache(21, uniform_partition(21)), std::invalid_argument);
}
