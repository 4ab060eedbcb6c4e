// SPDX-License-Identifier: Apache-2.0
#include <sphcov/simulation.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "test_support.hpp"

using namespace sphcov;

namespace {

Eigen::MatrixXd random_psd(Rng& rng, Eigen::Index n, Eigen::Index rank) {
  Eigen::MatrixXd f(n, rank);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < rank; ++j) {
      f(i, j) = rng.normal();
    }
  }
  return f * f.transpose();
}

std::vector<SpaceTimePoint> sphere_points(Rng& rng, int n) {
  std::vector<SpaceTimePoint> pts;
  for (int i = 0; i < n; ++i) {
    pts.push_back({{SpherePoint::random(2, rng)}, {}});
  }
  return pts;
}

}  // namespace

TEST(Simulation, SquareRootReproducesMatrix) {
  Rng rng(81);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = static_cast<Eigen::Index>(1 + rng.index(30));
    const auto rank = static_cast<Eigen::Index>(1 + rng.index(static_cast<std::uint64_t>(n)));
    const Eigen::MatrixXd a = random_psd(rng, n, rank);
    double jitter = -1.0;
    const Eigen::MatrixXd s = psd_square_root(a, &jitter);
    EXPECT_EQ(jitter, 0.0);
    EXPECT_LE((s * s.transpose() - a).cwiseAbs().maxCoeff(), 1e-12 * a.cwiseAbs().maxCoeff());
  }
}

TEST(Simulation, SquareRootJitterAndFailure) {
  Eigen::MatrixXd slightly = Eigen::MatrixXd::Identity(3, 3);
  slightly(2, 2) = -1e-9;
  double jitter = 0.0;
  const Eigen::MatrixXd s = psd_square_root(slightly, &jitter);
  EXPECT_GT(jitter, 0.0);
  EXPECT_LE((s * s.transpose() - slightly).cwiseAbs().maxCoeff(), 1e-8);
  Eigen::MatrixXd indefinite = Eigen::MatrixXd::Identity(2, 2);
  indefinite(1, 1) = -1.0;
  try {
    (void)psd_square_root(indefinite);
    ADD_FAILURE() << "indefinite matrix accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::numerical);
  }
}

TEST(Simulation, ConstantModelDrawsAreConstant) {
  Rng rng(82);
  const auto model = make_bs_model(SchoenbergSequence(1.7, {1.0}), GegenbauerBasis(2, 0));
  const Eigen::MatrixXd draws = sample_field(model, sphere_points(rng, 12), 50, 3);
  for (Eigen::Index d = 0; d < draws.rows(); ++d) {
    EXPECT_LE(draws.row(d).maxCoeff() - draws.row(d).minCoeff(), 1e-8);
  }
}

TEST(Simulation, MomentsMatchGram) {
  Rng rng(83);
  TemporalAssignment temporal;
  temporal.shared = TemporalFactor::cauchy(1.0);
  const auto model = make_bp_model(test_support::random_sequence(rng, 4, 2.0), GegenbauerBasis(2, 4), temporal);
  const auto pts = test_support::random_points(rng, model, 5);
  const Eigen::MatrixXd g = build_gram(model, pts).entries;
  const int draws = 10000;
  const Eigen::MatrixXd x = sample_field(model, pts, draws, 99);
  const Eigen::MatrixXd s = sample_covariance(x);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  for (Eigen::Index i = 0; i < 5; ++i) {
    EXPECT_LE(std::abs(mean[i]), 5.0 * std::sqrt(g(i, i) / draws));
    for (Eigen::Index j = 0; j < 5; ++j) {
      const double se = std::sqrt((g(i, i) * g(j, j) + g(i, j) * g(i, j)) / draws);
      EXPECT_LE(std::abs(s(i, j) - g(i, j)), 5.0 * se) << i << "," << j;
    }
  }
}

TEST(Simulation, Determinism) {
  Rng rng(84);
  const auto model = test_support::random_model(rng);
  const auto pts = test_support::random_points(rng, model, 8);
  const Eigen::MatrixXd a = sample_field(model, pts, 20, 7);
  const Eigen::MatrixXd b = sample_field(model, pts, 20, 7);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, sample_field(model, pts, 20, 8));
  // Draw d depends only on (seed, d).
  EXPECT_EQ(sample_field(model, pts, 5, 7), a.topRows(5));
  EXPECT_THROW(sample_field(model, pts, 0, 7), Error);
}

TEST(Simulation, RelabelingPermutesCovariance) {
  Rng rng(85);
  const auto model = make_bs_model(test_support::random_sequence(rng, 3, 1.0), GegenbauerBasis(2, 3));
  const auto pts = sphere_points(rng, 4);
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  std::vector<SpaceTimePoint> permuted;
  for (auto i : perm) {
    permuted.push_back(pts[i]);
  }
  const Eigen::MatrixXd g = build_gram(model, pts).entries;
  const Eigen::MatrixXd gp = build_gram(model, permuted).entries;
  for (Eigen::Index i = 0; i < 4; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) {
      EXPECT_EQ(gp(i, j), g(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]),
                            static_cast<Eigen::Index>(perm[static_cast<std::size_t>(j)])));
    }
  }
  const int draws = 10000;
  const Eigen::MatrixXd s = sample_covariance(sample_field(model, permuted, draws, 5));
  for (Eigen::Index i = 0; i < 4; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) {
      const double se = std::sqrt((gp(i, i) * gp(j, j) + gp(i, j) * gp(i, j)) / draws);
      EXPECT_LE(std::abs(s(i, j) - gp(i, j)), 5.0 * se);
    }
  }
}

TEST(Simulation, EnsembleExamples) {
  Rng rng(86);
  const auto tiny = make_bs_model(SchoenbergSequence(1e-30, {0.5, 0.5}), GegenbauerBasis(2, 1));
  const auto pts = sphere_points(rng, 6);
  const auto e = enkf_ensemble(tiny, pts, 30, 1);
  EXPECT_EQ(e.members.rows(), 30);
  EXPECT_EQ(e.members.cols(), 6);
  EXPECT_LE(e.covariance.cwiseAbs().maxCoeff(), 1e-29);

  const auto model = make_bs_model(test_support::random_sequence(rng, 5, 2.0), GegenbauerBasis(2, 5));
  const auto f = enkf_ensemble(model, pts, 40, 2);
  EXPECT_LE((f.covariance - f.covariance.transpose()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_TRUE(psd_check(GramMatrix{f.covariance, {}}, 1e-10).psd);
  EXPECT_THROW(enkf_ensemble(model, pts, 1, 2), Error);
}

TEST(Simulation, EnsembleErrorShrinksWithSize) {
  Rng rng(87);
  const auto model = make_bs_model(test_support::random_sequence(rng, 5, 2.0), GegenbauerBasis(2, 5));
  const auto pts = sphere_points(rng, 8);
  const Eigen::MatrixXd g = build_gram(model, pts).entries;
  double small = 0.0;
  double large = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    small += (enkf_ensemble(model, pts, 10, seed).covariance - g).norm();
    large += (enkf_ensemble(model, pts, 1000, seed).covariance - g).norm();
  }
  EXPECT_LT(large, small);
}
