// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <utility>
#include <vector>

#include "sphcov/covariance.hpp"
#include "sphcov/error.hpp"
#include "sphcov/linalg.hpp"
#include "sphcov/random.hpp"
#include "sphcov/validation.hpp"

namespace sphcov {

/// Mean-zero Gaussian draws with covariance `cov`, one per row. Draw d uses
/// its own stream Rng(derive_seed(seed, d)), so draws are independent of how
/// many are requested and may be generated in any order.
inline Eigen::MatrixXd sample_gaussian(const Eigen::MatrixXd& cov, int num_draws, std::uint64_t rng_seed) {
  detail::require(num_draws >= 1, ErrorKind::invalid_argument, "need at least one draw");
  const Eigen::MatrixXd root = psd_square_root(cov);
  const Eigen::Index n = cov.rows();
  Eigen::MatrixXd draws(num_draws, n);
  Eigen::VectorXd z(n);
  for (int d = 0; d < num_draws; ++d) {
    Rng rng(derive_seed(rng_seed, static_cast<std::uint64_t>(d)));
    for (Eigen::Index i = 0; i < n; ++i) {
      z[i] = rng.normal();
    }
    draws.row(d) = (root * z).transpose();
  }
  return draws;
}

/// Gaussian random field draws at the given points (num_draws x n).
inline Eigen::MatrixXd sample_field(const SpaceTimeModel& model, std::vector<SpaceTimePoint> points,
                                    int num_draws, std::uint64_t rng_seed) {
  const GramMatrix g = build_gram(model, std::move(points));
  return sample_gaussian(g.entries, num_draws, rng_seed);
}

/// Unbiased sample covariance of the rows of `ensemble`.
inline Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& ensemble) {
  detail::require(ensemble.rows() >= 2, ErrorKind::invalid_argument, "sample covariance needs >= 2 members");
  const Eigen::RowVectorXd mean = ensemble.colwise().mean();
  const Eigen::MatrixXd centered = ensemble.rowwise() - mean;
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(ensemble.rows() - 1);
  Eigen::MatrixXd sym = cov.selfadjointView<Eigen::Lower>();
  return sym;
}

struct Ensemble {
  Eigen::MatrixXd members;     ///< ensemble_size x n
  Eigen::MatrixXd covariance;  ///< unbiased sample covariance, n x n
};

inline Ensemble enkf_ensemble(const SpaceTimeModel& model, std::vector<SpaceTimePoint> points, int ensemble_size,
                              std::uint64_t rng_seed) {
  detail::require(ensemble_size >= 2, ErrorKind::invalid_argument, "ensemble needs at least 2 members");
  Ensemble e;
  e.members = sample_field(model, std::move(points), ensemble_size, rng_seed);
  e.covariance = sample_covariance(e.members);
  return e;
}

}  // namespace sphcov
