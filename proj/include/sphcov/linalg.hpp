// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "sphcov/error.hpp"

namespace sphcov {

/// Relative diagonal jitter levels tried, in order, before a covariance
/// factorization is declared failed. The absolute jitter is level * trace / n.
inline constexpr std::array<double, 4> kJitterSchedule{0.0, 1e-12, 1e-10, 1e-8};

/// Smallest accepted reciprocal condition estimate of a Cholesky factor.
inline constexpr double kMinReciprocalCondition = 1e-14;

namespace detail {

inline double mean_diagonal(const Eigen::MatrixXd& a) {
  return a.rows() == 0 ? 0.0 : a.trace() / static_cast<double>(a.rows());
}

inline double spectral_condition(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  return lo <= 0.0 ? std::numeric_limits<double>::infinity() : hi / lo;
}

}  // namespace detail

/// Cholesky factor of a covariance matrix plus the absolute jitter added.
struct SpdFactor {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;

  [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return llt.solve(b); }
  [[nodiscard]] Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const { return llt.solve(b); }
};

/// LL^T of a + jitter * I, escalating jitter through kJitterSchedule.
inline SpdFactor factorize_spd(const Eigen::MatrixXd& a) {
  detail::require(a.rows() == a.cols() && a.rows() > 0, ErrorKind::invalid_argument,
                  "factorize_spd needs a nonempty square matrix");
  const double scale = detail::mean_diagonal(a);
  for (double level : kJitterSchedule) {
    const double jitter = level * scale;
    Eigen::MatrixXd shifted = a;
    shifted.diagonal().array() += jitter;
    SpdFactor f{Eigen::LLT<Eigen::MatrixXd>(shifted), jitter};
    if (f.llt.info() == Eigen::Success && f.llt.rcond() >= kMinReciprocalCondition) {
      return f;
    }
  }
  std::ostringstream msg;
  msg << "covariance matrix is singular beyond regularization (condition number "
      << detail::spectral_condition(a) << ")";
  detail::fail(ErrorKind::numerical, msg.str());
}

/// A factor S with S S^T = a + jitter * I, from the symmetric
/// eigendecomposition under the same jitter schedule. Semidefinite matrices
/// factor without jitter. Eigenvalues at round-off level (below
/// n * eps * lambda_max) are set to zero, so draws S z stay in the numerical
/// range of a.
inline Eigen::MatrixXd psd_square_root(const Eigen::MatrixXd& a, double* jitter_used = nullptr) {
  detail::require(a.rows() == a.cols() && a.rows() > 0, ErrorKind::invalid_argument,
                  "psd_square_root needs a nonempty square matrix");
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  detail::require(es.info() == Eigen::Success, ErrorKind::numerical, "eigen-decomposition failed");
  const Eigen::VectorXd& lambda = es.eigenvalues();
  const double scale = detail::mean_diagonal(a);
  const double floor = -1e-10 * std::abs(scale);
  const double top = lambda.cwiseAbs().maxCoeff();
  const double cutoff = static_cast<double>(a.rows()) * std::numeric_limits<double>::epsilon() * top;
  for (double level : kJitterSchedule) {
    const double jitter = level * scale;
    if (!(lambda.minCoeff() + jitter >= floor)) {
      continue;
    }
    const Eigen::VectorXd root =
        (lambda.array() + jitter).unaryExpr([&](double v) { return v <= cutoff ? 0.0 : std::sqrt(v); }).matrix();
    if (jitter_used != nullptr) {
      *jitter_used = jitter;
    }
    return es.eigenvectors() * root.asDiagonal();
  }
  std::ostringstream msg;
  msg << "covariance matrix could not be factorized (minimum eigenvalue " << lambda.minCoeff()
      << ", condition number " << detail::spectral_condition(a) << ")";
  detail::fail(ErrorKind::numerical, msg.str());
}

}  // namespace sphcov
