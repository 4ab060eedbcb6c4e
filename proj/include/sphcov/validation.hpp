// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "sphcov/covariance.hpp"
#include "sphcov/error.hpp"
#include "sphcov/linalg.hpp"
#include "sphcov/random.hpp"

namespace sphcov {

/// A covariance matrix over a point set. `points` is empty for matrices not
/// built from a model.
struct GramMatrix {
  Eigen::MatrixXd entries;
  std::vector<SpaceTimePoint> points;

  [[nodiscard]] Eigen::Index size() const noexcept { return entries.rows(); }
};

inline GramMatrix build_gram(const SpaceTimeModel& model, std::vector<SpaceTimePoint> points) {
  detail::require(!points.empty(), ErrorKind::invalid_argument, "build_gram needs at least one point");
  const auto n = static_cast<Eigen::Index>(points.size());
  GramMatrix g{Eigen::MatrixXd(n, n), std::move(points)};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = eval_gmp(model, g.points[static_cast<std::size_t>(i)], g.points[static_cast<std::size_t>(j)]);
      g.entries(i, j) = v;
      g.entries(j, i) = v;
    }
  }
  return g;
}

/// Gram matrix of an isotropic function g(x), x the geodesic cosine, over
/// sphere points. Takes any callable, including non-covariances.
template <class Fn>
GramMatrix build_gram_isotropic(Fn&& g, std::span<const SpherePoint> points) {
  detail::require(!points.empty(), ErrorKind::invalid_argument, "build_gram needs at least one point");
  const auto n = static_cast<Eigen::Index>(points.size());
  GramMatrix out{Eigen::MatrixXd(n, n), {}};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = g(geodesic_cosine(points[static_cast<std::size_t>(i)], points[static_cast<std::size_t>(j)]));
      out.entries(i, j) = v;
      out.entries(j, i) = v;
    }
  }
  return out;
}

struct PsdVerdict {
  bool psd = false;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  double tol = 0.0;
  /// Unit eigenvector of the minimum eigenvalue; its quadratic form is
  /// negative when the verdict is NOT_PSD.
  Eigen::VectorXd witness;
};

namespace detail {

inline void check_symmetric(const Eigen::MatrixXd& a) {
  require(a.rows() == a.cols() && a.rows() > 0, ErrorKind::invalid_argument, "Gram matrix must be square");
  const double scale = std::max(a.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  require((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale, ErrorKind::invalid_argument,
          "Gram matrix is not symmetric");
}

}  // namespace detail

/// PSD iff the minimum eigenvalue is >= -tol * trace / n.
inline PsdVerdict psd_check(const GramMatrix& g, double tol) {
  detail::require(tol >= 0.0, ErrorKind::invalid_argument, "tolerance must be >= 0");
  detail::check_symmetric(g.entries);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.entries);
  detail::require(es.info() == Eigen::Success, ErrorKind::numerical, "eigen-decomposition failed");
  PsdVerdict v;
  v.tol = tol;
  v.min_eigenvalue = es.eigenvalues()[0];
  v.max_eigenvalue = es.eigenvalues()[es.eigenvalues().size() - 1];
  const double threshold = -tol * g.entries.trace() / static_cast<double>(g.size());
  v.psd = v.min_eigenvalue >= threshold;
  v.witness = es.eigenvectors().col(0);
  return v;
}

inline double quadratic_form(const GramMatrix& g, const Eigen::VectorXd& c) {
  detail::require(c.size() == g.size(), ErrorKind::invalid_argument, "coefficient vector size mismatch");
  return c.dot(g.entries * c);
}

/// Brute-force minimum of sum_ij c_i c_j g_ij over random unit vectors c.
/// Independent of any eigen-decomposition.
inline double quadratic_form_oracle(const GramMatrix& g, int trials, std::uint64_t rng_seed) {
  detail::require(trials >= 1, ErrorKind::invalid_argument, "need at least one trial");
  Rng rng(rng_seed);
  const Eigen::Index n = g.size();
  Eigen::VectorXd c(n);
  double best = std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) {
    double norm2 = 0.0;
    do {
      for (Eigen::Index i = 0; i < n; ++i) {
        c[i] = rng.normal();
      }
      norm2 = c.squaredNorm();
    } while (norm2 == 0.0);
    double q = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        q += c[i] * c[j] * g.entries(i, j);
      }
    }
    best = std::min(best, q / norm2);
  }
  return best;
}

/// lambda_max / lambda_min, or +inf when lambda_min <= 0.
inline double condition_number(const GramMatrix& g) {
  return detail::spectral_condition(g.entries);
}

struct StrictnessReport {
  int positive_even_count = 0;
  int positive_odd_count = 0;
};

/// Counts strictly positive coefficients by parity of n. Informational only.
inline StrictnessReport strictness_diagnostic(const SchoenbergSequence& seq) {
  StrictnessReport r;
  const auto& a = seq.coefficients();
  for (std::size_t n = 0; n < a.size(); ++n) {
    if (a[n] > 0.0) {
      (n % 2 == 0 ? r.positive_even_count : r.positive_odd_count) += 1;
    }
  }
  return r;
}

}  // namespace sphcov
