// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

#include "sphcov/covariance.hpp"
#include "sphcov/error.hpp"
#include "sphcov/linalg.hpp"
#include "sphcov/validation.hpp"

namespace sphcov {

/// Simple-kriging system: Gram matrix over the observation points, the
/// observed values and the known mean. The factorization is computed once.
class KrigingSystem {
public:
  KrigingSystem(const SpaceTimeModel& model, std::vector<SpaceTimePoint> points, Eigen::VectorXd values,
                double mean)
      : gram_(build_gram(model, std::move(points))), values_(std::move(values)), mean_(mean),
        factor_(factorize_spd(gram_.entries)) {
    detail::require(values_.size() == gram_.size(), ErrorKind::invalid_argument,
                    "kriging: one value per observation point required");
  }

  [[nodiscard]] const GramMatrix& gram() const noexcept { return gram_; }
  [[nodiscard]] const Eigen::VectorXd& values() const noexcept { return values_; }
  [[nodiscard]] double mean() const noexcept { return mean_; }
  [[nodiscard]] const SpdFactor& factor() const noexcept { return factor_; }
  [[nodiscard]] std::size_t size() const noexcept { return gram_.points.size(); }

private:
  GramMatrix gram_;
  Eigen::VectorXd values_;
  double mean_;
  SpdFactor factor_;
};

struct KrigingResult {
  double prediction = 0.0;
  double variance = 0.0;
  Eigen::VectorXd weights;  ///< one per observation; zero outside a neighborhood
  double jitter = 0.0;      ///< absolute diagonal jitter used by the solve
  std::size_t excluded = 0;
};

namespace detail {

inline double clamp_variance(double v, double prior) {
  if (v >= 0.0) {
    return v;
  }
  if (v >= -1e-10 * std::max(prior, 1.0)) {
    return 0.0;
  }
  std::ostringstream msg;
  msg << "kriging variance " << v << " is negative beyond round-off";
  fail(ErrorKind::numerical, msg.str());
}

inline KrigingResult krige_with(const SpdFactor& factor, const Eigen::VectorXd& residuals, double mean,
                                const Eigen::VectorXd& k, double prior) {
  KrigingResult r;
  r.weights = factor.solve(k);
  r.jitter = factor.jitter;
  r.prediction = mean + r.weights.dot(residuals);
  r.variance = clamp_variance(prior - r.weights.dot(k), prior);
  return r;
}

}  // namespace detail

/// Simple kriging at `target`: weights solve Gram w = k with
/// k_i = C(target, p_i).
inline KrigingResult krige(const KrigingSystem& system, const SpaceTimeModel& model, const SpaceTimePoint& target) {
  const auto n = static_cast<Eigen::Index>(system.size());
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k[i] = eval_gmp(model, target, system.gram().points[static_cast<std::size_t>(i)]);
  }
  const Eigen::VectorXd residuals = system.values().array() - system.mean();
  return detail::krige_with(system.factor(), residuals, system.mean(), k,
                            eval_gmp(model, target, target));
}

/// Kriging from the observations with every geodesic cosine >= x_min and
/// every |dt| <= t_max relative to the target.
inline KrigingResult krige_neighborhood(const KrigingSystem& system, const SpaceTimeModel& model,
                                        const SpaceTimePoint& target, double x_min, double t_max) {
  const auto& pts = system.gram().points;
  std::vector<Eigen::Index> keep;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Separation sep = separation(model, target, pts[i]);
    bool inside = true;
    for (double x : sep.x) {
      inside = inside && x >= x_min;
    }
    for (double t : sep.t) {
      inside = inside && std::abs(t) <= t_max;
    }
    if (inside) {
      keep.push_back(static_cast<Eigen::Index>(i));
    }
  }
  detail::require(!keep.empty(), ErrorKind::insufficient_data, "kriging neighborhood is empty");
  if (keep.size() == pts.size()) {
    return krige(system, model, target);
  }

  const auto m = static_cast<Eigen::Index>(keep.size());
  Eigen::MatrixXd sub(m, m);
  Eigen::VectorXd k(m);
  Eigen::VectorXd residuals(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) {
      sub(a, b) = system.gram().entries(keep[a], keep[b]);
    }
    k[a] = eval_gmp(model, target, pts[static_cast<std::size_t>(keep[a])]);
    residuals[a] = system.values()[keep[a]] - system.mean();
  }
  const SpdFactor factor = factorize_spd(sub);
  KrigingResult local =
      detail::krige_with(factor, residuals, system.mean(), k, eval_gmp(model, target, target));

  KrigingResult r = local;
  r.weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pts.size()));
  for (Eigen::Index a = 0; a < m; ++a) {
    r.weights[keep[a]] = local.weights[a];
  }
  r.excluded = pts.size() - keep.size();
  return r;
}

}  // namespace sphcov
