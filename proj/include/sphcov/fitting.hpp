// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "sphcov/covariance.hpp"
#include "sphcov/error.hpp"
#include "sphcov/harmonics.hpp"
#include "sphcov/sphere_geometry.hpp"

namespace sphcov {

struct EmpiricalBin {
  double x = 0.0;     ///< mean geodesic cosine of the pairs in the bin
  double corr = 0.0;  ///< covariance / global variance
  double cov = 0.0;   ///< mean of (z_i - m)(z_j - m) over the pairs
  std::size_t count = 0;
};

/// Bins record pairs with |dt| <= time_window by geodesic cosine into
/// num_bins equal-width bins on [-1, 1]. The mean m is the sample mean unless
/// known_mean is given. Empty bins are omitted.
inline std::vector<EmpiricalBin> empirical_isotropic_correlation(std::span<const ObservationRecord> records,
                                                                 int num_bins, double time_window,
                                                                 std::optional<double> known_mean = {}) {
  detail::require(records.size() >= 2, ErrorKind::insufficient_data, "need at least 2 records");
  detail::require(num_bins >= 1, ErrorKind::invalid_argument, "need at least one bin");
  detail::require(time_window >= 0.0, ErrorKind::invalid_argument, "time window must be >= 0");

  double mean = 0.0;
  if (known_mean) {
    mean = *known_mean;
  } else {
    for (const auto& r : records) {
      mean += r.value;
    }
    mean /= static_cast<double>(records.size());
  }
  double var = 0.0;
  for (const auto& r : records) {
    var += (r.value - mean) * (r.value - mean);
  }
  var /= static_cast<double>(records.size());

  std::vector<SpherePoint> points;
  points.reserve(records.size());
  for (const auto& r : records) {
    points.push_back(from_lat_lon(r.lat, r.lon));
  }

  const auto nb = static_cast<std::size_t>(num_bins);
  std::vector<double> sum_x(nb, 0.0);
  std::vector<double> sum_prod(nb, 0.0);
  std::vector<std::size_t> counts(nb, 0);
  std::size_t total = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (std::size_t j = i + 1; j < records.size(); ++j) {
      if (std::abs(records[i].t - records[j].t) > time_window) {
        continue;
      }
      const double x = geodesic_cosine(points[i], points[j]);
      auto b = static_cast<std::size_t>((x + 1.0) * 0.5 * static_cast<double>(nb));
      b = std::min(b, nb - 1);
      sum_x[b] += x;
      sum_prod[b] += (records[i].value - mean) * (records[j].value - mean);
      ++counts[b];
      ++total;
    }
  }
  detail::require(total >= 2, ErrorKind::insufficient_data, "fewer than 2 usable pairs");

  std::vector<EmpiricalBin> out;
  for (std::size_t b = 0; b < nb; ++b) {
    if (counts[b] == 0) {
      continue;
    }
    EmpiricalBin bin;
    bin.count = counts[b];
    bin.x = sum_x[b] / static_cast<double>(counts[b]);
    bin.cov = sum_prod[b] / static_cast<double>(counts[b]);
    // Constant data: every pair is perfectly correlated.
    bin.corr = var > 0.0 ? bin.cov / var : 1.0;
    out.push_back(bin);
  }
  return out;
}

namespace detail {

/// Lawson-Hanson active-set solution of min ||A x - b|| subject to x >= 0.
inline Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  const Eigen::Index n = a.cols();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  const double tol = 10.0 * std::numeric_limits<double>::epsilon() * a.cwiseAbs().maxCoeff() *
                     static_cast<double>(std::max(a.rows(), n));

  auto solve_passive = [&](Eigen::VectorXd& s) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (passive[static_cast<std::size_t>(j)]) {
        cols.push_back(j);
      }
    }
    Eigen::MatrixXd ap(a.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) {
      ap.col(static_cast<Eigen::Index>(k)) = a.col(cols[k]);
    }
    const Eigen::VectorXd sp = ap.colPivHouseholderQr().solve(b);
    s.setZero(n);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      s[cols[k]] = sp[static_cast<Eigen::Index>(k)];
    }
  };

  Eigen::VectorXd s(n);
  const int max_outer = 3 * static_cast<int>(n) + 10;
  for (int outer = 0; outer < max_outer; ++outer) {
    const Eigen::VectorXd w = a.transpose() * (b - a * x);
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && w[j] > best_w) {
        best_w = w[j];
        best = j;
      }
    }
    if (best < 0) {
      break;
    }
    passive[static_cast<std::size_t>(best)] = true;
    while (true) {
      solve_passive(s);
      bool feasible = true;
      double alpha = 1.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && s[j] <= 0.0) {
          feasible = false;
          alpha = std::min(alpha, x[j] / (x[j] - s[j]));
        }
      }
      if (feasible) {
        x = s;
        break;
      }
      x += alpha * (s - x);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && x[j] <= tol) {
          passive[static_cast<std::size_t>(j)] = false;
          x[j] = 0.0;
        }
      }
    }
  }
  return x;
}

}  // namespace detail

struct CurvePoint {
  double x = 0.0;
  double y = 0.0;
  double weight = 1.0;
};

struct NonnegativeFit {
  SchoenbergSequence sequence;
  double residual = 0.0;  ///< sum weight * (y - fitted)^2
};

/// Weighted least squares fit of c * sum_{n <= max_degree} a_n P_n^lambda(x)
/// with a_n >= 0, sum a_n = 1, c > 0. Solved as NNLS in beta_n = c a_n, so
/// the normalization is exact rather than a penalty.
inline NonnegativeFit fit_nonnegative(std::span<const CurvePoint> curve, const GegenbauerBasis& basis,
                                      int max_degree) {
  detail::require(max_degree >= 0, ErrorKind::invalid_argument, "max degree must be >= 0");
  detail::require(curve.size() >= static_cast<std::size_t>(max_degree) + 1, ErrorKind::insufficient_data,
                  "fit_nonnegative needs at least max_degree + 1 points");
  const auto m = static_cast<Eigen::Index>(curve.size());
  const Eigen::Index p = max_degree + 1;
  Eigen::MatrixXd a(m, p);
  Eigen::VectorXd b(m);
  std::vector<double> poly;
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& pt = curve[static_cast<std::size_t>(i)];
    detail::check_argument(pt.x);
    detail::require(pt.weight > 0.0 && std::isfinite(pt.weight) && std::isfinite(pt.y),
                    ErrorKind::invalid_argument, "curve weights must be positive and values finite");
    const double sw = std::sqrt(pt.weight);
    detail::gegenbauer_all(basis.lambda(), max_degree, pt.x, poly);
    for (Eigen::Index n = 0; n < p; ++n) {
      a(i, n) = sw * poly[static_cast<std::size_t>(n)];
    }
    b[i] = sw * pt.y;
  }
  const Eigen::VectorXd beta = detail::nnls(a, b);
  const double scale = beta.sum();
  detail::require(scale > 0.0, ErrorKind::insufficient_data, "data inconsistent with positive scale");
  std::vector<double> coeffs(static_cast<std::size_t>(p));
  double sum = 0.0;
  for (Eigen::Index n = 0; n < p; ++n) {
    coeffs[static_cast<std::size_t>(n)] = beta[n] / scale;
    sum += coeffs[static_cast<std::size_t>(n)];
  }
  for (double& v : coeffs) {
    v /= sum;
  }
  return {SchoenbergSequence(scale, std::move(coeffs)), (a * beta - b).squaredNorm()};
}

/// Weighted L2 projection onto nonincreasing sequences by pool-adjacent-
/// violators. Preserves the weighted mean.
inline std::vector<double> pava_nonincreasing(std::span<const double> values, std::span<const double> weights) {
  detail::require(!values.empty() && values.size() == weights.size(), ErrorKind::invalid_argument,
                  "PAVA needs matching nonempty values and weights");
  struct Block {
    double mean;
    double weight;
    std::size_t length;
  };
  std::vector<Block> blocks;
  blocks.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    detail::require(weights[i] > 0.0, ErrorKind::invalid_argument, "PAVA weights must be positive");
    blocks.push_back({values[i], weights[i], 1});
    // Nonincreasing: a later block may not exceed the one before it.
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean < blocks.back().mean) {
      const Block top = blocks.back();
      blocks.pop_back();
      Block& prev = blocks.back();
      const double w = prev.weight + top.weight;
      prev.mean = (prev.mean * prev.weight + top.mean * top.weight) / w;
      prev.weight = w;
      prev.length += top.length;
    }
  }
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& blk : blocks) {
    out.insert(out.end(), blk.length, blk.mean);
  }
  return out;
}

/// PAVA projection of a coefficient sequence, renormalized to sum to 1.
inline std::vector<double> monotone_shape(std::span<const double> coefficients, std::span<const double> weights) {
  for (double v : coefficients) {
    detail::require(v >= 0.0, ErrorKind::invalid_argument, "monotone_shape needs nonnegative input");
  }
  std::vector<double> out = pava_nonincreasing(coefficients, weights);
  double sum = 0.0;
  for (double v : out) {
    sum += v;
  }
  detail::require(sum > 0.0, ErrorKind::invalid_argument, "monotone_shape input sums to zero");
  for (double& v : out) {
    v /= sum;
  }
  return out;
}

}  // namespace sphcov
