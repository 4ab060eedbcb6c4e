// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sphcov/error.hpp"

namespace sphcov {

/// A stationary temporal correlation phi(t) with phi(0) = 1: either the
/// Cauchy-scale characteristic function exp(-|t| / c), the constant 1, or a
/// user table on t >= 0 interpolated linearly (no extrapolation).
class TemporalFactor {
public:
  enum class Kind { cauchy, constant, table };

  static TemporalFactor constant() { return TemporalFactor(Kind::constant); }

  static TemporalFactor cauchy(double scale) {
    detail::require(std::isfinite(scale) && scale > 0.0, ErrorKind::model_invalid,
                    "Cauchy temporal scale must be positive");
    TemporalFactor f(Kind::cauchy);
    f.scale_ = scale;
    return f;
  }

  /// Grid must start at t = 0 with phi = 1, be strictly increasing, and
  /// satisfy |phi| <= 1. Lookups use |t|.
  static TemporalFactor table(std::vector<double> t, std::vector<double> phi) {
    detail::require(!t.empty() && t.size() == phi.size(), ErrorKind::model_invalid,
                    "temporal table needs matching nonempty t and phi");
    detail::require(t.front() == 0.0 && phi.front() == 1.0, ErrorKind::model_invalid,
                    "temporal table must start at t = 0 with phi = 1");
    for (std::size_t i = 0; i < t.size(); ++i) {
      detail::require(std::isfinite(t[i]) && std::isfinite(phi[i]), ErrorKind::model_invalid,
                      "temporal table entries must be finite");
      detail::require(std::abs(phi[i]) <= 1.0, ErrorKind::model_invalid, "temporal table needs |phi| <= 1");
      if (i > 0) {
        detail::require(t[i] > t[i - 1], ErrorKind::model_invalid,
                        "temporal table grid must be strictly increasing");
      }
    }
    TemporalFactor f(Kind::table);
    f.grid_ = std::move(t);
    f.values_ = std::move(phi);
    return f;
  }

  [[nodiscard]] Kind kind() const noexcept { return kind_; }
  [[nodiscard]] double scale() const noexcept { return scale_; }
  [[nodiscard]] const std::vector<double>& grid() const noexcept { return grid_; }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }

  [[nodiscard]] double operator()(double t) const {
    switch (kind_) {
      case Kind::constant:
        return 1.0;
      case Kind::cauchy:
        return std::exp(-std::abs(t) / scale_);
      case Kind::table:
        break;
    }
    const double at = std::abs(t);
    detail::require(at <= grid_.back(), ErrorKind::invalid_argument,
                    "temporal table lookup outside grid: |t| = " + std::to_string(at));
    const auto it = std::upper_bound(grid_.begin(), grid_.end(), at);
    if (it == grid_.end()) {
      return values_.back();
    }
    const auto hi = static_cast<std::size_t>(it - grid_.begin());
    const std::size_t lo = hi - 1;
    const double s = (at - grid_[lo]) / (grid_[hi] - grid_[lo]);
    return values_[lo] + s * (values_[hi] - values_[lo]);
  }

  friend bool operator==(const TemporalFactor&, const TemporalFactor&) = default;

private:
  explicit TemporalFactor(Kind kind) : kind_(kind) {}

  Kind kind_;
  double scale_ = 1.0;
  std::vector<double> grid_;
  std::vector<double> values_;
};

/// phi_n for each index n of a line factor: a shared family plus optional
/// per-index overrides.
struct TemporalAssignment {
  TemporalFactor shared = TemporalFactor::constant();
  std::map<int, TemporalFactor> per_index;

  [[nodiscard]] const TemporalFactor& for_index(int n) const {
    const auto it = per_index.find(n);
    return it == per_index.end() ? shared : it->second;
  }

  friend bool operator==(const TemporalAssignment&, const TemporalAssignment&) = default;
};

}  // namespace sphcov
