// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sphcov/error.hpp"
#include "sphcov/harmonics.hpp"
#include "sphcov/sphere_geometry.hpp"
#include "sphcov/temporal.hpp"

namespace sphcov {

/// Scale c > 0 and a nonnegative coefficient sequence summing to 1:
/// C(x) = c * sum_n a_n P_n^lambda(x).
class SchoenbergSequence {
public:
  SchoenbergSequence(double scale, std::vector<double> coefficients)
      : scale_(scale), a_(std::move(coefficients)) {
    detail::require(std::isfinite(scale_) && scale_ > 0.0, ErrorKind::model_invalid,
                    "Schoenberg scale must be positive");
    detail::require(!a_.empty(), ErrorKind::model_invalid, "Schoenberg sequence is empty");
    double sum = 0.0;
    for (double v : a_) {
      detail::require(std::isfinite(v) && v >= 0.0, ErrorKind::model_invalid,
                      "Schoenberg coefficients must be nonnegative");
      sum += v;
    }
    detail::require(std::abs(sum - 1.0) <= 1e-12, ErrorKind::model_invalid,
                    "Schoenberg coefficients must sum to 1");
  }

  [[nodiscard]] double scale() const noexcept { return scale_; }
  [[nodiscard]] const std::vector<double>& coefficients() const noexcept { return a_; }
  [[nodiscard]] int max_degree() const noexcept { return static_cast<int>(a_.size()) - 1; }

private:
  double scale_;
  std::vector<double> a_;
};

struct SphereFactor {
  GegenbauerBasis basis;
  friend bool operator==(const SphereFactor&, const SphereFactor&) = default;
};

struct LineFactor {
  int max_index = 0;
  TemporalAssignment temporal;
  friend bool operator==(const LineFactor&, const LineFactor&) = default;
};

using Factor = std::variant<SphereFactor, LineFactor>;
using MultiIndex = std::vector<int>;
using WeightMap = std::map<MultiIndex, double>;

/// Separation arguments of a pair of points: one geodesic cosine per sphere
/// factor and one time difference per line factor, in factor order.
struct Separation {
  std::vector<double> x;
  std::vector<double> t;
};

/// c * sum_k w_k prod_i P_{k_i}^{lambda_i}(x_i) prod_j phi_{k_j}(t_j) + nugget
/// at zero separation: a convex combination of separable covariances on a
/// product of spheres and lines. Weights are stored sparsely by multi-index.
class SpaceTimeModel {
public:
  SpaceTimeModel(std::vector<Factor> factors, WeightMap weights, double scale, double nugget = 0.0)
      : factors_(std::move(factors)), weights_(std::move(weights)), scale_(scale), nugget_(nugget) {
    check_structure();
    double sum = 0.0;
    for (const auto& [idx, w] : weights_) {
      detail::require(std::isfinite(w) && w >= 0.0, ErrorKind::model_invalid,
                      "model weights must be nonnegative");
      sum += w;
    }
    detail::require(std::abs(sum - 1.0) <= 1e-12, ErrorKind::model_invalid,
                    "model weights must sum to 1");
  }

  /// Skips weight sign and normalization checks; structure is still checked.
  /// For probing non-covariances (e.g. hand-edited negative coefficients).
  static SpaceTimeModel unchecked(std::vector<Factor> factors, WeightMap weights, double scale,
                                  double nugget = 0.0) {
    SpaceTimeModel m;
    m.factors_ = std::move(factors);
    m.weights_ = std::move(weights);
    m.scale_ = scale;
    m.nugget_ = nugget;
    m.check_structure();
    return m;
  }

  [[nodiscard]] const std::vector<Factor>& factors() const noexcept { return factors_; }
  [[nodiscard]] const WeightMap& weights() const noexcept { return weights_; }
  [[nodiscard]] double scale() const noexcept { return scale_; }
  [[nodiscard]] double nugget() const noexcept { return nugget_; }

  [[nodiscard]] std::size_t num_spheres() const {
    return static_cast<std::size_t>(std::count_if(factors_.begin(), factors_.end(), [](const Factor& f) {
      return std::holds_alternative<SphereFactor>(f);
    }));
  }
  [[nodiscard]] std::size_t num_lines() const { return factors_.size() - num_spheres(); }

  /// Truncation bound of factor k (max degree or max temporal index).
  [[nodiscard]] int bound(std::size_t k) const {
    if (const auto* s = std::get_if<SphereFactor>(&factors_[k])) {
      return s->basis.max_degree();
    }
    return std::get<LineFactor>(factors_[k]).max_index;
  }

  /// Covariance at the given separation arguments.
  [[nodiscard]] double operator()(const Separation& sep) const {
    detail::require(sep.x.size() == num_spheres() && sep.t.size() == num_lines(),
                    ErrorKind::invalid_argument, "separation does not match the model's factors");
    // Per-factor lookup tables: tables[k][n] = P_n(x) or phi_n(t).
    std::vector<std::vector<double>> tables(factors_.size());
    std::size_t si = 0;
    std::size_t li = 0;
    bool coincident = true;
    for (std::size_t k = 0; k < factors_.size(); ++k) {
      if (const auto* s = std::get_if<SphereFactor>(&factors_[k])) {
        const double x = sep.x[si++];
        detail::check_argument(x);
        coincident = coincident && x == 1.0;
        detail::gegenbauer_all(s->basis.lambda(), s->basis.max_degree(), x, tables[k]);
      } else {
        const auto& line = std::get<LineFactor>(factors_[k]);
        const double t = sep.t[li++];
        coincident = coincident && t == 0.0;
        auto& tab = tables[k];
        tab.assign(static_cast<std::size_t>(line.max_index) + 1,
                   std::numeric_limits<double>::quiet_NaN());
        // Only fill indices actually used, so table lookups outside the grid
        // fail only when a weighted term needs them.
        for (const auto& [idx, w] : weights_) {
          auto& slot = tab[static_cast<std::size_t>(idx[k])];
          if (std::isnan(slot)) {
            slot = line.temporal.for_index(idx[k])(t);
          }
        }
      }
    }
    double sum = 0.0;
    for (const auto& [idx, w] : weights_) {
      double term = w;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        term *= tables[k][static_cast<std::size_t>(idx[k])];
      }
      sum += term;
    }
    return scale_ * sum + (coincident ? nugget_ : 0.0);
  }

  /// Structural equality: same factor kinds, sphere dimensions and temporal
  /// assignments (truncation bounds may differ).
  [[nodiscard]] bool same_structure(const SpaceTimeModel& other) const {
    if (factors_.size() != other.factors_.size()) {
      return false;
    }
    for (std::size_t k = 0; k < factors_.size(); ++k) {
      const auto* a = std::get_if<SphereFactor>(&factors_[k]);
      const auto* b = std::get_if<SphereFactor>(&other.factors_[k]);
      if ((a == nullptr) != (b == nullptr)) {
        return false;
      }
      if (a != nullptr) {
        if (a->basis.sphere_dim() != b->basis.sphere_dim()) {
          return false;
        }
      } else if (std::get<LineFactor>(factors_[k]).temporal !=
                 std::get<LineFactor>(other.factors_[k]).temporal) {
        return false;
      }
    }
    return true;
  }

private:
  SpaceTimeModel() = default;

  void check_structure() const {
    detail::require(!factors_.empty(), ErrorKind::model_invalid, "model needs at least one factor");
    detail::require(!weights_.empty(), ErrorKind::model_invalid, "model needs at least one weight");
    detail::require(std::isfinite(scale_) && scale_ > 0.0, ErrorKind::model_invalid,
                    "model scale must be positive");
    detail::require(std::isfinite(nugget_) && nugget_ >= 0.0, ErrorKind::model_invalid,
                    "nugget must be nonnegative");
    for (const auto& f : factors_) {
      if (const auto* l = std::get_if<LineFactor>(&f)) {
        detail::require(l->max_index >= 0, ErrorKind::model_invalid, "line factor bound must be >= 0");
      }
    }
    for (const auto& [idx, w] : weights_) {
      detail::require(idx.size() == factors_.size(), ErrorKind::model_invalid,
                      "multi-index length does not match factor count");
      for (std::size_t k = 0; k < idx.size(); ++k) {
        detail::require(idx[k] >= 0 && idx[k] <= bound(k), ErrorKind::model_invalid,
                        "multi-index outside the factor's truncation bound");
      }
    }
  }

  std::vector<Factor> factors_;
  WeightMap weights_;
  double scale_ = 1.0;
  double nugget_ = 0.0;
};

/// Separation arguments between two points under the model's factor layout.
inline Separation separation(const SpaceTimeModel& model, const SpaceTimePoint& p,
                             const SpaceTimePoint& q) {
  detail::require(p.spheres.size() == model.num_spheres() && q.spheres.size() == model.num_spheres() &&
                      p.times.size() == model.num_lines() && q.times.size() == model.num_lines(),
                  ErrorKind::invalid_argument, "point structure does not match the model");
  Separation sep;
  sep.x.reserve(p.spheres.size());
  std::size_t si = 0;
  for (const auto& f : model.factors()) {
    if (const auto* s = std::get_if<SphereFactor>(&f)) {
      detail::require(p.spheres[si].dim() == s->basis.sphere_dim() &&
                          q.spheres[si].dim() == s->basis.sphere_dim(),
                      ErrorKind::invalid_argument, "point sphere dimension does not match the model");
      sep.x.push_back(geodesic_cosine(p.spheres[si], q.spheres[si]));
      ++si;
    }
  }
  sep.t.reserve(p.times.size());
  for (std::size_t j = 0; j < p.times.size(); ++j) {
    sep.t.push_back(p.times[j] - q.times[j]);
  }
  return sep;
}

/// Covariance between two space-time points.
inline double eval_gmp(const SpaceTimeModel& model, const SpaceTimePoint& p, const SpaceTimePoint& q) {
  return model(separation(model, p, q));
}

/// c * sum a_n P_n^lambda(x).
inline double eval_bs(const SchoenbergSequence& seq, const GegenbauerBasis& basis, double x) {
  detail::require(basis.max_degree() >= seq.max_degree(), ErrorKind::invalid_argument,
                  "basis degree below sequence length");
  detail::check_argument(x);
  std::vector<double> poly;
  detail::gegenbauer_all(basis.lambda(), seq.max_degree(), x, poly);
  double sum = 0.0;
  for (std::size_t n = 0; n < poly.size(); ++n) {
    sum += seq.coefficients()[n] * poly[n];
  }
  return seq.scale() * sum;
}

/// c * sum a_n P_n^lambda(x) phi_n(t).
inline double eval_bp(const SchoenbergSequence& seq, const GegenbauerBasis& basis,
                      const TemporalAssignment& temporal, double x, double t) {
  detail::require(basis.max_degree() >= seq.max_degree(), ErrorKind::invalid_argument,
                  "basis degree below sequence length");
  detail::check_argument(x);
  std::vector<double> poly;
  detail::gegenbauer_all(basis.lambda(), seq.max_degree(), x, poly);
  double sum = 0.0;
  for (std::size_t n = 0; n < poly.size(); ++n) {
    const double a = seq.coefficients()[n];
    if (a != 0.0) {
      sum += a * poly[n] * temporal.for_index(static_cast<int>(n))(t);
    }
  }
  return seq.scale() * sum;
}

/// Single-sphere model equivalent to eval_bs.
inline SpaceTimeModel make_bs_model(const SchoenbergSequence& seq, const GegenbauerBasis& basis,
                                    double nugget = 0.0) {
  detail::require(basis.max_degree() >= seq.max_degree(), ErrorKind::invalid_argument,
                  "basis degree below sequence length");
  WeightMap w;
  for (std::size_t n = 0; n < seq.coefficients().size(); ++n) {
    if (seq.coefficients()[n] > 0.0) {
      w[{static_cast<int>(n)}] = seq.coefficients()[n];
    }
  }
  return SpaceTimeModel({SphereFactor{basis}}, std::move(w), seq.scale(), nugget);
}

/// Sphere-cross-line model equivalent to eval_bp: the sphere degree and the
/// temporal index share n.
inline SpaceTimeModel make_bp_model(const SchoenbergSequence& seq, const GegenbauerBasis& basis,
                                    TemporalAssignment temporal, double nugget = 0.0) {
  detail::require(basis.max_degree() >= seq.max_degree(), ErrorKind::invalid_argument,
                  "basis degree below sequence length");
  WeightMap w;
  for (std::size_t n = 0; n < seq.coefficients().size(); ++n) {
    if (seq.coefficients()[n] > 0.0) {
      w[{static_cast<int>(n), static_cast<int>(n)}] = seq.coefficients()[n];
    }
  }
  return SpaceTimeModel({SphereFactor{basis}, LineFactor{basis.max_degree(), std::move(temporal)}},
                        std::move(w), seq.scale(), nugget);
}

/// Schur product on the product space: factors concatenated, weights as the
/// outer product, scales multiplied. The nugget is exact at full coincidence.
inline SpaceTimeModel separable_product(const SpaceTimeModel& m1, const SpaceTimeModel& m2) {
  std::vector<Factor> factors = m1.factors();
  factors.insert(factors.end(), m2.factors().begin(), m2.factors().end());
  WeightMap w;
  for (const auto& [i1, w1] : m1.weights()) {
    for (const auto& [i2, w2] : m2.weights()) {
      MultiIndex idx = i1;
      idx.insert(idx.end(), i2.begin(), i2.end());
      w[std::move(idx)] = w1 * w2;
    }
  }
  // Renormalize away the rounding of the products.
  double sum = 0.0;
  for (const auto& [idx, v] : w) {
    sum += v;
  }
  for (auto& [idx, v] : w) {
    v /= sum;
  }
  const auto zero_value = [](const SpaceTimeModel& m) {
    Separation sep{std::vector<double>(m.num_spheres(), 1.0), std::vector<double>(m.num_lines(), 0.0)};
    return m(sep) - m.nugget();
  };
  const double nugget =
      m1.nugget() * zero_value(m2) + m2.nugget() * zero_value(m1) + m1.nugget() * m2.nugget();
  return SpaceTimeModel(std::move(factors), std::move(w), m1.scale() * m2.scale() * sum, nugget);
}

/// sum_k w_k C_k for models of identical factor structure.
inline SpaceTimeModel convex_combine(std::span<const SpaceTimeModel> models, std::span<const double> weights) {
  detail::require(!models.empty() && models.size() == weights.size(), ErrorKind::invalid_argument,
                  "convex_combine needs one weight per model");
  double wsum = 0.0;
  for (double w : weights) {
    detail::require(std::isfinite(w) && w >= 0.0, ErrorKind::invalid_argument,
                    "convex weights must be nonnegative");
    wsum += w;
  }
  detail::require(std::abs(wsum - 1.0) <= 1e-12, ErrorKind::invalid_argument,
                  "convex weights must sum to 1");
  std::vector<Factor> factors = models[0].factors();
  for (std::size_t m = 1; m < models.size(); ++m) {
    detail::require(models[m].same_structure(models[0]), ErrorKind::invalid_argument,
                    "convex_combine needs identical factor structure");
    for (std::size_t k = 0; k < factors.size(); ++k) {
      if (auto* s = std::get_if<SphereFactor>(&factors[k])) {
        const int deg = std::max(s->basis.max_degree(), models[m].bound(k));
        s->basis = GegenbauerBasis(s->basis.sphere_dim(), deg);
      } else {
        auto& line = std::get<LineFactor>(factors[k]);
        line.max_index = std::max(line.max_index, models[m].bound(k));
      }
    }
  }
  WeightMap blended;
  double scale = 0.0;
  double nugget = 0.0;
  for (std::size_t m = 0; m < models.size(); ++m) {
    const double wc = weights[m] * models[m].scale();
    scale += wc;
    nugget += weights[m] * models[m].nugget();
    if (weights[m] == 0.0) {
      continue;
    }
    for (const auto& [idx, w] : models[m].weights()) {
      blended[idx] += wc * w;
    }
  }
  double sum = 0.0;
  for (const auto& [idx, v] : blended) {
    sum += v;
  }
  for (auto& [idx, v] : blended) {
    v /= sum;
  }
  return SpaceTimeModel(std::move(factors), std::move(blended), sum, nugget);
}

struct Truncation {
  SpaceTimeModel model;
  double dropped_mass = 0.0;
};

/// Drops multi-indices above the per-factor bounds. The result is exactly the
/// partial sum of the kept terms: weights renormalized, scale multiplied by
/// the kept mass.
inline Truncation truncate_index(const SpaceTimeModel& model, std::span<const int> max_degrees) {
  detail::require(max_degrees.size() == model.factors().size(), ErrorKind::invalid_argument,
                  "one truncation bound per factor required");
  for (int b : max_degrees) {
    detail::require(b >= 0, ErrorKind::invalid_argument, "truncation bounds must be >= 0");
  }
  WeightMap kept;
  double kept_mass = 0.0;
  for (const auto& [idx, w] : model.weights()) {
    bool inside = true;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      inside = inside && idx[k] <= max_degrees[k];
    }
    if (inside) {
      kept[idx] = w;
      kept_mass += w;
    }
  }
  detail::require(kept_mass > 0.0, ErrorKind::invalid_argument, "truncation drops all mass");
  for (auto& [idx, w] : kept) {
    w /= kept_mass;
  }
  std::vector<Factor> factors = model.factors();
  for (std::size_t k = 0; k < factors.size(); ++k) {
    const int b = std::min(max_degrees[k], model.bound(k));
    if (auto* s = std::get_if<SphereFactor>(&factors[k])) {
      s->basis = GegenbauerBasis(s->basis.sphere_dim(), b);
    } else {
      std::get<LineFactor>(factors[k]).max_index = b;
    }
  }
  const double dropped = 1.0 - kept_mass;
  return {SpaceTimeModel(std::move(factors), std::move(kept), model.scale() * kept_mass, model.nugget()),
          dropped > 0.0 ? dropped : 0.0};
}

struct TaperReport {
  std::vector<bool> in_range;
  std::size_t excluded = 0;
  double max_excluded_abs_covariance = 0.0;
};

/// Flags pairs with every geodesic cosine >= x_min and every |dt| <= t_max,
/// and reports the largest |C| among the pairs left out.
inline TaperReport taper_report(const SpaceTimeModel& model,
                                std::span<const std::pair<SpaceTimePoint, SpaceTimePoint>> pairs,
                                double x_min, double t_max) {
  TaperReport report;
  report.in_range.reserve(pairs.size());
  for (const auto& [p, q] : pairs) {
    const Separation sep = separation(model, p, q);
    bool inside = true;
    for (double x : sep.x) {
      inside = inside && x >= x_min;
    }
    for (double t : sep.t) {
      inside = inside && std::abs(t) <= t_max;
    }
    report.in_range.push_back(inside);
    if (!inside) {
      ++report.excluded;
      report.max_excluded_abs_covariance = std::max(report.max_excluded_abs_covariance, std::abs(model(sep)));
    }
  }
  return report;
}

}  // namespace sphcov
