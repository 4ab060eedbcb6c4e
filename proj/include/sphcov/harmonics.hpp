// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "sphcov/error.hpp"

namespace sphcov {

/// Gegenbauer polynomials P_n^lambda of index lambda = (d - 1) / 2 for the
/// sphere S^d, in the Szego normalization. lambda = 0 (the circle) uses the
/// Tchebycheff polynomials T_n.
class GegenbauerBasis {
public:
  GegenbauerBasis(int sphere_dim, int max_degree)
      : dim_(sphere_dim), lambda_(0.5 * (sphere_dim - 1)), max_degree_(max_degree) {
    detail::require(sphere_dim >= 1, ErrorKind::invalid_argument, "sphere dimension must be >= 1");
    detail::require(max_degree >= 0, ErrorKind::invalid_argument, "max degree must be >= 0");
  }

  [[nodiscard]] int sphere_dim() const noexcept { return dim_; }
  [[nodiscard]] double lambda() const noexcept { return lambda_; }
  [[nodiscard]] int max_degree() const noexcept { return max_degree_; }

  friend bool operator==(const GegenbauerBasis&, const GegenbauerBasis&) = default;

private:
  int dim_;
  double lambda_;
  int max_degree_;
};

namespace detail {

inline void check_argument(double x) {
  require(std::abs(x) <= 1.0, ErrorKind::invalid_argument,
          "polynomial argument outside [-1, 1]: " + std::to_string(x));
}

/// P_0^lambda(x) .. P_{n_max}^lambda(x) into out (resized). No range checks.
inline void gegenbauer_all(double lambda, int n_max, double x, std::vector<double>& out) {
  out.resize(static_cast<std::size_t>(n_max) + 1);
  out[0] = 1.0;
  if (n_max == 0) {
    return;
  }
  if (lambda == 0.0) {
    const double theta = std::acos(std::clamp(x, -1.0, 1.0));
    for (int n = 1; n <= n_max; ++n) {
      out[n] = std::cos(n * theta);
    }
    return;
  }
  out[1] = 2.0 * lambda * x;
  for (int n = 2; n <= n_max; ++n) {
    out[n] = (2.0 * (n + lambda - 1.0) * x * out[n - 1] - (n + 2.0 * lambda - 2.0) * out[n - 2]) / n;
  }
}

/// P_n^lambda(1) = (2 lambda)_n / n!, and 1 for the Tchebycheff case.
inline double gegenbauer_at_one(double lambda, int n) {
  if (lambda == 0.0) {
    return 1.0;
  }
  double v = 1.0;
  for (int k = 1; k <= n; ++k) {
    v *= (k + 2.0 * lambda - 1.0) / k;
  }
  return v;
}

}  // namespace detail

/// Degree-n Gegenbauer polynomial at x, by the three-term recurrence
/// (cos(n acos x) when lambda = 0).
inline double eval_gegenbauer(const GegenbauerBasis& basis, int n, double x) {
  detail::require(n >= 0 && n <= basis.max_degree(), ErrorKind::invalid_argument,
                  "degree out of range for basis");
  detail::check_argument(x);
  std::vector<double> values;
  detail::gegenbauer_all(basis.lambda(), n, x, values);
  return values[static_cast<std::size_t>(n)];
}

/// W_n(x) = P_n^lambda(x) / P_n^lambda(1); bounded by 1 in modulus.
inline double eval_normalized(const GegenbauerBasis& basis, int n, double x) {
  const double v = eval_gegenbauer(basis, n, x);
  return v / detail::gegenbauer_at_one(basis.lambda(), n);
}

/// Eigenvalue -n(n + 2 lambda) of the spherical Laplacian on degree-n harmonics.
inline double laplacian_eigenvalue(const GegenbauerBasis& basis, int n) {
  return -static_cast<double>(n) * (n + 2.0 * basis.lambda());
}

struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Total mass of the weight (1 - x^2)^{lambda - 1/2} on [-1, 1].
inline double gegenbauer_weight_mass(double lambda) {
  return std::exp(0.5 * std::log(std::numbers::pi) + std::lgamma(lambda + 0.5) -
                  std::lgamma(lambda + 1.0));
}

/// Gauss quadrature for the weight (1 - x^2)^{lambda - 1/2}, exact up to
/// degree 2 * num_nodes - 1. Nodes are the eigenvalues of the Jacobi matrix of
/// the monic recurrence; weights are mass * (first eigenvector component)^2.
inline Quadrature gegenbauer_quadrature(const GegenbauerBasis& basis, int num_nodes) {
  detail::require(num_nodes >= 1, ErrorKind::invalid_argument, "quadrature needs at least one node");
  const double lambda = basis.lambda();
  const auto m = static_cast<Eigen::Index>(num_nodes);

  // Monic recurrence p_{k+1} = x p_k - beta_k p_{k-1}; the diagonal vanishes by symmetry.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd off(std::max<Eigen::Index>(m - 1, 0));
  for (Eigen::Index k = 1; k < m; ++k) {
    const double n = static_cast<double>(k);
    double beta = 0.0;
    if (lambda == 0.0) {
      beta = (k == 1) ? 0.5 : 0.25;
    } else {
      beta = n * (n + 2.0 * lambda - 1.0) / (4.0 * (n + lambda) * (n + lambda - 1.0));
    }
    off[k - 1] = std::sqrt(beta);
  }

  Quadrature q;
  q.nodes.resize(static_cast<std::size_t>(num_nodes));
  q.weights.resize(static_cast<std::size_t>(num_nodes));
  const double mass = gegenbauer_weight_mass(lambda);
  if (m == 1) {
    q.nodes[0] = 0.0;
    q.weights[0] = mass;
    return q;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
  detail::require(solver.info() == Eigen::Success, ErrorKind::numerical,
                  "quadrature eigenproblem failed to converge");
  for (Eigen::Index i = 0; i < m; ++i) {
    const double v0 = solver.eigenvectors()(0, i);
    q.nodes[static_cast<std::size_t>(i)] = solver.eigenvalues()[i];
    q.weights[static_cast<std::size_t>(i)] = mass * v0 * v0;
  }
  return q;
}

/// Result of projecting a function onto the Gegenbauer basis.
struct CoefficientExtraction {
  double scale = 0.0;                 ///< c = sum of raw coefficients
  std::vector<double> raw;            ///< b_n = <g, P_n> / <P_n, P_n>
  std::vector<double> coefficients;   ///< a_n = b_n / c, possibly negative
  std::vector<std::pair<int, double>> negative;  ///< (n, a_n) with a_n < -1e-10
};

/// Fourier-Gegenbauer coefficients of g on [-1, 1] by Gauss quadrature.
/// The normalization is chosen so that c * sum a_n P_n^lambda(x) reproduces g.
template <class Fn>
CoefficientExtraction extract_coefficients(Fn&& g, const GegenbauerBasis& basis, int num_nodes) {
  const int n_max = basis.max_degree();
  detail::require(num_nodes >= n_max + 1, ErrorKind::invalid_argument,
                  "extract_coefficients needs num_nodes >= max_degree + 1");
  const Quadrature quad = gegenbauer_quadrature(basis, num_nodes);

  std::vector<double> inner(static_cast<std::size_t>(n_max) + 1, 0.0);
  std::vector<double> norms(static_cast<std::size_t>(n_max) + 1, 0.0);
  std::vector<double> poly;
  for (std::size_t k = 0; k < quad.nodes.size(); ++k) {
    const double gx = g(quad.nodes[k]);
    detail::gegenbauer_all(basis.lambda(), n_max, quad.nodes[k], poly);
    for (int n = 0; n <= n_max; ++n) {
      inner[n] += quad.weights[k] * gx * poly[n];
      norms[n] += quad.weights[k] * poly[n] * poly[n];
    }
  }

  CoefficientExtraction out;
  out.raw.resize(inner.size());
  for (std::size_t n = 0; n < inner.size(); ++n) {
    out.raw[n] = inner[n] / norms[n];
    out.scale += out.raw[n];
  }
  detail::require(out.scale > 0.0, ErrorKind::model_invalid,
                  "not a covariance candidate at this truncation (scale <= 0)");
  out.coefficients.resize(inner.size());
  for (std::size_t n = 0; n < inner.size(); ++n) {
    out.coefficients[n] = out.raw[n] / out.scale;
    if (out.coefficients[n] < -1e-10) {
      out.negative.emplace_back(static_cast<int>(n), out.coefficients[n]);
    }
  }
  return out;
}

}  // namespace sphcov
