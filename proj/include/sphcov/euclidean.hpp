// SPDX-License-Identifier: Apache-2.0
#pragma once

// Euclidean isotropic kernels and their restriction to the sphere by chordal
// distance, plus transported (Lagrangian) covariances.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>
#include <vector>

#include "sphcov/error.hpp"
#include "sphcov/random.hpp"

namespace sphcov {

/// f(2 sin(theta / 2)): a kernel on R^{d+1} evaluated at the chord length.
template <class Fn>
double yadrenko_lift(Fn&& f, double theta) {
  detail::require(theta >= 0.0 && theta <= std::numbers::pi, ErrorKind::invalid_argument,
                  "yadrenko_lift: theta outside [0, pi]");
  return f(2.0 * std::sin(0.5 * theta));
}

struct SpectralAtom {
  double radius = 1.0;
  double mass = 1.0;
};

/// Isotropic kernel on R^{d+1} with a discrete radial spectral measure:
/// f(t) = sum_k m_k Gamma(nu + 1) (2 / (r_k t))^nu J_nu(r_k t), nu = (d - 1) / 2.
class EuclideanSpectralModel {
public:
  EuclideanSpectralModel(int dim, std::vector<SpectralAtom> atoms) : dim_(dim), atoms_(std::move(atoms)) {
    detail::require(dim_ >= 1, ErrorKind::model_invalid, "spectral model dimension must be >= 1");
    detail::require(!atoms_.empty(), ErrorKind::model_invalid, "spectral measure needs an atom");
    double total = 0.0;
    for (const auto& a : atoms_) {
      detail::require(std::isfinite(a.radius) && a.radius > 0.0 && std::isfinite(a.mass) && a.mass > 0.0,
                      ErrorKind::model_invalid, "spectral atoms and masses must be positive");
      total += a.mass;
    }
    detail::require(std::abs(total - 1.0) <= 1e-12, ErrorKind::model_invalid,
                    "spectral masses must sum to 1");
  }

  [[nodiscard]] int dim() const noexcept { return dim_; }
  [[nodiscard]] const std::vector<SpectralAtom>& atoms() const noexcept { return atoms_; }

private:
  int dim_;
  std::vector<SpectralAtom> atoms_;
};

namespace detail {

/// Gamma(nu + 1) (2 / z)^nu J_nu(z), which tends to 1 as z -> 0.
inline double radial_bessel_kernel(int dim, double z) {
  if (z == 0.0) {
    return 1.0;
  }
  switch (dim) {
    case 1:
      return std::cyl_bessel_j(0.0, z);
    case 2:
      return std::sin(z) / z;
    case 3:
      return 2.0 * std::cyl_bessel_j(1.0, z) / z;
    default:
      break;
  }
  const double nu = 0.5 * (dim - 1);
  return std::exp(std::lgamma(nu + 1.0) + nu * std::log(2.0 / z)) * std::cyl_bessel_j(nu, z);
}

}  // namespace detail

inline double eval_euclidean_spectral(const EuclideanSpectralModel& model, double t) {
  detail::require(t >= 0.0 && std::isfinite(t), ErrorKind::invalid_argument,
                  "spectral kernel needs a finite t >= 0");
  double sum = 0.0;
  for (const auto& a : model.atoms()) {
    sum += a.mass * detail::radial_bessel_kernel(model.dim(), a.radius * t);
  }
  return sum;
}

struct GneitingFloor {
  double value = 0.0;
  double minimizer = 0.0;
};

/// Infimum of sin(t)/t over t > 0: the lowest value a chordally restricted
/// Euclidean kernel can take on S^2. The global minimum is the first root of
/// tan t = t past pi; found by Newton on t cos t - sin t.
inline GneitingFloor gneiting_floor(int dim) {
  detail::require(dim == 2, ErrorKind::invalid_argument, "gneiting_floor is only available for dim = 2");
  double t = 4.5;
  for (int it = 0; it < 100; ++it) {
    const double h = t * std::cos(t) - std::sin(t);
    const double dh = -t * std::sin(t);
    const double step = h / dh;
    t -= step;
    if (std::abs(step) < 1e-15 * t) {
      break;
    }
  }
  return {std::sin(t) / t, t};
}

/// Monte-Carlo estimate of E_V[C_s(h - t V)]. `spatial` maps a separation
/// vector to a covariance; `velocity` draws a velocity from an Rng. The
/// estimate is reproducible for a fixed seed.
template <class Vec, class Spatial, class Sampler>
double lagrangian_covariance(Spatial&& spatial, Sampler&& velocity, const Vec& h, double t,
                             int num_samples, std::uint64_t rng_seed) {
  detail::require(num_samples >= 1, ErrorKind::invalid_argument, "need at least one sample");
  Rng rng(rng_seed);
  double sum = 0.0;
  for (int s = 0; s < num_samples; ++s) {
    const Vec v = velocity(rng);
    Vec shifted = h;
    for (std::size_t i = 0; i < static_cast<std::size_t>(shifted.size()); ++i) {
      shifted[i] -= t * v[i];
    }
    sum += spatial(shifted);
  }
  return sum / num_samples;
}

}  // namespace sphcov
