// SPDX-License-Identifier: Apache-2.0
// Prints a tidy CSV of covariance curves: a Legendre series on S^2, the same
// series made space-time with a Cauchy temporal factor, and the chordal lift
// of the Euclidean kernel sin(z)/z together with its lower bound.

#include <sphcov/sphcov.hpp>

#include <cmath>
#include <cstdio>
#include <numbers>

int main() {
  using namespace sphcov;
  const GegenbauerBasis basis(2, 6);
  const SchoenbergSequence seq(1.0, {0.1, 0.2, 0.3, 0.0, 0.25, 0.0, 0.15});
  const auto model = make_bp_model(seq, basis, TemporalAssignment{TemporalFactor::cauchy(2.0), {}});

  std::printf("curve,theta,t,value\n");
  for (int i = 0; i <= 60; ++i) {
    const double theta = std::numbers::pi * i / 60.0;
    const double x = std::cos(theta);
    std::printf("series,%.6f,0,%.12g\n", theta, eval_bs(seq, basis, x));
    for (double t : {0.5, 2.0}) {
      std::printf("space_time,%.6f,%g,%.12g\n", theta, t, model(Separation{{x}, {t}}));
    }
    const double chord = 2.0 * std::sin(theta / 2.0);
    const double z = 6.0 * chord;
    std::printf("chordal_sinc,%.6f,0,%.12g\n", theta, z == 0.0 ? 1.0 : std::sin(z) / z);
  }
  const auto floor = gneiting_floor(2);
  std::printf("sinc_floor,%.6f,0,%.12g\n", floor.minimizer, floor.value);
}
