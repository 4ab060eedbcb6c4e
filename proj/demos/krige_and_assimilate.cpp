// SPDX-License-Identifier: Apache-2.0
// Simulates a field on S^2, kriges it back onto a coarse latitude band from
// 40 noise-free observations, then runs the same observations through 3D-Var
// with the model covariance as B and compares the two analyses.

#include <sphcov/sphcov.hpp>

#include <cmath>
#include <cstdio>
#include <vector>

int main() {
  using namespace sphcov;
  const GegenbauerBasis basis(2, 12);
  const auto model = make_bs_model(
      SchoenbergSequence(1.5, {0.05, 0.15, 0.2, 0.15, 0.1, 0.08, 0.07, 0.06, 0.05, 0.04, 0.03, 0.01, 0.01}), basis);

  // State: a ring of 24 points at latitude 30; observations: 40 random sites.
  std::vector<SpaceTimePoint> state;
  for (int k = 0; k < 24; ++k) {
    state.push_back({{from_lat_lon(30.0, -180.0 + 15.0 * k)}, {}});
  }
  Rng rng(17);
  std::vector<SpaceTimePoint> sites;
  for (int k = 0; k < 40; ++k) {
    sites.push_back({{SpherePoint::random(2, rng)}, {}});
  }

  std::vector<SpaceTimePoint> all = state;
  all.insert(all.end(), sites.begin(), sites.end());
  const Eigen::MatrixXd truth = sample_field(model, all, 1, 2024);
  const Eigen::VectorXd obs = truth.row(0).tail(40).transpose();

  const KrigingSystem system(model, sites, obs, 0.0);

  const Eigen::MatrixXd b = build_gram(model, state).entries;
  Eigen::MatrixXd cross(40, 24);  // Cov(obs, state)
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 24; ++j) {
      cross(i, j) = eval_gmp(model, sites[static_cast<std::size_t>(i)], state[static_cast<std::size_t>(j)]);
    }
  }
  // Observing the field at the sites is linear in the state only through the
  // regression H = Cov(obs, state) B^{-1}; R carries the remaining variance.
  const Eigen::MatrixXd h = cross * b.completeOrthogonalDecomposition().pseudoInverse();
  Eigen::MatrixXd r = system.gram().entries - h * cross.transpose();
  r = 0.5 * (r + r.transpose());
  r.diagonal().array() += 1e-6;
  const VarProblem problem(Eigen::VectorXd::Zero(24), obs, h, b, r);
  const auto var = solve_3dvar(problem, 1e-10, 1000);

  std::printf("lon,truth,kriged,krige_sd,var_analysis\n");
  for (int j = 0; j < 24; ++j) {
    const auto k = krige(system, model, state[static_cast<std::size_t>(j)]);
    std::printf("%g,%.6f,%.6f,%.6f,%.6f\n", -180.0 + 15.0 * j, truth(0, j), k.prediction, std::sqrt(k.variance),
                var.analysis[j]);
  }
}
