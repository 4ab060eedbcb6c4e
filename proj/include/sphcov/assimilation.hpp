// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <sstream>
#include <utility>

#include "sphcov/error.hpp"
#include "sphcov/linalg.hpp"
#include "sphcov/random.hpp"
#include "sphcov/simulation.hpp"
#include "sphcov/validation.hpp"

namespace sphcov {

/// Linear-Gaussian 3D-Var problem
///   J(x) = (x - x_b)^T B^{-1} (x - x_b) + (y_o - H x)^T R^{-1} (y_o - H x).
/// The cost carries no 1/2 factors. B and R are held with their Cholesky
/// factors; B is never inverted explicitly. The diagonal of R is raised to
/// obs_variance_floor after the PSD check, and R must then be invertible.
class VarProblem {
public:
  VarProblem(Eigen::VectorXd background, Eigen::VectorXd observations, Eigen::MatrixXd obs_operator,
             Eigen::MatrixXd background_cov, Eigen::MatrixXd obs_cov, double obs_variance_floor = 0.0)
      : x_b_(std::move(background)), y_o_(std::move(observations)), h_(std::move(obs_operator)),
        b_(std::move(background_cov)), r_(std::move(obs_cov)) {
    const Eigen::Index n = x_b_.size();
    const Eigen::Index m = y_o_.size();
    detail::require(n > 0 && m > 0, ErrorKind::invalid_argument, "empty state or observation vector");
    detail::require(h_.rows() == m && h_.cols() == n, ErrorKind::invalid_argument,
                    "observation operator must be obs x state");
    detail::require(b_.rows() == n && b_.cols() == n, ErrorKind::invalid_argument, "B must be state x state");
    detail::require(r_.rows() == m && r_.cols() == m, ErrorKind::invalid_argument, "R must be obs x obs");
    detail::require(psd_check(GramMatrix{b_, {}}, 1e-8).psd, ErrorKind::not_psd, "B is not positive semidefinite");
    detail::require(psd_check(GramMatrix{r_, {}}, 1e-8).psd, ErrorKind::not_psd, "R is not positive semidefinite");
    r_.diagonal() = r_.diagonal().cwiseMax(obs_variance_floor);
    b_factor_ = factorize_spd(b_);
    r_factor_ = factorize_spd(r_);
    detail::require(r_factor_.jitter == 0.0, ErrorKind::numerical,
                    "R is singular; raise the observation variance floor");
  }

  [[nodiscard]] const Eigen::VectorXd& background() const noexcept { return x_b_; }
  [[nodiscard]] const Eigen::VectorXd& observations() const noexcept { return y_o_; }
  [[nodiscard]] const Eigen::MatrixXd& obs_operator() const noexcept { return h_; }
  [[nodiscard]] const Eigen::MatrixXd& background_cov() const noexcept { return b_; }
  [[nodiscard]] const Eigen::MatrixXd& obs_cov() const noexcept { return r_; }
  [[nodiscard]] Eigen::Index state_size() const noexcept { return x_b_.size(); }

  [[nodiscard]] Eigen::VectorXd solve_b(const Eigen::VectorXd& v) const { return b_factor_.solve(v); }
  [[nodiscard]] Eigen::VectorXd solve_r(const Eigen::VectorXd& v) const { return r_factor_.solve(v); }

private:
  Eigen::VectorXd x_b_;
  Eigen::VectorXd y_o_;
  Eigen::MatrixXd h_;
  Eigen::MatrixXd b_;
  Eigen::MatrixXd r_;
  SpdFactor b_factor_;
  SpdFactor r_factor_;
};

namespace detail {

inline void check_state(const VarProblem& problem, const Eigen::VectorXd& x) {
  require(x.size() == problem.state_size(), ErrorKind::invalid_argument, "state vector has the wrong size");
}

}  // namespace detail

inline double cost(const VarProblem& problem, const Eigen::VectorXd& x) {
  detail::check_state(problem, x);
  const Eigen::VectorXd d = x - problem.background();
  const Eigen::VectorXd r = problem.observations() - problem.obs_operator() * x;
  return d.dot(problem.solve_b(d)) + r.dot(problem.solve_r(r));
}

inline Eigen::VectorXd grad_cost(const VarProblem& problem, const Eigen::VectorXd& x) {
  detail::check_state(problem, x);
  const Eigen::VectorXd d = x - problem.background();
  const Eigen::VectorXd r = problem.observations() - problem.obs_operator() * x;
  return 2.0 * problem.solve_b(d) - 2.0 * problem.obs_operator().transpose() * problem.solve_r(r);
}

struct VarSolution {
  Eigen::VectorXd analysis;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Minimizes J by conjugate gradients on (B^{-1} + H^T R^{-1} H) dx = H^T R^{-1} (y_o - H x_b),
/// x = x_b + dx, preconditioned with B. The direction's image under B^{-1} is
/// carried along the recurrence, so only products with B are formed.
/// Stops when ||r|| <= tol * ||r_0||.
inline VarSolution solve_3dvar(const VarProblem& problem, double tol, int max_iters) {
  detail::require(tol > 0.0 && max_iters >= 1, ErrorKind::invalid_argument, "bad CG tolerance or iteration cap");
  const Eigen::MatrixXd& h = problem.obs_operator();
  const Eigen::MatrixXd& b = problem.background_cov();
  auto apply_obs = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return h.transpose() * problem.solve_r(h * v);
  };

  VarSolution sol;
  Eigen::VectorXd dx = Eigen::VectorXd::Zero(problem.state_size());
  Eigen::VectorXd r = h.transpose() * problem.solve_r(problem.observations() - h * problem.background());
  const double r0 = r.norm();
  if (r0 == 0.0) {
    sol.analysis = problem.background();
    return sol;
  }
  Eigen::VectorXd z = b * r;
  Eigen::VectorXd p = z;
  Eigen::VectorXd u = r;  // B^{-1} p
  double rz = r.dot(z);
  for (int it = 1; it <= max_iters; ++it) {
    const Eigen::VectorXd ap = u + apply_obs(p);
    const double alpha = rz / p.dot(ap);
    dx += alpha * p;
    r -= alpha * ap;
    sol.relative_residual = r.norm() / r0;
    if (sol.relative_residual <= tol) {
      sol.analysis = problem.background() + dx;
      sol.iterations = it;
      return sol;
    }
    z = b * r;
    const double rz_next = r.dot(z);
    const double beta = rz_next / rz;
    rz = rz_next;
    p = z + beta * p;
    u = r + beta * u;
  }
  std::ostringstream msg;
  msg << "3D-Var CG did not converge in " << max_iters << " iterations (relative residual "
      << sol.relative_residual << ")";
  detail::fail(ErrorKind::numerical, msg.str());
}

/// Stochastic (perturbed-observation) EnKF analysis. Members are rows.
/// x_i <- x_i + K (y_o + eta_i - H x_i), eta_i ~ N(0, R),
/// K = P H^T (H P H^T + R)^{-1}, P the ensemble sample covariance.
/// eta_i is drawn from Rng(derive_seed(seed, i)).
inline Eigen::MatrixXd enkf_update(const Eigen::MatrixXd& ensemble, const Eigen::VectorXd& y_o,
                                   const Eigen::MatrixXd& h, const Eigen::MatrixXd& r, std::uint64_t rng_seed) {
  detail::require(ensemble.rows() >= 2, ErrorKind::invalid_argument, "EnKF needs at least 2 members");
  const Eigen::Index n = ensemble.cols();
  const Eigen::Index m = y_o.size();
  detail::require(h.rows() == m && h.cols() == n, ErrorKind::invalid_argument, "H must be obs x state");
  detail::require(r.rows() == m && r.cols() == m, ErrorKind::invalid_argument, "R must be obs x obs");

  const Eigen::MatrixXd p = sample_covariance(ensemble);
  const Eigen::MatrixXd innovation = h * p * h.transpose() + r;
  const Eigen::LLT<Eigen::MatrixXd> llt(innovation);
  detail::require(llt.info() == Eigen::Success && llt.rcond() >= kMinReciprocalCondition, ErrorKind::numerical,
                  "EnKF innovation covariance is singular");
  const Eigen::MatrixXd gain = llt.solve(h * p).transpose();  // P H^T S^{-1}
  const Eigen::MatrixXd r_root = psd_square_root(r);

  Eigen::MatrixXd out = ensemble;
  Eigen::VectorXd z(m);
  for (Eigen::Index i = 0; i < ensemble.rows(); ++i) {
    Rng rng(derive_seed(rng_seed, static_cast<std::uint64_t>(i)));
    for (Eigen::Index k = 0; k < m; ++k) {
      z[k] = rng.normal();
    }
    const Eigen::VectorXd x = ensemble.row(i).transpose();
    const Eigen::VectorXd innov = y_o + r_root * z - h * x;
    out.row(i) += (gain * innov).transpose();
  }
  return out;
}

}  // namespace sphcov
