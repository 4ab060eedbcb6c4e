// SPDX-License-Identifier: Apache-2.0
// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <sphcov/sphcov.hpp>

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "test_support.hpp"

namespace {

using namespace sphcov;
namespace ts = sphcov::test_support;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------- 1

Outcome gneiting() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto floor = gneiting_floor(2);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  // Independent check: dense scan of sin(t)/t over (0, 50].
  double scan = 1.0;
  for (int i = 1; i <= 5'000'000; ++i) {
    const double t = 1e-5 * i;
    scan = std::min(scan, std::sin(t) / t);
  }
  const bool ok = std::abs(floor.value + 0.2172) <= 1e-4 && std::abs(floor.value - scan) <= 1e-9 && secs < 1.0;
  return {ok, fmt("floor %.10f at t=%.6f, scan %.10f, %.3g s", floor.value, floor.minimizer, scan, secs)};
}

// ---------------------------------------------------------------- 2

Outcome psd_suite() {
  Rng rng(2002);
  int passed = 0;
  const int models = 200;
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < models; ++k) {
    const auto model = ts::random_model(rng, 8);
    const int n = 10 + static_cast<int>(rng.index(51));
    const auto g = build_gram(model, ts::random_points(rng, model, n));
    const auto v = psd_check(g, 1e-8);
    passed += v.psd ? 1 : 0;
    worst = std::min(worst, v.min_eigenvalue / std::max(detail::mean_diagonal(g.entries), 1e-300));
  }
  return {passed == models, fmt("%d/%d PSD, worst min eigenvalue / mean diagonal %.3g", passed, models, worst)};
}

// ---------------------------------------------------------------- 3

Outcome converse_probe() {
  Rng rng(3003);
  const int trials = 50;
  int detected = 0;
  for (int trial = 0; trial < trials; ++trial) {
    const int degree = 1 + static_cast<int>(rng.index(3));
    const auto bad = static_cast<std::size_t>(rng.index(static_cast<std::uint64_t>(degree) + 1));
    std::vector<double> a(static_cast<std::size_t>(degree) + 1);
    double rest = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) {
      a[n] = n == bad ? 0.0 : rng.uniform(0.1, 1.0);
      rest += a[n];
    }
    WeightMap w;
    for (std::size_t n = 0; n < a.size(); ++n) {
      w[{static_cast<int>(n)}] = n == bad ? -0.2 : a[n] * 1.2 / rest;
    }
    const auto model =
        SpaceTimeModel::unchecked({SphereFactor{GegenbauerBasis(2, degree)}}, std::move(w), 1.0, 0.0);
    const auto g = build_gram(model, ts::random_points(rng, model, 200));
    detected += psd_check(g, 1e-8).psd ? 0 : 1;
  }
  return {detected * 10 >= trials * 9, fmt("%d/%d trials NOT_PSD (need >= 90%%)", detected, trials)};
}

// ---------------------------------------------------------------- 4

double legendre_closed(int n, double x) {
  switch (n) {
    case 0:
      return 1.0;
    case 1:
      return x;
    case 2:
      return (3 * x * x - 1) / 2;
    case 3:
      return (5 * x * x * x - 3 * x) / 2;
    default:
      return (35 * std::pow(x, 4) - 30 * x * x + 3) / 8;
  }
}

Outcome harmonics() {
  Rng rng(4004);
  double cheb = 0.0;
  const GegenbauerBasis circle(1, 50);
  const GegenbauerBasis legendre(2, 50);
  double leg = 0.0;
  for (int i = 0; i < 500; ++i) {
    const double theta = rng.uniform(0.0, std::numbers::pi);
    for (int n = 0; n <= 20; ++n) {
      cheb = std::max(cheb, std::abs(eval_gegenbauer(circle, n, std::cos(theta)) - std::cos(n * theta)));
    }
    const double x = rng.uniform(-1.0, 1.0);
    for (int n = 0; n <= 4; ++n) {
      leg = std::max(leg, std::abs(eval_gegenbauer(legendre, n, x) - legendre_closed(n, x)));
    }
  }
  double orth = 0.0;
  double bound = 0.0;
  for (int dim : {1, 2, 3, 4, 5}) {
    const GegenbauerBasis b10(dim, 10);
    const auto q = gegenbauer_quadrature(b10, 12);
    for (int m = 0; m <= 10; ++m) {
      for (int n = 0; n < m; ++n) {
        double inner = 0.0;
        for (std::size_t i = 0; i < q.nodes.size(); ++i) {
          inner += q.weights[i] * eval_gegenbauer(b10, m, q.nodes[i]) * eval_gegenbauer(b10, n, q.nodes[i]);
        }
        orth = std::max(orth, std::abs(inner));
      }
    }
    const GegenbauerBasis b50(dim, 50);
    for (int i = 0; i <= 4000; ++i) {
      const double x = i < 2001 ? -1.0 + i * 1e-3 : std::cos(rng.uniform(0.0, std::numbers::pi));
      for (int n = 0; n <= 50; ++n) {
        bound = std::max(bound, std::abs(eval_normalized(b50, n, x)));
      }
    }
  }
  const bool ok = cheb <= 1e-10 && leg <= 1e-12 && orth <= 1e-9 && bound <= 1.0 + 1e-12;
  return {ok, fmt("chebyshev %.2g, legendre %.2g, orthogonality %.2g, max |W_n| - 1 = %.2g", cheb, leg, orth,
                  bound - 1.0)};
}

// ---------------------------------------------------------------- 5

Outcome coefficient_round_trip() {
  Rng rng(5005);
  double extract_err = 0.0;
  double fit_err = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int dim = 1 + static_cast<int>(rng.index(4));
    const int degree = static_cast<int>(rng.index(11));
    const auto seq = ts::random_sequence(rng, degree, rng.uniform(0.5, 4.0));
    const GegenbauerBasis b(dim, degree);
    auto synth = [&](double x) {
      double s = 0.0;
      for (int n = 0; n <= degree; ++n) {
        s += seq.coefficients()[static_cast<std::size_t>(n)] * eval_gegenbauer(b, n, x);
      }
      return seq.scale() * s;
    };
    const auto ex = extract_coefficients(synth, b, degree + 3);
    std::vector<CurvePoint> curve;
    const int points = 2 * (degree + 1) + 2;
    for (int i = 0; i < points; ++i) {
      const double x = -1.0 + 2.0 * i / (points - 1);
      curve.push_back({x, synth(x), 1.0});
    }
    const auto fit = fit_nonnegative(curve, b, degree);
    for (int n = 0; n <= degree; ++n) {
      const auto k = static_cast<std::size_t>(n);
      extract_err = std::max(extract_err, std::abs(ex.coefficients[k] - seq.coefficients()[k]));
      fit_err = std::max(fit_err, std::abs(fit.sequence.coefficients()[k] - seq.coefficients()[k]));
    }
    extract_err = std::max(extract_err, std::abs(ex.scale - seq.scale()) / seq.scale());
    fit_err = std::max(fit_err, std::abs(fit.sequence.scale() - seq.scale()) / seq.scale());
  }
  return {extract_err <= 1e-9 && fit_err <= 1e-8,
          fmt("extraction max error %.2g, nonnegative fit max error %.2g", extract_err, fit_err)};
}

// ---------------------------------------------------------------- 6

Outcome kriging() {
  Rng rng(6006);
  double pred_err = 0.0;
  double var_max = 0.0;
  for (int trial = 0; trial < 30; ++trial) {
    const auto model = ts::random_model(rng, 6, false);
    const int n = 5 + static_cast<int>(rng.index(36));
    auto pts = ts::random_points(rng, model, n);
    const Eigen::MatrixXd field = sample_field(model, pts, 1, derive_seed(6006, static_cast<std::uint64_t>(trial)));
    const double mean = rng.uniform(-2.0, 2.0);
    const Eigen::VectorXd values = field.row(0).transpose().array() + mean;
    const KrigingSystem system(model, pts, values, mean);
    const double c0 = model.scale();
    for (int i = 0; i < n; ++i) {
      const auto r = krige(system, model, pts[static_cast<std::size_t>(i)]);
      pred_err = std::max(pred_err, std::abs(r.prediction - values[i]) / c0);
      var_max = std::max(var_max, r.variance / c0);
    }
  }
  // 3x3 weights against an explicit inverse.
  double weight_err = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto model = make_bs_model(ts::random_sequence(rng, 4, 1.5), GegenbauerBasis(2, 4), 0.1);
    auto pts = ts::random_points(rng, model, 3);
    const auto target = ts::random_point(rng, model);
    const KrigingSystem system(model, pts, Eigen::Vector3d(1.0, -1.0, 0.5), 0.0);
    const auto r = krige(system, model, target);
    const Eigen::Matrix3d g = system.gram().entries;
    Eigen::Vector3d k;
    for (int i = 0; i < 3; ++i) {
      k[i] = eval_gmp(model, target, pts[static_cast<std::size_t>(i)]);
    }
    weight_err = std::max(weight_err, (g.inverse() * k - r.weights).cwiseAbs().maxCoeff());
  }
  const bool ok = pred_err <= 1e-8 && var_max <= 1e-8 && weight_err <= 1e-10;
  return {ok, fmt("max |pred - value| / scale %.2g, max variance / C(0) %.2g, 3x3 weight error %.2g", pred_err,
                  var_max, weight_err)};
}

// ---------------------------------------------------------------- 7 and 8

Eigen::MatrixXd random_spd(Rng& rng, Eigen::Index n) {
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      a(i, j) = rng.normal();
    }
  }
  return a * a.transpose() / static_cast<double>(n) + 0.5 * Eigen::MatrixXd::Identity(n, n);
}

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c) {
  Eigen::MatrixXd a(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) {
      a(i, j) = rng.normal();
    }
  }
  return a;
}

Eigen::VectorXd random_vector(Rng& rng, Eigen::Index n) { return random_matrix(rng, n, 1); }

Eigen::VectorXd dense_analysis(const VarProblem& p) {
  const Eigen::MatrixXd& b = p.background_cov();
  const Eigen::MatrixXd& h = p.obs_operator();
  const Eigen::MatrixXd s = h * b * h.transpose() + p.obs_cov();
  return p.background() + b * h.transpose() * s.inverse() * (p.observations() - h * p.background());
}

Outcome three_d_var() {
  Rng rng(7007);
  double rel = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto n = static_cast<Eigen::Index>(1 + rng.index(50));
    const auto m = static_cast<Eigen::Index>(1 + rng.index(50));
    const VarProblem p(random_vector(rng, n), random_vector(rng, m), random_matrix(rng, m, n), random_spd(rng, n),
                       random_spd(rng, m));
    const auto sol = solve_3dvar(p, 1e-12, 10 * static_cast<int>(n) + 100);
    const Eigen::VectorXd oracle = dense_analysis(p);
    rel = std::max(rel, (sol.analysis - oracle).norm() / oracle.norm());
  }
  double grad = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 6;
    const auto m = static_cast<Eigen::Index>(1 + rng.index(6));
    const VarProblem p(random_vector(rng, n), random_vector(rng, m), random_matrix(rng, m, n), random_spd(rng, n),
                       random_spd(rng, m));
    const Eigen::VectorXd x = random_vector(rng, n);
    const Eigen::VectorXd g = grad_cost(p, x);
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
      e[i] = h;
      const double fd = (cost(p, x + e) - cost(p, x - e)) / (2.0 * h);
      grad = std::max(grad, std::abs(fd - g[i]) / g.cwiseAbs().maxCoeff());
    }
  }
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(8, 8);
  const Eigen::VectorXd xb = random_vector(rng, 8);
  const Eigen::VectorXd yo = random_vector(rng, 8);
  const auto toy = solve_3dvar(VarProblem(xb, yo, id, id, id), 1e-14, 100);
  const double toy_err = (toy.analysis - 0.5 * (xb + yo)).cwiseAbs().maxCoeff();
  const bool ok = rel <= 1e-6 && grad <= 1e-5 && toy_err <= 1e-12;
  return {ok, fmt("max relative error vs dense %.2g, gradient FD relative error %.2g, identity toy %.2g", rel,
                  grad, toy_err)};
}

Outcome enkf() {
  const auto t0 = std::chrono::steady_clock::now();
  Eigen::Matrix3d b;
  b << 1.0, 0.5, 0.2, 0.5, 2.0, 0.3, 0.2, 0.3, 1.5;
  Eigen::MatrixXd h(2, 3);
  h << 1.0, 0.0, 0.0, 0.0, 1.0, 1.0;
  Eigen::Matrix2d r;
  r << 0.5, 0.1, 0.1, 0.8;
  const Eigen::Vector3d xb(1.0, -0.5, 2.0);
  const Eigen::Vector2d yo(0.3, 2.5);
  const VarProblem p(xb, yo, h, b, r);
  const Eigen::VectorXd oracle = solve_3dvar(p, 1e-14, 100).analysis;
  const Eigen::MatrixXd pa = b - b * h.transpose() * (h * b * h.transpose() + r).inverse() * h * b;

  const int members = 100'000;
  Eigen::MatrixXd prior = sample_gaussian(b, members, 808);
  prior.rowwise() += xb.transpose();
  const Eigen::MatrixXd post = enkf_update(prior, yo, h, r, 809);
  const Eigen::VectorXd mean = post.colwise().mean().transpose();
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) {
    worst = std::max(worst, std::abs(mean[i] - oracle[i]) / std::sqrt(pa(i, i) / members));
  }
  Eigen::MatrixXd flat(50, 3);
  flat.rowwise() = xb.transpose();
  const bool unchanged = enkf_update(flat, yo, h, r, 810) == flat;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {worst <= 3.0 && unchanged && secs < 120.0,
          fmt("max |mean - 3D-Var| = %.2f SE, zero-spread %s, %.1f s", worst, unchanged ? "unchanged" : "CHANGED",
              secs)};
}

// ---------------------------------------------------------------- 9

Outcome simulation() {
  const auto model = make_bp_model(SchoenbergSequence(2.0, {0.2, 0.3, 0.0, 0.5}), GegenbauerBasis(2, 3),
                                   TemporalAssignment{TemporalFactor::cauchy(1.5), {}});
  Rng rng(9009);
  const auto pts = ts::random_points(rng, model, 5, 2.0);
  const Eigen::MatrixXd g = build_gram(model, pts).entries;
  const int draws = 10'000;
  const Eigen::MatrixXd x = sample_field(model, pts, draws, 99);
  const Eigen::MatrixXd s = x.transpose() * x / static_cast<double>(draws);  // known zero mean
  double worst = 0.0;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      const double se = std::sqrt((g(i, i) * g(j, j) + g(i, j) * g(i, j)) / draws);
      worst = std::max(worst, std::abs(s(i, j) - g(i, j)) / se);
    }
  }
  const Eigen::MatrixXd again = sample_field(model, pts, draws, 99);
  const bool exact = std::memcmp(x.data(), again.data(), sizeof(double) * static_cast<std::size_t>(x.size())) == 0;
  return {worst <= 5.0 && exact,
          fmt("max entry deviation %.2f SE, repeated draws %s", worst, exact ? "byte-identical" : "DIFFER")};
}

// ---------------------------------------------------------------- 10

Outcome pava() {
  double worst = 0.0;
  long cases = 0;
  for (int len = 1; len <= 6; ++len) {
    std::vector<int> digits(static_cast<std::size_t>(len), 0);
    while (true) {
      std::vector<double> y;
      for (int d : digits) {
        y.push_back(0.1 * d);
      }
      const std::vector<double> w(y.size(), 1.0);
      const auto fast = pava_nonincreasing(y, w);
      const auto slow = ts::brute_force_nonincreasing(y, w);
      for (std::size_t i = 0; i < y.size(); ++i) {
        worst = std::max(worst, std::abs(fast[i] - slow[i]));
      }
      ++cases;
      std::size_t k = 0;
      while (k < digits.size() && ++digits[k] == 11) {
        digits[k++] = 0;
      }
      if (k == digits.size()) {
        break;
      }
    }
  }
  return {worst <= 1e-6, fmt("%ld sequences, max deviation from exhaustive projection %.2g", cases, worst)};
}

// ---------------------------------------------------------------- 11

const fs::path kWork = "acceptance_work";

int cli(const std::string& args, const std::string& stdout_name = "") {
  std::string cmd = std::string(SPHCOV_CLI_PATH) + " " + args;
  cmd += " > " + (stdout_name.empty() ? std::string("/dev/null") : (kWork / stdout_name).string());
  cmd += " 2>> " + (kWork / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<double> last_column(const fs::path& file) {
  std::ifstream in(file);
  std::string line;
  std::getline(in, line);
  std::vector<double> out;
  while (std::getline(in, line)) {
    out.push_back(std::stod(line.substr(line.rfind(',') + 1)));
  }
  return out;
}

// Generating model on S^2 x R: energy spread over degrees 2..8, Cauchy time
// scale 1. Time slices 100 apart are independent, so 20 slices of 25 sites
// give 500 observations of 20 independent spatial fields.
const char* kPipelineModel = R"({"factors":[{"kind":"sphere","dim":2,"max_degree":8},{"kind":"line","max_index":8}],
 "coefficients":[[[2,2],0.2],[[3,3],0.2],[[4,4],0.2],[[6,6],0.2],[[8,8],0.2]],"scale":2.0,"nugget":0.0,
 "temporal":[{"shared":{"kind":"cauchy","scale":1.0},"per_index":[]}]})";

struct PipelineRun {
  std::vector<int> exits;
  double error = std::numeric_limits<double>::infinity();  ///< max |fitted - true| / c on [0.5, 1]
};

PipelineRun pipeline(int seed) {
  PipelineRun run;
  const std::string tag = std::to_string(seed);
  std::string times;
  for (int k = 0; k < 20; ++k) {
    times += (k ? "," : "") + std::to_string(100 * k);
  }
  const auto p = [&](const std::string& name) { return (kWork / (name + tag)).string(); };
  run.exits.push_back(cli("simulate --model " + (kWork / "truth.json").string() + " --random-sites 25 --times " +
                          times + " --seed " + tag + " --out " + p("sim")));
  {
    std::ifstream in(p("sim"));
    std::ofstream out(p("obs"));
    std::string line;
    std::getline(in, line);
    out << "lat,lon,t,value\n";
    while (std::getline(in, line)) {
      out << line.substr(0, line.rfind(',')) << '\n';
    }
  }
  run.exits.push_back(cli("fit --data " + p("obs") + " --dim 2 --degree 8 --bins 40 --time-scale 1 --mean 0 --out " +
                          p("fit")));
  run.exits.push_back(cli("validate --model " + p("fit") + " --points 200 --seed " + tag));
  {
    std::ofstream targets(p("targets"));
    targets << "lat,lon,t\n10,20,0\n-45,100,100\n60,-30,1900\n";
  }
  run.exits.push_back(cli("krige --model " + p("fit") + " --data " + p("obs") + " --targets " + p("targets") +
                          " --mean 0 --out " + p("krige")));
  const std::string grid = " --grid \"0.5:1:201;0:0:1\"";
  if (cli("eval --model " + (kWork / "truth.json").string() + grid, "truth_curve" + tag) == 0 &&
      cli("eval --model " + p("fit") + grid, "fit_curve" + tag) == 0) {
    const auto truth = last_column(kWork / ("truth_curve" + tag));
    const auto fitted = last_column(kWork / ("fit_curve" + tag));
    run.error = 0.0;
    for (std::size_t i = 0; i < truth.size() && i < fitted.size(); ++i) {
      run.error = std::max(run.error, std::abs(truth[i] - fitted[i]) / 2.0);
    }
    if (truth.size() != 201 || fitted.size() != 201) {
      run.error = std::numeric_limits<double>::infinity();
    }
  }
  return run;
}

Outcome cli_pipeline() {
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(kWork);
  std::ofstream(kWork / "truth.json") << kPipelineModel;
  const PipelineRun main = pipeline(1);
  bool all_zero = true;
  for (int e : main.exits) {
    all_zero = all_zero && e == 0;
  }
  // Spread of the same statistic over further seeds; reported, not gated.
  int within = 0;
  const int extra = 20;
  for (int seed = 1; seed <= extra; ++seed) {
    within += (seed == 1 ? main : pipeline(seed)).error <= 0.1 ? 1 : 0;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {all_zero && main.error <= 0.1 && secs < 300.0,
          fmt("seed 1: exits %d/%d/%d/%d, max curve error %.3f c on [0.5, 1]; %d/%d seeds within 0.1 c; %.1f s",
              main.exits[0], main.exits[1], main.exits[2], main.exits[3], main.error, within, extra, secs)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"gneiting floor", gneiting},
      {"positive-definiteness suite", psd_suite},
      {"converse probe", converse_probe},
      {"harmonics correctness", harmonics},
      {"coefficient round trip", coefficient_round_trip},
      {"kriging exactness", kriging},
      {"3D-Var", three_d_var},
      {"EnKF consistency", enkf},
      {"simulation fidelity", simulation},
      {"monotone regression", pava},
      {"end-to-end CLI", cli_pipeline},
  };
  int failures = 0;
  int index = 0;
  for (const auto& [name, fn] : criteria) {
    ++index;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
