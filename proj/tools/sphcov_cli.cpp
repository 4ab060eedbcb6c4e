// SPDX-License-Identifier: Apache-2.0
// sphcov: command-line front end for the sphcov library.
//
//   sphcov eval       --model M (--pairs F | --grid SPEC)
//   sphcov validate   --model M --points N --seed S --tol T
//   sphcov fit        --data F --dim D --degree N [--monotone] [--time-window W] --out M
//   sphcov krige      --model M --data F --targets F [--mean m] [--neighborhood x_min,t_max]
//   sphcov simulate   --model M (--points F | --random-sites N --times LIST) --draws D --seed S
//   sphcov assimilate --problem F --method 3dvar|enkf [--ensemble N] [--seed S]
//
// Exit codes: 0 ok, 1 I/O or bad input, 2 model invalid, 3 not PSD,
// 4 insufficient data.

#include <sphcov/sphcov.hpp>

#include <CLI11.hpp>

#include <array>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <iterator>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace sphcov;

std::string num(double v) {
  if (std::isnan(v)) {
    return "nan";
  }
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  detail::require(static_cast<bool>(in), ErrorKind::io, "cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Output sink: a file when a path is given, stdout otherwise.
class Sink {
public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      detail::require(static_cast<bool>(file_), ErrorKind::io, "cannot write '" + path + "'");
    }
  }
  std::ostream& out() { return file_.is_open() ? file_ : std::cout; }
  void close(const std::string& path) {
    out().flush();
    detail::require(static_cast<bool>(out()), ErrorKind::io, "write failed for '" + (path.empty() ? "stdout" : path) + "'");
  }

private:
  std::ofstream file_;
};

/// Numeric CSV table whose header starts with `columns`; extra columns ignored.
std::vector<std::vector<double>> read_table(const std::string& path, const std::vector<std::string>& columns) {
  std::istringstream in(read_file(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  std::string expected;
  for (const auto& c : columns) {
    expected += (expected.empty() ? "" : ",") + c;
  }
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (line_no == 1 && view.starts_with("\xEF\xBB\xBF")) {
      view.remove_prefix(3);
    }
    if (detail::trim(view).empty()) {
      continue;
    }
    const auto fields = detail::split_csv(view);
    const auto where = path + ":" + std::to_string(line_no) + ": ";
    if (!header) {
      bool ok = fields.size() >= columns.size();
      for (std::size_t i = 0; ok && i < columns.size(); ++i) {
        ok = fields[i] == columns[i];
      }
      detail::require(ok, ErrorKind::invalid_argument, where + "expected header '" + expected + "'");
      header = true;
      continue;
    }
    detail::require(fields.size() >= columns.size(), ErrorKind::invalid_argument,
                    where + "expected " + std::to_string(columns.size()) + " fields");
    std::vector<double> row(columns.size());
    for (std::size_t i = 0; i < columns.size(); ++i) {
      detail::require(detail::parse_double(fields[i], row[i]) && std::isfinite(row[i]), ErrorKind::invalid_argument,
                      where + "malformed number in column '" + columns[i] + "'");
    }
    rows.push_back(std::move(row));
  }
  detail::require(header, ErrorKind::invalid_argument, path + ": expected header '" + expected + "'");
  return rows;
}

std::vector<ObservationRecord> read_records(const std::string& path) {
  std::istringstream in(read_file(path));
  try {
    return ingest_csv(in);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

/// Geographic (lat, lon, t) mapped onto models made of one S^2 factor and at
/// most one line factor, in either order.
class GeoLayout {
public:
  explicit GeoLayout(const SpaceTimeModel& model) {
    bool sphere = false;
    for (const auto& f : model.factors()) {
      if (const auto* s = std::get_if<SphereFactor>(&f)) {
        detail::require(!sphere && s->basis.sphere_dim() == 2, ErrorKind::model_invalid,
                        "geographic data needs exactly one S^2 factor and at most one line factor");
        sphere = true;
      } else {
        detail::require(!has_time_, ErrorKind::model_invalid,
                        "geographic data needs exactly one S^2 factor and at most one line factor");
        has_time_ = true;
      }
    }
    detail::require(sphere, ErrorKind::model_invalid, "geographic data needs an S^2 factor");
  }

  [[nodiscard]] SpaceTimePoint point(double lat, double lon, double t) const {
    SpaceTimePoint p{{from_lat_lon(lat, lon)}, {}};
    if (has_time_) {
      p.times.push_back(t);
    }
    return p;
  }

  [[nodiscard]] bool has_time() const { return has_time_; }

private:
  bool has_time_ = false;
};

std::string separation_header(const SpaceTimeModel& model) {
  std::string h;
  int xs = 0;
  int ts = 0;
  for (const auto& f : model.factors()) {
    h += std::holds_alternative<SphereFactor>(f) ? "x" + std::to_string(++xs) : "t" + std::to_string(++ts);
    h += ",";
  }
  return h + "value";
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (auto field : detail::split_csv(text)) {
    double v = 0.0;
    detail::require(detail::parse_double(field, v) && std::isfinite(v), ErrorKind::invalid_argument,
                    "malformed number in " + what + ": '" + std::string(field) + "'");
    out.push_back(v);
  }
  return out;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string model;
  std::string pairs;
  std::string grid;
  std::string out;
};

/// Grid spec: one "start:stop:count" per factor, separated by ';', in factor order.
std::vector<std::vector<double>> parse_grid(const std::string& spec, std::size_t factors) {
  std::vector<std::vector<double>> axes;
  std::string_view rest(spec);
  while (true) {
    const auto semi = rest.find(';');
    const auto part = detail::trim(rest.substr(0, semi));
    std::vector<double> fields;
    std::size_t start = 0;
    while (true) {
      const auto colon = part.find(':', start);
      double v = 0.0;
      const auto tok = part.substr(start, colon == std::string_view::npos ? std::string_view::npos : colon - start);
      detail::require(detail::parse_double(detail::trim(tok), v) && std::isfinite(v), ErrorKind::invalid_argument,
                      "grid: malformed number '" + std::string(tok) + "'");
      fields.push_back(v);
      if (colon == std::string_view::npos) {
        break;
      }
      start = colon + 1;
    }
    detail::require(fields.size() == 3 && fields[2] >= 1.0 && fields[2] == std::floor(fields[2]),
                    ErrorKind::invalid_argument, "grid: each axis is start:stop:count with count >= 1");
    const auto count = static_cast<int>(fields[2]);
    std::vector<double> axis;
    for (int i = 0; i < count; ++i) {
      axis.push_back(count == 1 ? fields[0] : fields[0] + (fields[1] - fields[0]) * i / (count - 1));
    }
    axes.push_back(std::move(axis));
    if (semi == std::string_view::npos) {
      break;
    }
    rest.remove_prefix(semi + 1);
  }
  detail::require(axes.size() == factors, ErrorKind::invalid_argument,
                  "grid: need one axis per model factor (" + std::to_string(factors) + ")");
  return axes;
}

int run_eval(const EvalArgs& a) {
  const auto model = load_model(a.model);
  Sink sink(a.out);
  auto& out = sink.out();
  out << separation_header(model) << '\n';
  if (!a.pairs.empty()) {
    const GeoLayout layout(model);
    for (const auto& r : read_table(a.pairs, {"lat1", "lon1", "t1", "lat2", "lon2", "t2"})) {
      const auto p = layout.point(r[0], r[1], r[2]);
      const auto q = layout.point(r[3], r[4], r[5]);
      const auto sep = separation(model, p, q);
      for (double x : sep.x) {
        out << num(x) << ',';
      }
      for (double t : sep.t) {
        out << num(t) << ',';
      }
      out << num(eval_gmp(model, p, q)) << '\n';
    }
  } else {
    const auto axes = parse_grid(a.grid, model.factors().size());
    std::vector<std::size_t> idx(axes.size(), 0);
    while (true) {
      Separation sep;
      std::vector<double> row;
      for (std::size_t k = 0; k < axes.size(); ++k) {
        const double v = axes[k][idx[k]];
        row.push_back(v);
        (std::holds_alternative<SphereFactor>(model.factors()[k]) ? sep.x : sep.t).push_back(v);
      }
      for (double v : row) {
        out << num(v) << ',';
      }
      out << num(model(sep)) << '\n';
      std::size_t k = axes.size();
      while (k > 0) {
        --k;
        if (++idx[k] < axes[k].size()) {
          break;
        }
        idx[k] = 0;
        if (k == 0) {
          k = axes.size() + 1;
          break;
        }
      }
      if (k == axes.size() + 1) {
        break;
      }
    }
  }
  sink.close(a.out);
  return 0;
}

// ---------------------------------------------------------------- validate

struct ValidateArgs {
  std::string model;
  int points = 100;
  std::uint64_t seed = 0;
  double tol = 1e-8;
  double time_span = 5.0;
  std::string out;
};

int run_validate(const ValidateArgs& a) {
  detail::require(a.points >= 1, ErrorKind::invalid_argument, "--points must be >= 1");
  detail::require(a.time_span >= 0.0, ErrorKind::invalid_argument, "--time-span must be >= 0");
  const auto model = load_model(a.model, ModelCheck::lenient);
  Rng rng(a.seed);
  std::vector<SpaceTimePoint> pts;
  for (int i = 0; i < a.points; ++i) {
    SpaceTimePoint p;
    for (const auto& f : model.factors()) {
      if (const auto* s = std::get_if<SphereFactor>(&f)) {
        p.spheres.push_back(SpherePoint::random(s->basis.sphere_dim(), rng));
      } else {
        p.times.push_back(rng.uniform(0.0, a.time_span));
      }
    }
    pts.push_back(std::move(p));
  }
  const auto g = build_gram(model, std::move(pts));
  const auto verdict = psd_check(g, a.tol);
  json doc = verdict_to_json(verdict, condition_number(g));
  doc["seed"] = a.seed;
  Sink sink(a.out);
  sink.out() << doc.dump(2) << '\n';
  sink.close(a.out);
  return verdict.psd ? 0 : 3;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  std::string data;
  int dim = 2;
  int degree = 8;
  bool monotone = false;
  double time_window = 0.0;
  int bins = 20;
  std::optional<double> time_scale;
  std::optional<double> mean;
  std::string out;
};

int run_fit(const FitArgs& a) {
  detail::require(a.dim >= 2, ErrorKind::invalid_argument, "--dim must be >= 2 (data live on S^2)");
  detail::require(a.degree >= 0, ErrorKind::invalid_argument, "--degree must be >= 0");
  const std::string bytes = read_file(a.data);
  std::istringstream in(bytes);
  std::vector<ObservationRecord> records;
  try {
    records = ingest_csv(in);
  } catch (const Error& e) {
    throw Error(e.kind(), a.data + ": " + e.what());
  }
  const auto bins = empirical_isotropic_correlation(records, a.bins, a.time_window, a.mean);
  std::vector<CurvePoint> curve;
  for (const auto& b : bins) {
    curve.push_back({b.x, b.cov, static_cast<double>(b.count)});
  }
  // Zero-lag point: the sample variance about the same mean, one weight unit per record.
  double mean = 0.0;
  if (a.mean) {
    mean = *a.mean;
  } else {
    for (const auto& r : records) {
      mean += r.value;
    }
    mean /= static_cast<double>(records.size());
  }
  double variance = 0.0;
  for (const auto& r : records) {
    variance += (r.value - mean) * (r.value - mean);
  }
  variance /= static_cast<double>(records.size());
  curve.push_back({1.0, variance, static_cast<double>(records.size())});
  detail::require(curve.size() >= static_cast<std::size_t>(a.degree) + 1, ErrorKind::insufficient_data,
                  std::to_string(bins.size()) + " nonempty bins cannot determine degree " +
                      std::to_string(a.degree) + "; lower --degree or raise --bins");
  const GegenbauerBasis basis(a.dim, a.degree);
  auto fit = fit_nonnegative(curve, basis, a.degree);
  SchoenbergSequence seq = fit.sequence;
  if (a.monotone) {
    const std::vector<double> ones(seq.coefficients().size(), 1.0);
    seq = SchoenbergSequence(seq.scale(), monotone_shape(seq.coefficients(), ones));
  }
  std::optional<SpaceTimeModel> model;
  if (a.time_scale) {
    TemporalAssignment temporal;
    temporal.shared = TemporalFactor::cauchy(*a.time_scale);
    model = make_bp_model(seq, basis, temporal);
  } else {
    model = make_bs_model(seq, basis);
  }

  json doc = model_to_json(*model);
  json jbins = json::array();
  for (const auto& b : bins) {
    jbins.push_back({{"x", b.x}, {"cov", b.cov}, {"corr", b.corr}, {"count", b.count}});
  }
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  doc["provenance"] = {
      {"source", a.data},
      {"source_fnv1a64", hash},
      {"records", records.size()},
      {"residual", fit.residual},
      {"variance", variance},
      {"bins", jbins},
      {"flags",
       {{"dim", a.dim},
        {"degree", a.degree},
        {"monotone", a.monotone},
        {"time_window", a.time_window},
        {"bins", a.bins},
        {"time_scale", a.time_scale ? json(*a.time_scale) : json(nullptr)},
        {"mean", a.mean ? json(*a.mean) : json(nullptr)}}}};
  Sink sink(a.out);
  sink.out() << doc.dump(2) << '\n';
  sink.close(a.out);
  return 0;
}

// ---------------------------------------------------------------- krige

struct KrigeArgs {
  std::string model;
  std::string data;
  std::string targets;
  std::optional<double> mean;
  std::string neighborhood;
  std::string out;
};

int run_krige(const KrigeArgs& a) {
  const auto model = load_model(a.model);
  const GeoLayout layout(model);
  const auto records = read_records(a.data);
  detail::require(!records.empty(), ErrorKind::insufficient_data, a.data + ": no observations");
  std::vector<SpaceTimePoint> pts;
  Eigen::VectorXd values(static_cast<Eigen::Index>(records.size()));
  double sample_mean = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    pts.push_back(layout.point(records[i].lat, records[i].lon, records[i].t));
    values[static_cast<Eigen::Index>(i)] = records[i].value;
    sample_mean += records[i].value;
  }
  sample_mean /= static_cast<double>(records.size());
  std::optional<std::pair<double, double>> hood;
  if (!a.neighborhood.empty()) {
    const auto v = parse_list(a.neighborhood, "--neighborhood");
    detail::require(v.size() == 2 && v[0] >= -1.0 && v[0] <= 1.0 && v[1] >= 0.0, ErrorKind::invalid_argument,
                    "--neighborhood is x_min,t_max with x_min in [-1, 1] and t_max >= 0");
    hood = std::make_pair(v[0], v[1]);
  }
  const auto targets = read_table(a.targets, {"lat", "lon", "t"});
  const KrigingSystem system(model, std::move(pts), std::move(values), a.mean.value_or(sample_mean));
  Sink sink(a.out);
  auto& out = sink.out();
  out << "target_lat,target_lon,target_t,prediction,variance\n";
  for (const auto& t : targets) {
    const auto p = layout.point(t[0], t[1], t[2]);
    const auto r = hood ? krige_neighborhood(system, model, p, hood->first, hood->second) : krige(system, model, p);
    out << num(t[0]) << ',' << num(t[1]) << ',' << num(t[2]) << ',' << num(r.prediction) << ','
        << num(r.variance) << '\n';
  }
  sink.close(a.out);
  return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string model;
  std::string points;
  int random_sites = 0;
  std::string times = "0";
  int draws = 1;
  std::uint64_t seed = 0;
  std::string out;
};

int run_simulate(const SimulateArgs& a) {
  const auto model = load_model(a.model);
  const GeoLayout layout(model);
  std::vector<std::array<double, 3>> sites;
  if (!a.points.empty()) {
    for (const auto& r : read_table(a.points, {"lat", "lon", "t"})) {
      sites.push_back({r[0], r[1], r[2]});
    }
  } else {
    detail::require(a.random_sites >= 1, ErrorKind::invalid_argument, "give --points or --random-sites N >= 1");
    const auto times = parse_list(a.times, "--times");
    Rng rng(derive_seed(a.seed, 0xA11CE));
    constexpr double deg = 180.0 / std::numbers::pi;
    for (int s = 0; s < a.random_sites; ++s) {
      const double lat = std::asin(rng.uniform(-1.0, 1.0)) * deg;
      double lon = rng.uniform(-180.0, 180.0);
      if (lon <= -180.0) {
        lon = 180.0;
      }
      for (double t : times) {
        sites.push_back({lat, lon, t});
      }
    }
  }
  detail::require(!sites.empty(), ErrorKind::insufficient_data, "no simulation points");
  std::vector<SpaceTimePoint> pts;
  for (const auto& s : sites) {
    pts.push_back(layout.point(s[0], s[1], s[2]));
  }
  const Eigen::MatrixXd field = sample_field(model, std::move(pts), a.draws, a.seed);
  Sink sink(a.out);
  auto& out = sink.out();
  out << "lat,lon,t,value,draw\n";
  for (Eigen::Index d = 0; d < field.rows(); ++d) {
    for (std::size_t i = 0; i < sites.size(); ++i) {
      out << num(sites[i][0]) << ',' << num(sites[i][1]) << ',' << num(sites[i][2]) << ','
          << num(field(d, static_cast<Eigen::Index>(i))) << ',' << d << '\n';
    }
  }
  sink.close(a.out);
  return 0;
}

// ---------------------------------------------------------------- assimilate

struct AssimilateArgs {
  std::string problem;
  std::string method = "3dvar";
  int ensemble = 100;
  std::uint64_t seed = 0;
  double tol = 1e-10;
  int max_iters = 0;
  std::string out;
};

Eigen::VectorXd vector_from(const json& j, const std::string& what) {
  detail::require(j.is_array() && !j.empty(), ErrorKind::invalid_argument, what + " must be a nonempty array");
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd matrix_from(const json& j, const std::string& what) {
  detail::require(j.is_array() && !j.empty() && j.at(0).is_array(), ErrorKind::invalid_argument,
                  what + " must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto row = j.at(static_cast<std::size_t>(i)).get<std::vector<double>>();
    detail::require(static_cast<Eigen::Index>(row.size()) == cols, ErrorKind::invalid_argument,
                    what + " rows differ in length");
    for (Eigen::Index k = 0; k < cols; ++k) {
      m(i, k) = row[static_cast<std::size_t>(k)];
    }
  }
  return m;
}

/// A covariance given as a matrix, {"diagonal": [...]}, or
/// {"model": <model>, "points": [[lat, lon, t], ...]}.
Eigen::MatrixXd covariance_from(const json& j, const std::string& what) {
  if (j.is_array()) {
    return matrix_from(j, what);
  }
  detail::require(j.is_object(), ErrorKind::invalid_argument, what + " must be a matrix or an object");
  if (j.contains("diagonal")) {
    return vector_from(j.at("diagonal"), what + ".diagonal").asDiagonal();
  }
  const auto model = model_from_json(j.at("model"));
  const GeoLayout layout(model);
  std::vector<SpaceTimePoint> pts;
  for (const auto& p : j.at("points")) {
    const auto v = p.get<std::vector<double>>();
    detail::require(v.size() == 3, ErrorKind::invalid_argument, what + ".points entries are [lat, lon, t]");
    pts.push_back(layout.point(v[0], v[1], v[2]));
  }
  return build_gram(model, std::move(pts)).entries;
}

int run_assimilate(const AssimilateArgs& a) {
  json doc;
  try {
    doc = json::parse(read_file(a.problem));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::invalid_argument, a.problem + ": not valid JSON: " + e.what());
  }
  Eigen::VectorXd xb;
  Eigen::VectorXd yo;
  Eigen::MatrixXd h;
  Eigen::MatrixXd b;
  Eigen::MatrixXd r;
  double floor = 0.0;
  try {
    xb = vector_from(doc.at("x_b"), "x_b");
    yo = vector_from(doc.at("y_o"), "y_o");
    h = matrix_from(doc.at("H"), "H");
    b = covariance_from(doc.at("B"), "B");
    r = covariance_from(doc.at("R"), "R");
    floor = doc.value("obs_variance_floor", 0.0);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::invalid_argument, a.problem + ": " + e.what());
  }
  Eigen::VectorXd analysis;
  if (a.method == "3dvar") {
    const VarProblem problem(xb, yo, h, b, r, floor);
    const int iters = a.max_iters > 0 ? a.max_iters : 10 * static_cast<int>(xb.size()) + 100;
    analysis = solve_3dvar(problem, a.tol, iters).analysis;
  } else {
    detail::require(a.ensemble >= 2, ErrorKind::invalid_argument, "--ensemble must be >= 2");
    // Same checks as the variational path.
    const VarProblem problem(xb, yo, h, b, r, floor);
    Eigen::MatrixXd members = sample_gaussian(problem.background_cov(), a.ensemble, derive_seed(a.seed, 0));
    members.rowwise() += xb.transpose();
    const Eigen::MatrixXd updated = enkf_update(members, yo, h, problem.obs_cov(), derive_seed(a.seed, 1));
    analysis = updated.colwise().mean().transpose();
  }
  Sink sink(a.out);
  auto& out = sink.out();
  out << "index,value\n";
  for (Eigen::Index i = 0; i < analysis.size(); ++i) {
    out << i << ',' << num(analysis[i]) << '\n';
  }
  sink.close(a.out);
  return 0;
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::model_invalid:
      return 2;
    case ErrorKind::not_psd:
      return 3;
    case ErrorKind::insufficient_data:
      return 4;
    case ErrorKind::io:
    case ErrorKind::invalid_argument:
    case ErrorKind::numerical:
      break;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Covariance models on spheres and sphere x time"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "sphcov 1.0.0");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Evaluate a model at point pairs or on a separation grid");
  eval->add_option("--model", ev.model, "Model JSON")->required();
  auto* pairs = eval->add_option("--pairs", ev.pairs, "CSV with lat1,lon1,t1,lat2,lon2,t2");
  auto* grid = eval->add_option("--grid", ev.grid, "start:stop:count per factor, ';'-separated");
  pairs->excludes(grid);
  eval->add_option("--out", ev.out, "Output CSV (default stdout)");

  ValidateArgs va;
  auto* validate = app.add_subcommand("validate", "PSD check of a model's Gram matrix over random points");
  validate->add_option("--model", va.model, "Model JSON")->required();
  validate->add_option("--points", va.points, "Number of random points")->capture_default_str();
  validate->add_option("--seed", va.seed, "Random seed")->capture_default_str();
  validate->add_option("--tol", va.tol, "Relative eigenvalue tolerance")->capture_default_str();
  validate->add_option("--time-span", va.time_span, "Times drawn from [0, span)")->capture_default_str();
  validate->add_option("--out", va.out, "Output JSON (default stdout)");

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit a nonnegative Gegenbauer model to observations");
  fit->add_option("--data", fa.data, "CSV with lat,lon,t,value")->required();
  fit->add_option("--dim", fa.dim, "Sphere dimension of the fitted basis (>= 2)")->capture_default_str();
  fit->add_option("--degree", fa.degree, "Maximum degree")->capture_default_str();
  fit->add_flag("--monotone", fa.monotone, "Force nonincreasing coefficients");
  fit->add_option("--time-window", fa.time_window, "Pair records with |dt| <= W")->capture_default_str();
  fit->add_option("--bins", fa.bins, "Number of cosine bins")->capture_default_str();
  fit->add_option("--time-scale", fa.time_scale, "Write a space-time model with this Cauchy time scale");
  fit->add_option("--mean", fa.mean, "Known field mean (default: sample mean)");
  fit->add_option("--out", fa.out, "Output model JSON (default stdout)");

  KrigeArgs ka;
  auto* krige_cmd = app.add_subcommand("krige", "Simple kriging at target points");
  krige_cmd->add_option("--model", ka.model, "Model JSON")->required();
  krige_cmd->add_option("--data", ka.data, "CSV with lat,lon,t,value")->required();
  krige_cmd->add_option("--targets", ka.targets, "CSV with lat,lon,t")->required();
  krige_cmd->add_option("--mean", ka.mean, "Known field mean (default: sample mean)");
  krige_cmd->add_option("--neighborhood", ka.neighborhood, "x_min,t_max");
  krige_cmd->add_option("--out", ka.out, "Output CSV (default stdout)");

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Gaussian field draws");
  simulate->add_option("--model", sa.model, "Model JSON")->required();
  auto* sim_points = simulate->add_option("--points", sa.points, "CSV with lat,lon,t");
  auto* sim_sites = simulate->add_option("--random-sites", sa.random_sites, "Number of uniform random sites");
  sim_points->excludes(sim_sites);
  simulate->add_option("--times", sa.times, "Comma-separated times for random sites")->capture_default_str();
  simulate->add_option("--draws", sa.draws, "Number of draws")->capture_default_str();
  simulate->add_option("--seed", sa.seed, "Random seed")->capture_default_str();
  simulate->add_option("--out", sa.out, "Output CSV (default stdout)");

  AssimilateArgs aa;
  auto* assimilate = app.add_subcommand("assimilate", "3D-Var or EnKF analysis");
  assimilate->add_option("--problem", aa.problem, "Problem JSON")->required();
  assimilate->add_option("--method", aa.method, "3dvar or enkf")
      ->check(CLI::IsMember({"3dvar", "enkf"}))
      ->capture_default_str();
  assimilate->add_option("--ensemble", aa.ensemble, "EnKF ensemble size")->capture_default_str();
  assimilate->add_option("--seed", aa.seed, "Random seed")->capture_default_str();
  assimilate->add_option("--tol", aa.tol, "CG relative residual tolerance")->capture_default_str();
  assimilate->add_option("--max-iters", aa.max_iters, "CG iteration cap (default 10 n + 100)");
  assimilate->add_option("--out", aa.out, "Output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (eval->parsed()) {
      if (ev.pairs.empty() && ev.grid.empty()) {
        std::cerr << "sphcov eval: give --pairs or --grid\n";
        return 1;
      }
      return run_eval(ev);
    }
    if (validate->parsed()) {
      return run_validate(va);
    }
    if (fit->parsed()) {
      return run_fit(fa);
    }
    if (krige_cmd->parsed()) {
      return run_krige(ka);
    }
    if (simulate->parsed()) {
      return run_simulate(sa);
    }
    return run_assimilate(aa);
  } catch (const Error& e) {
    std::cerr << "sphcov: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const json::exception& e) {
    std::cerr << "sphcov: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "sphcov: " << e.what() << '\n';
    return 1;
  }
}
