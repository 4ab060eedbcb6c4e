// SPDX-License-Identifier: Apache-2.0
#pragma once

// JSON documents for models and PSD verdicts.
//
// Model:
//   {
//     "factors": [{"kind": "sphere", "dim": 2, "max_degree": 8},
//                 {"kind": "line", "max_index": 8}],
//     "coefficients": [[[0, 0], 0.25], [[1, 1], 0.75]],
//     "scale": 1.0,
//     "nugget": 0.0,
//     "temporal": [{"shared": {"kind": "cauchy", "scale": 2.0},
//                   "per_index": [[1, {"kind": "constant"}]]}]
//   }
// with one "temporal" entry per line factor, in factor order. Temporal
// kinds: {"kind": "constant"}, {"kind": "cauchy", "scale": c},
// {"kind": "table", "t": [...], "phi": [...]}. An optional "provenance"
// object is carried through untouched.

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sphcov/covariance.hpp"
#include "sphcov/error.hpp"
#include "sphcov/validation.hpp"

namespace sphcov {

using json = nlohmann::json;

namespace detail {

inline json temporal_to_json(const TemporalFactor& f) {
  switch (f.kind()) {
    case TemporalFactor::Kind::constant:
      return {{"kind", "constant"}};
    case TemporalFactor::Kind::cauchy:
      return {{"kind", "cauchy"}, {"scale", f.scale()}};
    case TemporalFactor::Kind::table:
      break;
  }
  return {{"kind", "table"}, {"t", f.grid()}, {"phi", f.values()}};
}

inline TemporalFactor temporal_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "constant") {
    return TemporalFactor::constant();
  }
  if (kind == "cauchy") {
    return TemporalFactor::cauchy(j.at("scale").get<double>());
  }
  if (kind == "table") {
    return TemporalFactor::table(j.at("t").get<std::vector<double>>(), j.at("phi").get<std::vector<double>>());
  }
  fail(ErrorKind::model_invalid, "unknown temporal kind '" + kind + "'");
}

}  // namespace detail

inline json model_to_json(const SpaceTimeModel& model) {
  json factors = json::array();
  json temporal = json::array();
  for (const auto& f : model.factors()) {
    if (const auto* s = std::get_if<SphereFactor>(&f)) {
      factors.push_back({{"kind", "sphere"}, {"dim", s->basis.sphere_dim()}, {"max_degree", s->basis.max_degree()}});
    } else {
      const auto& line = std::get<LineFactor>(f);
      factors.push_back({{"kind", "line"}, {"max_index", line.max_index}});
      json per = json::array();
      for (const auto& [n, tf] : line.temporal.per_index) {
        per.push_back(json::array({n, detail::temporal_to_json(tf)}));
      }
      temporal.push_back({{"shared", detail::temporal_to_json(line.temporal.shared)}, {"per_index", per}});
    }
  }
  json coefficients = json::array();
  for (const auto& [idx, w] : model.weights()) {
    coefficients.push_back(json::array({idx, w}));
  }
  return {{"factors", factors},
          {"coefficients", coefficients},
          {"scale", model.scale()},
          {"nugget", model.nugget()},
          {"temporal", temporal}};
}

enum class ModelCheck {
  strict,   ///< full invariants, including nonnegative normalized weights
  lenient,  ///< structure only; admits hand-edited (e.g. negative) weights
};

inline SpaceTimeModel model_from_json(const json& j, ModelCheck check = ModelCheck::strict) {
  try {
    std::vector<Factor> factors;
    const json& temporal = j.contains("temporal") ? j.at("temporal") : json::array();
    std::size_t line_no = 0;
    for (const auto& f : j.at("factors")) {
      const std::string kind = f.at("kind").get<std::string>();
      if (kind == "sphere") {
        factors.emplace_back(SphereFactor{GegenbauerBasis(f.at("dim").get<int>(), f.at("max_degree").get<int>())});
      } else if (kind == "line") {
        LineFactor line;
        line.max_index = f.at("max_index").get<int>();
        if (line_no < temporal.size()) {
          const json& t = temporal.at(line_no);
          if (t.contains("shared")) {
            line.temporal.shared = detail::temporal_from_json(t.at("shared"));
          }
          if (t.contains("per_index")) {
            for (const auto& entry : t.at("per_index")) {
              line.temporal.per_index.emplace(entry.at(0).get<int>(), detail::temporal_from_json(entry.at(1)));
            }
          }
        }
        ++line_no;
        factors.emplace_back(std::move(line));
      } else {
        detail::fail(ErrorKind::model_invalid, "unknown factor kind '" + kind + "'");
      }
    }
    detail::require(temporal.size() == line_no, ErrorKind::model_invalid,
                    "one temporal entry per line factor required");
    WeightMap weights;
    for (const auto& entry : j.at("coefficients")) {
      auto idx = entry.at(0).get<MultiIndex>();
      const double w = entry.at(1).get<double>();
      detail::require(weights.emplace(std::move(idx), w).second, ErrorKind::model_invalid,
                      "duplicate multi-index in coefficients");
    }
    const double scale = j.at("scale").get<double>();
    const double nugget = j.value("nugget", 0.0);
    if (check == ModelCheck::lenient) {
      return SpaceTimeModel::unchecked(std::move(factors), std::move(weights), scale, nugget);
    }
    return SpaceTimeModel(std::move(factors), std::move(weights), scale, nugget);
  } catch (const json::exception& e) {
    detail::fail(ErrorKind::model_invalid, std::string("malformed model document: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::model_invalid) {
      throw;
    }
    detail::fail(ErrorKind::model_invalid, e.what());
  }
}

inline SpaceTimeModel load_model(const std::string& path, ModelCheck check = ModelCheck::strict) {
  std::ifstream in(path);
  detail::require(static_cast<bool>(in), ErrorKind::io, "cannot open model file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    detail::fail(ErrorKind::model_invalid, "model file '" + path + "' is not valid JSON: " + e.what());
  }
  return model_from_json(j, check);
}

/// Verdict document. An infinite condition number is written as null.
inline json verdict_to_json(const PsdVerdict& v, double condition_number) {
  json j = {{"verdict", v.psd ? "PSD" : "NOT_PSD"},
            {"min_eigenvalue", v.min_eigenvalue},
            {"condition_number", std::isfinite(condition_number) ? json(condition_number) : json(nullptr)},
            {"tol", v.tol}};
  if (!v.psd) {
    j["witness"] = std::vector<double>(v.witness.data(), v.witness.data() + v.witness.size());
  }
  return j;
}

}  // namespace sphcov
