// Copyright 2026 The qest Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// JSON and CSV serialization. Matrices use {"dim": n, "re": [[..]], "im": [[..]]};
// distributions use CSV with header "label,prob".

#pragma once

#include <charconv>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include "qest/qcore.hpp"

namespace qest {

using json = nlohmann::json;

inline json matrix_to_json(const CMatrix& m) {
  json re = json::array(), im = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json rr = json::array(), ii = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      rr.push_back(m(i, j).real());
      ii.push_back(m(i, j).imag());
    }
    re.push_back(std::move(rr));
    im.push_back(std::move(ii));
  }
  return {{"dim", m.rows()}, {"re", std::move(re)}, {"im", std::move(im)}};
}

inline json matrix_to_json(const RMatrix& m) { return matrix_to_json(CMatrix(m.cast<cplx>())); }

inline json vector_to_json(const RVector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

namespace detail {

inline RMatrix real_rows(const json& rows, Eigen::Index dim, const char* what) {
  require(rows.is_array() && static_cast<Eigen::Index>(rows.size()) == dim,
          std::string("matrix JSON: '") + what + "' must have dim rows");
  RMatrix m(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const json& row = rows[static_cast<size_t>(i)];
    require(row.is_array() && static_cast<Eigen::Index>(row.size()) == dim,
            std::string("matrix JSON: '") + what + "' rows must have dim entries");
    for (Eigen::Index j = 0; j < dim; ++j) {
      require(row[static_cast<size_t>(j)].is_number(), "matrix JSON: entries must be numbers");
      m(i, j) = row[static_cast<size_t>(j)].get<double>();
    }
  }
  return m;
}

}  // namespace detail

/// Accepts {"dim", "re", "im"} (im optional) or a bare array of real rows.
inline CMatrix matrix_from_json(const json& j) {
  if (j.is_array()) {
    const auto dim = static_cast<Eigen::Index>(j.size());
    require(dim > 0, "matrix JSON: empty matrix");
    return detail::real_rows(j, dim, "rows").cast<cplx>();
  }
  require(j.is_object() && j.contains("dim") && j.contains("re"), "matrix JSON needs 'dim' and 're'");
  for (const auto& [key, _] : j.items())
    require(key == "dim" || key == "re" || key == "im", "matrix JSON: unknown key '" + key + "'");
  require(j["dim"].is_number_integer() && j["dim"].get<long>() > 0, "matrix JSON: bad 'dim'");
  const auto dim = static_cast<Eigen::Index>(j["dim"].get<long>());
  CMatrix m = detail::real_rows(j["re"], dim, "re").cast<cplx>();
  if (j.contains("im")) m += kI * detail::real_rows(j["im"], dim, "im").cast<cplx>();
  return m;
}

/// {"elements": [{"label": "...", "dim", "re", "im"}, ...]} as a discrete POVM.
inline Povm povm_from_json(const json& j) {
  require(j.is_object() && j.contains("elements") && j["elements"].is_array(),
          "POVM JSON needs an 'elements' array");
  std::vector<std::string> labels;
  std::vector<CMatrix> ops;
  for (const json& e : j["elements"]) {
    require(e.is_object(), "POVM JSON: elements must be objects");
    json m = e;
    std::string label = std::to_string(ops.size());
    if (m.contains("label")) {
      require(m["label"].is_string(), "POVM JSON: label must be a string");
      label = m["label"].get<std::string>();
      m.erase("label");
    }
    labels.push_back(label);
    ops.push_back(matrix_from_json(m));
  }
  return Povm::discrete(std::move(labels), std::move(ops));
}

inline json povm_to_json(const Povm& p) {
  json els = json::array();
  for (const auto& e : p.elements()) {
    json m = matrix_to_json(CMatrix(e.weight * e.op));
    m["label"] = e.label;
    els.push_back(std::move(m));
  }
  return {{"elements", std::move(els)}};
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("invalid JSON in " + path + ": " + e.what());
  }
}

/// Shortest representation that round-trips, for CSV cells.
inline std::string format_double(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, r.ptr);
}

inline std::string distribution_to_csv(const OutcomeDistribution& d) {
  std::string out = "label,prob\n";
  for (size_t i = 0; i < d.size(); ++i) out += d.labels[i] + "," + format_double(d.probs[i]) + "\n";
  return out;
}

}  // namespace qest
