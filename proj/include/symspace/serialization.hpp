#pragma once

#include <json.hpp>

#include "symspace/iwasawa.hpp"
#include "symspace/quadrature.hpp"

namespace symspace {

using nlohmann::json;

inline json matrix_to_json(const Mat& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline json vector_to_json(const Vec& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline Mat matrix_from_json(const json& j) {
  require(j.is_array() && !j.empty(), Errc::ConfigError, "expected a matrix");
  int rows = static_cast<int>(j.size());
  int cols = static_cast<int>(j[0].size());
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    require(static_cast<int>(j[i].size()) == cols, Errc::ConfigError, "ragged matrix");
    for (int c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

/// {"family": "sl"|"so"|"custom", "n": int, "basis": [[...]]}
inline std::shared_ptr<const MatrixLieAlgebra> algebra_from_config(const json& cfg) {
  require(cfg.contains("family"), Errc::ConfigError, "config needs a family");
  std::string family = cfg["family"].get<std::string>();
  if (family == "sl") {
    require(cfg.contains("n"), Errc::ConfigError, "sl needs n");
    return std::make_shared<const MatrixLieAlgebra>(
        MatrixLieAlgebra::sl(cfg["n"].get<int>()));
  }
  if (family == "so") {
    require(cfg.contains("n"), Errc::ConfigError, "so needs n");
    return std::make_shared<const MatrixLieAlgebra>(
        MatrixLieAlgebra::so_lorentz(cfg["n"].get<int>()));
  }
  if (family == "custom") {
    require(cfg.contains("basis"), Errc::ConfigError, "custom needs a basis list");
    std::vector<Mat> basis;
    for (const auto& b : cfg["basis"]) basis.push_back(matrix_from_json(b));
    return std::make_shared<const MatrixLieAlgebra>(MatrixLieAlgebra::custom(basis));
  }
  fail(Errc::ConfigError, "unknown family '" + family + "'");
}

inline json to_json(const IwasawaStructure& iw) {
  json j;
  j["rank"] = iw.rank();
  j["dim_n"] = iw.dim_n();
  j["m"] = iw.m();
  j["a_basis"] = matrix_to_json(iw.a_basis);
  j["rho"] = vector_to_json(iw.rho);
  json roots = json::array();
  for (const auto& rt : iw.roots) {
    json r;
    r["alpha"] = vector_to_json(rt.alpha);
    r["multiplicity"] = rt.multiplicity();
    r["space"] = matrix_to_json(rt.space);
    roots.push_back(r);
  }
  j["roots"] = roots;
  j["positive"] = iw.positive;
  j["simple"] = iw.simple;
  j["grading"] = iw.d_of_positive;
  j["n_basis"] = matrix_to_json(iw.n_basis);
  return j;
}

inline json to_json(const GoodFrame& fr) {
  json j;
  j["H"] = matrix_to_json(fr.H);
  j["Y"] = matrix_to_json(fr.Y);
  j["alpha"] = matrix_to_json(fr.alpha);
  j["grading"] = fr.d;
  j["rho"] = vector_to_json(fr.rho);
  return j;
}

/// {"box": [[lo,hi],...], "order": n, "err_order": n, "density":
///  "dnda"|"dV_NA"|"dV_AN"}
inline QuadratureGrid grid_from_json(const json& cfg) {
  require(cfg.contains("box"), Errc::ConfigError, "grid config needs a box");
  const auto& jb = cfg["box"];
  Mat box(2, jb.size());
  for (std::size_t k = 0; k < jb.size(); ++k) {
    box(0, k) = jb[k][0].get<double>();
    box(1, k) = jb[k][1].get<double>();
  }
  int order = cfg.value("order", 24);
  int err_order = cfg.value("err_order", 16);
  std::string density = cfg.value("density", "dV_NA");
  Density mode = Density::VolumeNA;
  if (density == "dnda")
    mode = Density::PlainDnDa;
  else if (density == "dV_NA")
    mode = Density::VolumeNA;
  else if (density == "dV_AN")
    mode = Density::VolumeAN;
  else
    fail(Errc::ConfigError, "unknown density mode '" + density + "'");
  return QuadratureGrid(box, order, err_order, mode);
}

}  // namespace symspace
