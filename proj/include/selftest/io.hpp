#pragma once

// JSON encoding. Complex matrices are row-major nested arrays of [re, im]
// pairs; vectors are arrays of [re, im]. Doubles are written in the
// shortest form that parses back to the same bits.

#include <charconv>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "selftest/lab.hpp"

namespace selftest::io {

using Json = nlohmann::ordered_json;

inline Json encode(cplx z) { return Json::array({z.real(), z.imag()}); }

inline Json encode(const Operator& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(encode(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json encode(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(encode(v(i)));
  return out;
}

inline Json encode_real(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace detail {

[[noreturn]] inline void bad(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::Parse, where + ": " + what);
}

inline double number(const Json& j, const std::string& where) {
  if (!j.is_number()) bad(where, "expected a number");
  return j.get<double>();
}

}  // namespace detail

inline cplx decode_complex(const Json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2) detail::bad(where, "expected [re, im]");
  return {detail::number(j[0], where), detail::number(j[1], where)};
}

inline Operator decode_matrix(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) detail::bad(where, "expected a matrix");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Operator m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      detail::bad(where, "ragged matrix at row " + std::to_string(i));
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(i, c) = decode_complex(row[static_cast<std::size_t>(c)],
                               where + "[" + std::to_string(i) + "][" + std::to_string(c) + "]");
    }
  }
  return m;
}

inline Vector decode_vector(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) detail::bad(where, "expected a vector");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = decode_complex(j[i], where + "[" + std::to_string(i) + "]");
  }
  return v;
}

inline Json encode(const MeasurementSet& set) {
  Json out = Json::array();
  for (const Povm& f : set) {
    Json fam = Json::array();
    for (const Operator& e : f) fam.push_back(encode(e));
    out.push_back(std::move(fam));
  }
  return out;
}

inline MeasurementSet decode_measurements(const Json& j, const std::string& where) {
  if (!j.is_array()) detail::bad(where, "expected a list of families");
  MeasurementSet set;
  for (std::size_t q = 0; q < j.size(); ++q) {
    const std::string tag = where + "[" + std::to_string(q) + "]";
    if (!j[q].is_array()) detail::bad(tag, "expected a list of elements");
    Povm f;
    for (std::size_t a = 0; a < j[q].size(); ++a) {
      f.push_back(decode_matrix(j[q][a], tag + "[" + std::to_string(a) + "]"));
    }
    set.push_back(std::move(f));
  }
  return set;
}

inline Json encode(const Strategy& s) {
  Json j;
  j["dims"] = {{"A", s.dim_a}, {"B", s.dim_b}};
  if (s.is_pure()) {
    j["state"] = {{"kind", "pure"}, {"data", encode(std::get<Vector>(s.state))}};
  } else {
    j["state"] = {{"kind", "mixed"}, {"data", encode(std::get<Operator>(s.state))}};
  }
  j["alice"] = encode(s.alice);
  j["bob"] = encode(s.bob);
  return j;
}

inline Strategy decode_strategy(const Json& j) {
  if (!j.is_object()) detail::bad("strategy", "expected an object");
  for (const char* key : {"dims", "state", "alice", "bob"}) {
    if (!j.contains(key)) detail::bad("strategy", std::string("missing key '") + key + "'");
  }
  const Json& dims = j["dims"];
  if (!dims.contains("A") || !dims.contains("B") || !dims["A"].is_number_integer() ||
      !dims["B"].is_number_integer()) {
    detail::bad("dims", "expected integer fields A and B");
  }
  Strategy s;
  s.dim_a = dims["A"].get<Eigen::Index>();
  s.dim_b = dims["B"].get<Eigen::Index>();
  const Json& st = j["state"];
  if (!st.contains("kind") || !st.contains("data")) detail::bad("state", "expected kind and data");
  const std::string kind = st["kind"].get<std::string>();
  if (kind == "pure") {
    s.state = decode_vector(st["data"], "state.data");
  } else if (kind == "mixed") {
    s.state = decode_matrix(st["data"], "state.data");
  } else {
    detail::bad("state.kind", "must be \"pure\" or \"mixed\"");
  }
  s.alice = decode_measurements(j["alice"], "alice");
  s.bob = decode_measurements(j["bob"], "bob");
  return s;
}

inline Json encode(const NonlocalGame& g) {
  Json j;
  j["pi"] = encode_real(g.pi);
  Json pred = Json::array();
  for (std::size_t s = 0; s < g.num_s; ++s) {
    Json ps = Json::array();
    for (std::size_t t = 0; t < g.num_t; ++t) {
      Json pt = Json::array();
      for (std::size_t a = 0; a < g.num_a; ++a) {
        Json pa = Json::array();
        for (std::size_t b = 0; b < g.num_b; ++b) pa.push_back(g.wins(a, b, s, t) ? 1 : 0);
        pt.push_back(std::move(pa));
      }
      ps.push_back(std::move(pt));
    }
    pred.push_back(std::move(ps));
  }
  j["predicate"] = std::move(pred);
  return j;
}

inline NonlocalGame decode_game(const Json& j) {
  if (!j.is_object() || !j.contains("pi") || !j.contains("predicate")) {
    detail::bad("game", "expected keys pi and predicate");
  }
  const Json& pi = j["pi"];
  if (!pi.is_array() || pi.empty() || !pi[0].is_array()) detail::bad("pi", "expected a 2-D array");
  NonlocalGame g;
  g.num_s = pi.size();
  g.num_t = pi[0].size();
  g.pi.resize(static_cast<Eigen::Index>(g.num_s), static_cast<Eigen::Index>(g.num_t));
  for (std::size_t s = 0; s < g.num_s; ++s) {
    if (pi[s].size() != g.num_t) detail::bad("pi", "ragged array");
    for (std::size_t t = 0; t < g.num_t; ++t) {
      g.pi(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) = detail::number(pi[s][t], "pi");
    }
  }
  const Json& p = j["predicate"];
  try {
    g.num_a = p.at(0).at(0).size();
    g.num_b = p.at(0).at(0).at(0).size();
  } catch (const nlohmann::json::exception&) {
    detail::bad("predicate", "expected a 4-D array [s][t][a][b]");
  }
  g.predicate.assign(g.num_s * g.num_t * g.num_a * g.num_b, 0);
  if (p.size() != g.num_s) detail::bad("predicate", "first axis must match pi rows");
  for (std::size_t s = 0; s < g.num_s; ++s) {
    if (p[s].size() != g.num_t) detail::bad("predicate", "second axis must match pi columns");
    for (std::size_t t = 0; t < g.num_t; ++t) {
      if (p[s][t].size() != g.num_a) detail::bad("predicate", "ragged answer axis");
      for (std::size_t a = 0; a < g.num_a; ++a) {
        if (p[s][t][a].size() != g.num_b) detail::bad("predicate", "ragged answer axis");
        for (std::size_t b = 0; b < g.num_b; ++b) {
          const Json& v = p[s][t][a][b];
          const bool win = v.is_boolean() ? v.get<bool>() : detail::number(v, "predicate") != 0.0;
          g.predicate[g.index(a, b, s, t)] = win ? 1 : 0;
        }
      }
    }
  }
  g.validate();
  return g;
}

/// Witness as read from file; ancilla factor sizes may be omitted and are
/// then inferred from the target strategy.
struct WitnessFile {
  Operator u_a;
  Operator u_b;
  std::optional<Vector> aux;
  std::optional<Operator> sigma_aux;
  std::optional<std::pair<Eigen::Index, Eigen::Index>> aux_dims;
  std::string form = "vector";
};

inline WitnessFile decode_witness(const Json& j) {
  if (!j.is_object() || !j.contains("U_A") || !j.contains("U_B")) {
    detail::bad("witness", "expected keys U_A and U_B");
  }
  WitnessFile w;
  w.u_a = decode_matrix(j["U_A"], "U_A");
  w.u_b = decode_matrix(j["U_B"], "U_B");
  if (j.contains("aux")) w.aux = decode_vector(j["aux"], "aux");
  if (j.contains("sigma_aux")) w.sigma_aux = decode_matrix(j["sigma_aux"], "sigma_aux");
  if (j.contains("aux_dims")) {
    const Json& d = j["aux_dims"];
    if (!d.is_array() || d.size() != 2) detail::bad("aux_dims", "expected [dim A^, dim B^]");
    w.aux_dims = std::make_pair(d[0].get<Eigen::Index>(), d[1].get<Eigen::Index>());
  }
  if (j.contains("form")) w.form = j["form"].get<std::string>();
  if (w.form != "vector" && w.form != "matrix" && w.form != "extraction") {
    detail::bad("form", "must be vector, matrix or extraction");
  }
  return w;
}

inline Json encode(const DilationWitness& w, const std::string& form = "vector") {
  Json j;
  j["U_A"] = encode(w.u_a);
  j["U_B"] = encode(w.u_b);
  j["aux"] = encode(w.aux);
  j["aux_dims"] = {w.aux_a, w.aux_b};
  j["form"] = form;
  return j;
}

inline Json encode(const ValidationReport& r) {
  Json j;
  j["valid"] = r.valid;
  auto fams = [](const std::vector<FamilyReport>& v) {
    Json out = Json::array();
    for (const FamilyReport& f : v) {
      out.push_back({{"question", f.question},
                     {"outcomes", f.outcomes},
                     {"completeness_defect", f.completeness_defect},
                     {"min_eigenvalue", f.min_eigenvalue},
                     {"hermiticity_defect", f.hermiticity_defect}});
    }
    return out;
  };
  j["alice"] = fams(r.alice);
  j["bob"] = fams(r.bob);
  j["state"] = {{"norm_defect", r.state_norm_defect},
                {"min_eigenvalue", r.state_min_eigenvalue},
                {"hermiticity_defect", r.state_hermiticity_defect}};
  j["issues"] = r.issues;
  return j;
}

inline Json encode(const Correlation& c) {
  Json out = Json::array();
  for (const auto& row : c.table) {
    Json r = Json::array();
    for (const Eigen::MatrixXd& block : row) r.push_back(encode_real(block));
    out.push_back(std::move(r));
  }
  return out;
}

inline Json encode(const StrategyMetrics& m) {
  Json j;
  j["support_eps"] = m.support_eps;
  j["projective_eps"] = m.projective_eps;
  auto table = [](const std::vector<std::vector<ElementMetric>>& t) {
    Json out = Json::array();
    for (const auto& row : t) {
      Json r = Json::array();
      for (const ElementMetric& e : row) r.push_back({{"commutator", e.commutator}, {"projectivity", e.projectivity}});
      out.push_back(std::move(r));
    }
    return out;
  };
  j["alice"] = table(m.alice);
  j["bob"] = table(m.bob);
  return j;
}

inline Json encode(const ResidualReport& r) {
  Json j;
  j["eps"] = r.eps;
  j["state_residual"] = r.state_residual;
  j["alice"] = r.alice;
  j["bob"] = r.bob;
  return j;
}

inline Json encode(const ExtractionReport& r) {
  Json j;
  j["eps"] = r.eps;
  j["state_residual"] = r.state_residual;
  j["alice"] = r.alice;
  j["bob"] = r.bob;
  j["aux"] = encode(r.aux);
  j["aux_dims"] = {r.aux_a, r.aux_b};
  return j;
}

inline Json encode(const lab::EigengapReport& r) {
  Json j;
  j["lambda0"] = r.lambda0;
  j["lambda1"] = r.lambda1;
  j["gap"] = r.gap;
  j["top_multiplicity"] = r.top_multiplicity;
  j["p0"] = r.p0;
  j["state_bound"] = r.state_bound;
  j["energy"] = r.energy;
  j["delta"] = r.delta;
  j["delta_eff"] = r.delta_eff;
  j["p0_bound"] = r.p0_bound;
  j["distance_bound"] = r.distance_bound;
  j["bound_holds"] = r.bound_holds;
  return j;
}

/// Shortest round-trip decimal form of a double.
inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline std::string robustness_csv(const std::vector<lab::RobustnessRow>& rows) {
  std::string out = "magnitude,delta,epsilon,bound\n";
  for (const lab::RobustnessRow& r : rows) {
    out += format_double(r.magnitude) + "," + format_double(r.delta) + "," + format_double(r.epsilon) + "," +
           format_double(r.bound) + "\n";
  }
  return out;
}

/// Parses text, reporting malformed input with line and column.
inline Json parse_text(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(ErrorCode::Parse, source + ":" + std::to_string(line) + ":" + std::to_string(col) +
                                      ": malformed JSON");
  }
}

inline Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Parse, path + ": cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str(), path);
}

inline Strategy parse_strategy_file(const std::string& path) {
  const Json j = read_json(path);
  try {
    return decode_strategy(j);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, path + ": " + e.what());
  }
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Parse, path + ": cannot open for writing");
  out << text;
}

}  // namespace selftest::io
