#pragma once

/// \file
/// Verification manifests: JSON documents naming the structures, the
/// deformation parameter sets, the sampling plan and tolerance overrides.
///
/// {
///   "structures": [{"label": "sphere", "family": "riemannian_conformal", "dim": 2,
///                   "parameters": {"c": 1}, "box": [-0.5, 0.5]}],
///   "params":     [{"label": "integrable", "alpha": 1, "beta": 1, "c": 1}],
///   "sampling":   {"seed": 7, "points": 50, "structural_points": 100, "p_norm_range": [0.5, 2]},
///   "tolerances": {"double_fd": 1e-3}
/// }
///
/// Families and their parameters:
///   flat                  {}
///   riemannian_conformal  {"c": number}
///   randers               {"b": [number | expression, ...], "c": number (curvature of the base, default 0)}
///   expression            {"k2": expression in x1..xn, p1..pn, "curvature": number (optional)}
/// A parameter set has "alpha", "beta" and either "c" (v = -c alpha beta^2) or
/// "v" (expression in tau); "structures" optionally restricts it to labels.

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cartanlab/sampling.hpp"
#include "json.hpp"

namespace cartanlab {

using Json = nlohmann::ordered_json;

struct Tolerances {
  double jet_exact = 1e-9;
  double structural = 1e-7;
  double hermitian = 1e-10;
  double single_fd = 1e-5;
  double connection = 1e-4;
  double double_fd = 1e-3;   ///< relative to max(1, |reference|)
  double einstein = 1e-3;
  double operators = 1e-6;
  double spray = 1e-5;
  double duality = 1e-8;
  double laplacian = 1e-4;
  /// Lower bounds that witness a failure (perturbed Nijenhuis, Einstein
  /// defect of the obstruction); not scaled by --tol-scale.
  double nonintegrable_floor = 1e-2;

  void scale(double s) {
    for (double* t : {&jet_exact, &structural, &hermitian, &single_fd, &connection, &double_fd, &einstein, &operators,
                      &spray, &duality, &laplacian})
      *t *= s;
  }
};

struct StructureSpec {
  CartanStructure structure;
  SamplingBox box;
  Json echo;
};

struct Manifest {
  std::vector<StructureSpec> structures;
  std::vector<DeformationParams> params;
  SamplingSpec sampling;
  Tolerances tolerances;
  Json echo;

  const StructureSpec& structure(const std::string& label) const {
    for (const auto& s : structures)
      if (s.structure.label == label) return s;
    throw ManifestError("unknown structure label '" + label + "'");
  }
  const DeformationParams& param_set(const std::string& label) const {
    for (const auto& p : params)
      if (p.label == label) return p;
    throw ManifestError("unknown parameter set label '" + label + "'");
  }
};

namespace detail {

inline void reject_unknown(const Json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ManifestError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ManifestError(where + ": unknown key '" + key + "'");
  }
}

inline const Json& require(const Json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key)) throw ManifestError(where + ": missing key '" + key + "'");
  return obj.at(key);
}

inline double number(const Json& v, const std::string& where) {
  if (!v.is_number()) throw ManifestError(where + ": expected a number");
  return v.get<double>();
}

inline std::string text(const Json& v, const std::string& where) {
  if (!v.is_string()) throw ManifestError(where + ": expected a string");
  return v.get<std::string>();
}

inline Expr number_or_expression(const Json& v, const std::string& where, int n) {
  if (v.is_number()) return Expr(v.get<double>());
  if (v.is_string()) {
    try {
      return parse_chart_expression(v.get<std::string>(), n);
    } catch (const Error& e) {
      throw ManifestError(where + ": " + e.what());
    }
  }
  throw ManifestError(where + ": expected a number or an expression string");
}

inline SamplingBox parse_box(const Json& v, const std::string& where, int n) {
  SamplingBox box;
  auto pair = [&](const Json& a, const std::string& w) {
    if (!a.is_array() || a.size() != 2) throw ManifestError(w + ": expected [lo, hi]");
    const double lo = number(a[0], w);
    const double hi = number(a[1], w);
    if (!(lo < hi)) throw ManifestError(w + ": box needs lo < hi");
    return std::make_pair(lo, hi);
  };
  if (v.is_array() && v.size() == 2 && v[0].is_number()) {
    box.x.assign(static_cast<std::size_t>(n), pair(v, where));
  } else if (v.is_array() && static_cast<int>(v.size()) == n) {
    for (std::size_t i = 0; i < v.size(); ++i) box.x.push_back(pair(v[i], where + "[" + std::to_string(i) + "]"));
  } else {
    throw ManifestError(where + ": expected [lo, hi] or one [lo, hi] per coordinate");
  }
  return box;
}

inline StructureSpec parse_structure(const Json& j, const std::string& where) {
  reject_unknown(j, where, {"label", "family", "dim", "parameters", "box"});
  StructureSpec spec;
  spec.echo = j;
  const std::string label = text(require(j, where, "label"), where + ".label");
  const std::string family = text(require(j, where, "family"), where + ".family");
  const Json& dim_j = require(j, where, "dim");
  if (!dim_j.is_number_integer() || dim_j.get<int>() < 2 || dim_j.get<int>() > 4)
    throw ManifestError(where + ".dim: expected an integer between 2 and 4");
  const int n = dim_j.get<int>();
  const Json params = j.contains("parameters") ? j.at("parameters") : Json::object();
  const std::string pw = where + ".parameters";
  try {
    if (family == "flat") {
      reject_unknown(params, pw, {});
      spec.structure = flat_structure(n, label);
    } else if (family == "riemannian_conformal") {
      reject_unknown(params, pw, {"c"});
      spec.structure = riemannian_conformal(n, number(require(params, pw, "c"), pw + ".c"), label);
    } else if (family == "randers") {
      reject_unknown(params, pw, {"b", "c"});
      const Json& b = require(params, pw, "b");
      if (!b.is_array() || static_cast<int>(b.size()) != n) throw ManifestError(pw + ".b: expected " + std::to_string(n) + " entries");
      std::vector<Expr> b_up;
      for (std::size_t i = 0; i < b.size(); ++i)
        b_up.push_back(number_or_expression(b[i], pw + ".b[" + std::to_string(i) + "]", n));
      const double c = params.contains("c") ? number(params.at("c"), pw + ".c") : 0.0;
      spec.structure = randers_dual(c == 0.0 ? identity_metric(n) : conformal_metric(n, c), b_up, label);
    } else if (family == "expression") {
      reject_unknown(params, pw, {"k2", "curvature"});
      std::optional<double> curvature;
      if (params.contains("curvature")) curvature = number(params.at("curvature"), pw + ".curvature");
      spec.structure = expression_structure(n, text(require(params, pw, "k2"), pw + ".k2"), label, curvature);
    } else {
      throw ManifestError(where + ".family: unknown family '" + family + "'");
    }
  } catch (const ManifestError&) {
    throw;
  } catch (const Error& e) {
    throw ManifestError(where + ": " + e.what());
  }
  spec.box = j.contains("box") ? parse_box(j.at("box"), where + ".box", n) : parse_box(Json::array({-0.5, 0.5}), where, n);
  return spec;
}

inline DeformationParams parse_params(const Json& j, const std::string& where) {
  reject_unknown(j, where, {"label", "alpha", "beta", "c", "v", "structures"});
  const std::string label = text(require(j, where, "label"), where + ".label");
  const double alpha = number(require(j, where, "alpha"), where + ".alpha");
  const double beta = number(require(j, where, "beta"), where + ".beta");
  if (j.contains("c") == j.contains("v")) throw ManifestError(where + ": give exactly one of 'c' and 'v'");
  DeformationParams p;
  try {
    p = j.contains("c") ? DeformationParams::integrable(alpha, beta, number(j.at("c"), where + ".c"), label)
                        : DeformationParams::general(alpha, beta, text(j.at("v"), where + ".v"), label);
  } catch (const ManifestError&) {
    throw;
  } catch (const Error& e) {
    throw ManifestError(where + ": " + e.what());
  }
  if (j.contains("structures")) {
    const Json& s = j.at("structures");
    if (!s.is_array()) throw ManifestError(where + ".structures: expected a list of labels");
    for (std::size_t i = 0; i < s.size(); ++i)
      p.structures.push_back(text(s[i], where + ".structures[" + std::to_string(i) + "]"));
  }
  return p;
}

inline SamplingSpec parse_sampling(const Json& j) {
  const std::string where = "sampling";
  reject_unknown(j, where, {"seed", "points", "structural_points", "p_norm_range"});
  SamplingSpec s;
  const Json& seed = require(j, where, "seed");
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0))
    throw ManifestError("sampling.seed: expected a non-negative integer");
  s.seed = seed.get<std::uint64_t>();
  auto count = [&](const char* key, int fallback) {
    if (!j.contains(key)) return fallback;
    const Json& v = j.at(key);
    if (!v.is_number_integer() || v.get<int>() < 1) throw ManifestError(where + "." + key + ": expected a positive integer");
    return v.get<int>();
  };
  s.points = count("points", s.points);
  s.structural_points = count("structural_points", s.structural_points);
  if (j.contains("p_norm_range")) {
    const Json& r = j.at("p_norm_range");
    if (!r.is_array() || r.size() != 2) throw ManifestError("sampling.p_norm_range: expected [lo, hi]");
    s.p_norm_lo = number(r[0], "sampling.p_norm_range[0]");
    s.p_norm_hi = number(r[1], "sampling.p_norm_range[1]");
    if (!(s.p_norm_lo > 0.0 && s.p_norm_lo < s.p_norm_hi))
      throw ManifestError("sampling.p_norm_range: need 0 < lo < hi");
  }
  return s;
}

inline Tolerances parse_tolerances(const Json& j) {
  Tolerances t;
  reject_unknown(j, "tolerances",
                 {"jet_exact", "structural", "hermitian", "single_fd", "connection", "double_fd", "einstein",
                  "operators", "spray", "duality", "laplacian", "nonintegrable_floor"});
  const std::map<std::string, double*> slots = {
      {"jet_exact", &t.jet_exact},   {"structural", &t.structural}, {"hermitian", &t.hermitian},
      {"single_fd", &t.single_fd},   {"connection", &t.connection}, {"double_fd", &t.double_fd},
      {"einstein", &t.einstein},     {"operators", &t.operators},   {"spray", &t.spray},
      {"duality", &t.duality},       {"laplacian", &t.laplacian},   {"nonintegrable_floor", &t.nonintegrable_floor}};
  for (const auto& [key, value] : j.items()) {
    const double v = number(value, "tolerances." + key);
    if (!(v >= std::numeric_limits<double>::epsilon())) throw ManifestError("tolerances." + key + ": below machine epsilon");
    *slots.at(key) = v;
  }
  return t;
}

}  // namespace detail

/// Seed for one sampling stream of the manifest.
inline Sampler pair_sampler(std::uint64_t seed, std::size_t structure_index, std::size_t params_index) {
  return Sampler({seed, static_cast<std::uint64_t>(structure_index), static_cast<std::uint64_t>(params_index)});
}

inline constexpr std::uint64_t kStructuralStream = 0xffffffffull;

/// Every parameter set must admit sampled points on every structure it
/// applies to; for c > 0 this is the tube condition 2 tau < 1/(c beta^2).
inline void check_feasibility(const Manifest& m) {
  for (std::size_t si = 0; si < m.structures.size(); ++si) {
    const StructureSpec& s = m.structures[si];
    for (std::size_t pi = 0; pi < m.params.size(); ++pi) {
      const DeformationParams& p = m.params[pi];
      if (!p.applies_to(s.structure.label)) continue;
      Sampler rng = pair_sampler(m.sampling.seed, si, pi);
      const SampleResult r = sample_points(s.structure, s.box, m.sampling, &p, 1, rng, 5000);
      if (r.points.empty()) {
        std::ostringstream os;
        os << "parameter set '" << p.label << "' admits no sample on structure '" << s.structure.label << "'";
        if (p.c && *p.c > 0.0)
          os << ": the tube condition 2 tau < 1/(c beta^2) = " << 1.0 / (*p.c * p.beta * p.beta)
             << " (sampled at " << kTubeFraction << " of it) cannot be met for |p| in [" << m.sampling.p_norm_lo
             << ", " << m.sampling.p_norm_hi << "]";
        else
          os << ": the domain or the positivity condition alpha + 2 tau v > 0 is never met";
        throw ManifestError(os.str());
      }
    }
  }
}

inline Manifest parse_manifest(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ManifestError(std::string("manifest is not valid JSON: ") + e.what());
  }
  detail::reject_unknown(j, "manifest", {"structures", "params", "sampling", "tolerances"});
  Manifest m;
  m.echo = j;
  const Json& structures = detail::require(j, "manifest", "structures");
  if (!structures.is_array() || structures.empty()) throw ManifestError("structures: expected a non-empty list");
  std::set<std::string> labels;
  for (std::size_t i = 0; i < structures.size(); ++i) {
    m.structures.push_back(detail::parse_structure(structures[i], "structures[" + std::to_string(i) + "]"));
    if (!labels.insert(m.structures.back().structure.label).second)
      throw ManifestError("structures[" + std::to_string(i) + "]: duplicate label '" +
                          m.structures.back().structure.label + "'");
  }
  const Json params = j.contains("params") ? j.at("params") : Json::array();
  if (!params.is_array()) throw ManifestError("params: expected a list");
  std::set<std::string> plabels;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string where = "params[" + std::to_string(i) + "]";
    m.params.push_back(detail::parse_params(params[i], where));
    if (!plabels.insert(m.params.back().label).second)
      throw ManifestError(where + ": duplicate label '" + m.params.back().label + "'");
    for (const std::string& s : m.params.back().structures)
      if (!labels.count(s)) throw ManifestError(where + ".structures: unknown structure label '" + s + "'");
  }
  m.sampling = detail::parse_sampling(detail::require(j, "manifest", "sampling"));
  if (j.contains("tolerances")) m.tolerances = detail::parse_tolerances(j.at("tolerances"));
  check_feasibility(m);
  return m;
}

inline Manifest load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ManifestError("cannot read manifest '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str());
}

}  // namespace cartanlab
