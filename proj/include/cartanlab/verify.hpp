#pragma once

/// \file
/// The verification suite driven by a manifest, and single-point tensor dumps.
///
/// Every check record names a formula (its anchor) from the catalog below;
/// README.md maps anchors to the code that evaluates them. Records are sorted
/// by (check id, structure, params, point index) before emission so reports
/// are byte-identical for a fixed manifest and seed.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cartanlab/levicivita.hpp"
#include "cartanlab/manifest.hpp"
#include "cartanlab/operators.hpp"

#ifndef CARTANLAB_VERSION
#define CARTANLAB_VERSION "dev"
#endif

namespace cartanlab {

inline constexpr const char* kEngineVersion = CARTANLAB_VERSION;

/// Upper bounds pass when residual <= tolerance; lower bounds (witnesses of a
/// failure that must be seen) pass when residual >= tolerance.
enum class Bound { Upper, Lower };

struct CheckInfo {
  const char* id;
  const char* anchor;
};

inline const std::vector<CheckInfo>& check_catalog() {
  static const std::vector<CheckInfo> catalog = {
      {"structural.euler_k2", "p_j d^j K^2 = 2 K^2"},
      {"structural.euler_g", "p_k d^k g^ij = 0"},
      {"structural.euler_n", "p_k d^k N_ij = N_ij"},
      {"structural.g_pp", "g^ij p_i p_j = K^2"},
      {"structural.cartan_p", "C^ijk p_k = 0"},
      {"structural.p_hcov", "p_i|j = 0"},
      {"structural.delta_k2", "delta_i K^2 = 0"},
      {"structural.r_p", "R_kij p^k = 0"},
      {"structural.g_hcov", "g^ij_|k = -2 L^ij_k"},
      {"structural.g_vcov", "g^ij|^k = -2 C^ijk"},
      {"kahler.j_squared", "J^2 = -I"},
      {"kahler.hermitian", "G(JX, JY) = G(X, Y)"},
      {"kahler.theta", "theta(d^i, delta_j) = delta^i_j, theta(delta_i, delta_j) = theta(d^i, d^j) = 0"},
      {"integrability.nijenhuis", "N_J(E_a, E_b) = 0 for v = -c alpha beta^2"},
      {"integrability.perturbed", "max N_J(E_a, E_b) > 0 for v = -c alpha beta^2 + 0.1"},
      {"connection.koszul", "closed-form nabla_{E_a} E_b = Koszul formula"},
      {"connection.torsion", "nabla_X Y - nabla_Y X - [X, Y] = 0"},
      {"connection.metric", "X G(Y, Z) = G(nabla_X Y, Z) + G(Y, nabla_X Z)"},
      {"curvature.vvv", "K(d^i, d^j) d^k = nabla nabla - nabla nabla - nabla_[,]"},
      {"curvature.hvv", "K(delta_i, d^j) d^k = nabla nabla - nabla nabla - nabla_[,]"},
      {"curvature.hhh", "K(delta_i, delta_j) delta_k = nabla nabla - nabla nabla - nabla_[,]"},
      {"curvature.hhv", "K(delta_i, delta_j) d^k = nabla nabla - nabla nabla - nabla_[,]"},
      {"curvature.vvh", "K(d^i, d^j) delta_k = nabla nabla - nabla nabla - nabla_[,]"},
      {"curvature.hvh", "K(delta_i, d^j) delta_k = nabla nabla - nabla nabla - nabla_[,]"},
      {"einstein.lambda", "Ric = lambda G with lambda = c n beta"},
      {"einstein.defect", "max |Ric - lambda G| = 0"},
      {"einstein.obstruction_defect", "max |Ric - lambda G| > 0 when I != 0"},
      {"einstein.obstruction", "p_k Ric(d^j, d^k) - c n beta p_k G^jk = I^j"},
      {"geodesy.vertical", "H nabla_{d^i} d^j = beta^2 L^ijs delta_s"},
      {"geodesy.horizontal", "p^j V(nabla_{delta_i} delta_j)_s = c p_i p_s (1 - 2 c beta^2 tau)"},
      {"operators.div_vertical", "div(d^i) = 0"},
      {"operators.div_liouville", "div(C*) = 0"},
      {"operators.laplacian_k2", "Delta K^2 = 0"},
      {"operators.div_spray", "div(S) = p^i delta_i ln sqrt(g)"},
      {"operators.gradient_duality", "G(grad f, X) = X f"},
      {"operators.laplacian_closed", "Delta f = G^ih delta_h f (delta_i ln sqrt(g) - J_i)"},
      {"operators.landsberg", "Delta = 0 implies (J = 0 iff div(S) = 0)"},
      {"sampling.coverage", "admissible sample count = requested count"},
  };
  return catalog;
}

inline const char* anchor_of(const std::string& id) {
  for (const CheckInfo& c : check_catalog())
    if (id == c.id) return c.anchor;
  throw Error("internal: check id '" + id + "' has no anchor");
}

struct CheckRecord {
  std::string check_id;
  std::string structure;
  std::string params;  ///< empty for structure-only checks
  int point_index = -1;  ///< -1 for checks aggregated over the sample
  std::vector<double> x;
  std::vector<double> p;
  double residual = 0.0;
  double tolerance = 0.0;
  Bound bound = Bound::Upper;
  bool pass = false;
  std::string error;
};

struct VerificationReport {
  std::vector<CheckRecord> checks;
  Json manifest_echo;
  std::uint64_t seed = 0;
  int points = 0;
  double tol_scale = 1.0;

  std::size_t passed() const {
    return static_cast<std::size_t>(std::count_if(checks.begin(), checks.end(), [](const CheckRecord& r) { return r.pass; }));
  }
  std::size_t failed() const { return checks.size() - passed(); }
  bool all_pass() const { return failed() == 0; }
};

/// True when the closed-form connection is the Levi-Civita connection of G:
/// the structure has R_kij = c (g_jk p_i - g_ik p_j) with the params' c.
inline bool closed_form_applies(const CartanStructure& s, const DeformationParams& prm) {
  return s.curvature && prm.c && *s.curvature == *prm.c;
}

namespace detail {

struct PointRef {
  int index = -1;
  const ChartPoint* at = nullptr;
};

/// Collects records; a group of checks evaluated together that throws gets a
/// failed record for each of its ids not yet emitted.
class Recorder {
 public:
  explicit Recorder(std::vector<CheckRecord>& out) : out_(out) {}

  void add(const std::string& id, const std::string& structure, const std::string& params, PointRef pt,
           double residual, double tolerance, Bound bound = Bound::Upper) {
    CheckRecord r;
    r.check_id = id;
    r.structure = structure;
    r.params = params;
    r.point_index = pt.index;
    if (pt.at) {
      r.x = pt.at->x();
      r.p = pt.at->p();
    }
    r.residual = residual;
    r.tolerance = tolerance;
    r.bound = bound;
    r.pass = std::isfinite(residual) && (bound == Bound::Upper ? residual <= tolerance : residual >= tolerance);
    out_.push_back(std::move(r));
  }

  template <class F>
  void group(const std::vector<std::pair<std::string, double>>& ids, const std::string& structure,
             const std::string& params, PointRef pt, F&& body) {
    const std::size_t start = out_.size();
    try {
      body();
    } catch (const std::exception& e) {
      std::set<std::string> done;
      for (std::size_t k = start; k < out_.size(); ++k) done.insert(out_[k].check_id);
      for (const auto& [id, tol] : ids) {
        if (done.count(id)) continue;
        add(id, structure, params, pt, std::numeric_limits<double>::quiet_NaN(), tol);
        out_.back().error = e.what();
      }
    }
  }

 private:
  std::vector<CheckRecord>& out_;
};

inline double max_abs_diff(const NumTensor& a, const NumTensor& b, double scale) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a.flat(k) - scale * b.flat(k)));
  return m;
}

inline void structural_checks(Recorder& rec, const CartanStructure& s, PointRef pt, const Tolerances& tol) {
  const double t = tol.structural;
  const std::string& L = s.label;
  rec.group({{"structural.euler_k2", t}, {"structural.euler_g", t}, {"structural.euler_n", t},
             {"structural.g_pp", t}, {"structural.cartan_p", t}, {"structural.p_hcov", t},
             {"structural.delta_k2", t}, {"structural.r_p", t}, {"structural.g_hcov", t}, {"structural.g_vcov", t}},
            L, "", pt, [&] {
              const int n = s.dim;
              const BerwaldJets bj = berwald_jets(s, *pt.at, 4);
              const CartanJets& cj = bj.cj;
              auto p = [&](int i) { return cj.p_down[static_cast<std::size_t>(i)].value(); };
              auto pu = [&](int i) { return cj.p_up[static_cast<std::size_t>(i)].value(); };
              double euler_k2 = -2.0 * cj.k2.value();
              for (int j = 0; j < n; ++j) euler_k2 += p(j) * bj.vdot(cj.k2, j).value();
              rec.add("structural.euler_k2", L, "", pt, std::abs(euler_k2), t);

              double euler_g = 0.0, euler_n = 0.0, g_pp = -cj.k2.value(), cartan_p = 0.0, r_p = 0.0;
              for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                  double eg = 0.0, en = -bj.n(i, j).value(), cp = 0.0;
                  for (int k = 0; k < n; ++k) {
                    eg += p(k) * bj.vdot(cj.g_up(i, j), k).value();
                    en += p(k) * bj.vdot(bj.n(i, j), k).value();
                    cp += cj.c_up(i, j, k).value() * p(k);
                  }
                  euler_g = std::max(euler_g, std::abs(eg));
                  euler_n = std::max(euler_n, std::abs(en));
                  cartan_p = std::max(cartan_p, std::abs(cp));
                  g_pp += cj.g_up(i, j).value() * p(i) * p(j);
                }
              rec.add("structural.euler_g", L, "", pt, euler_g, t);
              rec.add("structural.euler_n", L, "", pt, euler_n, t);
              rec.add("structural.g_pp", L, "", pt, std::abs(g_pp), t);
              rec.add("structural.cartan_p", L, "", pt, cartan_p, t);

              JetTensor pj(n, {Valence::Down}, 1);
              for (int i = 0; i < n; ++i) pj(i) = cj.p_down[static_cast<std::size_t>(i)];
              rec.add("structural.p_hcov", L, "", pt, max_abs(values(h_cov(bj, pj))), t);

              double delta_k2 = 0.0;
              for (int i = 0; i < n; ++i) delta_k2 = std::max(delta_k2, std::abs(bj.delta(cj.k2, i).value()));
              rec.add("structural.delta_k2", L, "", pt, delta_k2, t);

              const NumTensor r = values(r_vv(bj));
              for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                  double acc = 0.0;
                  for (int k = 0; k < n; ++k) acc += r(k, i, j) * pu(k);
                  r_p = std::max(r_p, std::abs(acc));
                }
              rec.add("structural.r_p", L, "", pt, r_p, t);

              rec.add("structural.g_hcov", L, "", pt,
                      max_abs_diff(values(h_cov(bj, cj.g_up)), values(bj.l_uud), -2.0), t);
              rec.add("structural.g_vcov", L, "", pt, max_abs_diff(values(v_cov(bj, cj.g_up)), values(cj.c_up), -2.0),
                      t);
            });
}

inline void kahler_checks(Recorder& rec, const CartanStructure& s, const DeformationParams& prm, PointRef pt,
                          const Tolerances& tol) {
  const double t = tol.hermitian;
  rec.group({{"kahler.j_squared", t}, {"kahler.hermitian", t}, {"kahler.theta", t}}, s.label, prm.label, pt, [&] {
    const int n = s.dim;
    const BundleMetric m = bundle_metric(s, *pt.at, prm);
    double jj = 0.0;
    double herm = 0.0;
    for (int a = 0; a < 2 * n; ++a) {
      const FrameVector ea = FrameVector::basis(n, a);
      const FrameVector ja = almost_complex(m, ea);
      const FrameVector jja = almost_complex(m, ja);
      for (int b = 0; b < 2 * n; ++b) {
        jj = std::max(jj, std::abs(jja.component(b) + ea.component(b)));
        const FrameVector eb = FrameVector::basis(n, b);
        herm = std::max(herm, std::abs(metric_value(m, ja, almost_complex(m, eb)) - metric_value(m, ea, eb)));
      }
    }
    rec.add("kahler.j_squared", s.label, prm.label, pt, jj, t);
    rec.add("kahler.hermitian", s.label, prm.label, pt, herm, t);
    rec.add("kahler.theta", s.label, prm.label, pt,
            (fundamental_form_matrix(m) - canonical_form_matrix(n)).cwiseAbs().maxCoeff(), t);
  });
}

/// Checks that need the closed-form connection to be Levi-Civita.
inline void connection_family_checks(Recorder& rec, const CartanStructure& s, const DeformationParams& prm,
                                     PointRef pt, const Tolerances& tol) {
  const std::string& S = s.label;
  const std::string& P = prm.label;
  const ChartPoint& at = *pt.at;
  rec.group({{"integrability.nijenhuis", tol.single_fd},
             {"connection.koszul", tol.connection},
             {"connection.torsion", tol.connection},
             {"connection.metric", tol.connection},
             {"geodesy.vertical", tol.connection},
             {"geodesy.horizontal", tol.connection}},
            S, P, pt, [&] {
              const int n = s.dim;
              const BundleJets bu = bundle_jets(s, at, prm, 4);
              rec.add("integrability.nijenhuis", S, P, pt, nijenhuis_max(bu), tol.single_fd);
              const FrameConnection closed = lc_closed_form(bu);
              const FrameConnection kz = koszul_oracle(bu);
              rec.add("connection.koszul", S, P, pt, max_abs_diff(closed, kz), tol.connection);
              const ConnectionResiduals res = connection_residuals(bu, closed);
              rec.add("connection.torsion", S, P, pt, res.torsion, tol.connection);
              rec.add("connection.metric", S, P, pt, res.metric, tol.connection);

              const NumTensor luuu = values(bu.bj.raise(bu.bj.l_uud, 2));
              const double beta = prm.beta;
              double vert = 0.0;
              for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                  for (int k = 0; k < n; ++k)
                    vert = std::max(vert, std::abs(kz(k, n + i, n + j) - beta * beta * luuu(i, j, k)));
              rec.add("geodesy.vertical", S, P, pt, vert, tol.connection);
              const GeodesyData geo = distribution_geodesy(bu);
              double horiz = 0.0;
              for (int i = 0; i < n; ++i)
                for (int k = 0; k < n; ++k) {
                  double w = 0.0;
                  for (int j = 0; j < n; ++j) w += bu.cj().p_up[static_cast<std::size_t>(j)].value() * kz(n + k, i, j);
                  horiz = std::max(horiz, std::abs(w - geo.witness_expected(i, k)));
                }
              rec.add("geodesy.horizontal", S, P, pt, horiz, tol.connection);
            });

  std::vector<std::pair<std::string, double>> block_ids;
  for (BlockKind b : kAllBlocks) block_ids.emplace_back(std::string("curvature.") + block_id(b), tol.double_fd);
  rec.group(block_ids, S, P, pt, [&] {
    const CurvatureTensor defn = curvature_defn(s, at, prm, ConnectionSource::Koszul);
    const CurvatureIngredients in = curvature_ingredients(bundle_jets(s, at, prm, 5));
    for (BlockKind b : kAllBlocks) {
      const CurvatureBlock ref = block_of(defn, b);
      const CurvatureBlock got = curvature_closed(in, b);
      const double scale = std::max({1.0, max_abs(ref.h), max_abs(ref.v)});
      const double err = std::max(max_abs_diff(got.h, ref.h), max_abs_diff(got.v, ref.v)) / scale;
      rec.add(std::string("curvature.") + block_id(b), S, P, pt, err, tol.double_fd);
    }
  });

  if (s.riemannian) {
    rec.group({{"einstein.lambda", tol.einstein}, {"einstein.defect", tol.einstein}}, S, P, pt, [&] {
      const RicciData r = ricci(s, at, prm);
      rec.add("einstein.lambda", S, P, pt, std::abs(r.lambda_hat - *prm.c * s.dim * prm.beta), tol.einstein);
      rec.add("einstein.defect", S, P, pt, r.defect, tol.einstein);
    });
  } else {
    rec.group({{"einstein.obstruction_defect", tol.nonintegrable_floor}, {"einstein.obstruction", tol.einstein}}, S,
              P, pt, [&] {
                const BundleJets bu = bundle_jets(s, at, prm, 5);
                const RicciData r = ricci(curvature_closed_full(curvature_ingredients(bu)), frame_gram_values(bu));
                rec.add("einstein.obstruction_defect", S, P, pt, r.defect, tol.nonintegrable_floor, Bound::Lower);
                const auto ob = einstein_obstruction(r, bu);
                const CartanTensor ct = cartan_tensor(s, at);
                double err = 0.0;
                for (std::size_t j = 0; j < ob.size(); ++j) err = std::max(err, std::abs(ob[j] - ct.i_up[j]));
                rec.add("einstein.obstruction", S, P, pt, err, tol.einstein);
              });
  }
}

inline void operator_checks(Recorder& rec, const CartanStructure& s, const DeformationParams& prm, PointRef pt,
                            const Tolerances& tol, Sampler& rng) {
  const std::string& S = s.label;
  const std::string& P = prm.label;
  // Drawn before evaluation so that the stream does not depend on failures.
  std::vector<FrameVector> xs;
  for (int k = 0; k < 8; ++k) {
    FrameVector x = FrameVector::zero(s.dim);
    for (double& c : x.h) c = rng.uniform(-1.0, 1.0);
    for (double& c : x.v) c = rng.uniform(-1.0, 1.0);
    xs.push_back(std::move(x));
  }
  rec.group({{"operators.div_vertical", tol.operators},
             {"operators.div_liouville", tol.operators},
             {"operators.laplacian_k2", tol.operators},
             {"operators.div_spray", tol.spray},
             {"operators.gradient_duality", tol.duality},
             {"operators.laplacian_closed", tol.laplacian},
             {"operators.landsberg", 0.0}},
            S, P, pt, [&] {
              const int n = s.dim;
              const OperatorContext ctx = operator_context(s, *pt.at, prm);
              double dv = 0.0;
              for (int i = 0; i < n; ++i) dv = std::max(dv, std::abs(divergence(ctx, FrameVector::basis(n, n + i))));
              rec.add("operators.div_vertical", S, P, pt, dv, tol.operators);
              rec.add("operators.div_liouville", S, P, pt, std::abs(divergence(ctx, FrameFieldExpr::liouville(n))),
                      tol.operators);
              rec.add("operators.laplacian_k2", S, P, pt, std::abs(laplacian(ctx, s.k2).direct), tol.operators);
              const LandsbergReport lr = landsberg_characterizations(ctx, tol.operators);
              rec.add("operators.div_spray", S, P, pt, std::abs(lr.div_s - lr.div_s_expected), tol.spray);
              double duality = 0.0;
              double lap = 0.0;
              for (const auto& [name, f] : scalar_corpus(s)) {
                duality = std::max(duality, gradient_duality_residual(ctx, f, xs));
                lap = std::max(lap, laplacian(ctx, f).difference);
              }
              rec.add("operators.gradient_duality", S, P, pt, duality, tol.duality);
              rec.add("operators.laplacian_closed", S, P, pt, lap, tol.laplacian);
              rec.add("operators.landsberg", S, P, pt, lr.consistent ? 0.0 : 1.0, 0.0);
            });
}

}  // namespace detail

struct VerifyOptions {
  std::optional<std::uint64_t> seed;
  std::optional<int> points;
  double tol_scale = 1.0;
};

inline VerificationReport run_verify(const Manifest& manifest, const VerifyOptions& opt = {}) {
  Manifest m = manifest;
  if (opt.seed) m.sampling.seed = *opt.seed;
  if (opt.points) {
    if (*opt.points < 1) throw ManifestError("--points must be positive");
    m.sampling.points = *opt.points;
    m.sampling.structural_points = *opt.points;
  }
  if (!(opt.tol_scale > 0.0)) throw ManifestError("--tol-scale must be positive");
  m.tolerances.scale(opt.tol_scale);
  const Tolerances& tol = m.tolerances;

  VerificationReport report;
  report.manifest_echo = m.echo;
  report.seed = m.sampling.seed;
  report.points = m.sampling.points;
  report.tol_scale = opt.tol_scale;
  detail::Recorder rec(report.checks);

  for (std::size_t si = 0; si < m.structures.size(); ++si) {
    const StructureSpec& spec = m.structures[si];
    const CartanStructure& s = spec.structure;
    {
      Sampler rng({m.sampling.seed, static_cast<std::uint64_t>(si), kStructuralStream});
      const SampleResult sr =
          sample_points(s, spec.box, m.sampling, nullptr, m.sampling.structural_points, rng, 200 * m.sampling.structural_points);
      rec.add("sampling.coverage", s.label, "", {}, static_cast<double>(sr.points.size()),
              static_cast<double>(m.sampling.structural_points), Bound::Lower);
      for (std::size_t k = 0; k < sr.points.size(); ++k)
        detail::structural_checks(rec, s, {static_cast<int>(k), &sr.points[k]}, tol);
    }

    for (std::size_t pi = 0; pi < m.params.size(); ++pi) {
      const DeformationParams& prm = m.params[pi];
      if (!prm.applies_to(s.label)) continue;
      Sampler rng = pair_sampler(m.sampling.seed, si, pi);
      const SampleResult sr = sample_points(s, spec.box, m.sampling, &prm, m.sampling.points, rng, 200 * m.sampling.points);
      rec.add("sampling.coverage", s.label, prm.label, {}, static_cast<double>(sr.points.size()),
              static_cast<double>(m.sampling.points), Bound::Lower);
      Sampler field_rng({m.sampling.seed, static_cast<std::uint64_t>(si), static_cast<std::uint64_t>(pi), 1});
      const bool closed = closed_form_applies(s, prm);
      double perturbed = 0.0;
      int perturbed_index = -1;
      for (std::size_t k = 0; k < sr.points.size(); ++k) {
        const detail::PointRef pt{static_cast<int>(k), &sr.points[k]};
        detail::kahler_checks(rec, s, prm, pt, tol);
        if (closed) {
          detail::connection_family_checks(rec, s, prm, pt, tol);
          // Witness of non-integrability: one point with a large N_J suffices.
          try {
            const double nj = nijenhuis_max(bundle_jets(s, sr.points[k], prm.perturbed(0.1), 4));
            if (nj > perturbed) {
              perturbed = nj;
              perturbed_index = static_cast<int>(k);
            }
          } catch (const Error&) {
          }
        }
        detail::operator_checks(rec, s, prm, pt, tol, field_rng);
      }
      if (closed) {
        detail::PointRef pt;
        if (perturbed_index >= 0) pt = {perturbed_index, &sr.points[static_cast<std::size_t>(perturbed_index)]};
        rec.add("integrability.perturbed", s.label, prm.label, pt, perturbed, tol.nonintegrable_floor, Bound::Lower);
      }
    }
  }

  std::stable_sort(report.checks.begin(), report.checks.end(), [](const CheckRecord& a, const CheckRecord& b) {
    return std::tie(a.check_id, a.structure, a.params, a.point_index) <
           std::tie(b.check_id, b.structure, b.params, b.point_index);
  });
  return report;
}

inline Json to_json(const CheckRecord& r) {
  Json j;
  j["check_id"] = r.check_id;
  j["anchor"] = anchor_of(r.check_id);
  j["structure"] = r.structure;
  j["params"] = r.params.empty() ? Json(nullptr) : Json(r.params);
  if (r.point_index >= 0)
    j["point"] = {{"index", r.point_index}, {"x", r.x}, {"p", r.p}};
  else
    j["point"] = nullptr;
  j["residual"] = std::isfinite(r.residual) ? Json(r.residual) : Json(nullptr);
  j["tolerance"] = r.tolerance;
  j["bound"] = r.bound == Bound::Upper ? "upper" : "lower";
  j["pass"] = r.pass;
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

inline Json to_json(const VerificationReport& r) {
  Json j;
  Json by_check = Json::object();
  for (const CheckRecord& c : r.checks) {
    Json& e = by_check[c.check_id];
    if (e.is_null()) e = {{"total", 0}, {"passed", 0}, {"failed", 0}};
    e["total"] = e["total"].get<int>() + 1;
    e[c.pass ? "passed" : "failed"] = e[c.pass ? "passed" : "failed"].get<int>() + 1;
  }
  j["summary"] = {{"total", r.checks.size()},
                  {"passed", r.passed()},
                  {"failed", r.failed()},
                  {"all_pass", r.all_pass()},
                  {"by_check", by_check}};
  Json checks = Json::array();
  for (const CheckRecord& c : r.checks) checks.push_back(to_json(c));
  j["checks"] = std::move(checks);
  j["meta"] = {{"engine_version", kEngineVersion},
               {"seed", r.seed},
               {"points", r.points},
               {"tol_scale", r.tol_scale},
               {"manifest", r.manifest_echo}};
  return j;
}

// ---------------------------------------------------------------------------
// Single-point tensor dumps.

inline Json to_json(const NumTensor& t) {
  if (t.rank() == 0) return t.flat(0);
  std::function<Json(std::vector<int>&, int)> build = [&](std::vector<int>& idx, int slot) -> Json {
    if (slot == t.rank()) return t.at(idx);
    Json a = Json::array();
    for (int i = 0; i < t.dim(); ++i) {
      idx[static_cast<std::size_t>(slot)] = i;
      a.push_back(build(idx, slot + 1));
    }
    return a;
  };
  std::vector<int> idx(static_cast<std::size_t>(t.rank()), 0);
  return build(idx, 0);
}

inline Json to_json(const SquareMatrix& m) {
  Json a = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    a.push_back(std::move(row));
  }
  return a;
}

inline Json to_json(const FrameVector& x) { return {{"h", x.h}, {"v", x.v}}; }

inline Json to_json(const FrameConnection& g) {
  Json a = Json::array();
  const int d = g.frame_dim();
  for (int c = 0; c < d; ++c) {
    Json ma = Json::array();
    for (int a2 = 0; a2 < d; ++a2) {
      Json row = Json::array();
      for (int b = 0; b < d; ++b) row.push_back(g(c, a2, b));
      ma.push_back(std::move(row));
    }
    a.push_back(std::move(ma));
  }
  return a;
}

inline const std::vector<std::string>& tensor_objects() {
  static const std::vector<std::string> names = {"g",      "C",    "N",     "B",         "L",      "G",   "J",
                                                 "theta",  "nabla", "curvature", "ricci", "div", "grad", "laplacian"};
  return names;
}

struct TensorRequest {
  std::string structure;
  std::string params;  ///< empty: first parameter set applying to the structure
  std::vector<double> x;
  std::vector<double> p;
  std::vector<std::string> objects;
  std::string field = "K^2";  ///< scalar field for grad and laplacian
};

inline Json run_tensor(const Manifest& m, const TensorRequest& req) {
  for (const std::string& o : req.objects)
    if (std::find(tensor_objects().begin(), tensor_objects().end(), o) == tensor_objects().end())
      throw ManifestError("unknown tensor object '" + o + "'");
  const CartanStructure& s = m.structure(req.structure).structure;
  if (static_cast<int>(req.x.size()) != s.dim || static_cast<int>(req.p.size()) != s.dim)
    throw DomainError("point needs " + std::to_string(s.dim) + " x and " + std::to_string(s.dim) + " p components");
  const ChartPoint at(req.x, req.p);
  require_admissible(s, at);
  const int n = s.dim;

  const DeformationParams* prm = nullptr;
  if (!req.params.empty()) {
    prm = &m.param_set(req.params);
  } else {
    for (const auto& p : m.params)
      if (p.applies_to(s.label)) {
        prm = &p;
        break;
      }
  }
  auto need_params = [&](const std::string& obj) -> const DeformationParams& {
    if (!prm) throw ManifestError("object '" + obj + "' needs a parameter set");
    return *prm;
  };
  const Expr field = req.field == "K^2" ? s.k2 : parse_chart_expression(req.field, n);

  Json objects = Json::object();
  for (const std::string& o : req.objects) {
    Json out = Json::object();
    if (o == "g") {
      const FundamentalTensors f = fundamental(s, at);
      out["g^ij = 1/2 d^i d^j K^2"] = to_json(f.g_up);
      out["g_ij"] = to_json(f.g_down);
      out["p^i = 1/2 d^i K^2"] = f.p_up;
      out["tau = K^2 / 2"] = f.tau;
    } else if (o == "C") {
      const CartanTensor ct = cartan_tensor(s, at);
      out["C^ijk = -1/4 d^i d^j d^k K^2"] = to_json(ct.c_upupup);
      out["I^j = C^jh_h"] = ct.i_up;
    } else if (o == "N") {
      const NonlinearConnection nc = nonlinear_connection(s, at);
      out["N_ij = gamma^h_ij p_h - 1/2 gamma^h_kl p_h p^l d^k g_ij"] = to_json(nc.n_down);
    } else if (o == "B") {
      out["B^i_jk = d^i N_jk"] = to_json(berwald_data(s, at).b);
    } else if (o == "L") {
      const BerwaldData d = berwald_data(s, at);
      out["L^ij_k = C^ij_h|k p^h"] = to_json(d.l_uud);
      out["J_i = L^s_is"] = d.j_down;
      out["R_kij = delta_i N_jk - delta_j N_ik"] = to_json(d.r_vv);
    } else if (o == "G") {
      const BundleMetric bm = bundle_metric(s, at, need_params(o));
      out["G_ij = g_ij / beta + v / (alpha beta) p_i p_j"] = to_json(bm.g_down);
      out["G^ij = beta g^ij - v beta / (alpha + 2 tau v) p^i p^j"] = to_json(bm.g_up);
    } else if (o == "J") {
      const BundleMetric bm = bundle_metric(s, at, need_params(o));
      SquareMatrix j(2 * n, 2 * n);
      for (int a = 0; a < 2 * n; ++a) {
        const FrameVector ja = almost_complex(bm, FrameVector::basis(n, a));
        for (int b = 0; b < 2 * n; ++b) j(b, a) = ja.component(b);
      }
      out["J(delta_i) = G_ik d^k, J(d^i) = -G^ik delta_k (column a = J E_a)"] = to_json(j);
    } else if (o == "theta") {
      out["theta(X, Y) = G(X, JY)"] = to_json(fundamental_form_matrix(bundle_metric(s, at, need_params(o))));
    } else if (o == "nabla") {
      const DeformationParams& pr = need_params(o);
      const BundleJets bu = bundle_jets(s, at, pr, 4);
      out["nabla_{E_a} E_b = Gamma(c, a, b) E_c (Koszul formula)"] = to_json(koszul_oracle(bu));
      if (closed_form_applies(s, pr)) out["nabla_{E_a} E_b (closed form)"] = to_json(lc_closed_form(bu));
    } else if (o == "curvature") {
      const DeformationParams& pr = need_params(o);
      const CurvatureIngredients in = curvature_ingredients(bundle_jets(s, at, pr, 5));
      const BlockForm form = closed_form_applies(s, pr) ? BlockForm::Substituted : BlockForm::General;
      for (BlockKind b : kAllBlocks) {
        const CurvatureBlock blk = curvature_closed(in, b, form);
        out[block_name(b)] = {{"horizontal", to_json(blk.h)}, {"vertical", to_json(blk.v)}};
      }
      out["form"] = form == BlockForm::Substituted ? "substituted" : "general";
    } else if (o == "ricci") {
      const DeformationParams& pr = need_params(o);
      const RicciData r = closed_form_applies(s, pr)
                              ? ricci(s, at, pr)
                              : ricci(curvature_defn(s, at, pr, ConnectionSource::Koszul),
                                      frame_gram_values(bundle_jets(s, at, pr, 4)));
      out["Ric(E_b, E_c) = K^a_abc"] = to_json(r.ric);
      out["lambda_hat = <Ric, G> / <G, G>"] = r.lambda_hat;
      out["max |Ric - lambda_hat G|"] = r.defect;
    } else if (o == "div") {
      const OperatorContext ctx = operator_context(s, at, need_params(o));
      out["div(E_b) = Gamma^a_ab"] = ctx.frame_div;
      out["div(S), S = p^i delta_i"] = divergence(ctx, spray(ctx));
      out["div(C*), C* = p_i d^i"] = divergence(ctx, FrameFieldExpr::liouville(n));
      out["delta_i ln sqrt(g)"] = ctx.h_trace;
    } else if (o == "grad") {
      const OperatorContext ctx = operator_context(s, at, need_params(o));
      out["grad f = G^ih delta_h f delta_i + G_ih d^h f d^i"] = to_json(gradient(ctx, field));
      out["f"] = req.field;
    } else if (o == "laplacian") {
      const OperatorContext ctx = operator_context(s, at, need_params(o));
      const LaplacianData l = laplacian(ctx, field);
      out["Delta f = div(grad f)"] = l.direct;
      out["Delta f = G^ih delta_h f (delta_i ln sqrt(g) - J_i)"] = l.closed;
      out["Levi-Civita divergence of grad f"] = l.levi_civita;
      out["f"] = req.field;
    }
    objects[o] = std::move(out);
  }
  Json j;
  j["meta"] = {{"engine_version", kEngineVersion},
               {"structure", s.label},
               {"params", prm ? Json(prm->label) : Json(nullptr)},
               {"point", {{"x", req.x}, {"p", req.p}}}};
  j["objects"] = std::move(objects);
  return j;
}

}  // namespace cartanlab
