#include <gtest/gtest.h>

#include "cartanlab/manifest.hpp"

using namespace cartanlab;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_manifest(text);
  } catch (const ManifestError& e) {
    return e.what();
  }
  return "";
}

const char* kFlat = R"({"structures": [{"label": "f", "family": "flat", "dim": 2}], "sampling": {"seed": 3}})";

}  // namespace

TEST(Manifest, MinimalFlatGetsDefaults) {
  const Manifest m = parse_manifest(kFlat);
  ASSERT_EQ(m.structures.size(), 1u);
  EXPECT_EQ(m.structures[0].structure.family, "flat");
  EXPECT_TRUE(m.params.empty());
  EXPECT_EQ(m.sampling.seed, 3u);
  EXPECT_EQ(m.sampling.points, 50);
  EXPECT_EQ(m.sampling.structural_points, 100);
  EXPECT_DOUBLE_EQ(m.sampling.p_norm_lo, 0.5);
  EXPECT_DOUBLE_EQ(m.tolerances.double_fd, 1e-3);
  ASSERT_EQ(m.structures[0].box.x.size(), 2u);
  EXPECT_DOUBLE_EQ(m.structures[0].box.x[1].second, 0.5);
}

TEST(Manifest, FamiliesAndParameters) {
  const Manifest m = parse_manifest(R"({
    "structures": [
      {"label": "h", "family": "riemannian_conformal", "dim": 3, "parameters": {"c": -1}, "box": [[-1, 1], [-0.5, 0.5], [0, 0.2]]},
      {"label": "r", "family": "randers", "dim": 2, "parameters": {"b": [0.2, "0.1*x1"]}},
      {"label": "e", "family": "expression", "dim": 2, "parameters": {"k2": "p1^2 + p2^2", "curvature": 0}}
    ],
    "params": [
      {"label": "a", "alpha": 1, "beta": 2, "c": -1, "structures": ["h"]},
      {"label": "b", "alpha": 1, "beta": 1, "v": "0.1*tau"}
    ],
    "sampling": {"seed": 9, "points": 7, "p_norm_range": [0.25, 1]},
    "tolerances": {"connection": 1e-6}
  })");
  EXPECT_EQ(*m.structure("h").structure.curvature, -1.0);
  EXPECT_DOUBLE_EQ(m.structure("h").box.x[2].second, 0.2);
  EXPECT_FALSE(m.structure("r").structure.curvature.has_value());
  EXPECT_EQ(*m.structure("e").structure.curvature, 0.0);
  EXPECT_TRUE(m.param_set("a").applies_to("h"));
  EXPECT_FALSE(m.param_set("a").applies_to("r"));
  EXPECT_FALSE(m.param_set("b").c.has_value());
  EXPECT_NEAR(m.param_set("b").v_at(2.0), 0.2, 1e-15);
  EXPECT_EQ(m.sampling.points, 7);
  EXPECT_DOUBLE_EQ(m.tolerances.connection, 1e-6);
  EXPECT_THROW(m.structure("missing"), ManifestError);
}

TEST(Manifest, ConstantWindRandersIsLocallyMinkowski) {
  const Manifest m = parse_manifest(
      R"({"structures": [{"label": "r", "family": "randers", "dim": 2, "parameters": {"b": [0.3, 0.1]}}], "sampling": {"seed": 1}})");
  EXPECT_EQ(*m.structures[0].structure.curvature, 0.0);
}

TEST(Manifest, UnknownKeysAreRejectedWithTheirPath) {
  EXPECT_NE(error_of(R"({"structures": [], "sampling": {"seed": 1}, "extra": 1})").find("unknown key 'extra'"),
            std::string::npos);
  const std::string e = error_of(
      R"({"structures": [{"label": "f", "family": "flat", "dim": 2, "colour": 1}], "sampling": {"seed": 1}})");
  EXPECT_NE(e.find("structures[0]"), std::string::npos) << e;
  EXPECT_NE(e.find("colour"), std::string::npos) << e;
  EXPECT_NE(error_of(R"({"structures": [{"label": "f", "family": "flat", "dim": 2}], "sampling": {"seed": 1, "pts": 3}})")
                .find("sampling: unknown key 'pts'"),
            std::string::npos);
}

TEST(Manifest, SchemaViolations) {
  EXPECT_NE(error_of(R"({"structures": [{"label": "f", "family": "flat", "dim": 2}]})").find("missing key 'sampling'"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"structures": [{"label": "f", "family": "flat", "dim": 2}], "sampling": {}})")
                .find("sampling: missing key 'seed'"),
            std::string::npos);
  EXPECT_NE(error_of("{\"structures\": [\n  {\"label\": }]}").find("not valid JSON"), std::string::npos);
  EXPECT_NE(error_of(R"({"structures": [{"label": "f", "family": "torus", "dim": 2}], "sampling": {"seed": 1}})")
                .find("unknown family 'torus'"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"structures": [{"label": "f", "family": "flat", "dim": 9}], "sampling": {"seed": 1}})")
                .find("structures[0].dim"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"structures": [{"label": "f", "family": "flat", "dim": 2}], "sampling": {"seed": -4}})")
                .find("sampling.seed"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"structures": [{"label": "f", "family": "flat", "dim": 2}],
                         "params": [{"label": "p", "alpha": 1, "beta": 1, "c": 1, "v": "tau"}], "sampling": {"seed": 1}})")
                .find("exactly one of 'c' and 'v'"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"structures": [{"label": "f", "family": "flat", "dim": 2}],
                         "params": [{"label": "p", "alpha": 1, "beta": 1, "c": 0, "structures": ["g"]}], "sampling": {"seed": 1}})")
                .find("unknown structure label 'g'"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"structures": [{"label": "r", "family": "randers", "dim": 2, "parameters": {"b": [1.2, 0]}}],
                         "sampling": {"seed": 1}})")
                .find("structures[0]"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"structures": [{"label": "e", "family": "expression", "dim": 2, "parameters": {"k2": "p1^2 + q"}}],
                         "sampling": {"seed": 1}})")
                .find("structures[0]"),
            std::string::npos);
}

TEST(Manifest, DuplicateLabels) {
  EXPECT_NE(error_of(R"({"structures": [{"label": "f", "family": "flat", "dim": 2}, {"label": "f", "family": "flat", "dim": 3}],
                         "sampling": {"seed": 1}})")
                .find("duplicate label 'f'"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"structures": [{"label": "f", "family": "flat", "dim": 2}],
                         "params": [{"label": "p", "alpha": 1, "beta": 1, "c": 0}, {"label": "p", "alpha": 2, "beta": 1, "c": 0}],
                         "sampling": {"seed": 1}})")
                .find("duplicate label 'p'"),
            std::string::npos);
}

TEST(Manifest, TolerancesMustExceedMachineEpsilon) {
  EXPECT_NE(error_of(R"({"structures": [{"label": "f", "family": "flat", "dim": 2}], "sampling": {"seed": 1},
                         "tolerances": {"hermitian": 1e-20}})")
                .find("machine epsilon"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"structures": [{"label": "f", "family": "flat", "dim": 2}], "sampling": {"seed": 1},
                         "tolerances": {"herm": 1e-3}})")
                .find("unknown key 'herm'"),
            std::string::npos);
}

TEST(Manifest, SamplingOutsideTheTubeCitesItsCondition) {
  // With c beta^2 = 4 the tube needs K^2 < 0.2, unreachable for |p| >= 0.5.
  const std::string e = error_of(R"({
    "structures": [{"label": "s", "family": "riemannian_conformal", "dim": 2, "parameters": {"c": 1}}],
    "params": [{"label": "p", "alpha": 1, "beta": 2, "c": 1}],
    "sampling": {"seed": 1}})");
  EXPECT_NE(e.find("2 tau < 1/(c beta^2)"), std::string::npos) << e;
  // The same beta with smaller momenta is feasible.
  EXPECT_NO_THROW(parse_manifest(R"({
    "structures": [{"label": "s", "family": "riemannian_conformal", "dim": 2, "parameters": {"c": 1}}],
    "params": [{"label": "p", "alpha": 1, "beta": 2, "c": 1}],
    "sampling": {"seed": 1, "p_norm_range": [0.1, 0.3]}})"));
}

TEST(Manifest, LoadFromMissingFile) { EXPECT_THROW(load_manifest("/nonexistent/manifest.json"), ManifestError); }
