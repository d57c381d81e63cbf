// Acceptance suite: runs `cartanlab verify` twice on the acceptance manifest
// and prints one PASS/FAIL line per criterion.
//
//   acceptance <cartanlab executable> <manifest> <scratch directory>

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "cartanlab/verify.hpp"

using namespace cartanlab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

/// All records selected by `keep` must pass; reports the count and the worst
/// residual relative to its bound.
Outcome records(const Json& report, const std::function<bool(const Json&)>& keep) {
  std::size_t total = 0;
  std::size_t failed = 0;
  double worst = 0.0;
  std::string worst_id;
  for (const Json& c : report["checks"]) {
    if (!keep(c)) continue;
    ++total;
    if (!c["pass"].get<bool>()) ++failed;
    if (c["residual"].is_null()) continue;
    const double r = c["residual"].get<double>();
    const double t = c["tolerance"].get<double>();
    const double ratio = c["bound"] == "upper" ? (t > 0.0 ? r / t : (r > 0.0 ? 1e300 : 0.0)) : (r > 0.0 ? t / r : 1e300);
    if (ratio > worst) {
      worst = ratio;
      worst_id = c["check_id"].get<std::string>();
    }
  }
  std::ostringstream os;
  os << total << " records, " << failed << " failed, worst residual/bound " << worst << " (" << worst_id << ")";
  return {total > 0 && failed == 0, os.str()};
}

std::function<bool(const Json&)> prefix(const std::string& p) {
  return [p](const Json& c) { return starts_with(c["check_id"].get<std::string>(), p); };
}

bool has_record(const Json& report, const std::string& id, const std::string& structure) {
  for (const Json& c : report["checks"])
    if (c["check_id"] == id && c["structure"] == structure) return true;
  return false;
}

Outcome both(Outcome a, const Outcome& b) {
  a.pass = a.pass && b.pass;
  a.detail += "; " + b.detail;
  return a;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 4) {
    std::cerr << "usage: acceptance <cartanlab> <manifest> <scratch dir>\n";
    return 2;
  }
  const std::string exe = argv[1];
  const std::string manifest_path = argv[2];
  const std::string dir = argv[3];
  const std::string out_a = dir + "/acceptance_report_a.json";
  const std::string out_b = dir + "/acceptance_report_b.json";

  const auto t0 = std::chrono::steady_clock::now();
  const int rc_a = run("\"" + exe + "\" verify --manifest \"" + manifest_path + "\" --format json --out \"" + out_a + "\"");
  const auto t1 = std::chrono::steady_clock::now();
  const int rc_b = run("\"" + exe + "\" verify --manifest \"" + manifest_path + "\" --format json --out \"" + out_b + "\"");
  const double seconds = std::chrono::duration<double>(t1 - t0).count();
  std::cout << "verify run: exit " << rc_a << ", " << seconds << " s\n";

  Json report;
  try {
    report = Json::parse(slurp(out_a));
  } catch (const std::exception& e) {
    std::cout << "no report: " << e.what() << "\n";
    return 1;
  }
  const Manifest manifest = load_manifest(manifest_path);

  std::vector<std::pair<std::string, Outcome>> results;

  Outcome c1 = records(report, prefix("structural."));
  for (const auto& s : manifest.structures) {
    std::size_t count = 0;
    for (const Json& c : report["checks"])
      if (c["check_id"] == "structural.g_pp" && c["structure"] == s.structure.label) ++count;
    if (count < 100) {
      c1.pass = false;
      c1.detail += "; only " + std::to_string(count) + " points on " + s.structure.label;
    }
  }
  results.emplace_back("structural identities <= 1e-7 on every structure, 100 points each", c1);

  results.emplace_back("J^2 = -I, G(JX,JY) = G(X,Y) to 1e-10, theta canonical", records(report, prefix("kahler.")));

  Outcome c3 = both(records(report, prefix("integrability.nijenhuis")),
                    records(report, prefix("integrability.perturbed")));
  for (const char* s : {"hyperbolic2", "sphere2"})
    if (!has_record(report, "integrability.nijenhuis", s)) {
      c3.pass = false;
      c3.detail += std::string("; no record on ") + s;
    }
  results.emplace_back("Nijenhuis <= 1e-5 for v = -c alpha beta^2 (c = -1, +1); some >= 1e-2 with v + 0.1", c3);

  results.emplace_back("closed-form connection = Koszul to 1e-4; torsion and metric residuals <= 1e-4",
                       records(report, prefix("connection.")));

  Outcome c5 = records(report, prefix("curvature."));
  for (BlockKind b : kAllBlocks)
    if (!has_record(report, std::string("curvature.") + block_id(b), "hyperbolic3")) {
      c5.pass = false;
      c5.detail += std::string("; block ") + block_id(b) + " missing";
    }
  results.emplace_back("six curvature blocks = definition to 1e-3 relative", c5);

  Outcome c6 = both(records(report, prefix("einstein.lambda")), records(report, prefix("einstein.defect")));
  {
    // n = 2, beta = 1, c = -1 directly at the sampled points.
    const CartanStructure& s = manifest.structure("hyperbolic2").structure;
    const DeformationParams& prm = manifest.param_set("c-1");
    double worst = 0.0;
    int count = 0;
    for (const Json& c : report["checks"]) {
      if (c["check_id"] != "einstein.lambda" || c["structure"] != "hyperbolic2" || c["params"] != "c-1") continue;
      const ChartPoint at(c["point"]["x"].get<std::vector<double>>(), c["point"]["p"].get<std::vector<double>>());
      worst = std::max(worst, std::abs(ricci(s, at, prm).lambda_hat + 2.0));
      ++count;
    }
    std::ostringstream os;
    os << "n=2 beta=1 c=-1: max |lambda_hat + 2| = " << worst << " over " << count << " points";
    c6 = both(c6, {count > 0 && worst <= 1e-3, os.str()});
    for (const char* st : {"hyperbolic2", "sphere2", "hyperbolic3", "sphere3"})
      if (!has_record(report, "einstein.lambda", st)) {
        c6.pass = false;
        c6.detail += std::string("; no record on ") + st;
      }
  }
  results.emplace_back("Einstein forward: lambda_hat = c n beta and defect <= 1e-3", c6);

  results.emplace_back("Einstein obstruction on Randers: defect >= 1e-2, residual = I^j to 1e-3",
                       both(records(report, prefix("einstein.obstruction_defect")),
                            records(report, [](const Json& c) { return c["check_id"] == "einstein.obstruction"; })));

  results.emplace_back("operators: div, Delta K^2, div(S), duality, Laplacian corpus",
                       records(report, prefix("operators.")));

  const std::string a = slurp(out_a);
  const std::string b = slurp(out_b);
  results.emplace_back("two verify runs give byte-identical reports",
                       Outcome{!a.empty() && a == b && rc_a == rc_b,
                        std::to_string(a.size()) + " bytes, " + (a == b ? "identical" : "different")});

  bool all = rc_a == 0;
  for (std::size_t k = 0; k < results.size(); ++k) {
    const auto& [name, o] = results[k];
    all = all && o.pass;
    std::cout << "criterion " << k + 1 << ": " << (o.pass ? "PASS" : "FAIL") << "  " << name << "  [" << o.detail
              << "]\n";
  }
  std::cout << "runtime " << seconds << " s per verify run (budget 300 s): " << (seconds < 300.0 ? "PASS" : "FAIL")
            << "\n";
  all = all && seconds < 300.0;
  return all ? 0 : 1;
}
