// cartanlab: batch front-end for the verification suite and tensor dumps.
//
//   cartanlab verify --manifest m.json [--seed N] [--points N] [--tol-scale s] [--out r.json]
//   cartanlab tensor --manifest m.json --structure S [--param-set P] --x 0.1,0.2 --p 1,0 --objects g,G

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cartanlab/verify.hpp"

namespace {

enum Exit { kPass = 0, kFail = 1, kManifest = 2, kInternal = 3 };

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || item.find_first_not_of(" \t", used) != std::string::npos)
      throw cartanlab::ManifestError(std::string(what) + ": '" + item + "' is not a number");
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

void emit(const cartanlab::Json& j, const std::string& out) {
  const std::string text = j.dump(2) + "\n";
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + out + "'");
  f << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tensor calculus and verification on Cartan spaces"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cartanlab::kEngineVersion));

  std::string manifest_path;
  std::string out_path;
  std::string format = "json";

  auto* verify = app.add_subcommand("verify", "Run the full verification suite");
  std::optional<std::uint64_t> seed;
  std::optional<int> points;
  double tol_scale = 1.0;
  verify->add_option("--manifest", manifest_path, "Manifest (JSON)")->required();
  verify->add_option("--seed", seed, "Override the manifest seed");
  verify->add_option("--points", points, "Points per check");
  verify->add_option("--tol-scale", tol_scale, "Multiply every tolerance");
  verify->add_option("--out", out_path, "Report path (default stdout)");
  verify->add_option("--format", format, "Report format")->check(CLI::IsMember({"json"}));

  auto* tensor = app.add_subcommand("tensor", "Evaluate objects at one point");
  cartanlab::TensorRequest req;
  std::string x_text, p_text, objects_text;
  tensor->add_option("--manifest", manifest_path, "Manifest (JSON)")->required();
  tensor->add_option("--structure", req.structure, "Structure label")->required();
  tensor->add_option("--param-set", req.params, "Parameter set label");
  tensor->add_option("--x", x_text, "Base point, comma separated")->required();
  tensor->add_option("--p", p_text, "Momentum, comma separated")->required();
  tensor->add_option("--objects", objects_text, "Comma separated: g,C,N,B,L,G,J,theta,nabla,curvature,ricci,div,grad,laplacian")
      ->required();
  tensor->add_option("--field", req.field, "Scalar field for grad and laplacian (default K^2)");
  tensor->add_option("--out", out_path, "Report path (default stdout)");
  tensor->add_option("--format", format, "Report format")->check(CLI::IsMember({"json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kManifest;
  }

  try {
    const cartanlab::Manifest m = cartanlab::load_manifest(manifest_path);
    if (*verify) {
      const cartanlab::VerificationReport r = cartanlab::run_verify(m, {seed, points, tol_scale});
      emit(cartanlab::to_json(r), out_path);
      std::cerr << "cartanlab verify: " << r.passed() << " passed, " << r.failed() << " failed\n";
      return r.all_pass() ? kPass : kFail;
    }
    req.x = parse_list(x_text, "--x");
    req.p = parse_list(p_text, "--p");
    req.objects = split(objects_text);
    emit(cartanlab::run_tensor(m, req), out_path);
    return kPass;
  } catch (const cartanlab::ManifestError& e) {
    std::cerr << "manifest error: " << e.what() << "\n";
    return kManifest;
  } catch (const cartanlab::ParseError& e) {
    std::cerr << "manifest error: " << e.what() << "\n";
    return kManifest;
  } catch (const cartanlab::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kManifest;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
}
