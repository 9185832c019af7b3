// Command-line front end over the C API.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "qumera/qumera.h"

namespace {

struct Flags {
  std::string manifest, observable, out, config, task, kind;
  std::optional<std::uint64_t> seed;
  std::optional<long long> site;
  std::optional<int> kmax, kmin, n, count, max_sweeps;
  std::optional<double> tol, field;
  std::optional<std::size_t> D;
  bool thermo = false, real = false, reflection = false, quiet = false;
};

nlohmann::json options_json(const Flags& f) {
  nlohmann::json o = nlohmann::json::object();
  auto put_str = [&](const char* k, const std::string& v) {
    if (!v.empty()) o[k] = v;
  };
  put_str("manifest", f.manifest);
  put_str("observable", f.observable);
  put_str("out", f.out);
  put_str("config", f.config);
  put_str("task", f.task);
  put_str("kind", f.kind);
  if (f.seed) o["seed"] = *f.seed;
  if (f.site) o["site"] = *f.site;
  if (f.kmax) o["kmax"] = *f.kmax;
  if (f.kmin) o["kmin"] = *f.kmin;
  if (f.n) o["n"] = *f.n;
  if (f.count) o["count"] = *f.count;
  if (f.max_sweeps) o["max_sweeps"] = *f.max_sweeps;
  if (f.tol) o["tol"] = *f.tol;
  if (f.field) o["field"] = *f.field;
  if (f.D) o["D"] = *f.D;
  if (f.thermo) o["thermo"] = true;
  if (f.real) o["real"] = true;
  if (f.reflection) o["reflection"] = true;
  return o;
}

int apply_thread_cap() {
  const char* env = std::getenv("QUMERA_THREADS");
  if (!env || !*env) return 0;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1 || n > 4096) {
    std::fprintf(stderr, "qumera: QUMERA_THREADS must be a positive integer, got '%s'\n", env);
    return 2;
  }
  if (qumera_set_threads(int(n)) != QUMERA_OK) {
    std::fprintf(stderr, "qumera: %s\n", qumera_last_error());
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Channel-formalism evaluation and optimization of binary MERA networks"};
  app.set_version_flag("--version", std::string(qumera_version()));
  app.require_subcommand(1);
  Flags f;

  auto common = [&](CLI::App* c) {
    c->add_option("--out", f.out, "Write the result record here; artifacts go next to it");
    c->add_flag("--quiet", f.quiet, "Do not print the record");
  };
  auto with_manifest = [&](CLI::App* c) { c->add_option("--manifest", f.manifest, "Network manifest (JSON)")->required(); };
  auto with_observable = [&](CLI::App* c) {
    c->add_option("--observable", f.observable, "x, y, z, i or a JSON matrix file")->default_str("z");
  };

  auto* validate = app.add_subcommand("validate", "Check the contraction rules of a manifest");
  with_manifest(validate);
  common(validate);

  auto* observe = app.add_subcommand("observe", "Local expectation value");
  with_manifest(observe);
  with_observable(observe);
  observe->add_option("--site", f.site, "Window centre j (finite networks)");
  observe->add_flag("--thermo", f.thermo, "Use the fixed point of a scale-invariant network");
  common(observe);

  auto* spectrum = app.add_subcommand("spectrum", "Transfer operator spectra of the L and R channels");
  with_manifest(spectrum);
  spectrum->add_option("--count", f.count, "Eigenvalues kept when the spectrum is computed partially");
  common(spectrum);

  auto* exponent = app.add_subcommand("exponent", "Filtered kappa, nu and the fitted correlator decay");
  with_manifest(exponent);
  with_observable(exponent);
  exponent->add_option("--kmax", f.kmax, "Largest separation exponent (default 10)");
  exponent->add_option("--kmin", f.kmin, "Smallest separation exponent (default 3)");
  exponent->add_option("--tol", f.tol, "Relative overlap threshold (default 1e-8)");
  common(exponent);

  auto* optimize = app.add_subcommand("optimize", "Variational optimization of a scale-invariant network");
  optimize->add_option("--config", f.config, "JSON configuration file");
  optimize->add_option("--seed", f.seed, "Random seed");
  optimize->add_option("--tol", f.tol, "Energy change per sweep that stops the run");
  optimize->add_option("--D", f.D, "Leg dimension (2 or 4 for the Ising chain)");
  optimize->add_option("--field", f.field, "Transverse field");
  optimize->add_option("--max-sweeps", f.max_sweeps, "Sweep limit");
  common(optimize);

  auto* oracle = app.add_subcommand("oracle", "Brute-force state-vector reference for a finite network");
  with_manifest(oracle);
  with_observable(oracle);
  oracle->add_option("--task", f.task, "norm or compare")->default_str("compare");
  common(oracle);

  auto* generate = app.add_subcommand("generate", "Write a random network manifest");
  generate->add_option("--kind", f.kind, "finite or scale_invariant")->default_str("scale_invariant");
  generate->add_option("--n", f.n, "log2 of the site count (finite)");
  generate->add_option("--D", f.D, "Leg dimension");
  generate->add_option("--seed", f.seed, "Random seed");
  generate->add_flag("--real", f.real, "Real tensors");
  generate->add_flag("--reflection", f.reflection, "Reflection-symmetric tensors");
  generate->add_option("--out", f.out, "Manifest path")->required();
  generate->add_flag("--quiet", f.quiet, "Do not print the record");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  if (const int rc = apply_thread_cap()) return rc;

  std::string command;
  for (auto* sub : app.get_subcommands()) command = sub->get_name();
  nlohmann::json options = options_json(f);
  // For generate the manifest itself is the output, not the record.
  const bool record_to_out = command != "generate" && !f.out.empty();

  char* record = nullptr;
  int exit_code = 0;
  if (qumera_run_command(command.c_str(), options.dump().c_str(), &record, &exit_code) != QUMERA_OK) {
    std::fprintf(stderr, "qumera: %s\n", qumera_last_error());
    return 2;
  }
  const std::string text = std::string(record) + "\n";
  qumera_string_free(record);
  if (!f.quiet) std::fputs(text.c_str(), stdout);
  if (record_to_out) {
    std::ofstream file(f.out, std::ios::binary | std::ios::trunc);
    if (!(file << text)) {
      std::fprintf(stderr, "qumera: cannot write %s\n", f.out.c_str());
      return 2;
    }
  }
  const auto parsed = nlohmann::json::parse(text);
  if (parsed.contains("error")) std::fprintf(stderr, "qumera: %s\n", parsed["error"]["message"].get<std::string>().c_str());
  return exit_code;
}
