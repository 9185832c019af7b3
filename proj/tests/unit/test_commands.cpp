#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qumera/commands.hpp"
#include "qumera/manifest.hpp"
#include "qumera/observables.hpp"
#include "qumera/oracle.hpp"

using namespace qumera;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "qumera_unit_commands";
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string file(const std::string& name) { return (scratch_dir() / name).string(); }

commands::Outcome run(const std::string& cmd, json o) { return commands::run(cmd, o); }

json outputs(const commands::Outcome& r) {
  INFO(r.record.dump());
  REQUIRE(r.exit_code == 0);
  return r.record.at("outputs");
}

std::string without_timestamp(json rec) {
  rec.erase("timestamp");
  return rec.dump();
}

std::size_t line_count(const std::string& path) {
  std::ifstream in(path);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("generate then validate") {
  const auto g = run("generate", {{"kind", "finite"}, {"n", 3}, {"D", 2}, {"seed", 4}, {"out", file("f3.json")}});
  CHECK(outputs(g).at("max_deviation").get<double>() < 1e-12);
  const auto v = run("validate", {{"manifest", file("f3.json")}});
  CHECK(outputs(v).at("valid").get<bool>());
  CHECK(v.record.at("command") == "validate");
  CHECK(v.record.contains("tool_version"));
  CHECK(v.record.contains("timestamp"));
}

TEST_CASE("validate reports a perturbed tensor and malformed JSON") {
  auto doc = json::parse(manifest::serialize(mera::random_finite(3, 2, 5)));
  doc["tensors"][0]["entries"][0][0] = doc["tensors"][0]["entries"][0][0].get<double>() + 1e-3;
  manifest::write_file(file("bad.json"), doc.dump());
  const auto v = run("validate", {{"manifest", file("bad.json")}});
  CHECK(v.exit_code == 1);
  CHECK_FALSE(v.record.at("outputs").at("valid").get<bool>());
  CHECK(v.record.at("outputs").at("max_deviation").get<double>() > 1e-4);

  manifest::write_file(file("broken.json"), "{\"format_version\": 1, ");
  const auto p = run("validate", {{"manifest", file("broken.json")}});
  CHECK(p.exit_code == 2);
  CHECK(p.record.at("error").at("category") == "parse");

  const auto missing = run("validate", {{"manifest", file("nope.json")}});
  CHECK(missing.exit_code == 2);
  CHECK(missing.record.at("error").at("category") == "io");
}

TEST_CASE("observe matches the oracle command") {
  run("generate", {{"kind", "finite"}, {"n", 3}, {"seed", 6}, {"out", file("f3b.json")}});
  const auto id = run("observe", {{"manifest", file("f3b.json")}, {"observable", "i"}, {"site", 2}});
  CHECK(outputs(id).at("value").at(0).get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  const auto orc = outputs(run("oracle", {{"manifest", file("f3b.json")}, {"observable", "x"}}));
  CHECK(orc.at("norm").get<double>() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(orc.at("max_expectation_diff").get<double>() < 1e-10);
  for (int j = 0; j < 8; ++j) {
    const auto o = outputs(run("observe", {{"manifest", file("f3b.json")}, {"observable", "x"}, {"site", j}}));
    CHECK(std::abs(o.at("value").at(0).get<double>() - orc.at("exact_values").at(j).at(0).get<double>()) < 1e-10);
  }
}

TEST_CASE("observe on a finite network needs a site") {
  run("generate", {{"kind", "finite"}, {"n", 3}, {"seed", 6}, {"out", file("f3c.json")}});
  const auto r = run("observe", {{"manifest", file("f3c.json")}});
  CHECK(r.exit_code == 2);
}

TEST_CASE("oracle guard refuses large expansions") {
  run("generate", {{"kind", "finite"}, {"n", 5}, {"seed", 1}, {"out", file("f5.json")}});
  const auto r = run("oracle", {{"manifest", file("f5.json")}, {"task", "norm"}});
  CHECK(r.exit_code == 1);
  CHECK(r.record.at("error").at("category") == "resource");
}

TEST_CASE("spectrum of a scale-invariant manifest") {
  run("generate", {{"kind", "scale_invariant"}, {"seed", 3}, {"reflection", true}, {"out", file("si.json")}});
  const auto r = run("spectrum", {{"manifest", file("si.json")}, {"out", file("si_spec.json")}});
  const auto o = outputs(r);
  CHECK(o.at("R").at("leading_modulus").get<double>() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(o.at("R").at("eigenvalue_count").get<int>() == 64);
  CHECK(o.at("lr_moduli_max_diff").get<double>() < 1e-9);
  CHECK(line_count(file("si_spec.spectrum.csv")) == 1 + 2 * 64);
}

TEST_CASE("thermodynamic observation records the fixed point provenance") {
  run("generate", {{"kind", "scale_invariant"}, {"seed", 3}, {"out", file("si2.json")}});
  const auto o = outputs(run("observe", {{"manifest", file("si2.json")}, {"observable", "z"}, {"thermo", true}}));
  CHECK(std::abs(o.at("value").at(1).get<double>()) < 1e-10);
  CHECK(o.at("rho_T").at("channel") == "R");
}

TEST_CASE("exponent signals an undefined kappa for the identity") {
  run("generate", {{"kind", "scale_invariant"}, {"seed", 3}, {"out", file("si3.json")}});
  const auto r = run("exponent", {{"manifest", file("si3.json")}, {"observable", "i"}, {"kmax", 5}});
  const auto o = outputs(r);
  CHECK(o.at("signal") == "kappa_undefined");
  CHECK_FALSE(o.at("kappa").at("defined").get<bool>());
}

TEST_CASE("exponent of a generic observable") {
  run("generate", {{"kind", "scale_invariant"}, {"seed", 3}, {"out", file("si4.json")}});
  const auto o = outputs(run("exponent", {{"manifest", file("si4.json")}, {"observable", "x"}, {"kmax", 6},
                                          {"out", file("si4_exp.json")}}));
  CHECK(o.at("kappa").at("defined").get<bool>());
  CHECK(o.contains("nu"));
  CHECK(line_count(file("si4_exp.series.csv")) == 1 + 4);
}

TEST_CASE("optimize writes a manifest and one trace row per sweep") {
  json cfg{{"D", 2}, {"max_sweeps", 15}, {"seed", 2}};
  manifest::write_file(file("opt.json"), cfg.dump());
  const auto r = run("optimize", {{"config", file("opt.json")}, {"out", file("opt_run.json")}});
  const auto o = outputs(r);
  CHECK(line_count(file("opt_run.trace.csv")) == 1 + o.at("sweeps").get<std::size_t>());
  const auto v = run("validate", {{"manifest", file("opt_run.manifest.json")}});
  CHECK(outputs(v).at("valid").get<bool>());
  CHECK(r.record.at("seed") == 2);
}

TEST_CASE("records are deterministic apart from the timestamp") {
  run("generate", {{"kind", "scale_invariant"}, {"seed", 8}, {"out", file("det.json")}});
  const std::vector<std::pair<std::string, json>> calls{
      {"validate", {{"manifest", file("det.json")}}},
      {"spectrum", {{"manifest", file("det.json")}}},
      {"observe", {{"manifest", file("det.json")}, {"thermo", true}, {"observable", "x"}}},
      {"exponent", {{"manifest", file("det.json")}, {"kmax", 5}}},
      {"optimize", {{"max_sweeps", 10}, {"seed", 4}}},
      {"generate", {{"kind", "finite"}, {"n", 3}, {"seed", 1}, {"out", file("det_f.json")}}},
  };
  for (const auto& [cmd, opts] : calls) {
    INFO(cmd);
    const auto a = run(cmd, opts);
    const auto b = run(cmd, opts);
    CHECK(without_timestamp(a.record) == without_timestamp(b.record));
  }
}

TEST_CASE("usage errors") {
  CHECK(run("bogus", json::object()).exit_code == 2);
  CHECK(run("observe", json::object()).exit_code == 2);
  CHECK(commands::observable_matrix("x", 4).rows() == 4);
  CHECK_THROWS_AS(commands::observable_matrix("x", 3), Error);
  manifest::write_file(file("op.json"), R"({"matrix": [[1, [0, -1]], [[0, 1], -1]]})");
  const Matrix m = commands::observable_matrix(file("op.json"), 2);
  CHECK(m(0, 1) == cdouble(0, -1));
  CHECK(m(1, 1) == cdouble(-1, 0));
}

TEST_CASE("doubles print round-trip exact") {
  for (double x : {0.1, 1.0 / 3.0, -4.0 / 3.14159, 1e-300}) CHECK(std::stod(commands::format_double(x)) == x);
}

}  // TEST_SUITE
