#include "qumera/commands.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <sstream>

#include "qumera/linalg.hpp"
#include "qumera/manifest.hpp"
#include "qumera/observables.hpp"
#include "qumera/optimizer.hpp"
#include "qumera/oracle.hpp"
#include "qumera/transfer.hpp"

namespace qumera::commands {

using nlohmann::json;
using channels::Side;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::Parse:
    case ErrorCode::Io:
      return 2;
    default:
      return 1;
  }
}

const char* error_category(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::Contraction: return "contraction";
    case ErrorCode::DegeneratePolar: return "degenerate_polar";
    case ErrorCode::Convergence: return "convergence";
    case ErrorCode::Validation: return "validation";
    case ErrorCode::NotMixing: return "not_mixing";
    case ErrorCode::Domain: return "domain";
    case ErrorCode::Resource: return "resource";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Io: return "io";
    case ErrorCode::ConeTooShort: return "cone_too_short";
    case ErrorCode::KappaUndefined: return "kappa_undefined";
  }
  return "internal";
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

// ---- option access -----------------------------------------------------------

template <class T>
T opt(const json& o, const char* key, T fallback) {
  if (!o.contains(key) || o.at(key).is_null()) return fallback;
  try {
    return o.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::InvalidArgument, std::string("option --") + key + " has the wrong type");
  }
}

template <class T>
T need(const json& o, const char* key) {
  if (!o.contains(key) || o.at(key).is_null())
    fail(ErrorCode::InvalidArgument, std::string("this command needs --") + key);
  return opt<T>(o, key, T{});
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json complex_json(cdouble z) { return json::array({z.real(), z.imag()}); }

Matrix parse_matrix(const json& j, const std::string& where) {
  const json& rows = j.is_object() && j.contains("matrix") ? j.at("matrix") : j;
  if (!rows.is_array() || rows.empty()) fail(ErrorCode::Parse, where + ": expected a list of rows");
  const auto n = Eigen::Index(rows.size());
  Matrix m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const json& row = rows[std::size_t(r)];
    if (!row.is_array() || Eigen::Index(row.size()) != n) fail(ErrorCode::Parse, where + ": matrix must be square");
    for (Eigen::Index c = 0; c < n; ++c) {
      const json& z = row[std::size_t(c)];
      if (z.is_number())
        m(r, c) = z.get<double>();
      else if (z.is_array() && z.size() == 2 && z[0].is_number() && z[1].is_number())
        m(r, c) = cdouble(z[0].get<double>(), z[1].get<double>());
      else
        fail(ErrorCode::Parse, where + ": entries must be numbers or [re, im] pairs");
    }
  }
  return m;
}

observables::Observable make_observable(const json& o, std::size_t D) {
  const std::string desc = opt<std::string>(o, "observable", "z");
  const Matrix m = observable_matrix(desc, D);
  if (m.rows() == Eigen::Index(D)) return observables::Observable::single_site(m, D);
  return observables::Observable::three_site(m, D);
}

// ---- CSV ---------------------------------------------------------------------

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) {
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << "\n";
  }
  template <class... Cells>
  void row(const Cells&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << "\n";
  }
  std::string str() const { return out_.str(); }

 private:
  static std::string cell(double x) { return format_double(x); }
  static std::string cell(int x) { return std::to_string(x); }
  static std::string cell(std::size_t x) { return std::to_string(x); }
  static std::string cell(bool x) { return x ? "1" : "0"; }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  std::ostringstream out_;
};

// Artifacts sit next to the record: <stem>.<suffix>.
std::string artifact_path(const json& o, const std::string& suffix) {
  std::string out = opt<std::string>(o, "out", "");
  if (out.empty()) return "";
  const auto slash = out.find_last_of('/');
  const auto dot = out.find_last_of('.');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) out.resize(dot);
  return out + "." + suffix;
}

json spectrum_head(const transfer::SpectralData& s, std::size_t count) {
  json list = json::array();
  for (Eigen::Index a = 0; a < std::min<Eigen::Index>(s.eigenvalues.size(), Eigen::Index(count)); ++a)
    list.push_back(complex_json(s.eigenvalues(a)));
  return list;
}

json kappa_json(const transfer::KappaResult& k, const transfer::SpectralData& s) {
  json table = json::array();
  for (const auto& t : k.table)
    table.push_back({{"eigenvalue", complex_json(t.eigenvalue)},
                     {"modulus", std::abs(t.eigenvalue)},
                     {"theta_coeff", t.theta_coeff},
                     {"rho_coeff", t.rho_coeff},
                     {"multiplicity", t.multiplicity},
                     {"unit", t.unit},
                     {"contributes", t.contributes}});
  json j{{"defined", k.defined},   {"mixing", s.mixing},         {"schur_fallback", k.schur_fallback},
         {"overlap_table", table}, {"spectrum_complete", s.complete}};
  if (k.defined) {
    j["kappa"] = k.kappa;
    j["eigenvalue"] = complex_json(k.eigenvalue);
  }
  return j;
}

void require_mixing(const transfer::SpectralData& s) {
  if (s.mixing) return;
  std::ostringstream msg;
  msg << "channel is not mixing; leading moduli:";
  for (Eigen::Index a = 0; a < std::min<Eigen::Index>(5, s.eigenvalues.size()); ++a)
    msg << " " << format_double(std::abs(s.eigenvalues(a)));
  fail(ErrorCode::NotMixing, msg.str());
}

// ---- commands ----------------------------------------------------------------

json cmd_validate(const json& o, int& exit_code) {
  const auto m = manifest::load(need<std::string>(o, "manifest"), false);
  const auto report = manifest::validate(m);
  json tensors = json::array();
  for (const auto& t : report.tensors)
    tensors.push_back({{"role", t.role}, {"level", t.level}, {"position", t.position}, {"deviation", t.deviation}});
  exit_code = report.valid ? 0 : 1;
  return {{"valid", report.valid},
          {"kind", m.kind()},
          {"D", m.bond_dim()},
          {"tolerance", mera::kStructureTol},
          {"max_deviation", report.max_deviation},
          {"tensors", tensors}};
}

json cmd_observe(const json& o) {
  const auto m = manifest::load(need<std::string>(o, "manifest"));
  const auto theta = make_observable(o, m.bond_dim());
  const bool thermo = opt<bool>(o, "thermo", false);
  if (thermo) {
    require(!m.is_finite(), ErrorCode::InvalidArgument, "--thermo needs a scale-invariant manifest");
    const auto s = transfer::level_spectrum(m.scale_invariant(), Side::R);
    require_mixing(s);
    const cdouble v = transfer::thermo_expectation(s, theta.window());
    return {{"value", complex_json(v)},
            {"path", "thermodynamic"},
            {"rho_T",
             {{"channel", "R"},
              {"eigenvalue", complex_json(s.eigenvalues(0))},
              {"lambda2", s.lambda2},
              {"min_eigenvalue_before_clipping", s.fixed_point_min_eig},
              {"trace", s.fixed_point.trace().real()}}}};
  }
  require(m.is_finite(), ErrorCode::InvalidArgument, "scale-invariant manifests are observed with --thermo");
  const auto& net = m.finite();
  const auto j = need<std::int64_t>(o, "site");
  const auto N = std::int64_t(net.physical_sites());
  const cdouble v = observables::local_expectation(net, theta, j);
  const auto cone = channels::causal_cone(net, j);
  std::string sides;
  for (const auto& st : cone.steps) sides += channels::side_name(st.side);
  return {{"value", complex_json(v)},
          {"path", "causal_cone"},
          {"site", j},
          {"window", {channels::wrap(j - 1, N), channels::wrap(j, N), channels::wrap(j + 1, N)}},
          {"cone_sides", sides}};
}

json cmd_spectrum(const json& o) {
  const auto m = manifest::load(need<std::string>(o, "manifest"));
  require(!m.is_finite(), ErrorCode::InvalidArgument, "spectrum needs a scale-invariant manifest");
  const auto& si = m.scale_invariant();
  const std::size_t count = opt<std::size_t>(o, "count", 24);
  const auto L = transfer::level_spectrum(si, Side::L, count);
  const auto R = transfer::level_spectrum(si, Side::R, count);
  const Eigen::Index n = std::min(L.eigenvalues.size(), R.eigenvalues.size());
  double moduli_diff = 0.0;
  // A truncated list may end inside a cluster of equal moduli, so the last
  // entries are compared only when the spectra are complete.
  for (Eigen::Index a = 0; a < (L.complete ? n : n - 1); ++a)
    moduli_diff = std::max(moduli_diff, std::abs(std::abs(L.eigenvalues(a)) - std::abs(R.eigenvalues(a))));
  auto side_json = [&](const transfer::SpectralData& s, const char* side) {
    const std::size_t d = s.site_dim;
    return json{{"side", side},
                {"liouville_dimension", d * d},
                {"eigenvalue_count", std::size_t(s.eigenvalues.size())},
                {"complete", s.complete},
                {"leading", complex_json(s.eigenvalues(0))},
                {"leading_modulus", std::abs(s.eigenvalues(0))},
                {"mixing", s.mixing},
                {"lambda2", s.lambda2},
                {"gap", s.gap},
                {"max_residual", s.max_residual},
                {"eigenvalues", spectrum_head(s, 16)}};
  };
  const std::string path = artifact_path(o, "spectrum.csv");
  if (!path.empty()) {
    Csv csv({"side", "index", "re", "im", "modulus"});
    for (const auto* s : {&L, &R})
      for (Eigen::Index a = 0; a < s->eigenvalues.size(); ++a)
        csv.row(s == &L ? "L" : "R", std::size_t(a), s->eigenvalues(a).real(), s->eigenvalues(a).imag(),
                std::abs(s->eigenvalues(a)));
    manifest::write_file(path, csv.str());
  }
  json out{{"reading", "schrodinger"},
           {"L", side_json(L, "L")},
           {"R", side_json(R, "R")},
           {"lr_moduli_max_diff", moduli_diff}};
  if (!path.empty()) out["csv"] = path;
  return out;
}

json cmd_exponent(const json& o) {
  const auto m = manifest::load(need<std::string>(o, "manifest"));
  require(!m.is_finite(), ErrorCode::InvalidArgument, "exponent needs a scale-invariant manifest");
  const auto& si = m.scale_invariant();
  const auto theta = make_observable(o, si.bond_dim());
  const int kmax = opt<int>(o, "kmax", 10);
  const int kmin = opt<int>(o, "kmin", 3);
  const double tol = opt<double>(o, "tol", transfer::kOverlapTol);
  const auto s = transfer::level_spectrum(si, Side::R);
  require_mixing(s);
  const Matrix w = theta.window();
  const Matrix rho = 0.5 * (w * s.fixed_point + s.fixed_point * w);
  const auto k = transfer::filtered_kappa(s, w, rho, tol);
  json out{{"channel", "R"}, {"kappa", kappa_json(k, s)}};
  const auto series = observables::connected_correlator_series(si, theta, kmax, kmin);
  json points = json::array();
  for (const auto& p : series.points)
    points.push_back({{"k", p.k},
                      {"separation", p.separation},
                      {"delta", p.delta},
                      {"excluded", p.excluded},
                      {"depth_change", p.depth_change},
                      {"leverage", p.leverage}});
  out["fit"] = {{"slope", series.slope},         {"intercept", series.intercept},
                {"residual", series.residual},   {"fitted_points", series.fitted},
                {"valid", series.fit_valid},     {"depth", series.depth},
                {"depth_converged", series.depth_converged}, {"points", points}};
  if (series.fit_valid) out["nu_fit"] = series.fitted_nu();
  if (k.defined && k.kappa > 0.0 && k.kappa < 1.0) {
    const double nu = observables::critical_exponent(k.kappa);
    out["nu"] = nu;
    if (series.fit_valid) out["relative_difference"] = (series.fitted_nu() - nu) / nu;
  } else {
    out["signal"] = "kappa_undefined";
  }
  const std::string path = artifact_path(o, "series.csv");
  if (!path.empty()) {
    Csv csv({"k", "separation", "delta", "log2_abs_delta", "excluded", "depth_change", "leverage"});
    for (const auto& p : series.points)
      csv.row(p.k, std::size_t(p.separation), p.delta, p.log2_abs, p.excluded, p.depth_change, p.leverage);
    manifest::write_file(path, csv.str());
    out["csv"] = path;
  }
  return out;
}

json cmd_optimize(json& o) {
  optimizer::OptimizationConfig c;
  json file_config = json::object();
  const std::string config_path = opt<std::string>(o, "config", "");
  if (!config_path.empty()) {
    try {
      file_config = json::parse(manifest::read_file(config_path));
    } catch (const json::parse_error& e) {
      fail(ErrorCode::Parse, config_path + ": " + e.what());
    }
    require(file_config.is_object(), ErrorCode::Parse, config_path + ": expected a JSON object");
    o["config_contents"] = file_config;
  }
  // Flags override the file.
  json merged = file_config;
  for (const char* key : {"seed", "tol", "D", "field", "max_sweeps"})
    if (o.contains(key) && !o.at(key).is_null()) merged[key] = o.at(key);
  c.D = opt<std::size_t>(merged, "D", c.D);
  c.field = opt<double>(merged, "field", c.field);
  c.max_sweeps = opt<int>(merged, "max_sweeps", c.max_sweeps);
  c.tol = opt<double>(merged, "tol", c.tol);
  c.seed = opt<std::uint64_t>(merged, "seed", c.seed);
  c.z2_symmetric = opt<bool>(merged, "z2_symmetric", c.z2_symmetric);
  c.real = opt<bool>(merged, "real", c.real);
  c.heff_terms = opt<int>(merged, "heff_terms", c.heff_terms);
  c.retries = opt<int>(merged, "retries", c.retries);
  if (merged.contains("two_site_term")) c.two_site_term = parse_matrix(merged.at("two_site_term"), "two_site_term");
  o["seed"] = c.seed;

  const auto r = optimizer::optimize(c);
  json out{{"D", c.D},
           {"field", c.field},
           {"energy_density", r.energy},
           {"sweeps", r.trace.sweeps.size()},
           {"converged", r.trace.converged},
           {"restarts", r.trace.restarts},
           {"spins_per_site", r.spins_per_site}};
  if (!c.two_site_term) {
    out["reference_energy_density"] = r.reference_energy;
    out["energy_error"] = r.energy - r.reference_energy;
  }
  if (!r.trace.sweeps.empty()) out["final_lambda2"] = r.trace.sweeps.back().lambda2;
  const std::string mpath = artifact_path(o, "manifest.json");
  if (!mpath.empty()) {
    manifest::save(mpath, manifest::Manifest{r.network});
    out["manifest"] = mpath;
    Csv csv({"sweep", "energy_density", "accepted", "damping", "chi_change", "lam_change", "lambda2", "seconds"});
    for (const auto& s : r.trace.sweeps)
      csv.row(s.sweep, s.energy, s.accepted, s.damping, s.chi_change, s.lam_change, s.lambda2, s.seconds);
    const std::string tpath = artifact_path(o, "trace.csv");
    manifest::write_file(tpath, csv.str());
    out["trace"] = tpath;
  }
  return out;
}

json cmd_oracle(const json& o) {
  const auto m = manifest::load(need<std::string>(o, "manifest"));
  require(m.is_finite(), ErrorCode::InvalidArgument, "oracle needs a finite manifest");
  const auto& net = m.finite();
  const std::string task = opt<std::string>(o, "task", "compare");
  require(task == "norm" || task == "compare", ErrorCode::InvalidArgument, "oracle tasks are norm and compare");
  const auto psi = oracle::expand_state(net);
  json out{{"sites", psi.sites}, {"norm", psi.norm()}};
  if (task == "norm") return out;
  const auto theta = make_observable(o, net.bond_dim());
  const auto N = std::int64_t(psi.sites);
  const Matrix w = theta.window();
  double worst_value = 0.0, worst_density = 0.0;
  json values = json::array();
  for (std::int64_t j = 0; j < N; ++j) {
    const auto sites = oracle::window_sites(std::size_t(j), psi.sites);
    const cdouble exact = oracle::exact_expectation(psi, w, sites);
    const cdouble cone = observables::local_expectation(net, theta, j);
    worst_value = std::max(worst_value, std::abs(exact - cone));
    worst_density = std::max(worst_density, trace_norm(oracle::exact_reduced_density(psi, sites) -
                                                       observables::reduced_density(net, j)));
    values.push_back(complex_json(exact));
  }
  out["exact_values"] = values;
  out["max_expectation_diff"] = worst_value;
  out["max_density_trace_diff"] = worst_density;
  return out;
}

json cmd_generate(const json& o) {
  const std::string kind = opt<std::string>(o, "kind", "scale_invariant");
  const std::size_t D = opt<std::size_t>(o, "D", 2);
  const auto seed = opt<std::uint64_t>(o, "seed", 1);
  mera::RandomOptions ro;
  ro.real_only = opt<bool>(o, "real", false);
  ro.reflection_symmetric = opt<bool>(o, "reflection", false);
  const std::string path = need<std::string>(o, "out");
  json out{{"kind", kind}, {"D", D}, {"manifest", path}};
  if (kind == "finite") {
    const int n = need<int>(o, "n");
    const auto net = mera::random_finite(n, D, seed, ro);
    manifest::save(path, manifest::Manifest{net});
    out["n"] = n;
    out["max_deviation"] = mera::validate(net).max_deviation;
  } else if (kind == "scale_invariant") {
    const auto net = mera::random_scale_invariant(D, seed, ro);
    manifest::save(path, manifest::Manifest{net});
    out["max_deviation"] = mera::validate(net).max_deviation;
  } else {
    fail(ErrorCode::InvalidArgument, "kind must be finite or scale_invariant");
  }
  return out;
}

}  // namespace

Matrix observable_matrix(const std::string& desc, std::size_t D) {
  if (desc.size() == 1 && std::string("xyzi").find(desc[0]) != std::string::npos) {
    const Matrix p = observables::pauli(desc[0]);
    if (D == 2) return p;
    require(D == 4, ErrorCode::InvalidArgument, "Pauli observables need D = 2 or D = 4 (two spins per site)");
    return kron(p, Matrix::Identity(2, 2));
  }
  json j;
  try {
    j = json::parse(manifest::read_file(desc));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Parse, desc + ": " + e.what());
  }
  return parse_matrix(j, desc);
}

Outcome run(const std::string& command, const json& options) {
  Outcome result;
  json o = options.is_object() ? options : json::object();
  json& rec = result.record;
  rec["command"] = command;
  rec["tool_version"] = QUMERA_VERSION;
  try {
    require(options.is_object() || options.is_null(), ErrorCode::InvalidArgument, "options must be a JSON object");
    json out;
    int code = 0;
    if (command == "validate")
      out = cmd_validate(o, code);
    else if (command == "observe")
      out = cmd_observe(o);
    else if (command == "spectrum")
      out = cmd_spectrum(o);
    else if (command == "exponent")
      out = cmd_exponent(o);
    else if (command == "optimize")
      out = cmd_optimize(o);
    else if (command == "oracle")
      out = cmd_oracle(o);
    else if (command == "generate")
      out = cmd_generate(o);
    else
      fail(ErrorCode::InvalidArgument, "unknown command '" + command + "'");
    rec["outputs"] = out;
    result.exit_code = code;
  } catch (const Error& e) {
    rec["error"] = {{"category", error_category(e.code())}, {"message", e.what()}};
    result.exit_code = exit_code_for(e.code());
  } catch (const std::exception& e) {
    rec["error"] = {{"category", "internal"}, {"message", e.what()}};
    result.exit_code = 1;
  }
  rec["config"] = o;
  rec["seed"] = o.contains("seed") ? o.at("seed") : json(nullptr);
  rec["timestamp"] = timestamp();
  return result;
}

}  // namespace qumera::commands
