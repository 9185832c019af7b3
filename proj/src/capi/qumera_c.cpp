#include "qumera/qumera.h"

#include <cstring>
#include <string>
#include <variant>

#include "qumera/commands.hpp"
#include "qumera/manifest.hpp"
#include "qumera/observables.hpp"
#include "qumera/transfer.hpp"

extern "C" void openblas_set_num_threads(int);

struct qumera_network {
  qumera::manifest::Manifest m;
};

namespace {

thread_local std::string last_error;

qumera_status to_status(qumera::ErrorCode code) {
  using qumera::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::Contraction:
    case ErrorCode::ConeTooShort:
      return QUMERA_INVALID_ARGUMENT;
    case ErrorCode::Parse: return QUMERA_PARSE;
    case ErrorCode::Validation: return QUMERA_VALIDATION;
    case ErrorCode::NotMixing: return QUMERA_NOT_MIXING;
    case ErrorCode::Domain:
    case ErrorCode::KappaUndefined:
    case ErrorCode::DegeneratePolar:
      return QUMERA_DOMAIN;
    case ErrorCode::Resource: return QUMERA_RESOURCE;
    case ErrorCode::Convergence: return QUMERA_CONVERGENCE;
    case ErrorCode::Io: return QUMERA_IO;
  }
  return QUMERA_INTERNAL;
}

template <class F>
qumera_status guarded(F&& f) {
  last_error.clear();
  try {
    f();
    return QUMERA_OK;
  } catch (const qumera::Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return QUMERA_RESOURCE;
  } catch (const std::exception& e) {
    last_error = e.what();
    return QUMERA_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  qumera::require(p != nullptr, qumera::ErrorCode::InvalidArgument, std::string(what) + " must not be null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

qumera::observables::Observable read_operator(const qumera_network* net, const double* op, std::size_t dim) {
  need(op, "operator");
  const std::size_t D = net->m.bond_dim();
  qumera::require(dim == D || dim == D * D * D, qumera::ErrorCode::InvalidArgument, "operator dimension must be D or D^3");
  const auto n = static_cast<Eigen::Index>(dim);
  qumera::Matrix m(n, n);
  for (std::size_t r = 0; r < dim; ++r)
    for (std::size_t c = 0; c < dim; ++c)
      m(Eigen::Index(r), Eigen::Index(c)) = {op[2 * (r * dim + c)], op[2 * (r * dim + c) + 1]};
  if (dim == D) return qumera::observables::Observable::single_site(m, D);
  return qumera::observables::Observable::three_site(m, D);
}

void emit(qumera::manifest::Manifest m, qumera_network** out) {
  need(out, "out");
  *out = new qumera_network{std::move(m)};
}

}  // namespace

extern "C" {

QUMERA_API const char* qumera_version(void) { return QUMERA_VERSION; }

QUMERA_API const char* qumera_last_error(void) { return last_error.c_str(); }

QUMERA_API void qumera_string_free(char* s) { std::free(s); }

QUMERA_API const char* qumera_status_name(qumera_status status) {
  switch (status) {
    case QUMERA_OK: return "ok";
    case QUMERA_INVALID_ARGUMENT: return "invalid_argument";
    case QUMERA_PARSE: return "parse";
    case QUMERA_VALIDATION: return "validation";
    case QUMERA_NOT_MIXING: return "not_mixing";
    case QUMERA_DOMAIN: return "domain";
    case QUMERA_RESOURCE: return "resource";
    case QUMERA_CONVERGENCE: return "convergence";
    case QUMERA_IO: return "io";
    case QUMERA_INTERNAL: return "internal";
  }
  return "unknown";
}

QUMERA_API qumera_status qumera_set_threads(int n) {
  return guarded([&] {
    qumera::require(n >= 1, qumera::ErrorCode::InvalidArgument, "thread count must be >= 1");
    openblas_set_num_threads(n);
  });
}

QUMERA_API qumera_status qumera_network_parse(const char* manifest_json, qumera_network** out) {
  return guarded([&] {
    need(manifest_json, "manifest_json");
    emit(qumera::manifest::parse(manifest_json), out);
  });
}

QUMERA_API qumera_status qumera_network_load(const char* path, int require_valid, qumera_network** out) {
  return guarded([&] {
    need(path, "path");
    emit(qumera::manifest::load(path, require_valid != 0), out);
  });
}

QUMERA_API qumera_status qumera_network_save(const qumera_network* net, const char* path) {
  return guarded([&] {
    need(net, "network");
    need(path, "path");
    qumera::manifest::save(path, net->m);
  });
}

QUMERA_API qumera_status qumera_network_serialize(const qumera_network* net, char** out_json) {
  return guarded([&] {
    need(net, "network");
    need(out_json, "out_json");
    *out_json = dup_string(qumera::manifest::serialize(net->m));
  });
}

QUMERA_API qumera_status qumera_network_random_finite(int n, size_t D, uint64_t seed, qumera_network** out) {
  return guarded([&] { emit(qumera::manifest::Manifest{qumera::mera::random_finite(n, D, seed)}, out); });
}

QUMERA_API qumera_status qumera_network_random_scale_invariant(size_t D, uint64_t seed, qumera_network** out) {
  return guarded([&] { emit(qumera::manifest::Manifest{qumera::mera::random_scale_invariant(D, seed)}, out); });
}

QUMERA_API void qumera_network_free(qumera_network* net) { delete net; }

QUMERA_API qumera_status qumera_network_info(const qumera_network* net, int* is_finite, size_t* D, int* n) {
  return guarded([&] {
    need(net, "network");
    if (is_finite) *is_finite = net->m.is_finite() ? 1 : 0;
    if (D) *D = net->m.bond_dim();
    if (n) *n = net->m.is_finite() ? net->m.finite().log2_sites() : 0;
  });
}

QUMERA_API qumera_status qumera_network_validate(const qumera_network* net, int* valid, double* max_deviation) {
  return guarded([&] {
    need(net, "network");
    const auto report = qumera::manifest::validate(net->m);
    if (valid) *valid = report.valid ? 1 : 0;
    if (max_deviation) *max_deviation = report.max_deviation;
  });
}

QUMERA_API qumera_status qumera_local_expectation(const qumera_network* net, const double* op, size_t dim, int64_t j,
                                                  double* re, double* im) {
  return guarded([&] {
    need(net, "network");
    qumera::require(net->m.is_finite(), qumera::ErrorCode::InvalidArgument, "local expectations need a finite network");
    const auto theta = read_operator(net, op, dim);
    const auto v = qumera::observables::local_expectation(net->m.finite(), theta, j);
    if (re) *re = v.real();
    if (im) *im = v.imag();
  });
}

QUMERA_API qumera_status qumera_thermo_expectation(const qumera_network* net, const double* op, size_t dim,
                                                   double* re, double* im) {
  return guarded([&] {
    need(net, "network");
    qumera::require(!net->m.is_finite(), qumera::ErrorCode::InvalidArgument,
                    "thermodynamic expectations need a scale-invariant network");
    const auto theta = read_operator(net, op, dim);
    const auto s = qumera::transfer::level_spectrum(net->m.scale_invariant(), qumera::channels::Side::R);
    const auto v = qumera::transfer::thermo_expectation(s, theta.window());
    if (re) *re = v.real();
    if (im) *im = v.imag();
  });
}

QUMERA_API qumera_status qumera_filtered_kappa(const qumera_network* net, const double* op, size_t dim, double tol,
                                               int* defined, double* kappa) {
  return guarded([&] {
    need(net, "network");
    qumera::require(!net->m.is_finite(), qumera::ErrorCode::InvalidArgument, "κ needs a scale-invariant network");
    const auto theta = read_operator(net, op, dim);
    const auto s = qumera::transfer::level_spectrum(net->m.scale_invariant(), qumera::channels::Side::R);
    qumera::require(s.mixing, qumera::ErrorCode::NotMixing, "channel is not mixing");
    const qumera::Matrix w = theta.window();
    const qumera::Matrix rho = 0.5 * (w * s.fixed_point + s.fixed_point * w);
    const auto k = qumera::transfer::filtered_kappa(s, w, rho, tol);
    if (defined) *defined = k.defined ? 1 : 0;
    if (kappa) *kappa = k.kappa;
  });
}

QUMERA_API qumera_status qumera_run_command(const char* command, const char* options_json, char** record_json,
                                            int* exit_code) {
  return guarded([&] {
    need(command, "command");
    need(record_json, "record_json");
    nlohmann::json options = nlohmann::json::object();
    if (options_json && *options_json) {
      try {
        options = nlohmann::json::parse(options_json);
      } catch (const nlohmann::json::parse_error& e) {
        qumera::fail(qumera::ErrorCode::Parse, std::string("options: ") + e.what());
      }
    }
    const auto outcome = qumera::commands::run(command, options);
    *record_json = dup_string(outcome.record.dump(2));
    if (exit_code) *exit_code = outcome.exit_code;
  });
}

}  // extern "C"
