#pragma once

#include <stdexcept>
#include <string>

namespace qumera {

enum class ErrorCode {
  InvalidArgument,
  Contraction,
  DegeneratePolar,
  Convergence,
  Validation,
  NotMixing,
  Domain,
  Resource,
  Parse,
  Io,
  ConeTooShort,
  KappaUndefined,
};

/// Exception carrying a machine-readable category; the C API maps these
/// onto status codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace qumera
