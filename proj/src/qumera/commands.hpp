#pragma once

#include <string>

#include <json.hpp>

#include "qumera/error.hpp"
#include "qumera/tensor.hpp"

namespace qumera::commands {

/// The outcome of one command: a ResultRecord plus the process exit code
/// (0 success, 1 domain failure, 2 usage or parse error).
struct Outcome {
  nlohmann::json record;
  int exit_code = 0;
};

/// Runs `command` (validate, observe, spectrum, exponent, optimize, oracle,
/// generate) with options given as a JSON object. Errors are reported inside
/// the record and mapped onto the exit code; nothing is thrown.
Outcome run(const std::string& command, const nlohmann::json& options);

/// Exit code for an error category.
int exit_code_for(ErrorCode code);
const char* error_category(ErrorCode code);

/// Observable matrix from a descriptor: x, y, z, i (a Pauli on one spin, σ⊗I for
/// D = 4 two-spin sites) or a JSON file holding a D×D or D³×D³ matrix.
Matrix observable_matrix(const std::string& desc, std::size_t D);

/// Decimal with 17 significant digits.
std::string format_double(double x);

}  // namespace qumera::commands
