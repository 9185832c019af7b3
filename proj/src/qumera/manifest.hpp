#pragma once

#include <optional>
#include <string>
#include <variant>

#include "qumera/mera_network.hpp"

namespace qumera::manifest {

inline constexpr int kFormatVersion = 1;

/// A network read from or written to the JSON manifest format.
///
/// Tensors are listed as {role, level, position, shape, entries} with entries
/// a flat row-major list of [re, im] pairs. Finite networks use level k for
/// the tensors of layer k and level n−2 for the top; scale-invariant networks
/// store one χ, one λ and the top, all at level 0.
struct Manifest {
  std::variant<mera::FiniteMera, mera::ScaleInvariantMera> network;

  bool is_finite() const { return network.index() == 0; }
  const mera::FiniteMera& finite() const;
  const mera::ScaleInvariantMera& scale_invariant() const;
  std::size_t bond_dim() const;
  std::string kind() const { return is_finite() ? "finite" : "scale_invariant"; }
};

/// Parses without checking the contraction rules (see validate()).
Manifest parse(const std::string& text);
std::string serialize(const Manifest& m);
std::string serialize(const mera::FiniteMera& m);
std::string serialize(const mera::ScaleInvariantMera& m);

mera::ValidationReport validate(const Manifest& m);

/// Reads and parses a file; throws Validation unless the network obeys the
/// contraction rules when `require_valid` is set.
Manifest load(const std::string& path, bool require_valid = true);
void save(const std::string& path, const Manifest& m);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace qumera::manifest
