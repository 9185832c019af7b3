#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "qumera/channels.hpp"

namespace qumera::optimizer {

using mera::Disentangler;
using mera::Isometry;
using mera::ScaleInvariantMera;

struct OptimizationConfig {
  std::size_t D = 2;  // 2: one spin per site, 4: two spins per site
  double field = 1.0;
  int max_sweeps = 2000;
  double tol = 1e-10;  // energy change per accepted sweep
  std::uint64_t seed = 1;
  /// Custom 2-site term on D×D sites, replacing the Ising term.
  std::optional<Matrix> two_site_term;
  /// Restrict to tensors commuting with the site parity (σᶻ per spin).
  bool z2_symmetric = true;
  /// Restrict to real tensors.
  bool real = true;
  /// Ascending steps summed into the effective Hamiltonian (0 = until the
  /// terms drop below 1e-13).
  int heff_terms = 0;
  int retries = 3;
  /// Called after every sweep.
  std::function<void(const struct SweepRecord&)> on_sweep;
};

struct SweepRecord {
  int sweep = 0;
  double energy = 0.0;       // per spin
  bool accepted = true;
  double damping = 0.0;
  double chi_change = 0.0;   // ‖χ_new − χ_old‖
  double lam_change = 0.0;
  double lambda2 = 0.0;      // |λ₂| of the averaged channel
  double seconds = 0.0;
};

struct OptimizationTrace {
  std::vector<SweepRecord> sweeps;
  bool converged = false;
  int restarts = 0;
};

struct OptimizationResult {
  ScaleInvariantMera network;
  OptimizationTrace trace;
  double energy = 0.0;  // per spin
  double reference_energy = 0.0;
  Matrix fixed_point;   // of the averaged channel
  int spins_per_site = 1;
};

/// Average of the L and R Heisenberg lifts.
Matrix ascend_hamiltonian(const Matrix& h3, const Disentangler& chi, const Isometry& lam);
/// Average of the L and R Schrödinger descents.
Matrix descend_density(const Matrix& rho3, const Disentangler& chi, const Isometry& lam);

/// (h⊗I + I⊗h)/2 on three sites.
Matrix embed_two_site(const Matrix& h2, std::size_t D);

/// The 2-site term of the Ising chain on sites of dimension D (D = 2 or 4),
/// normalized so that its expectation is the energy per site.
Matrix ising_site_term(std::size_t D, double field);

/// Site parity operator: σᶻ for one spin, σᶻ⊗σᶻ for two.
Matrix site_parity(std::size_t D);

/// Fixed point of the averaged channel.
Matrix averaged_fixed_point(const Disentangler& chi, const Isometry& lam, const std::optional<Matrix>& guess = std::nullopt,
                            double* lambda2 = nullptr);

OptimizationResult optimize(const OptimizationConfig& config);

}  // namespace qumera::optimizer
