#pragma once

#include <array>
#include <vector>

#include "qumera/mera_network.hpp"

namespace qumera::oracle {

struct StateVector {
  std::size_t sites = 0;
  std::size_t D = 0;
  Vector amplitudes;
  double norm() const { return amplitudes.norm(); }
};

/// Largest supported expansion, D^N ≤ 2^20 amplitudes.
inline constexpr double kMaxLog2Amplitudes = 20.0;

/// Full contraction of the network into its D^N amplitudes. Layers are
/// contracted top-down; `reverse` walks each layer's tensors in the opposite
/// order, giving an independently ordered contraction.
StateVector expand_state(const mera::FiniteMera& mera, bool reverse = false);

/// ⟨ψ|θ|ψ⟩ with θ acting on `sites` (its legs in that order).
cdouble exact_expectation(const StateVector& psi, const Matrix& theta, const std::vector<std::size_t>& sites);
/// Reduced density of `sites` (in that order).
Matrix exact_reduced_density(const StateVector& psi, const std::vector<std::size_t>& sites);

/// Periodic sites (j−1, j, j+1).
std::vector<std::size_t> window_sites(std::size_t j, std::size_t n);

/// H = −Σ σˣσˣ − h Σ σᶻ on a periodic chain.
struct IsingGround {
  int sites = 0;
  double field = 1.0;
  double energy = 0.0;
  double energy_density = 0.0;
  Vector state;
  double free_fermion_energy = 0.0;  // finite-size closed form
  double thermodynamic_density = 0.0;
};

IsingGround ising_ground(int n, double h = 1.0);

/// Ground energy of the periodic n-site chain from the free-fermion spectrum
/// in the even-parity sector.
double ising_free_fermion_energy(int n, double h = 1.0);

/// −(1/2π)∫ √(1 + h² − 2h cos k) dk by composite Simpson quadrature.
double ising_energy_density(double h = 1.0);

struct IsingReference {
  double field = 1.0;
  double energy_density = 0.0;
  std::array<double, 3> nu{0.25, 2.25, 2.0};  // x, y, z
  std::array<double, 3> kappa_th{};           // 2^{−ν/2}
};

IsingReference ising_reference(double h = 1.0);

/// Dense 2-site term −σˣσˣ − (h/2)(σᶻ⊗I + I⊗σᶻ).
Matrix ising_bond(double h = 1.0);

}  // namespace qumera::oracle
