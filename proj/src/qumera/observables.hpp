#pragma once

#include <cstdint>
#include <vector>

#include "qumera/channels.hpp"

namespace qumera::observables {

using mera::LayeredNetwork;

/// A hermitian operator on one site or on a 3-site window. Single-site
/// operators sit on window position 1 (the middle) unless placed elsewhere.
class Observable {
 public:
  Observable() = default;
  Observable(Matrix matrix, std::size_t D);

  static Observable single_site(const Matrix& m, std::size_t D, std::size_t position = 1);
  static Observable three_site(const Matrix& m, std::size_t D);

  const Matrix& matrix() const noexcept { return matrix_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t bond_dim() const noexcept { return D_; }
  std::size_t position() const noexcept { return position_; }
  /// The D³×D³ window operator.
  Matrix window() const;

 private:
  Matrix matrix_;
  std::size_t width_ = 0;
  std::size_t D_ = 0;
  std::size_t position_ = 1;
};

inline constexpr double kHermitianTol = 1e-12;

/// σˣ, σʸ, σᶻ or the identity ('i').
Matrix pauli(char axis);

/// Tr[Φ^{(1←m)}(ρ_C) Θ_j] with the window (j−1, j, j+1).
cdouble local_expectation(const LayeredNetwork& net, const Observable& theta, std::int64_t j);
/// Tr[ρ_C B_j], the observable lifted through the Heisenberg channels.
cdouble local_expectation_heisenberg(const LayeredNetwork& net, const Observable& theta, std::int64_t j);
/// Validates the network first.
cdouble local_expectation(const mera::FiniteMera& mera, const Observable& theta, std::int64_t j);

Matrix reduced_density(const LayeredNetwork& net, std::int64_t j);

/// ⟨Θ_i Θ_j⟩, through the joint causal cone.
cdouble two_point(const LayeredNetwork& net, const Observable& theta_i, const Observable& theta_j, std::int64_t i,
                  std::int64_t j);

struct CorrelatorPoint {
  int k = 0;
  std::int64_t separation = 0;
  double delta = 0.0;
  double log2_abs = 0.0;
  bool excluded = false;
  int depth = 0;
  double depth_change = 0.0;  // |Δ(depth) − Δ(depth/2)|
  double leverage = 0.0;
};

struct CorrelatorSeries {
  std::vector<CorrelatorPoint> points;
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // RMS of the fit
  std::size_t fitted = 0;
  bool fit_valid = false;
  bool depth_converged = false;
  int depth = 0;
  double fitted_nu() const { return -slope; }
};

inline constexpr double kDeltaFloor = 1e-13;
inline constexpr double kDepthTol = 1e-10;

/// Connected correlators Δ(2^k), k = kmin..kmax, between windows centered on
/// the all-R paths of a deep tiling, with a least-squares fit of log2|Δ|
/// against k.
CorrelatorSeries connected_correlator_series(const mera::ScaleInvariantMera& si, const Observable& theta, int kmax,
                                             int kmin = 3);

/// ν = −2 log₂ κ.
double critical_exponent(double kappa);

/// Window start of the site whose cone is all R: centre − 2 of the network.
std::int64_t central_window_start(const LayeredNetwork& net);

}  // namespace qumera::observables
