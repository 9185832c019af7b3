#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qumera/channels.hpp"

namespace qumera::transfer {

using channels::KrausFamily;

/// Row-stacking vectorization, vec(X)[i·d + j] = X(i, j).
/// Schrödinger: Σ_r L_r† ⊗ L_rᵀ. Heisenberg: Σ_r L_r ⊗ L_r*, the adjoint.
enum class Reading { Schrodinger, Heisenberg };
const char* reading_name(Reading r);

struct LiouvilleOperator {
  Matrix matrix;
  Reading reading = Reading::Schrodinger;
  std::size_t site_dim = 0;  // D^w
};

LiouvilleOperator liouville_matrix(const KrausFamily& k, Reading reading = Reading::Schrodinger);

Vector vec(const Matrix& x);
Matrix unvec(const Vector& v, Eigen::Index d);

inline constexpr double kMixingTol = 1e-10;

/// Spectrum of the Schrödinger operator, descending modulus. A complete
/// analysis holds every eigenpair; a partial one only the leading few.
struct SpectralData {
  Vector eigenvalues;
  Matrix right;  // columns vec(V_α), unit norm
  Matrix left;   // columns w_α with w_α† v_β = δ_αβ
  bool complete = true;
  double eigvec_condition = 1.0;
  double max_residual = 0.0;
  std::size_t site_dim = 0;

  bool mixing = false;
  double gap = 0.0;       // 1 − |λ₂|
  double lambda2 = 0.0;   // |λ₂|
  Matrix fixed_point;     // empty when not mixing
  double fixed_point_min_eig = 0.0;  // before clipping
  std::vector<Matrix> degenerate_basis;  // unit-modulus eigenoperators when not mixing

  /// Kept for the Schur fallback of the overlap expansion.
  Matrix liouville;
};

SpectralData spectral_analysis(const LiouvilleOperator& e);

/// Leading `count` eigenpairs by restarted Arnoldi on the channel action (and
/// its adjoint for the left vectors). For large D where the dense
/// decomposition is out of reach.
SpectralData spectral_analysis_leading(const KrausFamily& k, std::size_t count, double tol = 1e-10,
                                       const std::optional<Matrix>& fixed_point_guess = std::nullopt);
/// Same from the Schrödinger and Heisenberg actions on d×d matrices.
SpectralData spectral_analysis_leading(const std::function<Matrix(const Matrix&)>& schrodinger,
                                       const std::function<Matrix(const Matrix&)>& heisenberg, Eigen::Index d,
                                       std::size_t count, double tol = 1e-10,
                                       const std::optional<Matrix>& fixed_point_guess = std::nullopt);

/// Spectrum of the L or R channel of a scale-invariant level: dense below
/// `dense_limit` Liouville dimension, otherwise the leading `count` pairs.
SpectralData level_spectrum(const mera::ScaleInvariantMera& si, channels::Side side, std::size_t count = 24,
                            std::size_t dense_limit = 729);

struct PowerTrajectory {
  Matrix rho;
  std::vector<double> distances;  // trace distance to the reference after each step
  double log_slope = 0.0;         // fitted d ln(distance)/d step over the decaying tail
  std::size_t fit_points = 0;
};

PowerTrajectory fixed_point_power(const KrausFamily& k, const Matrix& rho0, int steps,
                                  const std::optional<Matrix>& reference = std::nullopt);

struct OverlapTerm {
  cdouble eigenvalue;
  double theta_coeff = 0.0;  // |Tr[θ V_α]| or the projected norm for a cluster
  double rho_coeff = 0.0;    // |w_α† vec ρ| or the projected norm for a cluster
  std::size_t multiplicity = 1;
  bool unit = false;
  bool contributes = false;
};

struct KappaResult {
  bool defined = false;
  double kappa = 0.0;
  cdouble eigenvalue;
  bool schur_fallback = false;
  std::vector<OverlapTerm> table;
};

inline constexpr double kOverlapTol = 1e-8;
inline constexpr double kConditionLimit = 1e8;

/// Largest subleading modulus whose mode appears in both the θ and the ρ
/// expansion above `tol` relative to the largest coefficient of each list.
KappaResult filtered_kappa(const SpectralData& s, const Matrix& theta, const Matrix& rho, double tol = kOverlapTol);

/// Tr[ρ_T θ].
cdouble thermo_expectation(const SpectralData& s, const Matrix& theta);

/// ρ_T extracted from an eigenoperator: trace-normalized, hermitized and
/// clipped to the positive cone. Returns the minimum eigenvalue before
/// clipping through `min_eig`.
Matrix normalize_density(const Matrix& x, double* min_eig = nullptr);

}  // namespace qumera::transfer
