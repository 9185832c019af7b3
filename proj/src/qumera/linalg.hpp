#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "qumera/tensor.hpp"

namespace qumera {

/// Isometric factor W = U V† of m = U S V†. Tall inputs give W†W = I, wide
/// inputs give W W† = I.
Matrix polar_isometry(const Matrix& m, double rank_tol = 1e-12);

struct EigenDecomposition {
  Vector values;               // descending modulus
  Matrix right;                // columns, unit 2-norm
  std::optional<Matrix> left;  // columns w_i with w_i^† v_j = δ_ij
  double max_residual = 0.0;   // max_i ‖m v_i − λ_i v_i‖
};

/// Largest dimension handled by the dense path; beyond it callers should use
/// eig_leading.
inline constexpr std::size_t kDenseEigLimit = 4096;

EigenDecomposition eig_dense(const Matrix& m, bool want_left = false);

/// Complex Schur form m = Q T Q†.
struct SchurForm {
  Matrix q;
  Matrix t;
};
SchurForm schur(const Matrix& m);

/// Spectral projector onto the invariant subspace of the eigenvalues selected
/// by `select`, computed by Schur reordering and a Sylvester solve.
Matrix spectral_projector(const SchurForm& s, const std::vector<bool>& select);

using LinearAction = std::function<void(const Vector& in, Vector& out)>;

struct LeadingEigenOptions {
  double tol = 1e-8;
  std::size_t krylov_dim = 0;  // 0 picks a default from k
  std::size_t max_restarts = 500;
  std::optional<Vector> start;
  std::uint64_t seed = 0x5eed;
};

struct LeadingEigenResult {
  Vector values;                 // descending modulus
  Matrix vectors;                // columns, unit norm
  std::vector<double> residuals;  // ‖A x − λ x‖
  bool converged = false;
  bool degenerate_cluster = false;  // |λ_{k+1}| ties |λ_k|
  std::size_t restarts = 0;
  std::size_t applications = 0;
};

/// k largest-modulus eigenpairs of a linear action by Krylov–Schur restarted
/// Arnoldi.
LeadingEigenResult eig_leading(const LinearAction& apply, std::size_t dim, std::size_t k,
                               const LeadingEigenOptions& opts = {});

Matrix hermitian_part(const Matrix& m);
Eigen::VectorXd hermitian_eigenvalues(const Matrix& m);
double min_hermitian_eigenvalue(const Matrix& m);
double trace_norm(const Matrix& m);
double trace_distance(const Matrix& a, const Matrix& b);
double max_abs(const Matrix& m);

/// Orders indices by descending modulus with deterministic tie-breaking on
/// the argument.
std::vector<Eigen::Index> descending_modulus_order(const Vector& values);

}  // namespace qumera
