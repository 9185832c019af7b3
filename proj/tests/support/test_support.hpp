#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "qumera/channels.hpp"
#include "qumera/linalg.hpp"
#include "qumera/oracle.hpp"

namespace qtest {

using qumera::cdouble;
using qumera::Matrix;
using qumera::Vector;

inline Matrix random_hermitian(std::size_t n, qumera::Rng& rng) {
  Matrix m = qumera::random_gaussian_matrix(n, n, rng);
  return (0.5 * (m + m.adjoint())).eval();
}

inline Matrix random_density(std::size_t n, qumera::Rng& rng) {
  Matrix a = qumera::random_gaussian_matrix(n, n, rng);
  Matrix r = a * a.adjoint();
  return r / r.trace().real();
}

inline Matrix random_unitary(std::size_t n, qumera::Rng& rng) {
  return qumera::polar_isometry(qumera::random_gaussian_matrix(n, n, rng));
}

/// Applies `op` on the listed sites of a state vector by brute-force
/// permutation of the amplitude tensor.
inline Vector apply_on_sites(const Matrix& op, const std::vector<std::size_t>& sites, const Vector& x, std::size_t n,
                             std::size_t D) {
  std::vector<std::size_t> order = sites;
  std::vector<bool> used(n, false);
  for (auto s : sites) used[s] = true;
  for (std::size_t q = 0; q < n; ++q)
    if (!used[q]) order.push_back(q);
  qumera::DenseTensor t(qumera::Shape(n, D), std::vector<cdouble>(x.data(), x.data() + x.size()));
  const Matrix m = qumera::to_matrix(qumera::permute(t, order), sites.size());
  const Matrix y = op * m;
  std::vector<std::size_t> inverse(n);
  for (std::size_t q = 0; q < n; ++q) inverse[order[q]] = q;
  return qumera::to_vector(qumera::permute(qumera::from_matrix(y, qumera::Shape(n, D)), inverse));
}

/// ⟨ψ|A_sa B_sb|ψ⟩ by two successive state-vector applications; the site sets
/// may overlap.
inline cdouble two_point_oracle(const qumera::oracle::StateVector& psi, const Matrix& a,
                                const std::vector<std::size_t>& sa, const Matrix& b,
                                const std::vector<std::size_t>& sb) {
  const Vector y = apply_on_sites(a, sa, apply_on_sites(b, sb, psi.amplitudes, psi.sites, psi.D), psi.sites, psi.D);
  return psi.amplitudes.dot(y);
}

/// Dense Heisenberg action Σ K θ K† written out as explicit index loops.
inline Matrix heisenberg_loops(const qumera::channels::KrausFamily& k, const Matrix& theta) {
  const auto out = k.ops.front().rows();
  const auto in = k.ops.front().cols();
  Matrix r = Matrix::Zero(out, out);
  for (const auto& op : k.ops)
    for (Eigen::Index i = 0; i < out; ++i)
      for (Eigen::Index j = 0; j < out; ++j) {
        cdouble acc = 0;
        for (Eigen::Index a = 0; a < in; ++a)
          for (Eigen::Index b = 0; b < in; ++b) acc += op(i, a) * theta(a, b) * std::conj(op(j, b));
        r(i, j) += acc;
      }
  return r;
}

inline double isometry_residual(const Matrix& w) {
  const Matrix g = w.cols() <= w.rows() ? Matrix(w.adjoint() * w) : Matrix(w * w.adjoint());
  return qumera::max_abs(g - Matrix::Identity(g.rows(), g.cols()));
}

}  // namespace qtest
