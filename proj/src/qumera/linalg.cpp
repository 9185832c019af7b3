#include "qumera/linalg.hpp"

#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace qumera {

namespace {

lapack_int as_lapack(Eigen::Index n) { return static_cast<lapack_int>(n); }

}  // namespace

Matrix polar_isometry(const Matrix& m, double rank_tol) {
  require(m.rows() > 0 && m.cols() > 0, ErrorCode::InvalidArgument, "polar_isometry of an empty matrix");
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  const double smin = s.size() ? s(s.size() - 1) : 0.0;
  if (!(smax > 0.0) || smin <= rank_tol * smax) {
    std::ostringstream msg;
    msg << "degenerate polar decomposition: smallest singular value " << smin << " vs largest " << smax;
    fail(ErrorCode::DegeneratePolar, msg.str());
  }
  return svd.matrixU() * svd.matrixV().adjoint();
}

std::vector<Eigen::Index> descending_modulus_order(const Vector& values) {
  std::vector<Eigen::Index> order(std::size_t(values.size()));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    const double ma = std::abs(values(a)), mb = std::abs(values(b));
    if (ma != mb) return ma > mb;
    return std::arg(values(a)) > std::arg(values(b));
  });
  return order;
}

EigenDecomposition eig_dense(const Matrix& m, bool want_left) {
  require(m.rows() == m.cols(), ErrorCode::InvalidArgument, "eig_dense needs a square matrix");
  const Eigen::Index n = m.rows();
  EigenDecomposition out;
  if (n == 0) return out;

  Matrix a = m;
  Vector w(n);
  Matrix vr(n, n);
  cdouble dummy;
  const lapack_int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'V', as_lapack(n), a.data(), as_lapack(n), w.data(),
                                        &dummy, 1, vr.data(), as_lapack(n));
  if (info != 0) {
    std::ostringstream msg;
    msg << "dense eigensolver failed to converge (zgeev info " << info << ")";
    fail(ErrorCode::Convergence, msg.str());
  }

  const auto order = descending_modulus_order(w);
  out.values.resize(n);
  out.right.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = w(order[std::size_t(i)]);
    out.right.col(i) = vr.col(order[std::size_t(i)]).normalized();
  }

  double res = 0.0;
  const Matrix mv = m * out.right;
  for (Eigen::Index i = 0; i < n; ++i) res = std::max(res, (mv.col(i) - out.values(i) * out.right.col(i)).norm());
  out.max_residual = res;

  if (want_left) {
    Eigen::PartialPivLU<Matrix> lu(out.right);
    out.left = lu.inverse().adjoint();
  }
  return out;
}

SchurForm schur(const Matrix& m) {
  require(m.rows() == m.cols(), ErrorCode::InvalidArgument, "schur needs a square matrix");
  const Eigen::Index n = m.rows();
  SchurForm s{Matrix(n, n), m};
  Vector w(n);
  lapack_int sdim = 0;
  const lapack_int info = LAPACKE_zgees(LAPACK_COL_MAJOR, 'V', 'N', nullptr, as_lapack(n), s.t.data(), as_lapack(n),
                                        &sdim, w.data(), s.q.data(), as_lapack(n));
  require(info == 0, ErrorCode::Convergence, "Schur decomposition failed to converge");
  return s;
}

Matrix spectral_projector(const SchurForm& s, const std::vector<bool>& select) {
  const Eigen::Index n = s.t.rows();
  require(Eigen::Index(select.size()) == n, ErrorCode::InvalidArgument, "selection size does not match Schur form");
  Matrix t = s.t, q = s.q;
  std::vector<lapack_logical> sel(select.size());
  for (std::size_t i = 0; i < select.size(); ++i) sel[i] = select[i] ? 1 : 0;
  Vector w(n);
  lapack_int msel = 0;
  double sdummy = 0.0, sepdummy = 0.0;
  lapack_int info = LAPACKE_ztrsen(LAPACK_COL_MAJOR, 'N', 'V', sel.data(), as_lapack(n), t.data(), as_lapack(n),
                                   q.data(), as_lapack(n), w.data(), &msel, &sdummy, &sepdummy);
  require(info == 0, ErrorCode::Convergence, "Schur reordering failed");
  const Eigen::Index k = msel;
  if (k == 0) return Matrix::Zero(n, n);
  if (k == n) return Matrix::Identity(n, n);

  // T11 X − X T22 = −T12 block-diagonalizes the reordered form.
  Matrix t11 = t.topLeftCorner(k, k);
  Matrix t22 = t.bottomRightCorner(n - k, n - k);
  Matrix c = -t.topRightCorner(k, n - k);
  double scale = 1.0;
  info = LAPACKE_ztrsyl(LAPACK_COL_MAJOR, 'N', 'N', -1, as_lapack(k), as_lapack(n - k), t11.data(), as_lapack(k),
                        t22.data(), as_lapack(n - k), c.data(), as_lapack(k), &scale);
  require(info >= 0, ErrorCode::Convergence, "Sylvester solve for the spectral projector failed");
  const Matrix r = c / scale;

  Matrix block = Matrix::Zero(n, n);
  block.topLeftCorner(k, k).setIdentity();
  block.topRightCorner(k, n - k) = -r;
  return q * block * q.adjoint();
}

namespace {

LeadingEigenResult dense_leading(const LinearAction& apply, std::size_t dim, std::size_t k) {
  const Eigen::Index n = Eigen::Index(dim);
  Matrix a(n, n);
  Vector e = Vector::Zero(n), col(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    e.setZero();
    e(j) = 1.0;
    apply(e, col);
    a.col(j) = col;
  }
  const auto dec = eig_dense(a);
  LeadingEigenResult r;
  const Eigen::Index kk = std::min<Eigen::Index>(Eigen::Index(k), n);
  r.values = dec.values.head(kk);
  r.vectors = dec.right.leftCols(kk);
  r.applications = dim;
  for (Eigen::Index i = 0; i < kk; ++i) r.residuals.push_back((a * r.vectors.col(i) - r.values(i) * r.vectors.col(i)).norm());
  r.converged = true;
  if (kk < n) {
    const double lk = std::abs(dec.values(kk - 1)), lnext = std::abs(dec.values(kk));
    r.degenerate_cluster = std::abs(lk - lnext) <= 1e-8 * std::max(1.0, lk);
  }
  return r;
}

}  // namespace

LeadingEigenResult eig_leading(const LinearAction& apply, std::size_t dim, std::size_t k,
                               const LeadingEigenOptions& opts) {
  require(k >= 1, ErrorCode::InvalidArgument, "eig_leading needs k >= 1");
  require(dim >= 1, ErrorCode::InvalidArgument, "eig_leading needs a positive dimension");
  std::size_t m = opts.krylov_dim ? opts.krylov_dim : std::max<std::size_t>(2 * k + 20, 40);
  if (m + 1 >= dim || k >= dim) return dense_leading(apply, dim, k);
  require(m > k + 1, ErrorCode::InvalidArgument, "Krylov dimension too small for the requested eigenpairs");

  const Eigen::Index n = Eigen::Index(dim);
  const Eigen::Index mm = Eigen::Index(m);
  Matrix v = Matrix::Zero(n, mm + 1);
  Matrix h = Matrix::Zero(mm + 1, mm);

  Rng rng(opts.seed);
  auto random_unit = [&]() {
    Vector x = random_gaussian_matrix(dim, 1, rng).col(0);
    return Vector(x.normalized());
  };
  Vector v0 = opts.start && opts.start->size() == n && opts.start->norm() > 0 ? Vector(opts.start->normalized())
                                                                               : random_unit();
  v.col(0) = v0;

  LeadingEigenResult result;
  const std::size_t keep = std::min<std::size_t>(m - 2, k + (m - k) / 2);
  Eigen::Index p = 0;
  Vector w(n);

  for (std::size_t restart = 0;; ++restart) {
    for (Eigen::Index j = p; j < mm; ++j) {
      apply(v.col(j), w);
      ++result.applications;
      const auto basis = v.leftCols(j + 1);
      Vector coeff = basis.adjoint() * w;
      w.noalias() -= basis * coeff;
      Vector coeff2 = basis.adjoint() * w;
      w.noalias() -= basis * coeff2;
      coeff += coeff2;
      h.col(j).head(j + 1) = coeff;
      double beta = w.norm();
      if (beta < 1e-13 * std::max(1.0, coeff.norm())) {
        // Invariant subspace: continue the basis with a fresh orthogonal direction.
        Vector x = random_unit();
        for (int pass = 0; pass < 2; ++pass) x -= basis * (basis.adjoint() * x);
        v.col(j + 1) = x.normalized();
        h(j + 1, j) = 0.0;
      } else {
        v.col(j + 1) = w / beta;
        h(j + 1, j) = beta;
      }
    }

    const Matrix hm = h.topRows(mm);
    const Eigen::RowVectorXcd brow = h.row(mm);
    Eigen::ComplexEigenSolver<Matrix> es(hm);
    const Vector theta = es.eigenvalues();
    const Matrix y = es.eigenvectors();
    const auto order = descending_modulus_order(theta);

    bool converged = true;
    std::vector<double> res(k);
    for (std::size_t i = 0; i < k; ++i) {
      const auto idx = order[i];
      res[i] = std::abs((brow * y.col(idx).normalized())(0));
      if (res[i] > opts.tol * 0.5) converged = false;
    }

    if (converged || restart >= opts.max_restarts) {
      result.restarts = restart;
      result.values.resize(Eigen::Index(k));
      result.vectors.resize(n, Eigen::Index(k));
      result.residuals.assign(k, 0.0);
      bool all_ok = true;
      for (std::size_t i = 0; i < k; ++i) {
        const auto idx = order[i];
        Vector x = v.leftCols(mm) * y.col(idx);
        x.normalize();
        apply(x, w);
        ++result.applications;
        result.values(Eigen::Index(i)) = theta(idx);
        result.vectors.col(Eigen::Index(i)) = x;
        result.residuals[i] = (w - theta(idx) * x).norm();
        all_ok = all_ok && result.residuals[i] <= opts.tol;
      }
      result.converged = all_ok;
      if (order.size() > k) {
        const double lk = std::abs(theta(order[k - 1])), lnext = std::abs(theta(order[k]));
        result.degenerate_cluster = std::abs(lk - lnext) <= 1e-8 * std::max(1.0, lk);
      }
      return result;
    }

    // Krylov–Schur restart: keep the Schur vectors of the wanted Ritz values.
    SchurForm sf = schur(hm);
    const Vector diag = sf.t.diagonal();
    const auto dorder = descending_modulus_order(diag);
    std::vector<lapack_logical> sel(std::size_t(mm), 0);
    for (std::size_t i = 0; i < keep; ++i) sel[std::size_t(dorder[i])] = 1;
    Vector wdummy(mm);
    lapack_int msel = 0;
    double sd = 0, sepd = 0;
    const lapack_int info = LAPACKE_ztrsen(LAPACK_COL_MAJOR, 'N', 'V', sel.data(), as_lapack(mm), sf.t.data(),
                                           as_lapack(mm), sf.q.data(), as_lapack(mm), wdummy.data(), &msel, &sd, &sepd);
    require(info == 0, ErrorCode::Convergence, "Schur reordering failed during Arnoldi restart");
    const Eigen::Index kk = msel;
    Matrix vk = v.leftCols(mm) * sf.q.leftCols(kk);
    Vector vnext = v.col(mm);
    v.setZero();
    v.leftCols(kk) = vk;
    v.col(kk) = vnext;
    Eigen::RowVectorXcd bnew = brow * sf.q.leftCols(kk);
    h.setZero();
    h.topLeftCorner(kk, kk) = sf.t.topLeftCorner(kk, kk);
    h.row(kk).head(kk) = bnew;
    p = kk;
  }
}

Matrix hermitian_part(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

Eigen::VectorXd hermitian_eigenvalues(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double min_hermitian_eigenvalue(const Matrix& m) {
  const auto ev = hermitian_eigenvalues(m);
  return ev.size() ? ev.minCoeff() : 0.0;
}

double trace_norm(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues().sum();
}

double trace_distance(const Matrix& a, const Matrix& b) { return 0.5 * trace_norm(a - b); }

double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace qumera
