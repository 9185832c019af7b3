#include "qumera/transfer.hpp"

#include <algorithm>
#include <cmath>

#include "qumera/linalg.hpp"

namespace qumera::transfer {

const char* reading_name(Reading r) { return r == Reading::Schrodinger ? "schrodinger" : "heisenberg"; }

Vector vec(const Matrix& x) {
  Vector v(x.size());
  Eigen::Map<RowMajorMatrix>(v.data(), x.rows(), x.cols()) = x;
  return v;
}

Matrix unvec(const Vector& v, Eigen::Index d) {
  require(v.size() == d * d, ErrorCode::InvalidArgument, "vectorized operator has the wrong length");
  return Eigen::Map<const RowMajorMatrix>(v.data(), d, d);
}

LiouvilleOperator liouville_matrix(const KrausFamily& k, Reading reading) {
  require(!k.ops.empty(), ErrorCode::InvalidArgument, "empty Kraus family");
  require(k.width == k.out_width, ErrorCode::InvalidArgument, "transfer operators need a square channel");
  const Eigen::Index d = k.ops[0].rows();
  LiouvilleOperator e;
  e.reading = reading;
  e.site_dim = std::size_t(d);
  e.matrix = Matrix::Zero(d * d, d * d);
  for (const auto& op : k.ops) {
    if (reading == Reading::Schrodinger)
      e.matrix.noalias() += kron(op.adjoint(), op.transpose());
    else
      e.matrix.noalias() += kron(op, op.conjugate());
  }
  return e;
}

Matrix normalize_density(const Matrix& x, double* min_eig) {
  const cdouble tr = x.trace();
  require(std::abs(tr) > 1e-300, ErrorCode::Convergence, "fixed-point operator has vanishing trace");
  const Matrix h = hermitian_part(x / tr);
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  Eigen::VectorXd ev = es.eigenvalues();
  if (min_eig) *min_eig = ev.minCoeff();
  ev = ev.cwiseMax(0.0);
  Matrix rho = es.eigenvectors() * ev.cast<cdouble>().asDiagonal() * es.eigenvectors().adjoint();
  rho /= rho.trace().real();
  return hermitian_part(rho);
}

namespace {

void classify(SpectralData& s) {
  const Eigen::Index n = s.eigenvalues.size();
  const Eigen::Index d = Eigen::Index(s.site_dim);
  const bool unit_lead = n > 0 && std::abs(s.eigenvalues(0) - 1.0) <= 1e-8;
  s.lambda2 = n > 1 ? std::abs(s.eigenvalues(1)) : 0.0;
  s.gap = 1.0 - s.lambda2;
  s.mixing = unit_lead && s.lambda2 < 1.0 - kMixingTol;
  if (s.mixing) {
    s.fixed_point = normalize_density(unvec(s.right.col(0), d), &s.fixed_point_min_eig);
  } else {
    for (Eigen::Index a = 0; a < n; ++a)
      if (std::abs(s.eigenvalues(a)) >= 1.0 - kMixingTol) s.degenerate_basis.push_back(unvec(s.right.col(a), d));
  }
}

}  // namespace

SpectralData spectral_analysis(const LiouvilleOperator& e) {
  const Matrix S = e.reading == Reading::Schrodinger ? e.matrix : Matrix(e.matrix.adjoint());
  require(std::size_t(S.rows()) <= kDenseEigLimit, ErrorCode::Resource,
          "Liouville matrix exceeds the dense eigensolver limit; use the leading-eigenpair analysis");
  const EigenDecomposition ed = eig_dense(S, true);
  SpectralData s;
  s.site_dim = e.site_dim;
  s.eigenvalues = ed.values;
  s.right = ed.right;
  s.left = *ed.left;
  s.max_residual = ed.max_residual;
  s.complete = true;
  Eigen::BDCSVD<Matrix> svd(s.right);
  const auto& sv = svd.singularValues();
  s.eigvec_condition = sv(sv.size() - 1) > 0 ? sv(0) / sv(sv.size() - 1) : INFINITY;
  s.liouville = S;
  classify(s);
  return s;
}

SpectralData spectral_analysis_leading(const KrausFamily& k, std::size_t count, double tol,
                                       const std::optional<Matrix>& fixed_point_guess) {
  require(k.width == k.out_width, ErrorCode::InvalidArgument, "transfer operators need a square channel");
  return spectral_analysis_leading([&](const Matrix& x) { return channels::schrodinger_apply(k, x); },
                                   [&](const Matrix& x) { return channels::heisenberg_apply(k, x); },
                                   k.ops.at(0).rows(), count, tol, fixed_point_guess);
}

SpectralData level_spectrum(const mera::ScaleInvariantMera& si, channels::Side side, std::size_t count,
                            std::size_t dense_limit) {
  const std::size_t D = si.bond_dim();
  const std::size_t dim = D * D * D * D * D * D;
  if (dim <= dense_limit)
    return spectral_analysis(liouville_matrix(channels::kraus_from_compound(channels::build_m5(si.lam, si.chi), side)));
  const channels::LevelContraction c(si.chi, si.lam);
  return spectral_analysis_leading([&](const Matrix& x) { return c.schrodinger(x, side); },
                                   [&](const Matrix& x) { return c.heisenberg(x, side); }, Eigen::Index(D * D * D),
                                   std::min(count, dim), 1e-10);
}

SpectralData spectral_analysis_leading(const std::function<Matrix(const Matrix&)>& schrodinger,
                                       const std::function<Matrix(const Matrix&)>& heisenberg, Eigen::Index d,
                                       std::size_t count, double tol, const std::optional<Matrix>& fixed_point_guess) {
  const std::size_t dim = std::size_t(d * d);
  LinearAction schr = [&](const Vector& in, Vector& out) { out = vec(schrodinger(unvec(in, d))); };
  LinearAction heis = [&](const Vector& in, Vector& out) { out = vec(heisenberg(unvec(in, d))); };
  LeadingEigenOptions ro;
  ro.tol = tol;
  if (fixed_point_guess) ro.start = vec(*fixed_point_guess);
  LeadingEigenOptions lo;
  lo.tol = tol;
  lo.start = vec(Matrix::Identity(d, d));
  const LeadingEigenResult right = eig_leading(schr, dim, count, ro);
  const LeadingEigenResult left = eig_leading(heis, dim, count, lo);
  require(right.converged && left.converged, ErrorCode::Convergence, "leading transfer eigenpairs did not converge");

  SpectralData s;
  s.site_dim = std::size_t(d);
  s.complete = false;
  // A cluster cut by the count boundary leaves the two subspaces unmatched;
  // keep the longest prefix on which they agree.
  Eigen::Index keep = std::min(right.vectors.cols(), left.vectors.cols());
  Matrix overlap;
  for (; keep > 0; --keep) {
    overlap = left.vectors.leftCols(keep).adjoint() * right.vectors.leftCols(keep);
    const Eigen::JacobiSVD<Matrix> svd(overlap);
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) > 1e-8 * sv(0)) break;
  }
  require(keep > 0, ErrorCode::Convergence, "left and right leading subspaces do not match");
  s.eigenvalues = right.values.head(keep);
  s.right = right.vectors.leftCols(keep);
  // Dual basis of the left invariant subspace: left† right = I.
  s.left = left.vectors.leftCols(keep) * overlap.inverse().adjoint();
  for (double r : right.residuals) s.max_residual = std::max(s.max_residual, r);
  classify(s);
  return s;
}

PowerTrajectory fixed_point_power(const KrausFamily& k, const Matrix& rho0, int steps,
                                  const std::optional<Matrix>& reference) {
  require(steps >= 0, ErrorCode::InvalidArgument, "iteration count must be nonnegative");
  PowerTrajectory t;
  t.rho = rho0;
  for (int i = 0; i < steps; ++i) {
    t.rho = channels::schrodinger_apply(k, t.rho);
    if (reference) t.distances.push_back(trace_distance(t.rho, *reference));
  }
  // Fit the second half of the points still above round-off.
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < t.distances.size(); ++i)
    if (t.distances[i] > 1e-12) pts.emplace_back(double(i + 1), std::log(t.distances[i]));
  if (pts.size() >= 4) {
    const std::size_t from = pts.size() / 2;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = double(pts.size() - from);
    for (std::size_t i = from; i < pts.size(); ++i) {
      sx += pts[i].first;
      sy += pts[i].second;
      sxx += pts[i].first * pts[i].first;
      sxy += pts[i].first * pts[i].second;
    }
    t.log_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    t.fit_points = pts.size() - from;
  }
  return t;
}

KappaResult filtered_kappa(const SpectralData& s, const Matrix& theta, const Matrix& rho, double tol) {
  require(s.mixing, ErrorCode::NotMixing, "filtered κ needs a mixing channel");
  const auto d = Eigen::Index(s.site_dim);
  require(theta.rows() == d && theta.cols() == d && rho.rows() == d && rho.cols() == d, ErrorCode::InvalidArgument,
          "observable and state must match the channel dimension");
  const Vector theta_functional = vec(theta.transpose());  // Tr[θ X] = θ_vecᵀ vec(X)
  const Vector rho_vec = vec(rho);
  KappaResult result;
  const Eigen::Index n = s.eigenvalues.size();

  if (!s.complete || s.eigvec_condition <= kConditionLimit) {
    for (Eigen::Index a = 0; a < n; ++a) {
      OverlapTerm term;
      term.eigenvalue = s.eigenvalues(a);
      term.theta_coeff = std::abs(theta_functional.cwiseProduct(s.right.col(a)).sum());
      term.rho_coeff = std::abs(s.left.col(a).dot(rho_vec));
      term.unit = a == 0;
      result.table.push_back(term);
    }
  } else {
    result.schur_fallback = true;
    const SchurForm sf = schur(s.liouville);
    const Vector diag = sf.t.diagonal();
    std::vector<bool> assigned(std::size_t(n), false);
    for (Eigen::Index a = 0; a < n; ++a) {
      if (assigned[std::size_t(a)]) continue;
      const cdouble lam = s.eigenvalues(a);
      OverlapTerm term;
      term.eigenvalue = lam;
      term.unit = a == 0;
      term.multiplicity = 0;
      for (Eigen::Index b = a; b < n; ++b)
        if (!assigned[std::size_t(b)] && std::abs(s.eigenvalues(b) - lam) <= 1e-6) {
          assigned[std::size_t(b)] = true;
          ++term.multiplicity;
        }
      std::vector<bool> select(std::size_t(diag.size()));
      for (Eigen::Index i = 0; i < diag.size(); ++i) select[std::size_t(i)] = std::abs(diag(i) - lam) <= 1e-6;
      const Matrix p = spectral_projector(sf, select);
      term.theta_coeff = (p.transpose() * theta_functional).norm();
      term.rho_coeff = (p * rho_vec).norm();
      result.table.push_back(term);
    }
  }

  double tmax = 0, cmax = 0;
  for (const auto& t : result.table) tmax = std::max(tmax, t.theta_coeff), cmax = std::max(cmax, t.rho_coeff);
  for (auto& t : result.table) {
    t.contributes = !t.unit && t.theta_coeff > tol * tmax && t.rho_coeff > tol * cmax;
    if (t.contributes && (!result.defined || std::abs(t.eigenvalue) > result.kappa)) {
      result.defined = true;
      result.kappa = std::abs(t.eigenvalue);
      result.eigenvalue = t.eigenvalue;
    }
  }
  return result;
}

cdouble thermo_expectation(const SpectralData& s, const Matrix& theta) {
  require(s.mixing, ErrorCode::NotMixing,
          "channel is not mixing; inspect the degenerate-subspace report of the spectrum instead");
  require(theta.rows() == s.fixed_point.rows() && theta.cols() == s.fixed_point.cols(), ErrorCode::InvalidArgument,
          "observable must match the channel dimension");
  return (s.fixed_point * theta).trace();
}

}  // namespace qumera::transfer
