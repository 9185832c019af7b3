#include "qumera/observables.hpp"

#include <algorithm>
#include <cmath>

#include "qumera/linalg.hpp"

namespace qumera::observables {

Observable::Observable(Matrix matrix, std::size_t D) : matrix_(std::move(matrix)), D_(D) {
  require(D_ >= 2, ErrorCode::InvalidArgument, "leg dimension must be >= 2");
  require(matrix_.rows() == matrix_.cols(), ErrorCode::InvalidArgument, "observables must be square");
  const auto d = Eigen::Index(D_);
  if (matrix_.rows() == d)
    width_ = 1;
  else if (matrix_.rows() == d * d * d)
    width_ = 3;
  else
    fail(ErrorCode::InvalidArgument, "observables act on one site or on three sites");
  require(max_abs(matrix_ - matrix_.adjoint()) <= kHermitianTol * std::max(1.0, max_abs(matrix_)),
          ErrorCode::InvalidArgument, "observables must be hermitian");
}

Observable Observable::single_site(const Matrix& m, std::size_t D, std::size_t position) {
  require(m.rows() == Eigen::Index(D), ErrorCode::InvalidArgument, "single-site observable must be D x D");
  require(position < 3, ErrorCode::InvalidArgument, "window position must lie in 0..2");
  Observable o(m, D);
  o.position_ = position;
  return o;
}

Observable Observable::three_site(const Matrix& m, std::size_t D) {
  require(m.rows() == Eigen::Index(D * D * D), ErrorCode::InvalidArgument, "three-site observable must be D^3 x D^3");
  return Observable(m, D);
}

Matrix Observable::window() const {
  if (width_ == 3) return matrix_;
  return channels::embed(matrix_, D_, 3, position_, 1);
}

Matrix pauli(char axis) {
  Matrix m = Matrix::Zero(2, 2);
  switch (axis) {
    case 'x':
      m(0, 1) = m(1, 0) = 1.0;
      break;
    case 'y':
      m(0, 1) = cdouble(0, -1);
      m(1, 0) = cdouble(0, 1);
      break;
    case 'z':
      m(0, 0) = 1.0;
      m(1, 1) = -1.0;
      break;
    case 'i':
      m = Matrix::Identity(2, 2);
      break;
    default:
      fail(ErrorCode::InvalidArgument, std::string("unknown Pauli axis '") + axis + "'");
  }
  return m;
}

namespace {

void check_dim(const LayeredNetwork& net, const Observable& theta) {
  require(theta.bond_dim() == net.bond_dim(), ErrorCode::InvalidArgument,
          "observable dimension does not match the network");
}

}  // namespace

cdouble local_expectation(const LayeredNetwork& net, const Observable& theta, std::int64_t j) {
  check_dim(net, theta);
  const auto cone = channels::causal_cone(net, j);
  return (channels::cone_density(net, cone) * theta.window()).trace();
}

cdouble local_expectation_heisenberg(const LayeredNetwork& net, const Observable& theta, std::int64_t j) {
  check_dim(net, theta);
  const auto cone = channels::causal_cone(net, j);
  const Matrix b = channels::cone_lift(net, cone, theta.window());
  return (channels::top_density(net.top(), cone.traced_site) * b).trace();
}

cdouble local_expectation(const mera::FiniteMera& mera, const Observable& theta, std::int64_t j) {
  const auto report = mera::validate(mera);
  require(report.valid, ErrorCode::Validation,
          "network violates the contraction rules (max deviation " + std::to_string(report.max_deviation) + ")");
  return local_expectation(static_cast<const LayeredNetwork&>(mera), theta, j);
}

Matrix reduced_density(const LayeredNetwork& net, std::int64_t j) {
  return channels::cone_density(net, channels::causal_cone(net, j));
}

cdouble two_point(const LayeredNetwork& net, const Observable& theta_i, const Observable& theta_j, std::int64_t i,
                  std::int64_t j) {
  check_dim(net, theta_i);
  check_dim(net, theta_j);
  if (i == j) {
    // Same window: one 3-site observable.
    const Matrix prod = theta_i.window() * theta_j.window();
    return (reduced_density(net, i) * prod).trace();
  }
  const auto plan = channels::joint_cone(net, i, j);
  return channels::joint_expectation(net, plan, theta_i.window(), theta_j.window());
}

std::int64_t central_window_start(const LayeredNetwork& net) { return std::int64_t(net.physical_sites() / 2) - 2; }

namespace {

std::vector<double> series_at_depth(const mera::ScaleInvariantMera& si, const Matrix& w, int depth, int kmin, int kmax) {
  const mera::TiledMera net(si, depth);
  const auto N = std::int64_t(net.physical_sites());
  const std::int64_t i = central_window_start(net) + 1;
  const std::size_t D = si.bond_dim();
  const auto d3 = Eigen::Index(D * D * D);
  const Matrix id = Matrix::Identity(d3, d3);
  auto mean = [&](std::int64_t site) {
    const auto cone = channels::causal_cone(net, site);
    return (channels::cone_density(net, cone) * w).trace().real();
  };
  const double ma = mean(i);
  std::vector<double> out;
  for (int k = kmin; k <= kmax; ++k) {
    const std::int64_t j = channels::wrap(i + (std::int64_t(1) << k), N);
    const double mb = mean(j);
    const auto plan = channels::joint_cone(net, i, j);
    out.push_back(channels::joint_expectation(net, plan, w - ma * id, w - mb * id).real());
  }
  return out;
}

}  // namespace

CorrelatorSeries connected_correlator_series(const mera::ScaleInvariantMera& si, const Observable& theta, int kmax,
                                             int kmin) {
  require(theta.bond_dim() == si.bond_dim(), ErrorCode::InvalidArgument,
          "observable dimension does not match the network");
  require(kmin >= 2 && kmax >= kmin, ErrorCode::InvalidArgument, "separations need 2 <= kmin <= kmax");
  require(kmax + 3 <= mera::kMaxTiledLayers, ErrorCode::InvalidArgument, "kmax exceeds the supported tiling depth");
  const Matrix w = theta.window();

  int depth = kmax + 3;
  std::vector<double> vals = series_at_depth(si, w, depth, kmin, kmax);
  std::vector<double> change(vals.size(), INFINITY);
  CorrelatorSeries s;
  while (true) {
    const int next = std::min(2 * depth, mera::kMaxTiledLayers);
    if (next == depth) break;
    const std::vector<double> deeper = series_at_depth(si, w, next, kmin, kmax);
    double worst = 0.0;
    for (std::size_t t = 0; t < vals.size(); ++t) {
      change[t] = std::abs(deeper[t] - vals[t]);
      worst = std::max(worst, change[t]);
    }
    vals = deeper;
    depth = next;
    if (worst <= kDepthTol) {
      s.depth_converged = true;
      break;
    }
  }
  s.depth = depth;

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int k = kmin; k <= kmax; ++k) {
    CorrelatorPoint p;
    p.k = k;
    p.separation = std::int64_t(1) << k;
    p.delta = vals[std::size_t(k - kmin)];
    p.depth = depth;
    p.depth_change = change[std::size_t(k - kmin)];
    p.excluded = !(std::abs(p.delta) >= kDeltaFloor);
    p.log2_abs = std::abs(p.delta) > 0 ? std::log2(std::abs(p.delta)) : -INFINITY;
    if (!p.excluded) {
      ++s.fitted;
      sx += k;
      sy += p.log2_abs;
      sxx += double(k) * k;
      sxy += k * p.log2_abs;
    }
    s.points.push_back(p);
  }
  if (s.fitted >= 2) {
    const double n = double(s.fitted);
    const double sxx_c = sxx - sx * sx / n;
    s.slope = (sxy - sx * sy / n) / sxx_c;
    s.intercept = (sy - s.slope * sx) / n;
    double rss = 0;
    for (auto& p : s.points) {
      if (p.excluded) continue;
      const double e = p.log2_abs - (s.intercept + s.slope * p.k);
      rss += e * e;
      p.leverage = 1.0 / n + (p.k - sx / n) * (p.k - sx / n) / sxx_c;
    }
    s.residual = std::sqrt(rss / n);
    s.fit_valid = true;
  }
  return s;
}

double critical_exponent(double kappa) {
  require(kappa > 0.0 && kappa < 1.0, ErrorCode::Domain, "critical exponent needs 0 < kappa < 1");
  return -2.0 * std::log2(kappa);
}

}  // namespace qumera::observables
