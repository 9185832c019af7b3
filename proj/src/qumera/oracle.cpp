#include "qumera/oracle.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace qumera::oracle {

namespace {

constexpr int kIntermediate = 1 << 24;

int site_label(int level, std::size_t site) { return (level << 20) | int(site); }
int mid_label(int layer, std::size_t site) { return kIntermediate | (layer << 20) | int(site); }

}  // namespace

StateVector expand_state(const mera::FiniteMera& mera, bool reverse) {
  const std::size_t N = mera.physical_sites();
  const std::size_t D = mera.bond_dim();
  const double log2_size = double(N) * std::log2(double(D));
  if (log2_size > kMaxLog2Amplitudes) {
    std::ostringstream msg;
    msg << "state expansion needs D^N = " << D << "^" << N << " amplitudes (" << std::ldexp(16.0, int(log2_size) - 20)
        << " MiB at least); the limit is 2^20 amplitudes";
    fail(ErrorCode::Resource, msg.str());
  }
  const int m = mera.layer_count();
  std::vector<Labeled> ops;
  ops.push_back({&mera.top().tensor(), {site_label(m, 0), site_label(m, 1), site_label(m, 2), site_label(m, 3)}});
  for (int k = m; k >= 1; --k) {
    const std::size_t coarse = mera.sites_at_level(k);
    const std::size_t fine = 2 * coarse;
    const auto& layer = mera.layers()[std::size_t(k - 1)];
    for (std::size_t t = 0; t < coarse; ++t) {
      const std::size_t q = reverse ? coarse - 1 - t : t;
      ops.push_back({&layer.isometries[q].tensor(), {site_label(k, q), mid_label(k, 2 * q), mid_label(k, 2 * q + 1)}});
    }
    for (std::size_t t = 0; t < coarse; ++t) {
      const std::size_t i = reverse ? coarse - 1 - t : t;
      const std::size_t s1 = 2 * i + 1, s2 = (2 * i + 2) % fine;
      ops.push_back({&layer.disentanglers[i].tensor(),
                     {mid_label(k, s1), mid_label(k, s2), site_label(k - 1, s1), site_label(k - 1, s2)}});
    }
  }
  std::vector<int> out;
  for (std::size_t s = 0; s < N; ++s) out.push_back(site_label(0, s));
  const DenseTensor t = einsum(ops, out);
  StateVector psi;
  psi.sites = N;
  psi.D = D;
  psi.amplitudes = to_vector(t);
  return psi;
}

namespace {

// ψ reshaped with the listed sites as rows.
Matrix sites_as_rows(const StateVector& psi, const std::vector<std::size_t>& sites) {
  std::vector<bool> used(psi.sites, false);
  std::vector<std::size_t> order;
  for (auto s : sites) {
    require(s < psi.sites, ErrorCode::InvalidArgument, "site out of range");
    require(!used[s], ErrorCode::InvalidArgument, "repeated site");
    used[s] = true;
    order.push_back(s);
  }
  for (std::size_t s = 0; s < psi.sites; ++s)
    if (!used[s]) order.push_back(s);
  const DenseTensor t(Shape(psi.sites, psi.D),
                      std::vector<cdouble>(psi.amplitudes.data(), psi.amplitudes.data() + psi.amplitudes.size()));
  return to_matrix(permute(t, order), sites.size());
}

}  // namespace

cdouble exact_expectation(const StateVector& psi, const Matrix& theta, const std::vector<std::size_t>& sites) {
  const Matrix m = sites_as_rows(psi, sites);
  require(theta.rows() == m.rows() && theta.cols() == m.rows(), ErrorCode::InvalidArgument,
          "operator size does not match the site list");
  return (m.adjoint() * theta * m).trace();
}

Matrix exact_reduced_density(const StateVector& psi, const std::vector<std::size_t>& sites) {
  const Matrix m = sites_as_rows(psi, sites);
  return m * m.adjoint();
}

std::vector<std::size_t> window_sites(std::size_t j, std::size_t n) { return {(j + n - 1) % n, j % n, (j + 1) % n}; }

IsingGround ising_ground(int n, double h) {
  require(n >= 2 && n <= 12, ErrorCode::Resource, "dense Ising diagonalization supports 2 <= n <= 12");
  const std::size_t dim = std::size_t(1) << n;
  std::vector<double> H(dim * dim, 0.0);
  auto bit = [&](std::size_t state, int site) { return (state >> (n - 1 - site)) & 1u; };
  for (std::size_t s = 0; s < dim; ++s) {
    double diag = 0.0;
    for (int site = 0; site < n; ++site) diag -= h * (bit(s, site) ? -1.0 : 1.0);
    H[s * dim + s] += diag;
    // Each bond appears once; for n = 2 the two periodic bonds coincide as operators.
    for (int site = 0; site < n; ++site) {
      const int next = (site + 1) % n;
      const std::size_t flipped = s ^ (std::size_t(1) << (n - 1 - site)) ^ (std::size_t(1) << (n - 1 - next));
      H[flipped * dim + s] -= 1.0;
    }
  }
  std::vector<double> w(dim), z(dim);
  std::vector<lapack_int> support(2 * dim);
  lapack_int found = 0;
  const lapack_int info = LAPACKE_dsyevr(LAPACK_ROW_MAJOR, 'V', 'I', 'U', lapack_int(dim), H.data(), lapack_int(dim), 0.0,
                                         0.0, 1, 1, 0.0, &found, w.data(), z.data(), 1, support.data());
  require(info == 0 && found == 1, ErrorCode::Convergence, "dense Ising diagonalization failed");
  IsingGround g;
  g.sites = n;
  g.field = h;
  g.energy = w[0];
  g.energy_density = w[0] / n;
  g.state = Vector(Eigen::Index(dim));
  for (std::size_t s = 0; s < dim; ++s) g.state(Eigen::Index(s)) = z[s];
  g.free_fermion_energy = ising_free_fermion_energy(n, h);
  g.thermodynamic_density = ising_energy_density(h);
  return g;
}

double ising_free_fermion_energy(int n, double h) {
  require(n >= 2, ErrorCode::InvalidArgument, "free-fermion energy needs n >= 2");
  double e = 0.0;
  for (int q = 0; q < n; ++q) {
    const double k = std::numbers::pi * (2.0 * q + 1.0) / n;
    e -= std::sqrt(1.0 + h * h - 2.0 * h * std::cos(k));
  }
  return e;
}

double ising_energy_density(double h) {
  // The integrand is smooth on [0, π] (the kink at h = 1 sits on the endpoint).
  constexpr int intervals = 4096;
  const double step = std::numbers::pi / intervals;
  auto f = [&](double k) { return std::sqrt(std::max(0.0, 1.0 + h * h - 2.0 * h * std::cos(k))); };
  double s = f(0.0) + f(std::numbers::pi);
  for (int i = 1; i < intervals; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * step);
  return -(s * step / 3.0) / std::numbers::pi;
}

IsingReference ising_reference(double h) {
  IsingReference r;
  r.field = h;
  r.energy_density = ising_energy_density(h);
  for (std::size_t a = 0; a < 3; ++a) r.kappa_th[a] = std::exp2(-r.nu[a] / 2.0);
  return r;
}

Matrix ising_bond(double h) {
  Matrix x = Matrix::Zero(2, 2), z = Matrix::Zero(2, 2);
  x(0, 1) = x(1, 0) = 1.0;
  z(0, 0) = 1.0;
  z(1, 1) = -1.0;
  const Matrix id = Matrix::Identity(2, 2);
  return -kron(x, x) - 0.5 * h * (kron(z, id) + kron(id, z));
}

}  // namespace qumera::oracle
