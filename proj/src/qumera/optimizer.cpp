#include "qumera/optimizer.hpp"

#include <chrono>
#include <cmath>

#include "qumera/linalg.hpp"
#include "qumera/oracle.hpp"
#include "qumera/transfer.hpp"

namespace qumera::optimizer {

using channels::KrausFamily;
using channels::Side;

namespace {

KrausFamily averaged_family(const Disentangler& chi, const Isometry& lam) {
  const auto m5 = channels::build_m5(lam, chi);
  return channels::mix(channels::kraus_from_compound(m5, Side::L), 0.5, channels::kraus_from_compound(m5, Side::R), 0.5);
}

}  // namespace

Matrix ascend_hamiltonian(const Matrix& h3, const Disentangler& chi, const Isometry& lam) {
  const channels::LevelContraction c(chi, lam);
  return hermitian_part(0.5 * (c.heisenberg(h3, Side::L) + c.heisenberg(h3, Side::R)));
}

Matrix descend_density(const Matrix& rho3, const Disentangler& chi, const Isometry& lam) {
  const channels::LevelContraction c(chi, lam);
  return 0.5 * (c.schrodinger(rho3, Side::L) + c.schrodinger(rho3, Side::R));
}

Matrix embed_two_site(const Matrix& h2, std::size_t D) {
  const auto d = Eigen::Index(D);
  require(h2.rows() == d * d && h2.cols() == d * d, ErrorCode::InvalidArgument, "two-site term must be D^2 x D^2");
  const Matrix id = Matrix::Identity(d, d);
  return 0.5 * (kron(h2, id) + kron(id, h2));
}

Matrix ising_site_term(std::size_t D, double field) {
  const Matrix bond = oracle::ising_bond(field);
  if (D == 2) return bond;
  require(D == 4, ErrorCode::InvalidArgument, "Ising sites hold one spin (D = 2) or two spins (D = 4)");
  // Sites (a b)(c d): half of each intra-site bond plus the bond (b, c).
  const Matrix id2 = Matrix::Identity(2, 2), id4 = Matrix::Identity(4, 4);
  return 0.5 * (kron(bond, id4) + kron(id4, bond)) + kron(kron(id2, bond), id2);
}

Matrix site_parity(std::size_t D) {
  Matrix z = Matrix::Zero(2, 2);
  z(0, 0) = 1.0;
  z(1, 1) = -1.0;
  if (D == 2) return z;
  require(D == 4, ErrorCode::InvalidArgument, "site parity is defined for D = 2 or 4");
  return kron(z, z);
}

Matrix averaged_fixed_point(const Disentangler& chi, const Isometry& lam, const std::optional<Matrix>& guess,
                            double* lambda2) {
  const std::size_t D = chi.bond_dim();
  const auto d3 = Eigen::Index(D * D * D);
  if (d3 <= 8) {
    const transfer::SpectralData s = transfer::spectral_analysis(transfer::liouville_matrix(averaged_family(chi, lam)));
    if (lambda2) *lambda2 = s.lambda2;
    require(s.mixing, ErrorCode::NotMixing, "averaged channel is not mixing");
    return s.fixed_point;
  }
  // Power iteration; |λ₂| is read off the decay of successive steps.
  Matrix rho = guess ? *guess : Matrix(Matrix::Identity(d3, d3) / double(d3));
  double prev = INFINITY, ratio = 0.0;
  constexpr int kMaxSteps = 20000;
  for (int step = 0; step < kMaxSteps; ++step) {
    const Matrix next = descend_density(rho, chi, lam);
    const double change = max_abs(next - rho);
    if (std::isfinite(prev) && prev > 0) ratio = change / prev;
    prev = change;
    rho = next;
    if (change < 1e-14) {
      if (lambda2) *lambda2 = ratio;
      return transfer::normalize_density(rho);
    }
  }
  fail(ErrorCode::NotMixing, "averaged channel did not reach a fixed point");
}

namespace {

struct State {
  Disentangler chi;
  Isometry lam;
  Matrix rho;
  double energy = 0.0;  // per site
  double lambda2 = 0.0;
};

class Optimizer {
 public:
  Optimizer(const OptimizationConfig& c) : cfg_(c), D_(c.D) {
    require(D_ >= 2, ErrorCode::InvalidArgument, "leg dimension must be >= 2");
    require(cfg_.tol > 0, ErrorCode::InvalidArgument, "tolerance must be positive");
    require(cfg_.max_sweeps >= 0, ErrorCode::InvalidArgument, "sweep count must be nonnegative");
    const Matrix h2 = cfg_.two_site_term ? *cfg_.two_site_term : ising_site_term(D_, cfg_.field);
    h3_ = embed_two_site(h2, D_);
    require(max_abs(h3_ - h3_.adjoint()) <= 1e-12, ErrorCode::InvalidArgument, "Hamiltonian term must be hermitian");
    if (cfg_.z2_symmetric) {
      parity_ = site_parity(D_);
      pp_ = kron(parity_, parity_);
    }
    spins_ = cfg_.two_site_term ? 1 : (D_ == 4 ? 2 : 1);
  }

  OptimizationResult run() {
    OptimizationResult out;
    for (int attempt = 0;; ++attempt) {
      try {
        run_from(cfg_.seed + std::uint64_t(attempt), out);
        out.trace.restarts = attempt;
        break;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NotMixing || attempt >= cfg_.retries) throw;
        out.trace = {};
      }
    }
    out.spins_per_site = spins_;
    out.reference_energy = cfg_.two_site_term ? NAN : oracle::ising_energy_density(cfg_.field);
    return out;
  }

 private:
  Matrix project_chi(const Matrix& u) const {
    Matrix r = u;
    if (cfg_.z2_symmetric) r = 0.5 * (r + pp_ * r * pp_);
    if (cfg_.real) r = r.real().cast<cdouble>();
    return r;
  }

  Matrix project_lam(const Matrix& v) const {
    Matrix r = v;
    if (cfg_.z2_symmetric) r = 0.5 * (r + pp_ * r * parity_);
    if (cfg_.real) r = r.real().cast<cdouble>();
    return r;
  }

  void evaluate(State& s, const std::optional<Matrix>& guess) const {
    s.rho = averaged_fixed_point(s.chi, s.lam, guess, &s.lambda2);
    s.energy = (s.rho * h3_).trace().real();
  }

  Matrix effective_hamiltonian(const State& s) const {
    const auto d3 = h3_.rows();
    const Matrix id = Matrix::Identity(d3, d3);
    Matrix term = h3_ - s.energy * id;
    Matrix heff = term;
    const int cap = cfg_.heff_terms > 0 ? cfg_.heff_terms : 2000;
    for (int j = 1; j < cap; ++j) {
      term = ascend_hamiltonian(term, s.chi, s.lam);
      // The identity component is removed so the sum converges.
      term -= (s.rho * term).trace() * id;
      heff += term;
      if (cfg_.heff_terms == 0 && max_abs(term) < 1e-13) break;
    }
    heff = hermitian_part(heff);
    return heff - hermitian_eigenvalues(heff).maxCoeff() * id;
  }

  // ∂f/∂w̄ of f = Tr[Ĥ M ρ M†] averaged over the two windows, as maps.
  Matrix chi_environment(const State& s, const Matrix& heff) const {
    const channels::LevelContraction c(s.chi, s.lam);
    const Matrix half = 0.5 * heff;
    DenseTensor e = c.chi_gradient(half, s.rho, Side::L);
    const DenseTensor r = c.chi_gradient(half, s.rho, Side::R);
    for (std::size_t x = 0; x < e.size(); ++x) e[x] += r[x];
    return to_matrix(e, 2).transpose();
  }

  Matrix lam_environment(const State& s, const Matrix& heff) const {
    const channels::LevelContraction c(s.chi, s.lam);
    const Matrix half = 0.5 * heff;
    DenseTensor e = c.lam_gradient(half, s.rho, Side::L);
    const DenseTensor r = c.lam_gradient(half, s.rho, Side::R);
    for (std::size_t x = 0; x < e.size(); ++x) e[x] += r[x];
    return to_matrix(e, 1).transpose();
  }

  Disentangler update_chi(const State& s, const Matrix& heff, double damping) const {
    const Matrix e = chi_environment(s, heff);
    const Matrix u = s.chi.as_map();
    return Disentangler::from_map(project_chi(polar_isometry(project_chi(damping * e.norm() * u - e))), D_);
  }

  Isometry update_lam(const State& s, const Matrix& heff, double damping) const {
    const Matrix e = lam_environment(s, heff);
    const Matrix v = s.lam.as_map();
    return Isometry::from_map(project_lam(polar_isometry(project_lam(damping * e.norm() * v - e))), D_);
  }

  void run_from(std::uint64_t seed, OptimizationResult& out) {
    Rng rng(seed);
    mera::RandomOptions ro;
    ro.real_only = cfg_.real;
    State s;
    s.chi = Disentangler::from_map(
        project_chi(polar_isometry(project_chi(mera::random_disentangler(D_, rng, ro).as_map()))), D_);
    s.lam = Isometry::from_map(project_lam(polar_isometry(project_lam(mera::random_isometry(D_, rng, ro).as_map()))),
                               D_);
    DenseTensor top = mera::random_top(D_, rng, ro).tensor();
    if (cfg_.z2_symmetric) {
      // Keep the even-parity part of the apex state.
      const Matrix p4 = kron(pp_, pp_);
      Vector v = to_vector(top);
      v = 0.5 * (v + p4 * v);
      top = DenseTensor(Shape(4, D_), std::vector<cdouble>(v.data(), v.data() + v.size()));
      top *= 1.0 / top.norm();
    }
    evaluate(s, std::nullopt);

    const auto t0 = std::chrono::steady_clock::now();
    out.trace.converged = false;
    for (int sweep = 1; sweep <= cfg_.max_sweeps; ++sweep) {
      const Matrix heff = effective_hamiltonian(s);
      SweepRecord rec;
      rec.sweep = sweep;
      bool accepted = false;
      State next;
      for (double damping : {0.0, 0.1, 0.5, 2.0, 8.0, 32.0}) {
        next = s;
        try {
          next.chi = update_chi(s, heff, damping);
          next.lam = update_lam(next, heff, damping);
        } catch (const Error& e) {
          // A rank-deficient environment has no unique polar factor; the
          // damped update is full rank.
          if (e.code() != ErrorCode::DegeneratePolar) throw;
          continue;
        }
        evaluate(next, s.rho);
        rec.damping = damping;
        if (next.energy <= s.energy + 1e-12) {
          accepted = true;
          break;
        }
      }
      rec.accepted = accepted;
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (!accepted) {
        rec.energy = s.energy / spins_;
        rec.lambda2 = s.lambda2;
        out.trace.sweeps.push_back(rec);
        if (cfg_.on_sweep) cfg_.on_sweep(rec);
        out.trace.converged = true;  // no descent direction left at any damping
        break;
      }
      rec.chi_change = (next.chi.as_map() - s.chi.as_map()).norm();
      rec.lam_change = (next.lam.as_map() - s.lam.as_map()).norm();
      rec.energy = next.energy / spins_;
      rec.lambda2 = next.lambda2;
      out.trace.sweeps.push_back(rec);
      if (cfg_.on_sweep) cfg_.on_sweep(rec);
      const double change = s.energy - next.energy;
      s = std::move(next);
      if (change < cfg_.tol) {
        out.trace.converged = true;
        break;
      }
    }
    out.network.chi = s.chi;
    out.network.lam = s.lam;
    out.network.top = mera::TopTensor(top);
    out.energy = s.energy / spins_;
    out.fixed_point = s.rho;
  }

  OptimizationConfig cfg_;
  std::size_t D_;
  Matrix h3_;
  Matrix parity_, pp_;
  int spins_ = 1;
};

}  // namespace

OptimizationResult optimize(const OptimizationConfig& config) { return Optimizer(config).run(); }

}  // namespace qumera::optimizer
