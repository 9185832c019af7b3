#include <doctest.h>

#include "qumera/transfer.hpp"
#include "test_support.hpp"

using namespace qumera;
using namespace qumera::transfer;
using channels::Side;

namespace {

KrausFamily random_channel(std::uint64_t seed, Side side = Side::R, std::size_t D = 2) {
  const auto si = mera::random_scale_invariant(D, seed);
  return channels::kraus_from_compound(channels::build_m5(si.lam, si.chi), side);
}

}  // namespace

TEST_SUITE("transfer-op") {

TEST_CASE("Liouville matrix acts like the Schrodinger channel") {
  Rng rng(1);
  const auto id = channels::kraus_from_compound(
      channels::build_m5(mera::Isometry::embedding(2), mera::Disentangler::identity(2)), Side::L);
  for (const auto& k : {id, random_channel(2)}) {
    const auto e = liouville_matrix(k);
    CHECK(e.matrix.rows() == 64);
    CHECK(e.matrix.cols() == 64);
    const Matrix rho = random_gaussian_matrix(8, 8, rng);
    CHECK(max_abs(unvec(e.matrix * vec(rho), 8) - channels::schrodinger_apply(k, rho)) < 1e-12);
    const auto h = liouville_matrix(k, Reading::Heisenberg);
    CHECK(max_abs(unvec(h.matrix * vec(rho), 8) - channels::heisenberg_apply(k, rho)) < 1e-12);
    CHECK(max_abs(h.matrix - e.matrix.adjoint()) < 1e-12);
  }
}

TEST_CASE("random channels have a unit leading eigenvalue and contractive spectrum") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto s = spectral_analysis(liouville_matrix(random_channel(seed)));
    CHECK(s.eigenvalues.size() == 64);
    CHECK(std::abs(s.eigenvalues(0) - 1.0) < 1e-10);
    for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i) CHECK(std::abs(s.eigenvalues(i)) <= 1 + 1e-10);
    CHECK(s.mixing);
    CHECK(s.lambda2 < 1 - 1e-10);
  }
}

TEST_CASE("L and R spectra agree in modulus for reflection-symmetric tensors") {
  mera::RandomOptions ro;
  ro.reflection_symmetric = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto si = mera::random_scale_invariant(2, seed, ro);
    const auto m5 = channels::build_m5(si.lam, si.chi);
    const auto l = spectral_analysis(liouville_matrix(channels::kraus_from_compound(m5, Side::L)));
    const auto r = spectral_analysis(liouville_matrix(channels::kraus_from_compound(m5, Side::R)));
    double worst = 0;
    for (Eigen::Index i = 0; i < 64; ++i)
      worst = std::max(worst, std::abs(std::abs(l.eigenvalues(i)) - std::abs(r.eigenvalues(i))));
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("fixed point equals repeated application") {
  const auto k = random_channel(11, Side::L);
  const auto s = spectral_analysis(liouville_matrix(k));
  REQUIRE(s.mixing);
  Matrix rho = Matrix::Identity(8, 8) / 8.0;
  for (int i = 0; i < 200; ++i) rho = channels::schrodinger_apply(k, rho);
  CHECK(max_abs(rho - s.fixed_point) < 1e-9);
}

TEST_CASE("fixed point density is a state") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto s = spectral_analysis(liouville_matrix(random_channel(seed)));
    CHECK(max_abs(s.fixed_point - s.fixed_point.adjoint()) < 1e-12);
    CHECK(std::abs(s.fixed_point.trace() - 1.0) < 1e-12);
    CHECK(s.fixed_point_min_eig >= -1e-10);
  }
}

TEST_CASE("power iteration") {
  Rng rng(3);
  const auto k = random_channel(4);
  const auto s = spectral_analysis(liouville_matrix(k));
  SUBCASE("stationary at the fixed point") {
    const auto t = fixed_point_power(k, s.fixed_point, 50, s.fixed_point);
    for (double d : t.distances) CHECK(d <= 1e-9);
  }
  SUBCASE("distinct inputs reach one fixed point at the rate of the gap") {
    const auto a = fixed_point_power(k, qtest::random_density(8, rng), 400, s.fixed_point);
    const auto b = fixed_point_power(k, qtest::random_density(8, rng), 400, s.fixed_point);
    CHECK(trace_distance(a.rho, b.rho) < 1e-8);
    CHECK(trace_distance(a.rho, s.fixed_point) < 1e-8);
    const double expected = std::log(s.lambda2);
    CHECK(std::abs(a.log_slope - expected) <= 0.1 * std::abs(expected));
  }
}

TEST_CASE("filtered kappa") {
  Rng rng(5);
  const auto s = spectral_analysis(liouville_matrix(random_channel(6)));
  SUBCASE("identity has no subleading overlap") {
    const Matrix id = Matrix::Identity(8, 8);
    const auto k = filtered_kappa(s, id, s.fixed_point);
    CHECK_FALSE(k.defined);
  }
  SUBCASE("generic hermitian observable picks the second eigenvalue") {
    const Matrix theta = qtest::random_hermitian(8, rng);
    const Matrix rho = 0.5 * (theta * s.fixed_point + s.fixed_point * theta);
    const auto k = filtered_kappa(s, theta, rho);
    CHECK(k.defined);
    CHECK(std::abs(k.kappa - s.lambda2) < 1e-12);
  }
}

TEST_CASE("thermodynamic expectations") {
  Rng rng(6);
  const auto k = random_channel(7);
  const auto s = spectral_analysis(liouville_matrix(k));
  CHECK(std::abs(thermo_expectation(s, Matrix::Identity(8, 8)) - 1.0) < 1e-12);
  const Matrix theta = qtest::random_hermitian(8, rng);
  const cdouble v = thermo_expectation(s, theta);
  CHECK(std::abs(v.imag()) < 1e-10);
  CHECK(std::abs(v - (s.fixed_point * theta).trace()) < 1e-12);
  Matrix rho = qtest::random_density(8, rng);
  for (int i = 0; i < 50; ++i) rho = channels::schrodinger_apply(k, rho);
  CHECK(std::abs((rho * theta).trace() - v) < 1e-8);
}

TEST_CASE("unital channel has the maximally mixed fixed point") {
  // Random unitary conjugations: a unital channel.
  Rng rng(8);
  KrausFamily k;
  k.side = Side::Window;
  k.bond_dim = 2;
  k.width = k.out_width = 3;
  for (int i = 0; i < 3; ++i) k.ops.push_back(qtest::random_unitary(8, rng) / std::sqrt(3.0));
  const auto s = spectral_analysis(liouville_matrix(k));
  REQUIRE(s.mixing);
  CHECK(max_abs(s.fixed_point - Matrix::Identity(8, 8) / 8.0) < 1e-10);
  Matrix traceless = qtest::random_hermitian(8, rng);
  traceless -= (traceless.trace() / 8.0) * Matrix::Identity(8, 8);
  CHECK(std::abs(thermo_expectation(s, traceless)) < 1e-12);
}

TEST_CASE("leading Arnoldi analysis matches the dense spectrum") {
  const auto k = random_channel(9);
  const auto dense = spectral_analysis(liouville_matrix(k));
  const auto part = spectral_analysis_leading(k, 6);
  CHECK_FALSE(part.complete);
  CHECK(part.mixing);
  for (Eigen::Index i = 0; i < 4; ++i)
    CHECK(std::abs(std::abs(part.eigenvalues(i)) - std::abs(dense.eigenvalues(i))) < 1e-8);
  CHECK(trace_distance(part.fixed_point, dense.fixed_point) < 1e-8);
}

TEST_CASE("level spectrum for D = 3 through contraction kernels") {
  const auto si = mera::random_scale_invariant(3, 2);
  const auto k = channels::kraus_from_compound(channels::build_m5(si.lam, si.chi), Side::R);
  const auto dense = spectral_analysis(liouville_matrix(k));
  const auto lvl = level_spectrum(si, Side::R, 8, 0);
  CHECK_FALSE(lvl.complete);
  for (Eigen::Index i = 0; i < 4; ++i)
    CHECK(std::abs(std::abs(lvl.eigenvalues(i)) - std::abs(dense.eigenvalues(i))) < 1e-8);
  CHECK(trace_distance(lvl.fixed_point, dense.fixed_point) < 1e-8);
}

TEST_CASE("non-mixing channel is reported") {
  // Identity channel: every state is fixed.
  KrausFamily k;
  k.side = Side::Window;
  k.bond_dim = 2;
  k.width = k.out_width = 3;
  k.ops.push_back(Matrix::Identity(8, 8));
  const auto s = spectral_analysis(liouville_matrix(k));
  CHECK_FALSE(s.mixing);
  CHECK_FALSE(s.degenerate_basis.empty());
  CHECK_THROWS_AS(filtered_kappa(s, Matrix::Identity(8, 8), Matrix::Identity(8, 8) / 8.0), Error);
}

}  // TEST_SUITE
