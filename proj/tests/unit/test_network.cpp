#include <doctest.h>

#include <json.hpp>

#include "qumera/manifest.hpp"
#include "qumera/mera_network.hpp"
#include "qumera/oracle.hpp"
#include "test_support.hpp"

using namespace qumera;
using namespace qumera::mera;

namespace {

Vector basis(std::size_t D, std::size_t k) {
  Vector v = Vector::Zero(Eigen::Index(D));
  v(Eigen::Index(k)) = 1.0;
  return v;
}

}  // namespace

TEST_SUITE("mera-network") {

TEST_CASE("identity disentangler with an isometric slice is valid") {
  Rng rng(1);
  const Matrix v = polar_isometry(random_gaussian_matrix(4, 2, rng));
  const auto lam = Isometry::from_map(v, 2);
  CHECK(isometry_deviation(lam) < kStructureTol);
  CHECK(disentangler_deviation(Disentangler::identity(2)) < kStructureTol);

  ScaleInvariantMera si{Disentangler::identity(2), lam, random_top(2, rng)};
  CHECK(validate(si).valid);
}

TEST_CASE("a perturbed disentangler is rejected with a residual of the perturbation's order") {
  auto net = random_finite(3, 2, 5);
  DenseTensor t = net.layers()[0].disentanglers[1].tensor();
  t.at({0, 1, 1, 0}) += 1e-3;
  net.mutable_layers()[0].disentanglers[1] = Disentangler(t);
  const auto r = validate(net);
  CHECK_FALSE(r.valid);
  CHECK(r.max_deviation > 1e-4);
  CHECK(r.max_deviation < 1e-2);
  bool found = false;
  for (const auto& e : r.tensors)
    if (e.role == "chi" && e.level == 1 && e.position == 1 && e.deviation > 1e-4) found = true;
  CHECK(found);
}

TEST_CASE("random networks are valid and deterministic") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto a = random_finite(4, 2, seed);
    const auto b = random_finite(4, 2, seed);
    CHECK(validate(a).valid);
    CHECK(manifest::serialize(a) == manifest::serialize(b));
    const auto s = random_scale_invariant(3, seed);
    CHECK(validate(s).valid);
    CHECK(s.chi.tensor() == random_scale_invariant(3, seed).chi.tensor());
  }
  CHECK(manifest::serialize(random_finite(4, 2, 1)) != manifest::serialize(random_finite(4, 2, 2)));
}

TEST_CASE("layer geometry of a sixteen-site network") {
  const auto net = random_finite(4, 2, 3);
  CHECK(net.physical_sites() == 16);
  CHECK(net.layer_count() == 2);
  CHECK(net.layers()[0].disentanglers.size() == 8);
  CHECK(net.layers()[0].isometries.size() == 8);
  CHECK(net.layers()[1].disentanglers.size() == 4);
  CHECK(net.layers()[1].isometries.size() == 4);
  CHECK(net.sites_at_level(2) == 4);
}

TEST_CASE("smallest legal network has one layer") {
  const auto net = identity_network(3, 2);
  CHECK(validate(net).valid);
  CHECK(net.layer_count() == 1);
  CHECK_THROWS_AS(identity_network(2, 2), Error);
}

TEST_CASE("identity network with a product top expands to a product state") {
  const std::size_t D = 2;
  Vector up(2);
  up << 0.6, cdouble(0, 0.8);
  const auto top = TopTensor::product({up, basis(D, 1), basis(D, 0), up});
  const auto net = identity_network(4, D, top);
  CHECK(validate(net).valid);
  const auto psi = oracle::expand_state(net);
  // Top site q ends on physical site 4q, every other site is |0>.
  Vector expected = Vector::Ones(1);
  const std::vector<Vector> tops{up, basis(D, 1), basis(D, 0), up};
  for (std::size_t p = 0; p < 16; ++p) expected = kron(expected, p % 4 == 0 ? tops[p / 4] : basis(D, 0));
  CHECK((psi.amplitudes - expected).norm() < 1e-14);
}

TEST_CASE("isometry preserves inner products on the upper leg") {
  Rng rng(4);
  for (std::size_t D : {2u, 3u}) {
    const auto lam = random_isometry(D, rng);
    const Matrix v = lam.as_map();
    const Matrix x = random_gaussian_matrix(D, 1, rng), y = random_gaussian_matrix(D, 1, rng);
    CHECK(std::abs((v * x).col(0).dot((v * y).col(0)) - x.col(0).dot(y.col(0))) < 1e-12);
  }
}

TEST_CASE("disentangler contraction rules hold in both orders") {
  Rng rng(5);
  const auto chi = random_disentangler(3, rng);
  const Matrix u = chi.as_map();
  CHECK(max_abs(u.adjoint() * u - Matrix::Identity(9, 9)) < 1e-12);
  CHECK(max_abs(u * u.adjoint() - Matrix::Identity(9, 9)) < 1e-12);
}

TEST_CASE("reflection-symmetric random tensors") {
  Rng rng(6);
  RandomOptions opts;
  opts.reflection_symmetric = true;
  const auto lam = random_isometry(2, rng, opts);
  const auto chi = random_disentangler(2, rng, opts);
  CHECK(max_abs_diff(lam.tensor(), permute(lam.tensor(), {0, 2, 1})) < 1e-12);
  CHECK(max_abs_diff(chi.tensor(), permute(chi.tensor(), {1, 0, 3, 2})) < 1e-12);
  CHECK(isometry_deviation(lam) < kStructureTol);
  CHECK(disentangler_deviation(chi) < kStructureTol);
}

TEST_CASE("materialized tiling matches the tiled view") {
  const auto si = random_scale_invariant(2, 7);
  const auto fin = materialize(si, 4);
  const TiledMera tiled(si, 2);
  CHECK(validate(fin).valid);
  CHECK(fin.physical_sites() == tiled.physical_sites());
  CHECK(fin.disentangler(2, 3).tensor() == si.chi.tensor());
  CHECK(fin.isometry(1, 5).tensor() == si.lam.tensor());
}

}  // TEST_SUITE

TEST_SUITE("manifest") {

TEST_CASE("serialization round trip is bitwise") {
  const auto fin = random_finite(4, 2, 9);
  const auto back = manifest::parse(manifest::serialize(fin));
  REQUIRE(back.is_finite());
  CHECK(manifest::serialize(back) == manifest::serialize(fin));
  for (int k = 1; k <= fin.layer_count(); ++k)
    for (std::uint64_t q = 0; q < fin.sites_at_level(k); ++q) {
      CHECK(back.finite().isometry(k, q).tensor() == fin.isometry(k, q).tensor());
      CHECK(back.finite().disentangler(k, q).tensor() == fin.disentangler(k, q).tensor());
    }
  CHECK(back.finite().top().tensor() == fin.top().tensor());

  const auto si = random_scale_invariant(3, 9);
  const auto sback = manifest::parse(manifest::serialize(si));
  REQUIRE_FALSE(sback.is_finite());
  CHECK(sback.scale_invariant().chi.tensor() == si.chi.tensor());
  CHECK(sback.scale_invariant().lam.tensor() == si.lam.tensor());
  CHECK(sback.scale_invariant().top.tensor() == si.top.tensor());
}

TEST_CASE("malformed manifests are parse errors") {
  auto code_of = [](const std::string& text) {
    try {
      (void)manifest::parse(text);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Domain;
  };
  CHECK(code_of("{not json") == ErrorCode::Parse);
  CHECK(code_of("{}") == ErrorCode::Parse);
  auto doc = nlohmann::json::parse(manifest::serialize(random_scale_invariant(2, 1)));
  auto bad = doc;
  bad["tensors"].erase(bad["tensors"].begin());
  CHECK(code_of(bad.dump()) == ErrorCode::Parse);
  bad = doc;
  bad["tensors"][0]["shape"] = {2, 2};
  CHECK(code_of(bad.dump()) == ErrorCode::Parse);
  bad = doc;
  bad["tensors"][0]["entries"][0] = 1.0;
  CHECK(code_of(bad.dump()) == ErrorCode::Parse);
}

}  // TEST_SUITE
