#include "qumera/mera_network.hpp"

#include <algorithm>
#include <cmath>

#include "qumera/linalg.hpp"

namespace qumera::mera {

namespace {

void require_uniform_shape(const DenseTensor& t, std::size_t rank, const char* what) {
  require(t.rank() == rank, ErrorCode::InvalidArgument, std::string(what) + " has the wrong number of legs");
  for (std::size_t i = 1; i < rank; ++i)
    require(t.dim(i) == t.dim(0), ErrorCode::InvalidArgument, std::string(what) + " legs must share one dimension");
  require(t.dim(0) >= 2, ErrorCode::InvalidArgument, std::string(what) + " needs leg dimension >= 2");
}

Matrix swap_pair(std::size_t D) {
  const auto d = Eigen::Index(D);
  Matrix s = Matrix::Zero(d * d, d * d);
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b) s(b * d + a, a * d + b) = 1.0;
  return s;
}

}  // namespace

Disentangler::Disentangler(DenseTensor tensor) : tensor_(std::move(tensor)) {
  require_uniform_shape(tensor_, 4, "disentangler");
}

Matrix Disentangler::as_map() const { return to_matrix(tensor_, 2).transpose(); }

Disentangler Disentangler::from_map(const Matrix& u, std::size_t D) {
  require(u.rows() == Eigen::Index(D * D) && u.cols() == Eigen::Index(D * D), ErrorCode::InvalidArgument,
          "disentangler map must be D^2 x D^2");
  return Disentangler(from_matrix(u.transpose(), {D, D, D, D}));
}

Disentangler Disentangler::identity(std::size_t D) { return from_map(Matrix::Identity(Eigen::Index(D * D), Eigen::Index(D * D)), D); }

Isometry::Isometry(DenseTensor tensor) : tensor_(std::move(tensor)) { require_uniform_shape(tensor_, 3, "isometry"); }

Matrix Isometry::as_map() const { return to_matrix(tensor_, 1).transpose(); }

Isometry Isometry::from_map(const Matrix& v, std::size_t D) {
  require(v.rows() == Eigen::Index(D * D) && v.cols() == Eigen::Index(D), ErrorCode::InvalidArgument,
          "isometry map must be D^2 x D");
  return Isometry(from_matrix(v.transpose(), {D, D, D}));
}

Isometry Isometry::embedding(std::size_t D) {
  DenseTensor t({D, D, D});
  for (std::size_t u = 0; u < D; ++u) t.at({u, u, 0}) = 1.0;
  return Isometry(std::move(t));
}

TopTensor::TopTensor(DenseTensor tensor) : tensor_(std::move(tensor)) { require_uniform_shape(tensor_, 4, "top tensor"); }

TopTensor TopTensor::product(const std::vector<Vector>& site_states) {
  require(site_states.size() == 4, ErrorCode::InvalidArgument, "product top tensor needs four site states");
  const auto D = std::size_t(site_states[0].size());
  DenseTensor t({D, D, D, D});
  for (std::size_t a = 0; a < D; ++a)
    for (std::size_t b = 0; b < D; ++b)
      for (std::size_t c = 0; c < D; ++c)
        for (std::size_t d = 0; d < D; ++d)
          t.at({a, b, c, d}) = site_states[0](Eigen::Index(a)) * site_states[1](Eigen::Index(b)) *
                               site_states[2](Eigen::Index(c)) * site_states[3](Eigen::Index(d));
  return TopTensor(std::move(t));
}

FiniteMera::FiniteMera(int n, std::size_t D, std::vector<Layer> layers, TopTensor top)
    : n_(n), D_(D), layers_(std::move(layers)), top_(std::move(top)) {
  require(n_ >= 3, ErrorCode::InvalidArgument, "finite networks need n >= 3 (N >= 8 sites)");
  require(n_ <= 62, ErrorCode::InvalidArgument, "finite networks need n <= 62");
  require(D_ >= 2, ErrorCode::InvalidArgument, "leg dimension must be >= 2");
  require(int(layers_.size()) == n_ - 2, ErrorCode::InvalidArgument, "a network with N = 2^n sites has n − 2 layers");
  for (int k = 1; k <= n_ - 2; ++k) {
    const auto expect = std::size_t(sites_at_level(k - 1) / 2);
    const auto& layer = layers_[std::size_t(k - 1)];
    require(layer.disentanglers.size() == expect && layer.isometries.size() == expect, ErrorCode::InvalidArgument,
            "layer " + std::to_string(k) + " must hold N/2^k disentanglers and isometries");
    for (const auto& c : layer.disentanglers)
      require(c.bond_dim() == D_, ErrorCode::InvalidArgument, "disentangler leg dimension mismatch");
    for (const auto& l : layer.isometries)
      require(l.bond_dim() == D_, ErrorCode::InvalidArgument, "isometry leg dimension mismatch");
  }
  require(top_.bond_dim() == D_, ErrorCode::InvalidArgument, "top tensor leg dimension mismatch");
}

const Disentangler& FiniteMera::disentangler(int layer, std::uint64_t index) const {
  require(layer >= 1 && layer <= layer_count(), ErrorCode::InvalidArgument, "layer out of range");
  const auto& v = layers_[std::size_t(layer - 1)].disentanglers;
  return v[std::size_t(index % v.size())];
}

const Isometry& FiniteMera::isometry(int layer, std::uint64_t index) const {
  require(layer >= 1 && layer <= layer_count(), ErrorCode::InvalidArgument, "layer out of range");
  const auto& v = layers_[std::size_t(layer - 1)].isometries;
  return v[std::size_t(index % v.size())];
}

TiledMera::TiledMera(const ScaleInvariantMera& source, int layers) : source_(&source), layers_(layers) {
  require(layers_ >= 1 && layers_ <= kMaxTiledLayers, ErrorCode::InvalidArgument,
          "tiled depth must lie in [1, " + std::to_string(kMaxTiledLayers) + "]");
}

FiniteMera materialize(const ScaleInvariantMera& si, int n) {
  require(n >= 3 && n <= 20, ErrorCode::InvalidArgument, "materialized tilings need 3 <= n <= 20");
  std::vector<Layer> layers;
  for (int k = 1; k <= n - 2; ++k) {
    const std::size_t count = std::size_t(1) << (n - k);
    layers.push_back(Layer{std::vector<Disentangler>(count, si.chi), std::vector<Isometry>(count, si.lam)});
  }
  return FiniteMera(n, si.bond_dim(), std::move(layers), si.top);
}

double disentangler_deviation(const Disentangler& chi) {
  const Matrix u = chi.as_map();
  const auto n = u.rows();
  const Matrix id = Matrix::Identity(n, n);
  return std::max(max_abs(u.adjoint() * u - id), max_abs(u * u.adjoint() - id));
}

double isometry_deviation(const Isometry& lam) {
  const Matrix v = lam.as_map();
  return max_abs(v.adjoint() * v - Matrix::Identity(v.cols(), v.cols()));
}

double top_deviation(const TopTensor& top) {
  const double n = top.tensor().norm();
  return std::abs(n * n - 1.0);
}

namespace {

void add(ValidationReport& r, std::string role, int level, std::uint64_t pos, double dev) {
  r.tensors.push_back({std::move(role), level, pos, dev});
  if (!(dev <= r.max_deviation)) r.max_deviation = std::isnan(dev) ? dev : std::max(r.max_deviation, dev);
}

void finish(ValidationReport& r) { r.valid = r.max_deviation <= kStructureTol; }

}  // namespace

ValidationReport validate(const FiniteMera& mera) {
  ValidationReport r;
  for (int k = 1; k <= mera.layer_count(); ++k) {
    const auto& layer = mera.layers()[std::size_t(k - 1)];
    for (std::size_t i = 0; i < layer.disentanglers.size(); ++i)
      add(r, "chi", k, i, disentangler_deviation(layer.disentanglers[i]));
    for (std::size_t i = 0; i < layer.isometries.size(); ++i) add(r, "lam", k, i, isometry_deviation(layer.isometries[i]));
  }
  add(r, "top", mera.layer_count() + 1, 0, top_deviation(mera.top()));
  finish(r);
  return r;
}

ValidationReport validate(const ScaleInvariantMera& mera) {
  ValidationReport r;
  require(mera.chi.bond_dim() == mera.lam.bond_dim() && mera.lam.bond_dim() == mera.top.bond_dim(),
          ErrorCode::InvalidArgument, "scale-invariant tensors disagree on the leg dimension");
  add(r, "chi", 0, 0, disentangler_deviation(mera.chi));
  add(r, "lam", 0, 0, isometry_deviation(mera.lam));
  add(r, "top", 0, 0, top_deviation(mera.top));
  finish(r);
  return r;
}

Disentangler random_disentangler(std::size_t D, Rng& rng, const RandomOptions& opts) {
  const auto d2 = D * D;
  Matrix g = random_gaussian_matrix(d2, d2, rng, opts.real_only);
  if (opts.reflection_symmetric) {
    const Matrix s = swap_pair(D);
    g = g + s * g * s;
  }
  Matrix u = polar_isometry(g);
  if (opts.real_only) u = u.real().cast<cdouble>();
  return Disentangler::from_map(u, D);
}

Isometry random_isometry(std::size_t D, Rng& rng, const RandomOptions& opts) {
  Matrix g = random_gaussian_matrix(D * D, D, rng, opts.real_only);
  if (opts.reflection_symmetric) g = g + swap_pair(D) * g;
  Matrix v = polar_isometry(g);
  if (opts.real_only) v = v.real().cast<cdouble>();
  return Isometry::from_map(v, D);
}

TopTensor random_top(std::size_t D, Rng& rng, const RandomOptions& opts) {
  DenseTensor t = random_gaussian({D, D, D, D}, rng, opts.real_only);
  if (opts.reflection_symmetric) {
    const DenseTensor mirrored = permute(t, {3, 2, 1, 0});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] += mirrored[i];
  }
  t *= 1.0 / t.norm();
  return TopTensor(std::move(t));
}

FiniteMera random_finite(int n, std::size_t D, std::uint64_t seed, const RandomOptions& opts) {
  require(n >= 3, ErrorCode::InvalidArgument, "finite networks need n >= 3");
  require(n <= 20, ErrorCode::InvalidArgument, "random finite networks are limited to n <= 20");
  require(D >= 2, ErrorCode::InvalidArgument, "leg dimension must be >= 2");
  Rng rng(seed);
  std::vector<Layer> layers;
  for (int k = 1; k <= n - 2; ++k) {
    const std::size_t count = std::size_t(1) << (n - k);
    Layer layer;
    for (std::size_t i = 0; i < count; ++i) layer.disentanglers.push_back(random_disentangler(D, rng, opts));
    for (std::size_t i = 0; i < count; ++i) layer.isometries.push_back(random_isometry(D, rng, opts));
    layers.push_back(std::move(layer));
  }
  TopTensor top = random_top(D, rng, opts);
  return FiniteMera(n, D, std::move(layers), std::move(top));
}

ScaleInvariantMera random_scale_invariant(std::size_t D, std::uint64_t seed, const RandomOptions& opts) {
  require(D >= 2, ErrorCode::InvalidArgument, "leg dimension must be >= 2");
  Rng rng(seed);
  ScaleInvariantMera si;
  si.chi = random_disentangler(D, rng, opts);
  si.lam = random_isometry(D, rng, opts);
  si.top = random_top(D, rng, opts);
  return si;
}

FiniteMera identity_network(int n, std::size_t D, std::optional<TopTensor> top) {
  require(n >= 3, ErrorCode::InvalidArgument, "finite networks need n >= 3");
  require(n <= 20, ErrorCode::InvalidArgument, "identity networks are limited to n <= 20");
  std::vector<Layer> layers;
  for (int k = 1; k <= n - 2; ++k) {
    const std::size_t count = std::size_t(1) << (n - k);
    layers.push_back(Layer{std::vector<Disentangler>(count, Disentangler::identity(D)),
                           std::vector<Isometry>(count, Isometry::embedding(D))});
  }
  if (!top) {
    DenseTensor t({D, D, D, D});
    t.at({0, 0, 0, 0}) = 1.0;
    top = TopTensor(std::move(t));
  }
  return FiniteMera(n, D, std::move(layers), std::move(*top));
}

}  // namespace qumera::mera
