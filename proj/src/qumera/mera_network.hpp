#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qumera/tensor.hpp"

namespace qumera::mera {

/// Two-site unitary, legs (u1, u2, l1, l2). As a map on states it sends the
/// upper pair to the lower pair: ⟨l1 l2|U|u1 u2⟩ = χ^{u1u2}_{l1l2}.
class Disentangler {
 public:
  Disentangler() = default;
  explicit Disentangler(DenseTensor tensor);
  const DenseTensor& tensor() const noexcept { return tensor_; }
  std::size_t bond_dim() const { return tensor_.dim(0); }
  /// The D²×D² unitary with rows (l1 l2) and columns (u1 u2).
  Matrix as_map() const;
  static Disentangler from_map(const Matrix& u, std::size_t D);
  static Disentangler identity(std::size_t D);

 private:
  DenseTensor tensor_;
};

/// Isometry with legs (u, l1, l2): ⟨l1 l2|V|u⟩ = λ^{u}_{l1 l2}, V†V = I.
class Isometry {
 public:
  Isometry() = default;
  explicit Isometry(DenseTensor tensor);
  const DenseTensor& tensor() const noexcept { return tensor_; }
  std::size_t bond_dim() const { return tensor_.dim(0); }
  /// The D²×D isometric map with rows (l1 l2) and column u.
  Matrix as_map() const;
  static Isometry from_map(const Matrix& v, std::size_t D);
  /// λ^{u}_{l1 l2} = δ_{u,l1} δ_{l2,0}.
  static Isometry embedding(std::size_t D);

 private:
  DenseTensor tensor_;
};

/// Normalized four-leg state |hat⟩ closing the network.
class TopTensor {
 public:
  TopTensor() = default;
  explicit TopTensor(DenseTensor tensor);
  const DenseTensor& tensor() const noexcept { return tensor_; }
  std::size_t bond_dim() const { return tensor_.dim(0); }
  static TopTensor product(const std::vector<Vector>& site_states);

 private:
  DenseTensor tensor_;
};

struct Layer {
  std::vector<Disentangler> disentanglers;  // disentangler i acts on sites (2i+1, 2i+2) mod width
  std::vector<Isometry> isometries;         // isometry q feeds sites (2q, 2q+1)
};

/// Read-only view of a periodic binary MERA with uniform leg dimension.
/// Level 0 holds the physical sites; layer k (1-based) maps level k−1 to
/// level k, and the top tensor sits on the four sites of level layer_count().
class LayeredNetwork {
 public:
  virtual ~LayeredNetwork() = default;
  virtual std::size_t bond_dim() const = 0;
  virtual int layer_count() const = 0;
  virtual const Disentangler& disentangler(int layer, std::uint64_t index) const = 0;
  virtual const Isometry& isometry(int layer, std::uint64_t index) const = 0;
  virtual const TopTensor& top() const = 0;

  std::uint64_t sites_at_level(int level) const { return std::uint64_t(4) << (layer_count() - level); }
  std::uint64_t physical_sites() const { return sites_at_level(0); }
};

/// A network of N = 2^n sites with per-position tensors.
class FiniteMera final : public LayeredNetwork {
 public:
  FiniteMera(int n, std::size_t D, std::vector<Layer> layers, TopTensor top);

  std::size_t bond_dim() const override { return D_; }
  int layer_count() const override { return n_ - 2; }
  const Disentangler& disentangler(int layer, std::uint64_t index) const override;
  const Isometry& isometry(int layer, std::uint64_t index) const override;
  const TopTensor& top() const override { return top_; }

  int log2_sites() const noexcept { return n_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::vector<Layer>& mutable_layers() noexcept { return layers_; }
  TopTensor& mutable_top() noexcept { return top_; }

 private:
  int n_;
  std::size_t D_;
  std::vector<Layer> layers_;
  TopTensor top_;
};

/// The infinite network with one shared disentangler and isometry.
struct ScaleInvariantMera {
  Disentangler chi;
  Isometry lam;
  TopTensor top;
  std::size_t bond_dim() const { return chi.bond_dim(); }
};

/// A finite depth tiling of a scale-invariant network. Positions are never
/// materialized, so depths up to 60 layers are usable.
class TiledMera final : public LayeredNetwork {
 public:
  TiledMera(const ScaleInvariantMera& source, int layers);

  std::size_t bond_dim() const override { return source_->bond_dim(); }
  int layer_count() const override { return layers_; }
  const Disentangler& disentangler(int, std::uint64_t) const override { return source_->chi; }
  const Isometry& isometry(int, std::uint64_t) const override { return source_->lam; }
  const TopTensor& top() const override { return source_->top; }

 private:
  const ScaleInvariantMera* source_;
  int layers_;
};

inline constexpr int kMaxTiledLayers = 60;

/// Writes the tiling out as explicit per-position tensors.
FiniteMera materialize(const ScaleInvariantMera& si, int n);

struct TensorResidual {
  std::string role;  // chi, lam or top
  int level = 0;
  std::uint64_t position = 0;
  double deviation = 0.0;
};

struct ValidationReport {
  std::vector<TensorResidual> tensors;
  double max_deviation = 0.0;
  bool valid = false;
};

inline constexpr double kStructureTol = 1e-12;

double disentangler_deviation(const Disentangler& chi);
double isometry_deviation(const Isometry& lam);
double top_deviation(const TopTensor& top);

ValidationReport validate(const FiniteMera& mera);
ValidationReport validate(const ScaleInvariantMera& mera);

struct RandomOptions {
  bool real_only = false;
  /// λ^{u}_{ab} = λ^{u}_{ba} and χ^{ab}_{cd} = χ^{ba}_{dc}.
  bool reflection_symmetric = false;
};

Disentangler random_disentangler(std::size_t D, Rng& rng, const RandomOptions& opts = {});
Isometry random_isometry(std::size_t D, Rng& rng, const RandomOptions& opts = {});
TopTensor random_top(std::size_t D, Rng& rng, const RandomOptions& opts = {});

FiniteMera random_finite(int n, std::size_t D, std::uint64_t seed, const RandomOptions& opts = {});
ScaleInvariantMera random_scale_invariant(std::size_t D, std::uint64_t seed, const RandomOptions& opts = {});

/// Identity disentanglers, embedding isometries and the given top tensor
/// (|0000⟩ when omitted).
FiniteMera identity_network(int n, std::size_t D, std::optional<TopTensor> top = std::nullopt);

}  // namespace qumera::mera
