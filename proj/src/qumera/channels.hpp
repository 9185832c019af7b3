#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qumera/mera_network.hpp"

namespace qumera::channels {

using mera::Disentangler;
using mera::Isometry;
using mera::LayeredNetwork;
using mera::TopTensor;

/// λχλ…χλ with K isometries and K−1 disentanglers: K upper legs followed by
/// 2K lower legs. K = 3, 4, 5 give M5, M7, M9.
struct CompoundTensor {
  std::size_t upper = 0;
  DenseTensor tensor;

  std::size_t lower() const { return 2 * upper; }
  std::size_t bond_dim() const { return tensor.dim(0); }
  std::string kind() const { return "M" + std::to_string(2 * upper - 1); }
  /// D^{2K}×D^K map with rows (lower legs) and columns (upper legs).
  Matrix as_map() const;
};

CompoundTensor build_compound(const std::vector<const Isometry*>& lams, const std::vector<const Disentangler*>& chis);
CompoundTensor build_m5(const Isometry& l1, const Disentangler& c1, const Isometry& l2, const Disentangler& c2,
                        const Isometry& l3);
CompoundTensor build_m5(const Isometry& lam, const Disentangler& chi);

enum class Side { L, R, Window };
const char* side_name(Side s);

/// Heisenberg-direction Kraus operators K_r of shape D^K × D^w: the observable
/// enters on a w-site window of the lower legs, the remaining lower legs are
/// the spectators r (in leg order), and the output lives on the K upper legs.
/// Ops satisfy Σ_r K_r K_r† = I.
struct KrausFamily {
  Side side = Side::Window;
  std::size_t bond_dim = 0;
  std::size_t width = 0;      // input sites
  std::size_t out_width = 0;  // output sites
  std::size_t offset = 0;     // first window leg among the lower legs
  std::vector<Matrix> ops;
};

/// M5 only: L takes lower legs (2,3,4), R takes (3,4,5) (1-based).
KrausFamily kraus_from_compound(const CompoundTensor& c, Side side);
KrausFamily kraus_window(const CompoundTensor& c, std::size_t offset, std::size_t width);

/// Kraus family of the channel w_a Φ_a + w_b Φ_b.
KrausFamily mix(const KrausFamily& a, double weight_a, const KrausFamily& b, double weight_b);

Matrix heisenberg_apply(const KrausFamily& k, const Matrix& theta);
Matrix schrodinger_apply(const KrausFamily& k, const Matrix& rho);
double normalization_residual(const KrausFamily& k);

/// Permutation exchanging the first and third site of a 3-site space.
Matrix swap_outer(std::size_t D);

/// Three-site density of the top state on sites (t+1, t+2, t+3) mod 4 after
/// tracing out site t.
Matrix top_density(const TopTensor& top, int traced_site);

/// Choi matrix Σ_{ij} |i⟩⟨j| ⊗ Φ_S(|i⟩⟨j|) of the Schrödinger channel.
Matrix choi_matrix(const KrausFamily& k);

// ---- cones -----------------------------------------------------------------

/// Lifting a window of sites [start, start+width) at level layer−1 through
/// layer `layer`: it lands on the K isometries [parent, parent+K) of level
/// `layer`, with the window at lower-leg offset `offset`.
struct WindowLift {
  int layer = 0;
  std::int64_t start = 0;
  std::size_t width = 0;
  std::int64_t parent = 0;
  std::size_t upper = 0;
  std::size_t offset = 0;
};

/// Where a window goes one layer up, or nullopt when the compound would
/// wrap around the level above.
std::optional<WindowLift> lift_window(const LayeredNetwork& net, int layer, std::int64_t start, std::size_t width);

CompoundTensor compound_for(const LayeredNetwork& net, const WindowLift& lift);
KrausFamily kraus_for(const LayeredNetwork& net, const WindowLift& lift);

struct ConeStep {
  WindowLift lift;
  Side side = Side::L;
  CompoundTensor compound;
};

struct CausalCone {
  std::int64_t site = 0;
  std::vector<ConeStep> steps;  // lowest level first
  int traced_site = 0;          // top site outside the final window
};

/// The m = n − 2 M5 steps carrying the window (j−1, j, j+1) to the top.
CausalCone causal_cone(const LayeredNetwork& net, std::int64_t j);

/// Schrödinger evaluation of the cone: ρ_C pushed down to the 3-site window.
Matrix cone_density(const LayeredNetwork& net, const CausalCone& cone);
/// Heisenberg lift of a 3-site operator to the top window.
Matrix cone_lift(const LayeredNetwork& net, const CausalCone& cone, const Matrix& theta);

/// Joint causal cone of two 3-site windows starting at sites a and b.
/// The windows climb separately while their causal cones use disjoint
/// isometries, then merge into one contiguous hull. The state above the
/// highest liftable level is expanded densely.
struct JointConePlan {
  std::int64_t start_a = 0;
  std::int64_t start_b = 0;
  int mbar = 0;             // int[log2 |i−j|] − 1
  int separate_levels = 0;  // layers crossed by the two windows separately
  std::vector<WindowLift> lifts_a;
  std::vector<WindowLift> lifts_b;
  std::vector<WindowLift> hull_lifts;  // lowest first
  bool merged = false;
  std::int64_t hull_start = 0;  // hull at level separate_levels
  std::size_t hull_width = 0;
  int top_level = 0;  // level whose state is expanded densely
  std::vector<std::string> compounds;  // kinds along the hull, lowest first
};

JointConePlan joint_cone(const LayeredNetwork& net, std::int64_t i, std::int64_t j);

/// Density of the two windows (A sites then B sites) at level
/// plan.separate_levels, ρ_ij of the split level. When the windows never
/// separate it is the hull density instead.
Matrix joint_split_density(const LayeredNetwork& net, const JointConePlan& plan);

/// ⟨Θ_A Θ_B⟩ for 3-site operators on the two windows.
cdouble joint_expectation(const LayeredNetwork& net, const JointConePlan& plan, const Matrix& theta_a,
                          const Matrix& theta_b);

// ---- contraction kernels of one scale-invariant level ----------------------

/// The L- or R-side channel of one level evaluated by direct tensor
/// contraction (cost ~D^9 instead of the ~D^12 of the Kraus sums).
class LevelContraction {
 public:
  LevelContraction(const Disentangler& chi, const Isometry& lam);

  std::size_t bond_dim() const { return D_; }
  /// Same action as heisenberg_apply(kraus_from_compound(M5, side), θ).
  Matrix heisenberg(const Matrix& theta, Side side) const;
  /// Same action as schrodinger_apply(kraus_from_compound(M5, side), ρ).
  Matrix schrodinger(const Matrix& rho, Side side) const;
  /// ∂/∂χ̄ of Tr[θ M ρ M†] with θ on the `side` window, summed over both
  /// occurrences of χ in M5.
  DenseTensor chi_gradient(const Matrix& theta, const Matrix& rho, Side side) const;
  /// Same for the three occurrences of λ.
  DenseTensor lam_gradient(const Matrix& theta, const Matrix& rho, Side side) const;

 private:
  std::vector<Labeled> operands(std::size_t offset, int hole) const;
  DenseTensor gradient(const Matrix& theta, const Matrix& rho, Side side, int first, int last) const;

  std::size_t D_;
  DenseTensor lam_, chi_, lam_bar_, chi_bar_;
};

// ---- dense helpers ---------------------------------------------------------

/// Pure state of the level-`level` sites obtained by expanding the network
/// from the top down. Guarded by D^sites ≤ 2^22.
Vector expand_to_level(const LayeredNetwork& net, int level);

/// Reduced density of `keep` sites (in that order) of a pure state on
/// `sites` sites.
Matrix reduce_pure(const Vector& psi, std::size_t sites, std::size_t D, const std::vector<std::size_t>& keep);
/// Partial trace of a density on `sites` sites keeping `keep` (in that order).
Matrix reduce_density(const Matrix& rho, std::size_t sites, std::size_t D, const std::vector<std::size_t>& keep);

/// Embeds an operator on `op_sites` contiguous sites starting at `at` into
/// `sites` sites.
Matrix embed(const Matrix& op, std::size_t D, std::size_t sites, std::size_t at, std::size_t op_sites);

/// Cyclic distance helper: x mod n in [0, n).
inline std::int64_t wrap(std::int64_t x, std::int64_t n) {
  const std::int64_t r = x % n;
  return r < 0 ? r + n : r;
}

}  // namespace qumera::channels
