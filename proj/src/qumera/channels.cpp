#include "qumera/channels.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "qumera/linalg.hpp"

namespace qumera::channels {

Matrix CompoundTensor::as_map() const { return to_matrix(tensor, upper).transpose(); }

CompoundTensor build_compound(const std::vector<const Isometry*>& lams, const std::vector<const Disentangler*>& chis) {
  const std::size_t K = lams.size();
  require(K >= 2 && chis.size() + 1 == K, ErrorCode::InvalidArgument,
          "a compound needs K >= 2 isometries and K - 1 disentanglers");
  const std::size_t D = lams[0]->bond_dim();
  for (const auto* l : lams) require(l->bond_dim() == D, ErrorCode::InvalidArgument, "compound leg dimension mismatch");
  for (const auto* c : chis) require(c->bond_dim() == D, ErrorCode::InvalidArgument, "compound leg dimension mismatch");

  // Labels: upper legs 0..K-1, lower legs 100+t, intermediate sites 200+t.
  const int n_lower = int(2 * K);
  auto mid = [&](int t) { return (t == 0 || t == n_lower - 1) ? 100 + t : 200 + t; };
  std::vector<Labeled> ops;
  for (std::size_t i = 0; i < K; ++i) {
    ops.push_back({&lams[i]->tensor(), {int(i), mid(int(2 * i)), mid(int(2 * i + 1))}});
    if (i + 1 < K)
      ops.push_back({&chis[i]->tensor(), {mid(int(2 * i + 1)), mid(int(2 * i + 2)), 100 + int(2 * i + 1), 100 + int(2 * i + 2)}});
  }
  std::vector<int> out;
  for (std::size_t i = 0; i < K; ++i) out.push_back(int(i));
  for (int t = 0; t < n_lower; ++t) out.push_back(100 + t);
  return CompoundTensor{K, einsum(ops, out)};
}

CompoundTensor build_m5(const Isometry& l1, const Disentangler& c1, const Isometry& l2, const Disentangler& c2,
                        const Isometry& l3) {
  return build_compound({&l1, &l2, &l3}, {&c1, &c2});
}

CompoundTensor build_m5(const Isometry& lam, const Disentangler& chi) { return build_m5(lam, chi, lam, chi, lam); }

const char* side_name(Side s) {
  switch (s) {
    case Side::L:
      return "L";
    case Side::R:
      return "R";
    default:
      return "window";
  }
}

KrausFamily kraus_window(const CompoundTensor& c, std::size_t offset, std::size_t width) {
  const std::size_t K = c.upper;
  const std::size_t n_lower = c.lower();
  require(width >= 1 && offset + width <= n_lower, ErrorCode::InvalidArgument, "Kraus window exceeds the compound");
  const std::size_t D = c.bond_dim();

  std::vector<std::size_t> order;
  for (std::size_t t = 0; t < n_lower; ++t)
    if (t < offset || t >= offset + width) order.push_back(K + t);
  for (std::size_t t = offset; t < offset + width; ++t) order.push_back(K + t);
  for (std::size_t u = 0; u < K; ++u) order.push_back(u);
  const DenseTensor p = permute(c.tensor, order);

  const auto din = Eigen::Index(ipow(D, unsigned(width)));
  const auto dout = Eigen::Index(ipow(D, unsigned(K)));
  const std::size_t count = ipow(D, unsigned(n_lower - width));
  KrausFamily k;
  k.bond_dim = D;
  k.width = width;
  k.out_width = K;
  k.offset = offset;
  k.ops.reserve(count);
  for (std::size_t r = 0; r < count; ++r) {
    Eigen::Map<const RowMajorMatrix> slice(p.entries().data() + r * std::size_t(din * dout), din, dout);
    k.ops.push_back(slice.adjoint());
  }
  return k;
}

KrausFamily kraus_from_compound(const CompoundTensor& c, Side side) {
  require(c.upper == 3, ErrorCode::InvalidArgument, "L/R Kraus families are defined on M5 compounds");
  require(side == Side::L || side == Side::R, ErrorCode::InvalidArgument, "side must be L or R");
  KrausFamily k = kraus_window(c, side == Side::L ? 1 : 2, 3);
  k.side = side;
  return k;
}

KrausFamily mix(const KrausFamily& a, double weight_a, const KrausFamily& b, double weight_b) {
  require(a.width == b.width && a.out_width == b.out_width && a.bond_dim == b.bond_dim, ErrorCode::InvalidArgument,
          "mixed Kraus families must act on the same spaces");
  require(weight_a >= 0 && weight_b >= 0, ErrorCode::InvalidArgument, "mixing weights must be nonnegative");
  KrausFamily out = a;
  out.side = Side::Window;
  const double sa = std::sqrt(weight_a), sb = std::sqrt(weight_b);
  for (auto& op : out.ops) op *= sa;
  for (const auto& op : b.ops) out.ops.push_back(sb * op);
  return out;
}

Matrix heisenberg_apply(const KrausFamily& k, const Matrix& theta) {
  const auto din = k.ops.at(0).cols();
  require(theta.rows() == din && theta.cols() == din, ErrorCode::InvalidArgument,
          "operator dimension does not match the Kraus family input");
  Matrix out = Matrix::Zero(k.ops[0].rows(), k.ops[0].rows());
  for (const auto& op : k.ops) out.noalias() += op * theta * op.adjoint();
  return out;
}

Matrix schrodinger_apply(const KrausFamily& k, const Matrix& rho) {
  const auto dout = k.ops.at(0).rows();
  require(rho.rows() == dout && rho.cols() == dout, ErrorCode::InvalidArgument,
          "density dimension does not match the Kraus family output");
  Matrix out = Matrix::Zero(k.ops[0].cols(), k.ops[0].cols());
  for (const auto& op : k.ops) out.noalias() += op.adjoint() * rho * op;
  return out;
}

double normalization_residual(const KrausFamily& k) {
  const auto d = k.ops.at(0).rows();
  Matrix s = Matrix::Zero(d, d);
  for (const auto& op : k.ops) s.noalias() += op * op.adjoint();
  return max_abs(s - Matrix::Identity(d, d));
}

Matrix swap_outer(std::size_t D) {
  const auto d = Eigen::Index(D);
  Matrix p = Matrix::Zero(d * d * d, d * d * d);
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b)
      for (Eigen::Index c = 0; c < d; ++c) p((c * d + b) * d + a, (a * d + b) * d + c) = 1.0;
  return p;
}

Matrix top_density(const TopTensor& top, int traced_site) {
  require(traced_site >= 0 && traced_site < 4, ErrorCode::InvalidArgument, "traced top site must lie in 0..3");
  const Vector psi = to_vector(top.tensor());
  std::vector<std::size_t> keep;
  for (int t = 1; t <= 3; ++t) keep.push_back(std::size_t((traced_site + t) % 4));
  return reduce_pure(psi, 4, top.bond_dim(), keep);
}

Matrix choi_matrix(const KrausFamily& k) {
  const auto din = k.ops.at(0).rows();
  const auto dout = k.ops.at(0).cols();
  Matrix choi = Matrix::Zero(din * dout, din * dout);
  for (Eigen::Index i = 0; i < din; ++i)
    for (Eigen::Index j = 0; j < din; ++j) {
      Matrix e = Matrix::Zero(din, din);
      e(i, j) = 1.0;
      choi.block(i * dout, j * dout, dout, dout) = schrodinger_apply(k, e);
    }
  return choi;
}

// ---- cones -----------------------------------------------------------------

std::optional<WindowLift> lift_window(const LayeredNetwork& net, int layer, std::int64_t start, std::size_t width) {
  require(layer >= 1 && layer <= net.layer_count(), ErrorCode::InvalidArgument, "layer out of range");
  const auto n_lower = std::int64_t(net.sites_at_level(layer - 1));
  const auto n_upper = n_lower / 2;
  require(width >= 1 && std::int64_t(width) <= n_lower, ErrorCode::InvalidArgument, "window wider than its level");
  const std::int64_t a = wrap(start, n_lower);
  const std::int64_t b = a + std::int64_t(width) - 1;
  // Extend the ends to whole disentanglers, then to whole isometries.
  const std::int64_t a_ext = (a % 2 == 1) ? a : a - 1;
  const std::int64_t b_ext = (b % 2 == 0) ? b : b + 1;
  const std::int64_t c0 = (a_ext - 1) / 2;
  const std::int64_t c1 = b_ext / 2;
  const std::int64_t K = c1 - c0 + 1;
  if (K > n_upper) return std::nullopt;
  WindowLift w;
  w.layer = layer;
  w.start = a;
  w.width = width;
  w.parent = wrap(c0, n_upper);
  w.upper = std::size_t(K);
  w.offset = std::size_t(a - 2 * c0);
  return w;
}

CompoundTensor compound_for(const LayeredNetwork& net, const WindowLift& lift) {
  const auto n_upper = std::int64_t(net.sites_at_level(lift.layer));
  std::vector<const Isometry*> lams;
  std::vector<const Disentangler*> chis;
  for (std::size_t i = 0; i < lift.upper; ++i) {
    const auto q = std::uint64_t(wrap(lift.parent + std::int64_t(i), n_upper));
    lams.push_back(&net.isometry(lift.layer, q));
    if (i + 1 < lift.upper) chis.push_back(&net.disentangler(lift.layer, q));
  }
  return build_compound(lams, chis);
}

KrausFamily kraus_for(const LayeredNetwork& net, const WindowLift& lift) {
  KrausFamily k = kraus_window(compound_for(net, lift), lift.offset, lift.width);
  if (lift.upper == 3 && lift.width == 3) k.side = lift.offset == 1 ? Side::L : Side::R;
  return k;
}

CausalCone causal_cone(const LayeredNetwork& net, std::int64_t j) {
  const auto N = std::int64_t(net.physical_sites());
  require(N >= 8 && net.layer_count() >= 1, ErrorCode::ConeTooShort, "causal cones need at least 8 sites");
  require(j >= 0 && j < N, ErrorCode::InvalidArgument, "site index out of range");
  CausalCone cone;
  cone.site = j;
  std::int64_t p = wrap(j - 1, N);
  for (int layer = 1; layer <= net.layer_count(); ++layer) {
    const auto lift = lift_window(net, layer, p, 3);
    require(lift && lift->upper == 3, ErrorCode::Contraction, "three-site window failed to lift");
    ConeStep step;
    step.lift = *lift;
    step.side = lift->offset == 1 ? Side::L : Side::R;
    step.compound = compound_for(net, *lift);
    cone.steps.push_back(std::move(step));
    p = lift->parent;
  }
  cone.traced_site = int(wrap(p + 3, 4));
  return cone;
}

Matrix cone_density(const LayeredNetwork& net, const CausalCone& cone) {
  Matrix rho = top_density(net.top(), cone.traced_site);
  for (auto it = cone.steps.rbegin(); it != cone.steps.rend(); ++it)
    rho = schrodinger_apply(kraus_from_compound(it->compound, it->side), rho);
  return rho;
}

Matrix cone_lift(const LayeredNetwork& /*net*/, const CausalCone& cone, const Matrix& theta) {
  Matrix b = theta;
  for (const auto& step : cone.steps) b = heisenberg_apply(kraus_from_compound(step.compound, step.side), b);
  return b;
}

namespace {

bool windows_overlap(std::int64_t a, std::int64_t b, std::int64_t width, std::int64_t n) {
  const std::int64_t d = wrap(b - a, n);
  return d < width || d > n - width;
}

// Shortest contiguous arc holding both 3-site windows.
std::pair<std::int64_t, std::size_t> hull_of(std::int64_t a, std::int64_t b, std::int64_t n) {
  const std::int64_t w1 = wrap(b - a, n) + 3;
  const std::int64_t w2 = wrap(a - b, n) + 3;
  if (w1 <= w2) return {a, std::size_t(std::min(w1, n))};
  return {b, std::size_t(std::min(w2, n))};
}

std::vector<std::size_t> window_sites(std::int64_t start, std::size_t width, std::int64_t n) {
  std::vector<std::size_t> s;
  for (std::size_t t = 0; t < width; ++t) s.push_back(std::size_t(wrap(start + std::int64_t(t), n)));
  return s;
}

// ρ on X⊗Y with the channel applied to the X (first = true) or Y factor.
Matrix apply_on_factor(const KrausFamily& k, const Matrix& rho, bool first, Eigen::Index other) {
  const Eigen::Index din = k.ops.at(0).rows();
  const Eigen::Index dout = k.ops.at(0).cols();
  Matrix super = Matrix::Zero(dout * dout, din * din);
  for (const auto& op : k.ops) super.noalias() += kron(op.adjoint(), op.transpose());
  const Eigen::Index dx = first ? din : other, dy = first ? other : din;
  // Rearrange ρ[(x y),(x' y')] into R[(x x'),(y y')].
  const DenseTensor t = permute(from_matrix(rho, {std::size_t(dx), std::size_t(dy), std::size_t(dx), std::size_t(dy)}),
                                {0, 2, 1, 3});
  Matrix r = to_matrix(t, 2);
  Matrix out;
  if (first) {
    out = super * r;
  } else {
    out = r * super.transpose();
  }
  const Eigen::Index ox = first ? dout : other, oy = first ? other : dout;
  const DenseTensor back = permute(from_matrix(out, {std::size_t(ox), std::size_t(ox), std::size_t(oy), std::size_t(oy)}),
                                   {0, 2, 1, 3});
  return to_matrix(back, 2);
}

}  // namespace

JointConePlan joint_cone(const LayeredNetwork& net, std::int64_t i, std::int64_t j) {
  const auto N = std::int64_t(net.physical_sites());
  require(N >= 8, ErrorCode::ConeTooShort, "causal cones need at least 8 sites");
  require(i >= 0 && i < N && j >= 0 && j < N, ErrorCode::InvalidArgument, "site index out of range");
  require(i != j, ErrorCode::InvalidArgument, "joint cones need two distinct sites");
  JointConePlan plan;
  plan.start_a = wrap(i - 1, N);
  plan.start_b = wrap(j - 1, N);
  const std::int64_t dist = std::min(wrap(j - i, N), wrap(i - j, N));
  plan.mbar = int(std::bit_width(std::uint64_t(dist))) - 2;

  std::int64_t a = plan.start_a, b = plan.start_b;
  int level = 0;
  const int m = net.layer_count();
  if (windows_overlap(a, b, 3, N)) {
    plan.merged = true;
    std::tie(plan.hull_start, plan.hull_width) = hull_of(a, b, N);
  }
  while (!plan.merged && level < m) {
    const auto la = lift_window(net, level + 1, a, 3);
    const auto lb = lift_window(net, level + 1, b, 3);
    const auto n_up = std::int64_t(net.sites_at_level(level + 1));
    if (la && lb && !windows_overlap(la->parent, lb->parent, 3, n_up)) {
      plan.lifts_a.push_back(*la);
      plan.lifts_b.push_back(*lb);
      a = la->parent;
      b = lb->parent;
      ++level;
      continue;
    }
    plan.merged = true;
    std::tie(plan.hull_start, plan.hull_width) = hull_of(a, b, std::int64_t(net.sites_at_level(level)));
  }
  plan.separate_levels = level;
  if (plan.merged) {
    std::int64_t hs = plan.hull_start;
    std::size_t hw = plan.hull_width;
    while (level < m) {
      const auto lh = lift_window(net, level + 1, hs, hw);
      if (!lh) break;
      plan.hull_lifts.push_back(*lh);
      plan.compounds.push_back("M" + std::to_string(2 * lh->upper - 1));
      hs = lh->parent;
      hw = lh->upper;
      ++level;
    }
  }
  plan.top_level = level;
  return plan;
}

Matrix joint_split_density(const LayeredNetwork& net, const JointConePlan& plan) {
  const std::size_t D = net.bond_dim();
  const auto n_top = std::int64_t(net.sites_at_level(plan.top_level));
  Matrix rho;
  const Vector psi = plan.top_level == net.layer_count() ? to_vector(net.top().tensor()) : expand_to_level(net, plan.top_level);
  const auto n_split = std::int64_t(net.sites_at_level(plan.separate_levels));
  const std::int64_t a = plan.lifts_a.empty() ? plan.start_a : plan.lifts_a.back().parent;
  const std::int64_t b = plan.lifts_b.empty() ? plan.start_b : plan.lifts_b.back().parent;
  if (!plan.merged) {
    std::vector<std::size_t> keep = window_sites(a, 3, n_top);
    const auto kb = window_sites(b, 3, n_top);
    keep.insert(keep.end(), kb.begin(), kb.end());
    return reduce_pure(psi, std::size_t(n_top), D, keep);
  }
  std::int64_t hs = plan.hull_lifts.empty() ? plan.hull_start : plan.hull_lifts.back().parent;
  std::size_t hw = plan.hull_lifts.empty() ? plan.hull_width : plan.hull_lifts.back().upper;
  rho = reduce_pure(psi, std::size_t(n_top), D, window_sites(hs, hw, n_top));
  for (auto it = plan.hull_lifts.rbegin(); it != plan.hull_lifts.rend(); ++it)
    rho = schrodinger_apply(kraus_for(net, *it), rho);
  if (windows_overlap(a, b, 3, n_split)) return rho;
  const auto oa = std::size_t(wrap(a - plan.hull_start, n_split));
  const auto ob = std::size_t(wrap(b - plan.hull_start, n_split));
  std::vector<std::size_t> keep{oa, oa + 1, oa + 2, ob, ob + 1, ob + 2};
  return reduce_density(rho, plan.hull_width, D, keep);
}

cdouble joint_expectation(const LayeredNetwork& net, const JointConePlan& plan, const Matrix& theta_a,
                          const Matrix& theta_b) {
  const std::size_t D = net.bond_dim();
  const auto d3 = Eigen::Index(D * D * D);
  require(theta_a.rows() == d3 && theta_a.cols() == d3 && theta_b.rows() == d3 && theta_b.cols() == d3,
          ErrorCode::InvalidArgument, "joint observables must act on three sites");
  const auto N = std::int64_t(net.physical_sites());
  if (plan.separate_levels == 0 && plan.merged && windows_overlap(plan.start_a, plan.start_b, 3, N)) {
    const Matrix rho = joint_split_density(net, plan);
    const auto oa = std::size_t(wrap(plan.start_a - plan.hull_start, N));
    const auto ob = std::size_t(wrap(plan.start_b - plan.hull_start, N));
    const Matrix op = embed(theta_a, D, plan.hull_width, oa, 3) * embed(theta_b, D, plan.hull_width, ob, 3);
    return (rho * op).trace();
  }
  Matrix rho = joint_split_density(net, plan);
  for (std::size_t s = plan.lifts_a.size(); s-- > 0;) {
    rho = apply_on_factor(kraus_for(net, plan.lifts_a[s]), rho, true, d3);
    rho = apply_on_factor(kraus_for(net, plan.lifts_b[s]), rho, false, d3);
  }
  return (rho * kron(theta_a, theta_b)).trace();
}

// ---- dense helpers ---------------------------------------------------------

namespace {

// Replaces every coarse site q by the pair (2q, 2q+1).
Vector apply_isometries(const LayeredNetwork& net, int layer, const Vector& psi, std::size_t sites) {
  const std::size_t D = net.bond_dim();
  Vector cur = psi;
  for (std::size_t q = 0; q < sites; ++q) {
    const Matrix v = net.isometry(layer, q).as_map();
    const std::size_t left = ipow(D, unsigned(2 * q));
    const std::size_t right = ipow(D, unsigned(sites - q - 1));
    Vector next(Eigen::Index(left * D * D * right));
    for (std::size_t l = 0; l < left; ++l) {
      Eigen::Map<const RowMajorMatrix> in(cur.data() + l * D * right, Eigen::Index(D), Eigen::Index(right));
      Eigen::Map<RowMajorMatrix> out(next.data() + l * D * D * right, Eigen::Index(D * D), Eigen::Index(right));
      out.noalias() = v * in;
    }
    cur = std::move(next);
  }
  return cur;
}

void apply_two_site(Vector& psi, std::size_t sites, std::size_t D, std::size_t s1, std::size_t s2, const Matrix& u) {
  const std::size_t st1 = ipow(D, unsigned(sites - 1 - s1));
  const std::size_t st2 = ipow(D, unsigned(sites - 1 - s2));
  const std::size_t total = std::size_t(psi.size());
  Vector in(Eigen::Index(D * D)), out(Eigen::Index(D * D));
  for (std::size_t base = 0; base < total; ++base) {
    if ((base / st1) % D != 0 || (base / st2) % D != 0) continue;
    for (std::size_t x = 0; x < D; ++x)
      for (std::size_t y = 0; y < D; ++y) in(Eigen::Index(x * D + y)) = psi(Eigen::Index(base + x * st1 + y * st2));
    out.noalias() = u * in;
    for (std::size_t x = 0; x < D; ++x)
      for (std::size_t y = 0; y < D; ++y) psi(Eigen::Index(base + x * st1 + y * st2)) = out(Eigen::Index(x * D + y));
  }
}

}  // namespace

Vector expand_to_level(const LayeredNetwork& net, int level) {
  const int m = net.layer_count();
  require(level >= 0 && level <= m, ErrorCode::InvalidArgument, "level out of range");
  const std::size_t D = net.bond_dim();
  const auto sites = net.sites_at_level(level);
  const double log2_size = double(sites) * std::log2(double(D));
  require(log2_size <= 22.0, ErrorCode::Resource,
          "dense expansion of " + std::to_string(sites) + " sites exceeds the 2^22 amplitude guard");
  Vector psi = to_vector(net.top().tensor());
  for (int layer = m; layer > level; --layer) {
    const std::size_t coarse = net.sites_at_level(layer);
    psi = apply_isometries(net, layer, psi, coarse);
    const std::size_t fine = 2 * coarse;
    for (std::size_t i = 0; i < coarse; ++i)
      apply_two_site(psi, fine, D, (2 * i + 1) % fine, (2 * i + 2) % fine, net.disentangler(layer, i).as_map());
  }
  return psi;
}

Matrix reduce_pure(const Vector& psi, std::size_t sites, std::size_t D, const std::vector<std::size_t>& keep) {
  require(std::size_t(psi.size()) == ipow(D, unsigned(sites)), ErrorCode::InvalidArgument, "state size mismatch");
  std::vector<bool> kept(sites, false);
  std::vector<std::size_t> order;
  for (auto s : keep) {
    require(s < sites && !kept[s], ErrorCode::InvalidArgument, "invalid kept site list");
    kept[s] = true;
    order.push_back(s);
  }
  for (std::size_t s = 0; s < sites; ++s)
    if (!kept[s]) order.push_back(s);
  const DenseTensor t(Shape(sites, D), std::vector<cdouble>(psi.data(), psi.data() + psi.size()));
  const Matrix mat = to_matrix(permute(t, order), keep.size());
  return mat * mat.adjoint();
}

Matrix reduce_density(const Matrix& rho, std::size_t sites, std::size_t D, const std::vector<std::size_t>& keep) {
  const auto dim = Eigen::Index(ipow(D, unsigned(sites)));
  require(rho.rows() == dim && rho.cols() == dim, ErrorCode::InvalidArgument, "density size mismatch");
  std::vector<bool> kept(sites, false);
  std::vector<std::size_t> rows;
  for (auto s : keep) {
    require(s < sites && !kept[s], ErrorCode::InvalidArgument, "invalid kept site list");
    kept[s] = true;
    rows.push_back(s);
  }
  const std::size_t nk = rows.size();
  for (std::size_t s = 0; s < sites; ++s)
    if (!kept[s]) rows.push_back(s);
  std::vector<std::size_t> order;
  for (std::size_t t = 0; t < nk; ++t) order.push_back(rows[t]);
  for (std::size_t t = nk; t < sites; ++t) order.push_back(rows[t]);
  for (std::size_t t = 0; t < nk; ++t) order.push_back(sites + rows[t]);
  for (std::size_t t = nk; t < sites; ++t) order.push_back(sites + rows[t]);
  DenseTensor t(Shape(2 * sites, D), std::vector<cdouble>(std::size_t(rho.size())));
  Eigen::Map<RowMajorMatrix>(t.entries().data(), dim, dim) = rho;
  const DenseTensor p = permute(t, order);
  const std::size_t dk = ipow(D, unsigned(nk)), dt = ipow(D, unsigned(sites - nk));
  Matrix out = Matrix::Zero(Eigen::Index(dk), Eigen::Index(dk));
  for (std::size_t i = 0; i < dk; ++i)
    for (std::size_t j = 0; j < dk; ++j) {
      cdouble s = 0.0;
      for (std::size_t x = 0; x < dt; ++x) s += p[((i * dt + x) * dk + j) * dt + x];
      out(Eigen::Index(i), Eigen::Index(j)) = s;
    }
  return out;
}

Matrix embed(const Matrix& op, std::size_t D, std::size_t sites, std::size_t at, std::size_t op_sites) {
  require(at + op_sites <= sites, ErrorCode::InvalidArgument, "embedded operator exceeds the window");
  const auto left = Eigen::Index(ipow(D, unsigned(at)));
  const auto right = Eigen::Index(ipow(D, unsigned(sites - at - op_sites)));
  return kron(kron(Matrix::Identity(left, left), op), Matrix::Identity(right, right));
}

// ---- level contraction -----------------------------------------------------

namespace {

// Ket labels of M5: upper 0..2, lower 100..105, internal 201..204. Bra legs
// are shifted by kBra except the lower spectators outside the window.
constexpr int kBra = 1000;
const std::vector<std::vector<int>> kLamLabels{{0, 100, 201}, {1, 202, 203}, {2, 204, 105}};
const std::vector<std::vector<int>> kChiLabels{{201, 202, 101, 102}, {203, 204, 103, 104}};
const std::vector<int> kUpper{0, 1, 2};
const std::vector<int> kUpperBra{kBra, kBra + 1, kBra + 2};

std::size_t side_offset(Side side) {
  require(side != Side::Window, ErrorCode::InvalidArgument, "level contraction needs side L or R");
  return side == Side::L ? 1 : 2;
}

std::vector<int> bra_labels(const std::vector<int>& ket, std::size_t offset) {
  std::vector<int> out;
  for (int l : ket) {
    const bool spectator = l >= 100 && l < 106 && (std::size_t(l - 100) < offset || std::size_t(l - 100) >= offset + 3);
    out.push_back(spectator ? l : l + kBra);
  }
  return out;
}

std::vector<int> window_labels(std::size_t offset, int shift) {
  return {int(100 + offset) + shift, int(101 + offset) + shift, int(102 + offset) + shift};
}

std::vector<int> concat(std::vector<int> a, const std::vector<int>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

LevelContraction::LevelContraction(const Disentangler& chi, const Isometry& lam)
    : D_(chi.bond_dim()), lam_(lam.tensor()), chi_(chi.tensor()), lam_bar_(conj(lam.tensor())),
      chi_bar_(conj(chi.tensor())) {
  require(lam.bond_dim() == D_, ErrorCode::InvalidArgument, "χ and λ leg dimensions differ");
}

// Ket and bra copies; `hole` drops one bra tensor (0..2 isometries, 3..4
// disentanglers).
std::vector<Labeled> LevelContraction::operands(std::size_t offset, int hole) const {
  std::vector<Labeled> ops;
  for (std::size_t i = 0; i < 3; ++i) ops.push_back({&lam_, kLamLabels[i]});
  for (std::size_t i = 0; i < 2; ++i) ops.push_back({&chi_, kChiLabels[i]});
  for (std::size_t i = 0; i < 3; ++i)
    if (hole != int(i)) ops.push_back({&lam_bar_, bra_labels(kLamLabels[i], offset)});
  for (std::size_t i = 0; i < 2; ++i)
    if (hole != int(3 + i)) ops.push_back({&chi_bar_, bra_labels(kChiLabels[i], offset)});
  return ops;
}

Matrix LevelContraction::heisenberg(const Matrix& theta, Side side) const {
  const std::size_t o = side_offset(side);
  const DenseTensor t = from_matrix(theta, Shape(6, D_));
  auto ops = operands(o, -1);
  ops.push_back({&t, concat(window_labels(o, kBra), window_labels(o, 0))});
  return to_matrix(einsum_greedy(ops, concat(kUpperBra, kUpper)), 3);
}

Matrix LevelContraction::schrodinger(const Matrix& rho, Side side) const {
  const std::size_t o = side_offset(side);
  const DenseTensor t = from_matrix(rho, Shape(6, D_));
  auto ops = operands(o, -1);
  ops.push_back({&t, concat(kUpper, kUpperBra)});
  return to_matrix(einsum_greedy(ops, concat(window_labels(o, 0), window_labels(o, kBra))), 3);
}

DenseTensor LevelContraction::gradient(const Matrix& theta, const Matrix& rho, Side side, int first, int last) const {
  const std::size_t o = side_offset(side);
  const DenseTensor h = from_matrix(theta, Shape(6, D_));
  const DenseTensor r = from_matrix(rho, Shape(6, D_));
  DenseTensor acc(Shape(first < 3 ? 3 : 4, D_));
  for (int hole = first; hole < last; ++hole) {
    auto ops = operands(o, hole);
    ops.push_back({&h, concat(window_labels(o, kBra), window_labels(o, 0))});
    ops.push_back({&r, concat(kUpper, kUpperBra)});
    const auto& ket = hole < 3 ? kLamLabels[std::size_t(hole)] : kChiLabels[std::size_t(hole - 3)];
    const DenseTensor t = einsum_greedy(ops, bra_labels(ket, o));
    for (std::size_t x = 0; x < t.size(); ++x) acc[x] += t[x];
  }
  return acc;
}

DenseTensor LevelContraction::chi_gradient(const Matrix& theta, const Matrix& rho, Side side) const {
  return gradient(theta, rho, side, 3, 5);
}

DenseTensor LevelContraction::lam_gradient(const Matrix& theta, const Matrix& rho, Side side) const {
  return gradient(theta, rho, side, 0, 3);
}

}  // namespace qumera::channels
