#include "qumera/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <map>
#include <sstream>

namespace qumera {

std::size_t shape_volume(const Shape& shape) {
  std::size_t v = 1;
  for (auto d : shape) v *= d;
  return v;
}

std::uint64_t ipow(std::uint64_t base, unsigned exp) {
  std::uint64_t r = 1;
  for (unsigned i = 0; i < exp; ++i) r *= base;
  return r;
}

DenseTensor::DenseTensor(Shape shape) : shape_(std::move(shape)), entries_(shape_volume(shape_)) {
  for (auto d : shape_) require(d > 0, ErrorCode::InvalidArgument, "tensor legs must have positive dimension");
}

DenseTensor::DenseTensor(Shape shape, std::vector<cdouble> entries)
    : shape_(std::move(shape)), entries_(std::move(entries)) {
  for (auto d : shape_) require(d > 0, ErrorCode::InvalidArgument, "tensor legs must have positive dimension");
  require(entries_.size() == shape_volume(shape_), ErrorCode::InvalidArgument,
          "entry count does not match the product of the shape");
}

std::size_t DenseTensor::offset(std::span<const std::size_t> index) const {
  require(index.size() == shape_.size(), ErrorCode::InvalidArgument, "index rank mismatch");
  std::size_t off = 0;
  for (std::size_t i = 0; i < index.size(); ++i) {
    require(index[i] < shape_[i], ErrorCode::InvalidArgument, "index out of range");
    off = off * shape_[i] + index[i];
  }
  return off;
}

cdouble& DenseTensor::at(std::initializer_list<std::size_t> index) {
  return entries_[offset(std::span<const std::size_t>(index.begin(), index.size()))];
}

const cdouble& DenseTensor::at(std::initializer_list<std::size_t> index) const {
  return entries_[offset(std::span<const std::size_t>(index.begin(), index.size()))];
}

double DenseTensor::norm() const {
  double s = 0.0;
  for (const auto& z : entries_) s += std::norm(z);
  return std::sqrt(s);
}

DenseTensor& DenseTensor::operator*=(cdouble s) {
  for (auto& z : entries_) z *= s;
  return *this;
}

DenseTensor permute(const DenseTensor& a, std::span<const std::size_t> order) {
  const std::size_t r = a.rank();
  require(order.size() == r, ErrorCode::InvalidArgument, "permutation has wrong length");
  std::vector<bool> seen(r, false);
  for (auto o : order) {
    require(o < r && !seen[o], ErrorCode::InvalidArgument, "invalid leg permutation");
    seen[o] = true;
  }
  bool identity = true;
  for (std::size_t i = 0; i < r; ++i) identity = identity && order[i] == i;
  if (identity) return a;

  Shape out_shape(r);
  for (std::size_t i = 0; i < r; ++i) out_shape[i] = a.shape()[order[i]];

  std::vector<std::size_t> src_stride(r, 1);
  for (std::size_t i = r; i-- > 1;) src_stride[i - 1] = src_stride[i] * a.shape()[i];
  std::vector<std::size_t> stride(r);
  for (std::size_t i = 0; i < r; ++i) stride[i] = src_stride[order[i]];

  std::vector<cdouble> out(a.size());
  std::vector<std::size_t> idx(r, 0);
  const auto src = a.entries();
  // Innermost destination leg is copied with a strided loop.
  const std::size_t inner = r ? out_shape[r - 1] : 1;
  const std::size_t inner_stride = r ? stride[r - 1] : 1;
  std::size_t src_off = 0;
  for (std::size_t dst = 0; dst < out.size(); dst += inner) {
    for (std::size_t k = 0; k < inner; ++k) out[dst + k] = src[src_off + k * inner_stride];
    // advance odometer on legs [0, r-1)
    for (std::size_t leg = r - 1; leg-- > 0;) {
      ++idx[leg];
      src_off += stride[leg];
      if (idx[leg] < out_shape[leg]) break;
      src_off -= stride[leg] * out_shape[leg];
      idx[leg] = 0;
    }
  }
  return DenseTensor(std::move(out_shape), std::move(out));
}

DenseTensor permute(const DenseTensor& a, std::initializer_list<std::size_t> order) {
  return permute(a, std::span<const std::size_t>(order.begin(), order.size()));
}

DenseTensor reshape(const DenseTensor& a, Shape shape) {
  require(shape_volume(shape) == a.size(), ErrorCode::InvalidArgument, "reshape changes the entry count");
  return DenseTensor(std::move(shape), a.data());
}

DenseTensor conj(const DenseTensor& a) {
  std::vector<cdouble> e(a.data());
  for (auto& z : e) z = std::conj(z);
  return DenseTensor(a.shape(), std::move(e));
}

double max_abs_diff(const DenseTensor& a, const DenseTensor& b) {
  require(a.shape() == b.shape(), ErrorCode::InvalidArgument, "shape mismatch in comparison");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

DenseTensor contract(const DenseTensor& a, const DenseTensor& b, std::span<const LegPair> pairs) {
  std::vector<bool> used_a(a.rank(), false), used_b(b.rank(), false);
  for (const auto& p : pairs) {
    std::ostringstream where;
    where << "(" << p.a << "," << p.b << ")";
    require(p.a < a.rank() && p.b < b.rank(), ErrorCode::Contraction, "contraction leg pair " + where.str() + " out of range");
    require(!used_a[p.a] && !used_b[p.b], ErrorCode::Contraction, "contraction leg pair " + where.str() + " reuses a leg");
    if (a.dim(p.a) != b.dim(p.b)) {
      std::ostringstream msg;
      msg << "dimension mismatch on contraction leg pair " << where.str() << ": " << a.dim(p.a) << " vs " << b.dim(p.b);
      fail(ErrorCode::Contraction, msg.str());
    }
    used_a[p.a] = used_b[p.b] = true;
  }

  std::vector<std::size_t> order_a, order_b;
  Shape out_shape;
  std::size_t rows = 1, inner = 1, cols = 1;
  for (std::size_t i = 0; i < a.rank(); ++i)
    if (!used_a[i]) {
      order_a.push_back(i);
      out_shape.push_back(a.dim(i));
      rows *= a.dim(i);
    }
  for (const auto& p : pairs) {
    order_a.push_back(p.a);
    order_b.push_back(p.b);
    inner *= a.dim(p.a);
  }
  for (std::size_t i = 0; i < b.rank(); ++i)
    if (!used_b[i]) {
      order_b.push_back(i);
      out_shape.push_back(b.dim(i));
      cols *= b.dim(i);
    }

  const DenseTensor pa = permute(a, order_a);
  const DenseTensor pb = permute(b, order_b);
  Eigen::Map<const RowMajorMatrix> ma(pa.entries().data(), Eigen::Index(rows), Eigen::Index(inner));
  Eigen::Map<const RowMajorMatrix> mb(pb.entries().data(), Eigen::Index(inner), Eigen::Index(cols));
  std::vector<cdouble> out(rows * cols);
  Eigen::Map<RowMajorMatrix> mo(out.data(), Eigen::Index(rows), Eigen::Index(cols));
  mo.noalias() = ma * mb;
  return DenseTensor(std::move(out_shape), std::move(out));
}

DenseTensor contract(const DenseTensor& a, const DenseTensor& b, std::initializer_list<LegPair> pairs) {
  return contract(a, b, std::span<const LegPair>(pairs.begin(), pairs.size()));
}

DenseTensor einsum(std::span<const Labeled> operands, std::span<const int> output) {
  require(!operands.empty(), ErrorCode::InvalidArgument, "einsum needs at least one operand");
  for (const auto& op : operands) {
    require(op.tensor != nullptr && op.labels.size() == op.tensor->rank(), ErrorCode::InvalidArgument,
            "einsum operand labels do not match its rank");
    std::vector<int> sorted = op.labels;
    std::sort(sorted.begin(), sorted.end());
    require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), ErrorCode::InvalidArgument,
            "einsum does not support repeated labels within one operand");
  }

  DenseTensor acc = *operands[0].tensor;
  std::vector<int> labels = operands[0].labels;
  for (std::size_t k = 1; k < operands.size(); ++k) {
    const auto& next = operands[k];
    std::vector<LegPair> pairs;
    std::vector<bool> paired_acc(labels.size(), false), paired_next(next.labels.size(), false);
    for (std::size_t i = 0; i < labels.size(); ++i)
      for (std::size_t j = 0; j < next.labels.size(); ++j)
        if (labels[i] == next.labels[j]) {
          pairs.push_back({i, j});
          paired_acc[i] = paired_next[j] = true;
        }
    acc = contract(acc, *next.tensor, pairs);
    std::vector<int> merged;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (!paired_acc[i]) merged.push_back(labels[i]);
    for (std::size_t j = 0; j < next.labels.size(); ++j)
      if (!paired_next[j]) merged.push_back(next.labels[j]);
    labels = std::move(merged);
  }

  require(labels.size() == output.size(), ErrorCode::InvalidArgument, "einsum output labels do not match the open legs");
  std::vector<std::size_t> order;
  for (int l : output) {
    auto it = std::find(labels.begin(), labels.end(), l);
    require(it != labels.end(), ErrorCode::InvalidArgument, "einsum output label not among the open legs");
    order.push_back(std::size_t(it - labels.begin()));
  }
  return permute(acc, order);
}

DenseTensor einsum(std::initializer_list<Labeled> operands, std::initializer_list<int> output) {
  return einsum(std::span<const Labeled>(operands.begin(), operands.size()),
                std::span<const int>(output.begin(), output.size()));
}

DenseTensor einsum_greedy(std::span<const Labeled> operands, std::span<const int> output) {
  require(!operands.empty(), ErrorCode::InvalidArgument, "einsum needs at least one operand");
  std::map<int, std::size_t> dims;
  for (const auto& op : operands) {
    require(op.tensor != nullptr && op.labels.size() == op.tensor->rank(), ErrorCode::InvalidArgument,
            "einsum operand labels do not match its rank");
    for (std::size_t i = 0; i < op.labels.size(); ++i) dims[op.labels[i]] = op.tensor->dim(i);
  }
  struct Node {
    DenseTensor tensor;
    std::vector<int> labels;
  };
  std::vector<Node> nodes;
  for (const auto& op : operands) nodes.push_back({*op.tensor, op.labels});

  while (nodes.size() > 1) {
    std::size_t best_a = 0, best_b = 1;
    double best_cost = INFINITY;
    bool best_shared = false;
    for (std::size_t a = 0; a < nodes.size(); ++a)
      for (std::size_t b = a + 1; b < nodes.size(); ++b) {
        bool shared = false;
        double cost = 1.0;
        std::vector<int> all = nodes[a].labels;
        for (int l : nodes[b].labels) {
          if (std::find(all.begin(), all.end(), l) != all.end())
            shared = true;
          else
            all.push_back(l);
        }
        for (int l : all) cost *= double(dims[l]);
        // Outer products only once nothing is connected.
        if ((shared && !best_shared) || (shared == best_shared && cost < best_cost)) {
          best_a = a, best_b = b, best_cost = cost, best_shared = shared;
        }
      }
    std::vector<int> merged;
    for (int l : nodes[best_a].labels)
      if (std::find(nodes[best_b].labels.begin(), nodes[best_b].labels.end(), l) == nodes[best_b].labels.end())
        merged.push_back(l);
    for (int l : nodes[best_b].labels)
      if (std::find(nodes[best_a].labels.begin(), nodes[best_a].labels.end(), l) == nodes[best_a].labels.end())
        merged.push_back(l);
    const std::vector<Labeled> pair{{&nodes[best_a].tensor, nodes[best_a].labels}, {&nodes[best_b].tensor, nodes[best_b].labels}};
    Node joined{einsum(pair, merged), merged};
    nodes.erase(nodes.begin() + std::ptrdiff_t(best_b));
    nodes[best_a] = std::move(joined);
  }
  const std::vector<Labeled> last{{&nodes[0].tensor, nodes[0].labels}};
  return einsum(last, output);
}

Matrix to_matrix(const DenseTensor& t, std::size_t row_legs) {
  require(row_legs <= t.rank(), ErrorCode::InvalidArgument, "row leg count exceeds rank");
  std::size_t rows = 1;
  for (std::size_t i = 0; i < row_legs; ++i) rows *= t.dim(i);
  const std::size_t cols = rows ? t.size() / rows : 0;
  return Eigen::Map<const RowMajorMatrix>(t.entries().data(), Eigen::Index(rows), Eigen::Index(cols));
}

DenseTensor from_matrix(const Matrix& m, Shape shape) {
  require(shape_volume(shape) == std::size_t(m.size()), ErrorCode::InvalidArgument, "matrix size does not match shape");
  std::vector<cdouble> e(std::size_t(m.size()));
  Eigen::Map<RowMajorMatrix>(e.data(), m.rows(), m.cols()) = m;
  return DenseTensor(std::move(shape), std::move(e));
}

Vector to_vector(const DenseTensor& t) {
  return Eigen::Map<const Vector>(t.entries().data(), Eigen::Index(t.size()));
}

DenseTensor random_gaussian(const Shape& shape, Rng& rng, bool real_only) {
  std::normal_distribution<double> g(0.0, 1.0);
  DenseTensor t(shape);
  for (auto& z : t.entries()) {
    const double re = g(rng);
    const double im = real_only ? 0.0 : g(rng);
    z = cdouble(re, im);
  }
  return t;
}

Matrix random_gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng, bool real_only) {
  return to_matrix(random_gaussian({rows, cols}, rng, real_only), 1);
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace qumera
