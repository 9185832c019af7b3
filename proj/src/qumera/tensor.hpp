#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qumera/error.hpp"

namespace qumera {

using cdouble = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RowMajorMatrix = Eigen::Matrix<cdouble, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Shape = std::vector<std::size_t>;

std::size_t shape_volume(const Shape& shape);

/// Dense complex tensor with positional legs. Entries are stored row-major
/// over legs: the leftmost leg varies slowest.
class DenseTensor {
 public:
  DenseTensor() = default;
  explicit DenseTensor(Shape shape);
  DenseTensor(Shape shape, std::vector<cdouble> entries);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t dim(std::size_t leg) const { return shape_.at(leg); }

  std::span<const cdouble> entries() const noexcept { return entries_; }
  std::span<cdouble> entries() noexcept { return entries_; }
  const std::vector<cdouble>& data() const noexcept { return entries_; }

  std::size_t offset(std::span<const std::size_t> index) const;
  cdouble& at(std::initializer_list<std::size_t> index);
  const cdouble& at(std::initializer_list<std::size_t> index) const;
  cdouble& operator[](std::size_t flat) { return entries_[flat]; }
  const cdouble& operator[](std::size_t flat) const { return entries_[flat]; }

  double norm() const;
  DenseTensor& operator*=(cdouble s);

  friend bool operator==(const DenseTensor& a, const DenseTensor& b) {
    return a.shape_ == b.shape_ && a.entries_ == b.entries_;
  }

 private:
  Shape shape_;
  std::vector<cdouble> entries_;
};

struct LegPair {
  std::size_t a;
  std::size_t b;
};

/// Sum over the paired legs. Result legs: the unpaired legs of `a` in order,
/// followed by the unpaired legs of `b`.
DenseTensor contract(const DenseTensor& a, const DenseTensor& b, std::span<const LegPair> pairs);
DenseTensor contract(const DenseTensor& a, const DenseTensor& b, std::initializer_list<LegPair> pairs);

DenseTensor permute(const DenseTensor& a, std::span<const std::size_t> order);
DenseTensor permute(const DenseTensor& a, std::initializer_list<std::size_t> order);
DenseTensor reshape(const DenseTensor& a, Shape shape);
DenseTensor conj(const DenseTensor& a);
double max_abs_diff(const DenseTensor& a, const DenseTensor& b);

/// One operand of a labelled contraction; legs sharing a label are summed.
struct Labeled {
  const DenseTensor* tensor;
  std::vector<int> labels;
};

/// Contracts operands pairwise from left to right, summing every label that
/// occurs twice, then orders the surviving legs as `output`.
DenseTensor einsum(std::span<const Labeled> operands, std::span<const int> output);
DenseTensor einsum(std::initializer_list<Labeled> operands, std::initializer_list<int> output);

/// Same result as einsum, contracting at each step the connected pair with
/// the smallest cost (product of the dimensions of their combined labels).
DenseTensor einsum_greedy(std::span<const Labeled> operands, std::span<const int> output);

/// The first `row_legs` legs index rows, the remainder index columns.
Matrix to_matrix(const DenseTensor& t, std::size_t row_legs);
DenseTensor from_matrix(const Matrix& m, Shape shape);
Vector to_vector(const DenseTensor& t);

using Rng = std::mt19937_64;

/// I.i.d. complex standard Gaussian entries (real and imaginary parts N(0,1)).
DenseTensor random_gaussian(const Shape& shape, Rng& rng, bool real_only = false);
Matrix random_gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng, bool real_only = false);

/// Kronecker product with the left factor as the slow index.
Matrix kron(const Matrix& a, const Matrix& b);

std::uint64_t ipow(std::uint64_t base, unsigned exp);

}  // namespace qumera
