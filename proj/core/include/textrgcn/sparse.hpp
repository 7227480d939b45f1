#ifndef TEXTRGCN_SPARSE_HPP
#define TEXTRGCN_SPARSE_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace textrgcn {

using NodeIndex = std::uint32_t;

/// Row-major dense matrix of 64-bit reals.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Triplet {
  NodeIndex row;
  NodeIndex col;
  double value;
};

/// Compressed sparse row matrix. Column indices are sorted within each row
/// and unique; construction rejects duplicates.
class CsrMatrix {
 public:
  CsrMatrix() = default;
  CsrMatrix(std::size_t rows, std::size_t cols);

  static CsrMatrix from_triplets(std::size_t rows, std::size_t cols,
                                 std::vector<Triplet> triplets);
  static CsrMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return values_.size(); }

  std::size_t row_size(std::size_t row) const {
    return row_ptr_[row + 1] - row_ptr_[row];
  }
  std::span<const NodeIndex> row_cols(std::size_t row) const {
    return {col_idx_.data() + row_ptr_[row], row_size(row)};
  }
  std::span<const double> row_values(std::size_t row) const {
    return {values_.data() + row_ptr_[row], row_size(row)};
  }
  std::span<double> row_values(std::size_t row) {
    return {values_.data() + row_ptr_[row], row_size(row)};
  }

  const std::vector<std::size_t>& row_ptr() const noexcept { return row_ptr_; }
  const std::vector<NodeIndex>& col_idx() const noexcept { return col_idx_; }
  const std::vector<double>& values() const noexcept { return values_; }

  /// Value at (row, col), zero when not stored.
  double at(std::size_t row, std::size_t col) const;

  CsrMatrix transpose() const;
  Matrix to_dense() const;

  /// this * dense. Each output row accumulates in stored column order.
  Matrix multiply(const Matrix& dense) const;
  /// this^T * dense without materializing the transpose.
  Matrix transpose_multiply(const Matrix& dense) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<NodeIndex> col_idx_;
  std::vector<double> values_;
};

}  // namespace textrgcn

#endif  // TEXTRGCN_SPARSE_HPP
