#include "textrgcn/sparse.hpp"

#include <algorithm>
#include <string>

#include "textrgcn/error.hpp"

namespace textrgcn {

CsrMatrix::CsrMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {}

CsrMatrix CsrMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                   std::vector<Triplet> triplets) {
  for (const auto& t : triplets) {
    if (t.row >= rows || t.col >= cols) {
      throw Error(ErrorCode::ShapeMismatch,
                  "triplet (" + std::to_string(t.row) + ", " +
                      std::to_string(t.col) + ") outside " +
                      std::to_string(rows) + "x" + std::to_string(cols));
    }
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  CsrMatrix m(rows, cols);
  m.col_idx_.reserve(triplets.size());
  m.values_.reserve(triplets.size());
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    const auto& t = triplets[k];
    if (k > 0 && triplets[k - 1].row == t.row && triplets[k - 1].col == t.col) {
      throw Error(ErrorCode::DuplicateEdge,
                  "duplicate entry (" + std::to_string(t.row) + ", " +
                      std::to_string(t.col) + ")");
    }
    ++m.row_ptr_[t.row + 1];
    m.col_idx_.push_back(t.col);
    m.values_.push_back(t.value);
  }
  for (std::size_t r = 0; r < rows; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
  return m;
}

CsrMatrix CsrMatrix::identity(std::size_t n) {
  CsrMatrix m(n, n);
  m.col_idx_.resize(n);
  m.values_.assign(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    m.row_ptr_[i + 1] = i + 1;
    m.col_idx_[i] = static_cast<NodeIndex>(i);
  }
  return m;
}

double CsrMatrix::at(std::size_t row, std::size_t col) const {
  const auto cols = row_cols(row);
  const auto it = std::lower_bound(cols.begin(), cols.end(), col);
  if (it == cols.end() || *it != col) return 0.0;
  return row_values(row)[static_cast<std::size_t>(it - cols.begin())];
}

CsrMatrix CsrMatrix::transpose() const {
  std::vector<Triplet> t;
  t.reserve(nnz());
  for (std::size_t r = 0; r < rows_; ++r) {
    const auto cols = row_cols(r);
    const auto vals = row_values(r);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      t.push_back({cols[k], static_cast<NodeIndex>(r), vals[k]});
    }
  }
  return from_triplets(cols_, rows_, std::move(t));
}

Matrix CsrMatrix::to_dense() const {
  Matrix d = Matrix::Zero(static_cast<Eigen::Index>(rows_),
                          static_cast<Eigen::Index>(cols_));
  for (std::size_t r = 0; r < rows_; ++r) {
    const auto cols = row_cols(r);
    const auto vals = row_values(r);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      d(static_cast<Eigen::Index>(r), cols[k]) = vals[k];
    }
  }
  return d;
}

Matrix CsrMatrix::multiply(const Matrix& dense) const {
  if (static_cast<std::size_t>(dense.rows()) != cols_) {
    throw Error(ErrorCode::ShapeMismatch, "sparse * dense inner dimension mismatch");
  }
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(rows_), dense.cols());
  for (std::size_t r = 0; r < rows_; ++r) {
    const auto cols = row_cols(r);
    const auto vals = row_values(r);
    auto out_row = out.row(static_cast<Eigen::Index>(r));
    for (std::size_t k = 0; k < cols.size(); ++k) {
      out_row.noalias() += vals[k] * dense.row(cols[k]);
    }
  }
  return out;
}

Matrix CsrMatrix::transpose_multiply(const Matrix& dense) const {
  if (static_cast<std::size_t>(dense.rows()) != rows_) {
    throw Error(ErrorCode::ShapeMismatch, "sparse^T * dense inner dimension mismatch");
  }
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(cols_), dense.cols());
  for (std::size_t r = 0; r < rows_; ++r) {
    const auto cols = row_cols(r);
    const auto vals = row_values(r);
    const auto in_row = dense.row(static_cast<Eigen::Index>(r));
    for (std::size_t k = 0; k < cols.size(); ++k) {
      out.row(cols[k]).noalias() += vals[k] * in_row;
    }
  }
  return out;
}

}  // namespace textrgcn
