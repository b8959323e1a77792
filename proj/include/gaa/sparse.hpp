#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace gaa {

struct Triplet {
  std::uint32_t row;
  std::uint32_t col;
  double value;
};

// Compressed sparse row matrix. Column indices within a row are sorted.
class CsrMatrix {
 public:
  CsrMatrix() = default;
  // Duplicate (row, col) entries are summed.
  static CsrMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return col_idx_.size(); }

  std::span<const std::uint32_t> row_ptr() const { return row_ptr_; }
  std::span<const std::uint32_t> col_idx() const { return col_idx_; }
  std::span<const double> values() const { return values_; }

  // y = A x
  void multiply(std::span<const double> x, std::span<double> y) const;
  // Y = A X for row-major X (cols x k), Y (rows x k).
  void multiply_dense(std::span<const double> x, std::size_t k, std::span<double> y) const;
  // Y += A^T X for row-major X (rows x k), Y (cols x k).
  void multiply_transpose_add(std::span<const double> x, std::size_t k, std::span<double> y) const;

  CsrMatrix transpose() const;
  double at(std::size_t r, std::size_t c) const;

  friend bool operator==(const CsrMatrix&, const CsrMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint32_t> row_ptr_{0};
  std::vector<std::uint32_t> col_idx_;
  std::vector<double> values_;
};

}  // namespace gaa
