#include "gaa/sparse.hpp"

#include <algorithm>

#include "gaa/errors.hpp"

namespace gaa {

CsrMatrix CsrMatrix::from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets) {
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  CsrMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.row_ptr_.assign(rows + 1, 0);
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    const auto& t = triplets[i];
    if (t.row >= rows || t.col >= cols) throw InputError("sparse triplet index out of range");
    if (i > 0 && triplets[i - 1].row == t.row && triplets[i - 1].col == t.col) {
      m.values_.back() += t.value;
      continue;
    }
    m.col_idx_.push_back(t.col);
    m.values_.push_back(t.value);
    m.row_ptr_[t.row + 1] = static_cast<std::uint32_t>(m.col_idx_.size());
  }
  // Rows without entries inherit the previous offset.
  for (std::size_t r = 1; r <= rows; ++r) m.row_ptr_[r] = std::max(m.row_ptr_[r], m.row_ptr_[r - 1]);
  return m;
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != cols_ || y.size() != rows_) throw InputError("spmv: dimension mismatch");
  for (std::size_t r = 0; r < rows_; ++r) {
    double acc = 0.0;
    for (auto k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) acc += values_[k] * x[col_idx_[k]];
    y[r] = acc;
  }
}

void CsrMatrix::multiply_dense(std::span<const double> x, std::size_t k, std::span<double> y) const {
  if (x.size() != cols_ * k || y.size() != rows_ * k) throw InputError("spmm: dimension mismatch");
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t r = 0; r < rows_; ++r) {
    double* out = y.data() + r * k;
    for (auto e = row_ptr_[r]; e < row_ptr_[r + 1]; ++e) {
      const double v = values_[e];
      const double* in = x.data() + std::size_t{col_idx_[e]} * k;
      for (std::size_t j = 0; j < k; ++j) out[j] += v * in[j];
    }
  }
}

void CsrMatrix::multiply_transpose_add(std::span<const double> x, std::size_t k, std::span<double> y) const {
  if (x.size() != rows_ * k || y.size() != cols_ * k) throw InputError("spmm^T: dimension mismatch");
  for (std::size_t r = 0; r < rows_; ++r) {
    const double* in = x.data() + r * k;
    for (auto e = row_ptr_[r]; e < row_ptr_[r + 1]; ++e) {
      const double v = values_[e];
      double* out = y.data() + std::size_t{col_idx_[e]} * k;
      for (std::size_t j = 0; j < k; ++j) out[j] += v * in[j];
    }
  }
}

CsrMatrix CsrMatrix::transpose() const {
  std::vector<Triplet> t;
  t.reserve(nnz());
  for (std::size_t r = 0; r < rows_; ++r)
    for (auto e = row_ptr_[r]; e < row_ptr_[r + 1]; ++e)
      t.push_back({col_idx_[e], static_cast<std::uint32_t>(r), values_[e]});
  return from_triplets(cols_, rows_, std::move(t));
}

double CsrMatrix::at(std::size_t r, std::size_t c) const {
  const auto first = col_idx_.begin() + row_ptr_[r];
  const auto last = col_idx_.begin() + row_ptr_[r + 1];
  const auto it = std::lower_bound(first, last, static_cast<std::uint32_t>(c));
  return (it != last && *it == c) ? values_[it - col_idx_.begin()] : 0.0;
}

}  // namespace gaa
