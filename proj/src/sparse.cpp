#include "gfairhint/sparse.hpp"

#include <algorithm>
#include <numeric>

#include "gfairhint/error.hpp"

namespace gfairhint {

CsrMatrix::CsrMatrix(std::size_t n_rows, std::size_t n_cols,
                     std::vector<std::size_t> indptr,
                     std::vector<std::size_t> indices,
                     std::vector<double> values)
    : n_rows_(n_rows),
      n_cols_(n_cols),
      indptr_(std::move(indptr)),
      indices_(std::move(indices)),
      values_(std::move(values)) {
  if (indptr_.size() != n_rows_ + 1)
    throw ShapeError("csr indptr size mismatch");
  if (indices_.size() != values_.size())
    throw ShapeError("csr indices/values size mismatch");
  if (indptr_.back() != indices_.size())
    throw ShapeError("csr indptr does not terminate at nnz");
  for (std::size_t c : indices_)
    if (c >= n_cols_) throw ShapeError("csr column index out of range");
}

CsrMatrix CsrMatrix::from_coo(std::size_t n_rows, std::size_t n_cols,
                              const std::vector<std::size_t>& rows,
                              const std::vector<std::size_t>& cols,
                              const std::vector<double>& vals) {
  if (rows.size() != cols.size() || rows.size() != vals.size())
    throw ShapeError("coo triplet arrays must have equal length");
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (rows[a] != rows[b]) return rows[a] < rows[b];
    return cols[a] < cols[b];
  });

  std::vector<std::size_t> indptr(n_rows + 1, 0);
  std::vector<std::size_t> indices;
  std::vector<double> values;
  indices.reserve(rows.size());
  values.reserve(rows.size());
  bool have_last = false;
  std::size_t last_row = 0, last_col = 0;
  for (std::size_t k : order) {
    if (rows[k] >= n_rows) throw ShapeError("coo row index out of range");
    if (cols[k] >= n_cols) throw ShapeError("coo column index out of range");
    if (have_last && rows[k] == last_row && cols[k] == last_col) {
      values.back() += vals[k];
      continue;
    }
    indices.push_back(cols[k]);
    values.push_back(vals[k]);
    indptr[rows[k] + 1] = indices.size();
    have_last = true;
    last_row = rows[k];
    last_col = cols[k];
  }
  // forward-fill row offsets for empty rows
  for (std::size_t r = 1; r <= n_rows; ++r)
    indptr[r] = std::max(indptr[r], indptr[r - 1]);
  return CsrMatrix(n_rows, n_cols, std::move(indptr), std::move(indices),
                   std::move(values));
}

Tensor CsrMatrix::spmm(const Tensor& dense) const {
  if (dense.rows() != n_cols_)
    throw ShapeError("spmm: dense rows " + std::to_string(dense.rows()) +
                     " != csr cols " + std::to_string(n_cols_));
  std::size_t d = dense.cols();
  Tensor out({n_rows_, d});
  double* o = out.mutable_data().data();
  const double* x = dense.data().data();
  for (std::size_t r = 0; r < n_rows_; ++r) {
    double* orow = o + r * d;
    for (std::size_t k = indptr_[r]; k < indptr_[r + 1]; ++k) {
      double v = values_[k];
      const double* xrow = x + indices_[k] * d;
      for (std::size_t j = 0; j < d; ++j) orow[j] += v * xrow[j];
    }
  }
  out.validate_finite("spmm");
  return out;
}

const CsrMatrix& CsrMatrix::transpose() const {
  if (!transpose_cache_) {
    std::vector<std::size_t> trows, tcols;
    std::vector<double> tvals;
    trows.reserve(nnz());
    tcols.reserve(nnz());
    tvals.reserve(nnz());
    for (std::size_t r = 0; r < n_rows_; ++r) {
      for (std::size_t k = indptr_[r]; k < indptr_[r + 1]; ++k) {
        trows.push_back(indices_[k]);
        tcols.push_back(r);
        tvals.push_back(values_[k]);
      }
    }
    transpose_cache_ = std::make_shared<CsrMatrix>(
        from_coo(n_cols_, n_rows_, trows, tcols, tvals));
  }
  return *transpose_cache_;
}

Tensor CsrMatrix::to_dense() const {
  Tensor out({n_rows_, n_cols_});
  auto span = out.mutable_data();
  for (std::size_t r = 0; r < n_rows_; ++r)
    for (std::size_t k = indptr_[r]; k < indptr_[r + 1]; ++k)
      span[r * n_cols_ + indices_[k]] += values_[k];
  return out;
}

}  // namespace gfairhint
