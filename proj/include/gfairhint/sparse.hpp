#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "gfairhint/tensor.hpp"

namespace gfairhint {

// Compressed sparse row matrix with fixed structure. Values are mutable,
// the sparsity pattern is not. transpose() is built once and cached so the
// backward pass of spmm does not rebuild it every step.
class CsrMatrix {
 public:
  CsrMatrix() = default;
  CsrMatrix(std::size_t n_rows, std::size_t n_cols,
            std::vector<std::size_t> indptr,
            std::vector<std::size_t> indices,
            std::vector<double> values);

  // Builds from COO triplets. Duplicate (r, c) entries are summed.
  // Column indices within each row come out sorted.
  static CsrMatrix from_coo(std::size_t n_rows, std::size_t n_cols,
                            const std::vector<std::size_t>& rows,
                            const std::vector<std::size_t>& cols,
                            const std::vector<double>& vals);

  std::size_t rows() const { return n_rows_; }
  std::size_t cols() const { return n_cols_; }
  std::size_t nnz() const { return indices_.size(); }

  const std::vector<std::size_t>& indptr() const { return indptr_; }
  const std::vector<std::size_t>& indices() const { return indices_; }
  const std::vector<double>& values() const { return values_; }

  // out = this * dense, dense is (n_cols x d)
  Tensor spmm(const Tensor& dense) const;

  // Cached A^T; built on first use.
  const CsrMatrix& transpose() const;

  Tensor to_dense() const;

 private:
  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::vector<std::size_t> indptr_;   // size n_rows + 1
  std::vector<std::size_t> indices_;  // column ids
  std::vector<double> values_;
  mutable std::shared_ptr<CsrMatrix> transpose_cache_;
};

}  // namespace gfairhint
