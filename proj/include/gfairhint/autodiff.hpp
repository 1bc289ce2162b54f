#pragma once

#include <cstddef>
#include <functional>
#include <random>
#include <vector>

#include "gfairhint/sparse.hpp"
#include "gfairhint/tensor.hpp"

namespace gfairhint {

class Tape;

// Handle to a value recorded on a tape. Plain value type; the tape owns
// all storage and must outlive every Var pointing into it.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Tensor& grad() const;
};

// Define-by-run reverse-mode tape. Rebuilt for every forward pass; node ids
// are append order, so reverse id order is a valid topological order for
// backward. Single backward() call per tape.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf that never accumulates a gradient (data, frozen constants).
  Var input(Tensor value);

  // Leaf whose gradient is wanted (weights, saliency probes).
  Var param(Tensor value);

  const Tensor& value(std::size_t id) const;

  // Gradient slot for a node; zeros of the value's shape if backward never
  // reached it. Allocates lazily.
  const Tensor& grad(std::size_t id);

  // Seeds d(loss)/d(loss) = 1 and runs recorded rules in reverse order.
  // Throws ContractError unless loss is a scalar on this tape.
  void backward(Var loss);

  // --- op plumbing ---------------------------------------------------
  // Records an op node. backward_fn reads grad_slot(out_id) and accumulates
  // into the parents' slots; it is stored only when some parent wants a
  // gradient, so closures may assume they run for a reason.
  Var emit(Tensor value, std::vector<std::size_t> parents,
           std::function<void(Tape&, std::size_t)> backward_fn);

  bool wants_grad(std::size_t id) const;
  Tensor& grad_slot(std::size_t id);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // empty until first accumulation
    bool requires_grad = false;
    std::function<void(Tape&, std::size_t)> backward_fn;
  };

  Var leaf(Tensor value, bool requires_grad);

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

inline const Tensor& Var::value() const { return tape->value(id); }
inline const Tensor& Var::grad() const { return tape->grad(id); }

// --- dense kernels (also used directly by non-tape code and tests) -----
Tensor dense_matmul(const Tensor& a, const Tensor& b);        // a b
Tensor dense_matmul_tn(const Tensor& a, const Tensor& b);     // a^T b
Tensor dense_matmul_nt(const Tensor& a, const Tensor& b);     // a b^T
Tensor softmax_rows_value(const Tensor& a);

// --- recorded operations ----------------------------------------------
Var matmul(Var a, Var b);
Var spmm(const CsrMatrix& m, Var x);  // m is constant and must outlive the tape

// Binary elementwise; shapes must be equal, or one operand is a single row
// matching the other's last axis, or one operand is a scalar.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);

Var scale(Var a, double s);
Var add_const(Var a, double c);

Var sigmoid(Var a);
Var relu(Var a);
Var leaky_relu(Var a, double slope);
Var log_op(Var a);  // throws NumericError on non-positive input
Var exp_op(Var a);

Var softmax_rows(Var a);

Var concat_cols(Var a, Var b);
Var gather_rows(Var a, const std::vector<std::size_t>& idx);

// out[k] = <z[i[k],:], z[j[k],:]>
Var pair_dot(Var z, const std::vector<std::size_t>& i,
             const std::vector<std::size_t>& j);

Var sum(Var a);
Var mean(Var a);

// Inverted-dropout; identity when training is false or rate is 0.
Var dropout(Var a, double rate, std::mt19937_64& rng, bool training);

// Mean softmax cross-entropy over the rows listed in idx.
Var cross_entropy_mean(Var logits, const std::vector<int>& labels,
                       const std::vector<std::size_t>& idx);

// Mean binary cross-entropy of probabilities against {0,1} targets;
// probabilities are clamped to [1e-12, 1 - 1e-12] inside the log only.
Var bce_mean(Var probs, const std::vector<double>& targets);

// --- segment ops for attention over edge lists ------------------------
// Edges are (src[k], dst[k]) grouped contiguously by destination;
// seg_indptr is the CSR offset array over those groups (size n+1).

// out[k,:] = a[src[k],:] + b[dst[k],:]
Var gather_pair_sum(Var a, Var b, const std::vector<std::size_t>& src,
                    const std::vector<std::size_t>& dst);

// Column-wise softmax within each contiguous row segment.
Var segment_softmax(Var e, const std::vector<std::size_t>& seg_indptr);

// x viewed as [n, heads, d]: out[i,h,:] = sum over segment(i) of
// alpha[k,h] * x[src[k],h,:]
Var attention_aggregate(Var alpha, Var x, const std::vector<std::size_t>& src,
                        const std::vector<std::size_t>& seg_indptr,
                        std::size_t heads);

// x viewed as [n, heads, d], w as [heads, d]: out[i,h] = <x[i,h,:], w[h,:]>
Var block_dot(Var x, Var w, std::size_t heads);

// x viewed as [n, heads, d]: out[i,:] = mean over heads of x[i,h,:]
Var block_mean(Var x, std::size_t heads);

}  // namespace gfairhint
