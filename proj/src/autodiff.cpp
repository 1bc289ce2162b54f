#include "gfairhint/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "gfairhint/error.hpp"

namespace gfairhint {

// ---------------------------------------------------------------- tape

Var Tape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

Var Tape::input(Tensor value) { return leaf(std::move(value), false); }
Var Tape::param(Tensor value) { return leaf(std::move(value), true); }

const Tensor& Tape::value(std::size_t id) const { return nodes_.at(id).value; }

bool Tape::wants_grad(std::size_t id) const {
  return nodes_.at(id).requires_grad;
}

Tensor& Tape::grad_slot(std::size_t id) {
  Node& n = nodes_.at(id);
  if (n.grad.empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

const Tensor& Tape::grad(std::size_t id) { return grad_slot(id); }

Var Tape::emit(Tensor value, std::vector<std::size_t> parents,
               std::function<void(Tape&, std::size_t)> backward_fn) {
  bool needs_grad = false;
  for (std::size_t p : parents) needs_grad = needs_grad || nodes_.at(p).requires_grad;
  Node n;
  n.value = std::move(value);
  n.requires_grad = needs_grad;
  if (needs_grad) n.backward_fn = std::move(backward_fn);
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw ContractError("backward: loss from another tape");
  if (backward_done_) throw ContractError("backward: tape already consumed");
  if (value(loss.id).size() != 1)
    throw ContractError("backward: loss must be a scalar, got shape " +
                        value(loss.id).shape_str());
  backward_done_ = true;
  grad_slot(loss.id)[0] = 1.0;
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.backward_fn && !n.grad.empty()) n.backward_fn(*this, id);
  }
}

// ------------------------------------------------------- dense kernels

Tensor dense_matmul(const Tensor& a, const Tensor& b) {
  std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k)
    throw ShapeError("matmul: " + a.shape_str() + " x " + b.shape_str());
  Tensor out({m, n});
  const double* A = a.data().data();
  const double* B = b.data().data();
  double* O = out.mutable_data().data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t l = 0; l < k; ++l) {
      double av = A[i * k + l];
      const double* brow = B + l * n;
      double* orow = O + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  out.validate_finite("matmul");
  return out;
}

Tensor dense_matmul_tn(const Tensor& a, const Tensor& b) {
  std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  if (b.rows() != k)
    throw ShapeError("matmul_tn: " + a.shape_str() + " x " + b.shape_str());
  Tensor out({m, n});
  const double* A = a.data().data();
  const double* B = b.data().data();
  double* O = out.mutable_data().data();
  for (std::size_t l = 0; l < k; ++l)
    for (std::size_t i = 0; i < m; ++i) {
      double av = A[l * m + i];
      const double* brow = B + l * n;
      double* orow = O + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  out.validate_finite("matmul_tn");
  return out;
}

Tensor dense_matmul_nt(const Tensor& a, const Tensor& b) {
  std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k)
    throw ShapeError("matmul_nt: " + a.shape_str() + " x " + b.shape_str());
  Tensor out({m, n});
  const double* A = a.data().data();
  const double* B = b.data().data();
  double* O = out.mutable_data().data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double* arow = A + i * k;
      const double* brow = B + j * k;
      double acc = 0.0;
      for (std::size_t l = 0; l < k; ++l) acc += arow[l] * brow[l];
      O[i * n + j] = acc;
    }
  out.validate_finite("matmul_nt");
  return out;
}

Tensor softmax_rows_value(const Tensor& a) {
  std::size_t n = a.rows(), c = a.cols();
  Tensor out({n, c});
  const double* X = a.data().data();
  double* O = out.mutable_data().data();
  for (std::size_t i = 0; i < n; ++i) {
    const double* x = X + i * c;
    double mx = x[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, x[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      O[i * c + j] = std::exp(x[j] - mx);
      z += O[i * c + j];
    }
    for (std::size_t j = 0; j < c; ++j) O[i * c + j] /= z;
  }
  return out;
}

// ------------------------------------------------------------- matmul

Var matmul(Var a, Var b) {
  Tape& t = *a.tape;
  if (a.tape != b.tape) throw ContractError("matmul: operands on different tapes");
  Tensor out = dense_matmul(a.value(), b.value());
  return t.emit(std::move(out), {a.id, b.id},
                [a, b](Tape& tp, std::size_t out_id) {
                  const Tensor& g = tp.grad_slot(out_id);
                  if (tp.wants_grad(a.id)) {
                    Tensor ga = dense_matmul_nt(g, tp.value(b.id));
                    Tensor& slot = tp.grad_slot(a.id);
                    for (std::size_t i = 0; i < slot.size(); ++i) slot[i] += ga[i];
                  }
                  if (tp.wants_grad(b.id)) {
                    Tensor gb = dense_matmul_tn(tp.value(a.id), g);
                    Tensor& slot = tp.grad_slot(b.id);
                    for (std::size_t i = 0; i < slot.size(); ++i) slot[i] += gb[i];
                  }
                });
}

Var spmm(const CsrMatrix& m, Var x) {
  Tape& t = *x.tape;
  Tensor out = m.spmm(x.value());
  const CsrMatrix* mp = &m;
  return t.emit(std::move(out), {x.id},
                [mp, x](Tape& tp, std::size_t out_id) {
                  if (!tp.wants_grad(x.id)) return;
                  Tensor gx = mp->transpose().spmm(tp.grad_slot(out_id));
                  Tensor& slot = tp.grad_slot(x.id);
                  for (std::size_t i = 0; i < slot.size(); ++i) slot[i] += gx[i];
                });
}

// -------------------------------------------------- binary elementwise

namespace {

enum class Bcast { Same, RowSmallB, RowSmallA, ScalarB, ScalarA };

Bcast resolve_bcast(const Tensor& a, const Tensor& b, const char* op) {
  if (a.same_shape(b)) return Bcast::Same;
  if (b.size() == 1) return Bcast::ScalarB;
  if (a.size() == 1) return Bcast::ScalarA;
  if (a.ndim() == 2 && b.rows() == 1 && b.cols() == a.cols())
    return Bcast::RowSmallB;
  if (b.ndim() == 2 && a.rows() == 1 && a.cols() == b.cols())
    return Bcast::RowSmallA;
  throw ShapeError(std::string(op) + ": shapes " + a.shape_str() + " and " +
                   b.shape_str() + " are not broadcastable");
}

// out has the big operand's shape; small index maps through mod/zero.
template <typename F>
Tensor bcast_apply(const Tensor& a, const Tensor& b, Bcast k, F f) {
  const Tensor& big = (k == Bcast::RowSmallA || k == Bcast::ScalarA) ? b : a;
  Tensor out(big.shape());
  std::size_t n = big.size();
  std::size_t c = big.ndim() == 2 ? big.cols() : big.size();
  double* O = out.mutable_data().data();
  const double* A = a.data().data();
  const double* B = b.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    double av = 0.0, bv = 0.0;
    switch (k) {
      case Bcast::Same: av = A[i]; bv = B[i]; break;
      case Bcast::RowSmallB: av = A[i]; bv = B[i % c]; break;
      case Bcast::RowSmallA: av = A[i % c]; bv = B[i]; break;
      case Bcast::ScalarB: av = A[i]; bv = B[0]; break;
      case Bcast::ScalarA: av = A[0]; bv = B[i]; break;
    }
    O[i] = f(av, bv);
  }
  return out;
}

// Accumulates dL/dside into slot, reducing over broadcast positions.
void bcast_accumulate(Tensor& slot, const Tensor& contrib, bool small,
                      Bcast k) {
  if (!small || k == Bcast::Same) {
    for (std::size_t i = 0; i < slot.size(); ++i) slot[i] += contrib[i];
    return;
  }
  if (k == Bcast::ScalarA || k == Bcast::ScalarB) {
    double s = 0.0;
    for (std::size_t i = 0; i < contrib.size(); ++i) s += contrib[i];
    slot[0] += s;
    return;
  }
  std::size_t c = slot.size();
  for (std::size_t i = 0; i < contrib.size(); ++i) slot[i % c] += contrib[i];
}

template <typename F, typename DA, typename DB>
Var binary_op(const char* name, Var a, Var b, F f, DA dfda, DB dfdb) {
  if (a.tape != b.tape)
    throw ContractError(std::string(name) + ": operands on different tapes");
  Tape& t = *a.tape;
  Bcast k = resolve_bcast(a.value(), b.value(), name);
  Tensor out = bcast_apply(a.value(), b.value(), k, f);
  out.validate_finite(name);
  return t.emit(
      std::move(out), {a.id, b.id},
      [a, b, k, dfda, dfdb](Tape& tp, std::size_t out_id) {
        const Tensor& g = tp.grad_slot(out_id);
        const Tensor& av = tp.value(a.id);
        const Tensor& bv = tp.value(b.id);
        bool a_small = (k == Bcast::RowSmallA || k == Bcast::ScalarA);
        if (tp.wants_grad(a.id)) {
          Tensor contrib = bcast_apply(av, bv, k, dfda);
          for (std::size_t i = 0; i < contrib.size(); ++i) contrib[i] *= g[i];
          bcast_accumulate(tp.grad_slot(a.id), contrib, a_small, k);
        }
        if (tp.wants_grad(b.id)) {
          Tensor contrib = bcast_apply(av, bv, k, dfdb);
          for (std::size_t i = 0; i < contrib.size(); ++i) contrib[i] *= g[i];
          bcast_accumulate(tp.grad_slot(b.id), contrib, !a_small, k);
        }
      });
}

}  // namespace

Var add(Var a, Var b) {
  return binary_op(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
  return binary_op(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
  return binary_op(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

// ------------------------------------------------------ unary pointwise

namespace {

template <typename F, typename D>
Var unary_op(Var a, F f, D dfdx_from_xy) {
  Tape& t = *a.tape;
  const Tensor& x = a.value();
  std::vector<double> vals(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) vals[i] = f(x[i]);
  Tensor out(x.shape(), std::move(vals));
  return t.emit(std::move(out), {a.id},
                [a, dfdx_from_xy](Tape& tp, std::size_t out_id) {
                  if (!tp.wants_grad(a.id)) return;
                  const Tensor& g = tp.grad_slot(out_id);
                  const Tensor& x = tp.value(a.id);
                  const Tensor& y = tp.value(out_id);
                  Tensor& slot = tp.grad_slot(a.id);
                  for (std::size_t i = 0; i < x.size(); ++i)
                    slot[i] += g[i] * dfdx_from_xy(x[i], y[i]);
                });
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var sigmoid(Var a) {
  return unary_op(a, stable_sigmoid,
                  [](double, double y) { return y * (1.0 - y); });
}

Var relu(Var a) {
  return unary_op(a, [](double x) { return x > 0.0 ? x : 0.0; },
                  [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var leaky_relu(Var a, double slope) {
  return unary_op(a, [slope](double x) { return x > 0.0 ? x : slope * x; },
                  [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

Var log_op(Var a) {
  for (double v : a.value().data())
    if (v <= 0.0) throw NumericError("log of non-positive value");
  return unary_op(a, [](double x) { return std::log(x); },
                  [](double x, double) { return 1.0 / x; });
}

Var exp_op(Var a) {
  return unary_op(a, [](double x) { return std::exp(x); },
                  [](double, double y) { return y; });
}

Var scale(Var a, double s) {
  return unary_op(a, [s](double x) { return s * x; },
                  [s](double, double) { return s; });
}

Var add_const(Var a, double c) {
  return unary_op(a, [c](double x) { return x + c; },
                  [](double, double) { return 1.0; });
}

// ------------------------------------------------------------- softmax

Var softmax_rows(Var a) {
  Tape& t = *a.tape;
  Tensor out = softmax_rows_value(a.value());
  return t.emit(std::move(out), {a.id}, [a](Tape& tp, std::size_t out_id) {
    if (!tp.wants_grad(a.id)) return;
    const Tensor& g = tp.grad_slot(out_id);
    const Tensor& y = tp.value(out_id);
    Tensor& slot = tp.grad_slot(a.id);
    std::size_t n = y.rows(), c = y.cols();
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += g[i * c + j] * y[i * c + j];
      for (std::size_t j = 0; j < c; ++j)
        slot[i * c + j] += y[i * c + j] * (g[i * c + j] - dot);
    }
  });
}

// ----------------------------------------------------- shape movement

Var concat_cols(Var a, Var b) {
  if (a.tape != b.tape)
    throw ContractError("concat_cols: operands on different tapes");
  Tape& t = *a.tape;
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.ndim() != 2 || y.ndim() != 2 || x.rows() != y.rows())
    throw ShapeError("concat_cols: " + x.shape_str() + " vs " + y.shape_str());
  std::size_t n = x.rows(), ca = x.cols(), cb = y.cols();
  Tensor out({n, ca + cb});
  double* O = out.mutable_data().data();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < ca; ++j) O[i * (ca + cb) + j] = x(i, j);
    for (std::size_t j = 0; j < cb; ++j) O[i * (ca + cb) + ca + j] = y(i, j);
  }
  return t.emit(std::move(out), {a.id, b.id},
                [a, b, n, ca, cb](Tape& tp, std::size_t out_id) {
                  const Tensor& g = tp.grad_slot(out_id);
                  if (tp.wants_grad(a.id)) {
                    Tensor& sa = tp.grad_slot(a.id);
                    for (std::size_t i = 0; i < n; ++i)
                      for (std::size_t j = 0; j < ca; ++j)
                        sa[i * ca + j] += g[i * (ca + cb) + j];
                  }
                  if (tp.wants_grad(b.id)) {
                    Tensor& sb = tp.grad_slot(b.id);
                    for (std::size_t i = 0; i < n; ++i)
                      for (std::size_t j = 0; j < cb; ++j)
                        sb[i * cb + j] += g[i * (ca + cb) + ca + j];
                  }
                });
}

Var gather_rows(Var a, const std::vector<std::size_t>& idx) {
  Tape& t = *a.tape;
  const Tensor& x = a.value();
  if (x.ndim() != 2) throw ShapeError("gather_rows: need 2-d input");
  std::size_t c = x.cols();
  Tensor out({idx.size(), c});
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] >= x.rows()) throw ShapeError("gather_rows: index out of range");
    for (std::size_t j = 0; j < c; ++j) out(k, j) = x(idx[k], j);
  }
  return t.emit(std::move(out), {a.id},
                [a, idx, c](Tape& tp, std::size_t out_id) {
                  if (!tp.wants_grad(a.id)) return;
                  const Tensor& g = tp.grad_slot(out_id);
                  Tensor& slot = tp.grad_slot(a.id);
                  for (std::size_t k = 0; k < idx.size(); ++k)
                    for (std::size_t j = 0; j < c; ++j)
                      slot[idx[k] * c + j] += g[k * c + j];
                });
}

Var pair_dot(Var z, const std::vector<std::size_t>& i,
             const std::vector<std::size_t>& j) {
  Tape& t = *z.tape;
  const Tensor& x = z.value();
  if (x.ndim() != 2) throw ShapeError("pair_dot: need 2-d input");
  if (i.size() != j.size()) throw ShapeError("pair_dot: index lists differ");
  std::size_t d = x.cols();
  std::vector<double> vals(i.size());
  for (std::size_t k = 0; k < i.size(); ++k) {
    if (i[k] >= x.rows() || j[k] >= x.rows())
      throw ShapeError("pair_dot: index out of range");
    double acc = 0.0;
    for (std::size_t l = 0; l < d; ++l) acc += x(i[k], l) * x(j[k], l);
    vals[k] = acc;
  }
  Tensor out({i.size()}, std::move(vals));
  return t.emit(std::move(out), {z.id},
                [z, i, j, d](Tape& tp, std::size_t out_id) {
                  if (!tp.wants_grad(z.id)) return;
                  const Tensor& g = tp.grad_slot(out_id);
                  const Tensor& x = tp.value(z.id);
                  Tensor& slot = tp.grad_slot(z.id);
                  for (std::size_t k = 0; k < i.size(); ++k) {
                    double gk = g[k];
                    for (std::size_t l = 0; l < d; ++l) {
                      slot[i[k] * d + l] += gk * x(j[k], l);
                      slot[j[k] * d + l] += gk * x(i[k], l);
                    }
                  }
                });
}

// ---------------------------------------------------------- reductions

Var sum(Var a) {
  Tape& t = *a.tape;
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return t.emit(Tensor::scalar(s), {a.id}, [a](Tape& tp, std::size_t out_id) {
    if (!tp.wants_grad(a.id)) return;
    double g = tp.grad_slot(out_id)[0];
    Tensor& slot = tp.grad_slot(a.id);
    for (std::size_t k = 0; k < slot.size(); ++k) slot[k] += g;
  });
}

Var mean(Var a) {
  Tape& t = *a.tape;
  std::size_t n = a.value().size();
  if (n == 0) throw ContractError("mean of empty tensor");
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return t.emit(Tensor::scalar(s / static_cast<double>(n)), {a.id},
                [a, n](Tape& tp, std::size_t out_id) {
                  if (!tp.wants_grad(a.id)) return;
                  double g = tp.grad_slot(out_id)[0] / static_cast<double>(n);
                  Tensor& slot = tp.grad_slot(a.id);
                  for (std::size_t k = 0; k < slot.size(); ++k) slot[k] += g;
                });
}

// ------------------------------------------------------------- dropout

Var dropout(Var a, double rate, std::mt19937_64& rng, bool training) {
  if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout rate must be in [0, 1)");
  if (!training || rate == 0.0) return a;
  Tape& t = *a.tape;
  const Tensor& x = a.value();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double keep = 1.0 - rate;
  auto mask = std::make_shared<std::vector<double>>(x.size());
  std::vector<double> vals(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    (*mask)[k] = u(rng) >= rate ? 1.0 / keep : 0.0;
    vals[k] = x[k] * (*mask)[k];
  }
  Tensor out(x.shape(), std::move(vals));
  return t.emit(std::move(out), {a.id},
                [a, mask](Tape& tp, std::size_t out_id) {
                  if (!tp.wants_grad(a.id)) return;
                  const Tensor& g = tp.grad_slot(out_id);
                  Tensor& slot = tp.grad_slot(a.id);
                  for (std::size_t k = 0; k < slot.size(); ++k)
                    slot[k] += g[k] * (*mask)[k];
                });
}

// -------------------------------------------------------------- losses

Var cross_entropy_mean(Var logits, const std::vector<int>& labels,
                       const std::vector<std::size_t>& idx) {
  Tape& t = *logits.tape;
  const Tensor& x = logits.value();
  if (x.ndim() != 2) throw ShapeError("cross_entropy: need 2-d logits");
  if (labels.size() != x.rows())
    throw ShapeError("cross_entropy: labels length != logit rows");
  if (idx.empty()) throw ContractError("cross_entropy: empty index set");
  std::size_t c = x.cols();
  double loss = 0.0;
  for (std::size_t r : idx) {
    if (r >= x.rows()) throw ShapeError("cross_entropy: index out of range");
    int y = labels[r];
    if (y < 0 || static_cast<std::size_t>(y) >= c)
      throw IngestError("cross_entropy: label " + std::to_string(y) +
                        " outside [0, " + std::to_string(c) + ")");
    double mx = x(r, 0);
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, x(r, j));
    double lse = 0.0;
    for (std::size_t j = 0; j < c; ++j) lse += std::exp(x(r, j) - mx);
    loss += std::log(lse) + mx - x(r, static_cast<std::size_t>(y));
  }
  loss /= static_cast<double>(idx.size());
  return t.emit(
      Tensor::scalar(loss), {logits.id},
      [logits, labels, idx, c](Tape& tp, std::size_t out_id) {
        if (!tp.wants_grad(logits.id)) return;
        double g = tp.grad_slot(out_id)[0] / static_cast<double>(idx.size());
        const Tensor& x = tp.value(logits.id);
        Tensor& slot = tp.grad_slot(logits.id);
        for (std::size_t r : idx) {
          double mx = x(r, 0);
          for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, x(r, j));
          double lse = 0.0;
          for (std::size_t j = 0; j < c; ++j) lse += std::exp(x(r, j) - mx);
          for (std::size_t j = 0; j < c; ++j) {
            double p = std::exp(x(r, j) - mx) / lse;
            double ind = (static_cast<std::size_t>(labels[r]) == j) ? 1.0 : 0.0;
            slot[r * c + j] += g * (p - ind);
          }
        }
      });
}

Var bce_mean(Var probs, const std::vector<double>& targets) {
  Tape& t = *probs.tape;
  const Tensor& p = probs.value();
  if (p.size() != targets.size())
    throw ShapeError("bce: probability/target length mismatch");
  if (targets.empty()) throw ContractError("bce: empty target set");
  constexpr double kLo = 1e-12;
  constexpr double kHi = 1.0 - 1e-12;
  double loss = 0.0;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    double tv = targets[k];
    if (tv != 0.0 && tv != 1.0)
      throw ContractError("bce: targets must be 0 or 1");
    double pc = std::clamp(p[k], kLo, kHi);
    loss -= tv * std::log(pc) + (1.0 - tv) * std::log(1.0 - pc);
  }
  loss /= static_cast<double>(targets.size());
  return t.emit(
      Tensor::scalar(loss), {probs.id},
      [probs, targets](Tape& tp, std::size_t out_id) {
        if (!tp.wants_grad(probs.id)) return;
        double g = tp.grad_slot(out_id)[0] / static_cast<double>(targets.size());
        const Tensor& p = tp.value(probs.id);
        Tensor& slot = tp.grad_slot(probs.id);
        for (std::size_t k = 0; k < targets.size(); ++k) {
          double pv = p[k];
          if (pv <= kLo || pv >= kHi) continue;  // clamp region: flat
          slot[k] += g * (pv - targets[k]) / (pv * (1.0 - pv));
        }
      });
}

// ---------------------------------------------------------- segment ops

Var gather_pair_sum(Var a, Var b, const std::vector<std::size_t>& src,
                    const std::vector<std::size_t>& dst) {
  if (a.tape != b.tape)
    throw ContractError("gather_pair_sum: operands on different tapes");
  Tape& t = *a.tape;
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.ndim() != 2 || y.ndim() != 2 || x.cols() != y.cols())
    throw ShapeError("gather_pair_sum: " + x.shape_str() + " vs " + y.shape_str());
  if (src.size() != dst.size())
    throw ShapeError("gather_pair_sum: edge lists differ in length");
  std::size_t h = x.cols();
  Tensor out({src.size(), h});
  for (std::size_t k = 0; k < src.size(); ++k) {
    if (src[k] >= x.rows() || dst[k] >= y.rows())
      throw ShapeError("gather_pair_sum: node index out of range");
    for (std::size_t j = 0; j < h; ++j)
      out(k, j) = x(src[k], j) + y(dst[k], j);
  }
  return t.emit(std::move(out), {a.id, b.id},
                [a, b, src, dst, h](Tape& tp, std::size_t out_id) {
                  const Tensor& g = tp.grad_slot(out_id);
                  if (tp.wants_grad(a.id)) {
                    Tensor& sa = tp.grad_slot(a.id);
                    for (std::size_t k = 0; k < src.size(); ++k)
                      for (std::size_t j = 0; j < h; ++j)
                        sa[src[k] * h + j] += g[k * h + j];
                  }
                  if (tp.wants_grad(b.id)) {
                    Tensor& sb = tp.grad_slot(b.id);
                    for (std::size_t k = 0; k < dst.size(); ++k)
                      for (std::size_t j = 0; j < h; ++j)
                        sb[dst[k] * h + j] += g[k * h + j];
                  }
                });
}

Var segment_softmax(Var e, const std::vector<std::size_t>& seg_indptr) {
  Tape& t = *e.tape;
  const Tensor& x = e.value();
  if (x.ndim() != 2) throw ShapeError("segment_softmax: need 2-d input");
  if (seg_indptr.empty() || seg_indptr.back() != x.rows())
    throw ShapeError("segment_softmax: segment pointers do not cover rows");
  std::size_t h = x.cols();
  Tensor out({x.rows(), h});
  for (std::size_t s = 0; s + 1 < seg_indptr.size(); ++s) {
    std::size_t lo = seg_indptr[s], hi = seg_indptr[s + 1];
    if (lo > hi || hi > x.rows())
      throw ShapeError("segment_softmax: bad segment bounds");
    if (lo == hi) continue;
    for (std::size_t j = 0; j < h; ++j) {
      double mx = x(lo, j);
      for (std::size_t k = lo + 1; k < hi; ++k) mx = std::max(mx, x(k, j));
      double z = 0.0;
      for (std::size_t k = lo; k < hi; ++k) {
        out(k, j) = std::exp(x(k, j) - mx);
        z += out(k, j);
      }
      for (std::size_t k = lo; k < hi; ++k) out(k, j) /= z;
    }
  }
  return t.emit(std::move(out), {e.id},
                [e, seg_indptr, h](Tape& tp, std::size_t out_id) {
                  if (!tp.wants_grad(e.id)) return;
                  const Tensor& g = tp.grad_slot(out_id);
                  const Tensor& y = tp.value(out_id);
                  Tensor& slot = tp.grad_slot(e.id);
                  for (std::size_t s = 0; s + 1 < seg_indptr.size(); ++s) {
                    std::size_t lo = seg_indptr[s], hi = seg_indptr[s + 1];
                    for (std::size_t j = 0; j < h; ++j) {
                      double dot = 0.0;
                      for (std::size_t k = lo; k < hi; ++k)
                        dot += g[k * h + j] * y[k * h + j];
                      for (std::size_t k = lo; k < hi; ++k)
                        slot[k * h + j] += y[k * h + j] * (g[k * h + j] - dot);
                    }
                  }
                });
}

Var attention_aggregate(Var alpha, Var x, const std::vector<std::size_t>& src,
                        const std::vector<std::size_t>& seg_indptr,
                        std::size_t heads) {
  if (alpha.tape != x.tape)
    throw ContractError("attention_aggregate: operands on different tapes");
  Tape& t = *alpha.tape;
  const Tensor& av = alpha.value();
  const Tensor& xv = x.value();
  if (av.ndim() != 2 || av.cols() != heads)
    throw ShapeError("attention_aggregate: alpha must be [edges x heads]");
  if (xv.ndim() != 2 || xv.cols() % heads != 0)
    throw ShapeError("attention_aggregate: feature cols not divisible by heads");
  if (av.rows() != src.size())
    throw ShapeError("attention_aggregate: alpha rows != edge count");
  std::size_t n = seg_indptr.size() - 1;
  std::size_t d = xv.cols() / heads;
  Tensor out({n, heads * d});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = seg_indptr[i]; k < seg_indptr[i + 1]; ++k)
      for (std::size_t hh = 0; hh < heads; ++hh) {
        double a = av(k, hh);
        for (std::size_t l = 0; l < d; ++l)
          out(i, hh * d + l) += a * xv(src[k], hh * d + l);
      }
  out.validate_finite("attention_aggregate");
  return t.emit(
      std::move(out), {alpha.id, x.id},
      [alpha, x, src, seg_indptr, heads, d](Tape& tp, std::size_t out_id) {
        const Tensor& g = tp.grad_slot(out_id);
        const Tensor& av = tp.value(alpha.id);
        const Tensor& xv = tp.value(x.id);
        std::size_t n = seg_indptr.size() - 1;
        std::size_t hd = heads * d;
        bool wa = tp.wants_grad(alpha.id);
        bool wx = tp.wants_grad(x.id);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t k = seg_indptr[i]; k < seg_indptr[i + 1]; ++k)
            for (std::size_t hh = 0; hh < heads; ++hh) {
              if (wa) {
                double acc = 0.0;
                for (std::size_t l = 0; l < d; ++l)
                  acc += g[i * hd + hh * d + l] * xv(src[k], hh * d + l);
                tp.grad_slot(alpha.id)[k * heads + hh] += acc;
              }
              if (wx) {
                double a = av(k, hh);
                Tensor& sx = tp.grad_slot(x.id);
                for (std::size_t l = 0; l < d; ++l)
                  sx[src[k] * hd + hh * d + l] += a * g[i * hd + hh * d + l];
              }
            }
      });
}

Var block_dot(Var x, Var w, std::size_t heads) {
  if (x.tape != w.tape)
    throw ContractError("block_dot: operands on different tapes");
  Tape& t = *x.tape;
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  if (xv.ndim() != 2 || xv.cols() % heads != 0)
    throw ShapeError("block_dot: feature cols not divisible by heads");
  if (wv.size() != xv.cols())
    throw ShapeError("block_dot: weight size must equal feature cols");
  std::size_t n = xv.rows();
  std::size_t d = xv.cols() / heads;
  Tensor out({n, heads});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t hh = 0; hh < heads; ++hh) {
      double acc = 0.0;
      for (std::size_t l = 0; l < d; ++l)
        acc += xv(i, hh * d + l) * wv[hh * d + l];
      out(i, hh) = acc;
    }
  out.validate_finite("block_dot");
  return t.emit(std::move(out), {x.id, w.id},
                [x, w, heads, d](Tape& tp, std::size_t out_id) {
                  const Tensor& g = tp.grad_slot(out_id);
                  const Tensor& xv = tp.value(x.id);
                  const Tensor& wv = tp.value(w.id);
                  std::size_t n = xv.rows();
                  std::size_t hd = heads * d;
                  if (tp.wants_grad(x.id)) {
                    Tensor& sx = tp.grad_slot(x.id);
                    for (std::size_t i = 0; i < n; ++i)
                      for (std::size_t hh = 0; hh < heads; ++hh)
                        for (std::size_t l = 0; l < d; ++l)
                          sx[i * hd + hh * d + l] +=
                              g[i * heads + hh] * wv[hh * d + l];
                  }
                  if (tp.wants_grad(w.id)) {
                    Tensor& sw = tp.grad_slot(w.id);
                    for (std::size_t i = 0; i < n; ++i)
                      for (std::size_t hh = 0; hh < heads; ++hh)
                        for (std::size_t l = 0; l < d; ++l)
                          sw[hh * d + l] +=
                              g[i * heads + hh] * xv[i * hd + hh * d + l];
                  }
                });
}

Var block_mean(Var x, std::size_t heads) {
  Tape& t = *x.tape;
  const Tensor& xv = x.value();
  if (xv.ndim() != 2 || xv.cols() % heads != 0)
    throw ShapeError("block_mean: feature cols not divisible by heads");
  std::size_t n = xv.rows();
  std::size_t d = xv.cols() / heads;
  Tensor out({n, d});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t hh = 0; hh < heads; ++hh)
      for (std::size_t l = 0; l < d; ++l)
        out(i, l) += xv(i, hh * d + l) / static_cast<double>(heads);
  return t.emit(std::move(out), {x.id},
                [x, heads, d](Tape& tp, std::size_t out_id) {
                  if (!tp.wants_grad(x.id)) return;
                  const Tensor& g = tp.grad_slot(out_id);
                  Tensor& sx = tp.grad_slot(x.id);
                  std::size_t n = g.rows();
                  for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t hh = 0; hh < heads; ++hh)
                      for (std::size_t l = 0; l < d; ++l)
                        sx[i * heads * d + hh * d + l] +=
                            g[i * d + l] / static_cast<double>(heads);
                });
}

}  // namespace gfairhint
