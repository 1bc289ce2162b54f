#include "gfairhint/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "gfairhint/error.hpp"

namespace gfairhint {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (shape_product(shape_) != data_.size()) {
    throw ShapeError("tensor shape " + shape_str() + " does not match " +
                     std::to_string(data_.size()) + " values");
  }
  validate_finite("construction");
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::full(std::vector<std::size_t> shape, double v) {
  Tensor t(std::move(shape));
  for (double& x : t.data_) x = v;
  t.validate_finite("construction");
  return t;
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  std::size_t r = rows.size();
  std::size_t c = r > 0 ? rows.begin()->size() : 0;
  std::vector<double> values;
  values.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("from_rows: ragged rows");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(values));
}

std::size_t Tensor::rows() const { return ndim() >= 2 ? shape_[0] : 1; }

std::size_t Tensor::cols() const {
  if (ndim() >= 2) return shape_[1];
  return ndim() == 1 ? shape_[0] : 0;
}

double& Tensor::operator()(std::size_t i, std::size_t j) { return data_[i * cols() + j]; }

double Tensor::operator()(std::size_t i, std::size_t j) const { return data_[i * cols() + j]; }

std::span<const double> Tensor::row(std::size_t i) const {
  return std::span<const double>(data_).subspan(i * cols(), cols());
}

double Tensor::item() const {
  if (size() != 1) {
    throw ContractError("item() requires a scalar tensor, got shape " + shape_str());
  }
  return data_[0];
}

void Tensor::validate_finite(const std::string& context) const {
  for (double v : data_) {
    if (!std::isfinite(v)) {
      throw NumericError("non-finite value in tensor (" + context + ", shape " + shape_str() + ")");
    }
  }
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i > 0) os << "x";
    os << shape_[i];
  }
  os << "]";
  return os.str();
}

}  // namespace gfairhint
