#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace gfairhint {

/// Dense row-major tensor of doubles. Values are validated to be finite at
/// construction; a tensor that exists is a tensor you can trust numerically.
class Tensor {
 public:
  Tensor() = default;

  /// Zero-filled tensor of the given shape.
  explicit Tensor(std::vector<std::size_t> shape);

  /// Tensor with explicit values; throws ShapeError if sizes disagree and
  /// NumericError if any value is NaN or Inf.
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);

  static Tensor scalar(double v);
  static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<std::size_t> shape, double v);

  /// 2-d convenience: rows of equal length.
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t ndim() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }

  // 2-d accessors; rows()/cols() treat a 1-d tensor as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  double& operator()(std::size_t i, std::size_t j);
  double operator()(std::size_t i, std::size_t j) const;
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<const double> data() const { return data_; }
  std::span<double> mutable_data() { return data_; }
  std::span<const double> row(std::size_t i) const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool empty() const { return data_.empty(); }

  /// Scalar extraction; throws ContractError unless size() == 1.
  double item() const;

  /// Re-checks finiteness after in-place mutation through mutable_data().
  void validate_finite(const std::string& context) const;

  std::string shape_str() const;

  bool operator==(const Tensor& other) const {
    return shape_ == other.shape_ && data_ == other.data_;
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

}  // namespace gfairhint
