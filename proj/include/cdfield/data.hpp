#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cdfield {

// Dense row-major N x p table of observations on the unit cube.
class DataMatrix {
 public:
  DataMatrix() = default;
  DataMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), values_(rows * cols) {}
  DataMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::span<const double> row(std::size_t d) const { return {values_.data() + d * cols_, cols_}; }
  std::span<double> row(std::size_t d) { return {values_.data() + d * cols_, cols_}; }

  double operator()(std::size_t d, std::size_t i) const { return values_[d * cols_ + i]; }
  double& operator()(std::size_t d, std::size_t i) { return values_[d * cols_ + i]; }

  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

}  // namespace cdfield
