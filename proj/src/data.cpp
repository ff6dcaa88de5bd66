#include "cdfield/data.hpp"

#include <string>

#include "cdfield/error.hpp"

namespace cdfield {

DataMatrix::DataMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw Error(ErrorKind::Argument, "data matrix of " + std::to_string(rows) + " x " +
                                         std::to_string(cols) + " given " +
                                         std::to_string(values_.size()) + " values");
  }
}

}  // namespace cdfield
