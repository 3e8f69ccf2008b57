// Copyright 2026 The coopgan Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "coopgan/array.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "coopgan/errors.hpp"

namespace coopgan {

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

Array::Array() : shape_{1}, data_(1, 0.0) {}

Array::Array(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.empty()) throw ShapeError("array shape must have at least one dimension");
  for (auto d : shape_) {
    if (d == 0) throw ShapeError("array dimensions must be positive, got " + shape_str(shape_));
  }
  if (shape_size(shape_) != data_.size()) {
    throw ShapeError("shape " + shape_str(shape_) + " does not match " + std::to_string(data_.size()) +
                     " values");
  }
}

Array Array::zeros(Shape shape) { return filled(std::move(shape), 0.0); }

Array Array::filled(Shape shape, double value) {
  auto n = shape_size(shape);
  return Array(std::move(shape), std::vector<double>(n, value));
}

Array Array::scalar(double value) { return Array({1}, {value}); }

Array Array::matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
  return Array({rows, cols}, std::move(data));
}

Array Array::row(std::vector<double> data) {
  auto n = data.size();
  return Array({1, n}, std::move(data));
}

double Array::item() const {
  if (!is_scalar()) throw ShapeError("item() on non-scalar array " + shape_str(shape_));
  return data_[0];
}

bool Array::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Array Array::reshaped(Shape shape) const { return Array(std::move(shape), data_); }

bool Array::identical(const Array& other) const {
  return shape_ == other.shape_ &&
         std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(double)) == 0;
}

}  // namespace coopgan
