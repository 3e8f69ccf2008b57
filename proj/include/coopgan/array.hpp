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

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace coopgan {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);
std::size_t shape_size(const Shape& shape);

// Dense row-major array of doubles. Immutable once constructed: every
// operation that "changes" values builds a new Array.
class Array {
 public:
  Array();
  Array(Shape shape, std::vector<double> data);

  static Array zeros(Shape shape);
  static Array filled(Shape shape, double value);
  static Array scalar(double value);
  static Array matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  static Array row(std::vector<double> data);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  std::size_t rank() const { return shape_.size(); }
  // Rank-1 arrays are treated as a single row.
  std::size_t rows() const { return rank() == 1 ? 1 : shape_[0]; }
  std::size_t cols() const { return shape_.back(); }
  bool is_scalar() const { return data_.size() == 1; }

  std::span<const double> data() const { return data_; }
  const std::vector<double>& vec() const { return data_; }
  double operator[](std::size_t i) const { return data_[i]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  double item() const;

  bool all_finite() const;
  Array reshaped(Shape shape) const;

  // Bitwise equality of shape and values.
  bool identical(const Array& other) const;

 private:
  Shape shape_;
  std::vector<double> data_;
};

}  // namespace coopgan
