// Copyright 2026 The mbcl Authors.
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

#include "mbcl/tensor.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mbcl/errors.h"

namespace mbcl {

std::string ShapeToString(const Shape& shape) {
  std::ostringstream out;
  out << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) out << "x";
    out << shape[i];
  }
  out << "]";
  return out.str();
}

size_t ShapeSize(const Shape& shape) {
  size_t n = 1;
  for (size_t extent : shape) n *= extent;
  return n;
}

namespace {

void ValidateShape(const Shape& shape) {
  if (shape.empty()) throw DimensionError("tensor shape must have rank >= 1");
  for (size_t extent : shape) {
    if (extent == 0) {
      throw DimensionError("tensor extents must be positive, got " +
                           ShapeToString(shape));
    }
  }
}

}  // namespace

Tensor::Tensor(Shape shape, real fill) : shape_(std::move(shape)) {
  ValidateShape(shape_);
  data_.assign(ShapeSize(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<real> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  ValidateShape(shape_);
  if (ShapeSize(shape_) != data_.size()) {
    throw DimensionError("shape " + ShapeToString(shape_) + " holds " +
                         std::to_string(ShapeSize(shape_)) + " values, got " +
                         std::to_string(data_.size()));
  }
}

Tensor Tensor::Scalar(real value) { return Tensor({1}, {value}); }

Tensor Tensor::Vector(std::vector<real> values) {
  const size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::Matrix(size_t rows, size_t cols, std::vector<real> values) {
  return Tensor({rows, cols}, std::move(values));
}

Tensor Tensor::Matrix(std::initializer_list<std::initializer_list<real>> rows) {
  const size_t n_rows = rows.size();
  const size_t n_cols = n_rows ? rows.begin()->size() : 0;
  std::vector<real> values;
  values.reserve(n_rows * n_cols);
  for (const auto& r : rows) {
    if (r.size() != n_cols) throw DimensionError("ragged matrix literal");
    values.insert(values.end(), r.begin(), r.end());
  }
  return Tensor({n_rows, n_cols}, std::move(values));
}

size_t Tensor::rows() const { return shape_.empty() ? 1 : shape_.front(); }

size_t Tensor::cols() const { return shape_.empty() ? 1 : shape_.back(); }

void Tensor::Fill(real value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](real x) { return std::isfinite(x); });
}

void Tensor::CheckFinite(const std::string& what) const {
  for (size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw NumericError("non-finite value in " + what + " at flat index " +
                         std::to_string(i));
    }
  }
}

}  // namespace mbcl
