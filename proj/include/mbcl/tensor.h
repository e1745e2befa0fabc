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

#ifndef MBCL_TENSOR_H_
#define MBCL_TENSOR_H_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace mbcl {

// Scalar type of every tensor. Gradient verification is only meaningful in
// the default 64-bit build.
#ifdef MBCL_FLOAT32
using real = float;
#else
using real = double;
#endif

using Shape = std::vector<size_t>;

std::string ShapeToString(const Shape& shape);
size_t ShapeSize(const Shape& shape);

// Dense row-major array. Rank 1 tensors are treated as row vectors by the
// matrix helpers (rows() == 1 is NOT assumed; rows() returns shape[0]).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, real fill = 0);
  Tensor(Shape shape, std::vector<real> data);

  static Tensor Scalar(real value);
  static Tensor Vector(std::vector<real> values);
  static Tensor Matrix(size_t rows, size_t cols, std::vector<real> values);
  static Tensor Matrix(std::initializer_list<std::initializer_list<real>> rows);

  const Shape& shape() const { return shape_; }
  size_t rank() const { return shape_.size(); }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Leading extent; 1 for a scalar.
  size_t rows() const;
  // Trailing extent; 1 for a scalar.
  size_t cols() const;

  real* data() { return data_.data(); }
  const real* data() const { return data_.data(); }
  std::span<real> values() { return data_; }
  std::span<const real> values() const { return data_; }
  std::vector<real>& storage() { return data_; }
  const std::vector<real>& storage() const { return data_; }

  real& operator[](size_t i) { return data_[i]; }
  real operator[](size_t i) const { return data_[i]; }
  real& at(size_t r, size_t c) { return data_[r * cols() + c]; }
  real at(size_t r, size_t c) const { return data_[r * cols() + c]; }

  std::span<real> row(size_t r) { return {data_.data() + r * cols(), cols()}; }
  std::span<const real> row(size_t r) const {
    return {data_.data() + r * cols(), cols()};
  }

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool value) { requires_grad_ = value; }

  void Fill(real value);
  bool AllFinite() const;

  // Throws NumericError naming `what` when any entry is NaN/Inf.
  void CheckFinite(const std::string& what) const;

 private:
  Shape shape_;
  std::vector<real> data_;
  bool requires_grad_ = false;
};

}  // namespace mbcl

#endif  // MBCL_TENSOR_H_
