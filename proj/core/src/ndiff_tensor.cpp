// Copyright 2026 The sbi-engine Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sbi/ndiff/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace sbi::ndiff {
namespace {

std::size_t element_count(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (element_count(shape_) != data_.size()) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_string());
  }
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, double fill) {
  return Tensor({rows, cols}, fill);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

Tensor Tensor::scalar(double value) { return Tensor({1, 1}, value); }

Tensor Tensor::row_vector(std::span<const double> values) {
  return Tensor({1, values.size()},
                std::vector<double>(values.begin(), values.end()));
}

Tensor Tensor::column_vector(std::span<const double> values) {
  return Tensor({values.size(), 1},
                std::vector<double>(values.begin(), values.end()));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t = matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

std::size_t Tensor::rows() const {
  if (shape_.empty()) return data_.empty() ? 0 : 1;
  if (shape_.size() == 1) return 1;
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (shape_.empty()) return data_.empty() ? 0 : 1;
  if (shape_.size() == 1) return shape_[0];
  return shape_[1];
}

std::span<double> Tensor::row(std::size_t r) {
  return std::span<double>(data_).subspan(r * cols(), cols());
}

std::span<const double> Tensor::row(std::size_t r) const {
  return std::span<const double>(data_).subspan(r * cols(), cols());
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw ShapeError("item() requires a single element, got shape " +
                     shape_string());
  }
  return data_[0];
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor Tensor::gather_rows(std::span<const std::size_t> indices) const {
  const std::size_t c = cols();
  Tensor out = matrix(indices.size(), c);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Tensor Tensor::transpose() const {
  const std::size_t r = rows(), c = cols();
  Tensor out = matrix(c, r);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out(j, i) = (*this)(i, j);
  }
  return out;
}

std::string Tensor::shape_string() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << 'x';
    os << shape_[i];
  }
  os << ']';
  return os.str();
}

Tensor hstack(const Tensor& left, const Tensor& right) {
  if (left.rows() != right.rows()) {
    throw ShapeError("hstack row mismatch: " + left.shape_string() + " vs " +
                     right.shape_string());
  }
  const std::size_t r = left.rows(), lc = left.cols(), rc = right.cols();
  Tensor out = Tensor::matrix(r, lc + rc);
  for (std::size_t i = 0; i < r; ++i) {
    auto dst = out.row(i);
    std::copy(left.row(i).begin(), left.row(i).end(), dst.begin());
    std::copy(right.row(i).begin(), right.row(i).end(), dst.begin() + lc);
  }
  return out;
}

Tensor vstack(std::span<const Tensor> blocks) {
  if (blocks.empty()) return Tensor::matrix(0, 0);
  const std::size_t c = blocks.front().cols();
  std::size_t r = 0;
  for (const Tensor& b : blocks) {
    if (b.cols() != c) {
      throw ShapeError("vstack column mismatch: " + b.shape_string());
    }
    r += b.rows();
  }
  std::vector<double> data;
  data.reserve(r * c);
  for (const Tensor& b : blocks) {
    data.insert(data.end(), b.values().begin(), b.values().end());
  }
  return Tensor({r, c}, std::move(data));
}

}  // namespace sbi::ndiff
