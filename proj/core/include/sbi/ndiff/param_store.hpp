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

#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sbi/ndiff/tensor.hpp"

namespace sbi::ndiff {

// Raised when an optimizer step sees NaN or infinite gradients.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AdamConfig {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Named trainable tensors with their Adam moment accumulators. Parameters
// keep declaration order; that order defines gradient alignment and the
// serialized layout.
class ParamStore {
 public:
  ParamStore() = default;

  // Registers a new parameter. Names must be unique.
  Tensor& add(std::string name, Tensor init);

  bool contains(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;
  std::size_t size() const { return entries_.size(); }
  std::size_t parameter_count() const;

  const std::string& name(std::size_t i) const { return entries_[i].name; }
  Tensor& value(std::size_t i) { return entries_[i].value; }
  const Tensor& value(std::size_t i) const { return entries_[i].value; }
  Tensor& value(std::string_view name) { return value(index_of(name)); }
  const Tensor& value(std::string_view name) const {
    return value(index_of(name));
  }
  const Tensor& first_moment(std::size_t i) const { return entries_[i].m; }
  const Tensor& second_moment(std::size_t i) const { return entries_[i].v; }

  std::uint64_t step() const { return step_; }

  // Copies of the current parameter values, for checkpointing.
  std::vector<Tensor> snapshot() const;
  void restore(const std::vector<Tensor>& values);

  // Manifest text (names, shapes, byte offsets) followed by little-endian
  // float64 values in declaration order. Moments are not persisted.
  void save(std::ostream& out) const;
  static ParamStore load(std::istream& in);

  friend void adam_step(ParamStore& store, const std::vector<Tensor>& gradients,
                        const AdamConfig& config);

 private:
  struct Entry {
    std::string name;
    Tensor value;
    Tensor m;
    Tensor v;
  };
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  std::uint64_t step_ = 0;
};

// Bias-corrected Adam update. Throws ShapeError if gradients do not match the
// parameters and NonFiniteError (leaving the store untouched) if any gradient
// is NaN or infinite.
void adam_step(ParamStore& store, const std::vector<Tensor>& gradients,
               const AdamConfig& config);

}  // namespace sbi::ndiff
