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
#include <functional>
#include <initializer_list>
#include <string_view>
#include <vector>

#include "sbi/ndiff/tensor.hpp"

namespace sbi::ndiff {

class ParamStore;
class Tape;

// Handle to a value recorded on a tape. Cheap to copy; valid while the tape
// lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  Tape* tape() const { return tape_; }
  std::uint32_t id() const { return id_; }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

enum class GradMode { kEnabled, kDisabled };

// Dynamic reverse-mode tape. Operations are appended in evaluation order, so
// inputs always precede their consumers and backward() visits nodes in exact
// reverse order. A tape is single-threaded; build a fresh one per forward
// pass.
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Tensor& grad_out)>;

  explicit Tape(GradMode mode = GradMode::kEnabled) : mode_(mode) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var variable(Tensor value);
  // Leaf bound to a stored parameter; the tensor is referenced, not copied,
  // so the store must outlive the tape and stay unmodified until backward()
  // has run.
  Var parameter(const ParamStore& store, std::size_t index);
  Var parameter(const ParamStore& store, std::string_view name);

  // Appends a primitive result. `backward` receives the output adjoint and
  // must route contributions to the inputs with accumulate().
  Var record(Tensor value, std::initializer_list<Var> inputs, Backward backward);
  Var record(Tensor value, const std::vector<Var>& inputs, Backward backward);

  // Seeds d(output)/d(output) = 1 and propagates adjoints. The output must be
  // a 1x1 tensor. Safe to call repeatedly; adjoints are reset each time.
  void backward(Var output);

  // Adjoint of a node after backward(); zeros when the node was unreached.
  Tensor grad(Var v) const;
  // Gradients aligned with the store's declaration order; parameters that
  // were not used on this tape get zero tensors.
  std::vector<Tensor> parameter_gradients(const ParamStore& store) const;

  void accumulate(std::uint32_t id, const Tensor& contribution);
  bool needs_grad(std::uint32_t id) const { return nodes_[id].requires_grad; }
  bool grad_enabled() const { return mode_ == GradMode::kEnabled; }

  const Tensor& value(std::uint32_t id) const {
    const Node& n = nodes_[id];
    return n.external != nullptr ? *n.external : n.value;
  }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    bool requires_grad = false;
    Backward backward;
  };

  Var push(Node node);
  void check_owner(Var v) const;

  GradMode mode_;
  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  std::vector<char> has_grad_;
  const ParamStore* bound_store_ = nullptr;
  std::vector<std::pair<std::size_t, std::uint32_t>> parameter_nodes_;
};

}  // namespace sbi::ndiff
