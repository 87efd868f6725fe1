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

#include "sbi/ndiff/tape.hpp"

#include <stdexcept>

#include "sbi/ndiff/param_store.hpp"

namespace sbi::ndiff {

const Tensor& Var::value() const {
  if (tape_ == nullptr) throw std::logic_error("Var is not bound to a tape");
  return tape_->value(id_);
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

void Tape::check_owner(Var v) const {
  if (v.tape() != this) {
    throw std::invalid_argument("Var belongs to a different tape");
  }
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::variable(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = grad_enabled();
  return push(std::move(n));
}

Var Tape::parameter(const ParamStore& store, std::size_t index) {
  if (bound_store_ != nullptr && bound_store_ != &store) {
    throw std::invalid_argument("a tape can only bind one ParamStore");
  }
  bound_store_ = &store;
  for (const auto& [param, node] : parameter_nodes_) {
    if (param == index) return Var(this, node);
  }
  Node n;
  n.external = &store.value(index);
  n.requires_grad = grad_enabled();
  Var v = push(std::move(n));
  parameter_nodes_.emplace_back(index, v.id());
  return v;
}

Var Tape::parameter(const ParamStore& store, std::string_view name) {
  return parameter(store, store.index_of(name));
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs,
                 Backward backward) {
  return record(std::move(value), std::vector<Var>(inputs), std::move(backward));
}

Var Tape::record(Tensor value, const std::vector<Var>& inputs,
                 Backward backward) {
  Node n;
  n.value = std::move(value);
  if (grad_enabled()) {
    for (Var in : inputs) {
      check_owner(in);
      if (nodes_[in.id()].requires_grad) n.requires_grad = true;
    }
    if (n.requires_grad) n.backward = std::move(backward);
  }
  return push(std::move(n));
}

void Tape::backward(Var output) {
  check_owner(output);
  if (!grad_enabled()) {
    throw std::logic_error("backward() on a tape recorded without gradients");
  }
  const Tensor& out = value(output.id());
  if (out.size() != 1) {
    throw ShapeError("backward() needs a scalar seed output, got shape " +
                     out.shape_string());
  }
  grads_.assign(nodes_.size(), Tensor());
  has_grad_.assign(nodes_.size(), 0);
  grads_[output.id()] = Tensor::scalar(1.0);
  has_grad_[output.id()] = 1;
  for (std::size_t i = output.id() + 1; i-- > 0;) {
    if (!has_grad_[i] || !nodes_[i].backward) continue;
    nodes_[i].backward(*this, grads_[i]);
  }
}

void Tape::accumulate(std::uint32_t id, const Tensor& contribution) {
  if (!nodes_[id].requires_grad) return;
  if (!has_grad_[id]) {
    grads_[id] = contribution;
    has_grad_[id] = 1;
    return;
  }
  auto dst = grads_[id].data();
  auto src = contribution.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

Tensor Tape::grad(Var v) const {
  check_owner(v);
  if (v.id() < has_grad_.size() && has_grad_[v.id()]) return grads_[v.id()];
  return Tensor(value(v.id()).shape(), 0.0);
}

std::vector<Tensor> Tape::parameter_gradients(const ParamStore& store) const {
  std::vector<Tensor> out;
  out.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    out.emplace_back(store.value(i).shape(), 0.0);
  }
  if (bound_store_ != &store) return out;
  for (const auto& [param, node] : parameter_nodes_) {
    if (node < has_grad_.size() && has_grad_[node]) out[param] = grads_[node];
  }
  return out;
}

}  // namespace sbi::ndiff
