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

#include "sbi/ndiff/param_store.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

namespace sbi::ndiff {
namespace {

constexpr const char* kMagic = "ndiff-params v1";

void write_le64(std::ostream& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

double read_le64(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  if (!in) throw std::runtime_error("parameter blob truncated");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

Tensor& ParamStore::add(std::string name, Tensor init) {
  if (index_.contains(name)) {
    throw std::invalid_argument("duplicate parameter name: " + name);
  }
  index_.emplace(name, entries_.size());
  Tensor zeros(init.shape(), 0.0);
  entries_.push_back(Entry{std::move(name), std::move(init), zeros, zeros});
  return entries_.back().value;
}

bool ParamStore::contains(std::string_view name) const {
  return index_.contains(std::string(name));
}

std::size_t ParamStore::index_of(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) {
    throw std::out_of_range("unknown parameter: " + std::string(name));
  }
  return it->second;
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

std::vector<Tensor> ParamStore::snapshot() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.value);
  return out;
}

void ParamStore::restore(const std::vector<Tensor>& values) {
  if (values.size() != entries_.size()) {
    throw ShapeError("snapshot has " + std::to_string(values.size()) +
                     " tensors, store has " + std::to_string(entries_.size()));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i].same_shape(entries_[i].value)) {
      throw ShapeError("snapshot shape " + values[i].shape_string() +
                       " does not match parameter " + entries_[i].name + " " +
                       entries_[i].value.shape_string());
    }
    entries_[i].value = values[i];
  }
}

void ParamStore::save(std::ostream& out) const {
  out << kMagic << '\n' << "count " << entries_.size() << '\n';
  std::size_t offset = 0;
  for (const auto& e : entries_) {
    out << "param " << e.name << " shape";
    for (std::size_t d : e.value.shape()) out << ' ' << d;
    out << " offset " << offset << '\n';
    offset += e.value.size() * sizeof(double);
  }
  out << "bytes " << offset << '\n' << "end\n";
  for (const auto& e : entries_) {
    for (double v : e.value.data()) write_le64(out, v);
  }
}

ParamStore ParamStore::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMagic) {
    throw std::runtime_error("not an ndiff parameter blob");
  }
  ParamStore store;
  std::vector<std::pair<std::string, std::vector<std::size_t>>> layout;
  while (std::getline(in, line) && line != "end") {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag != "param") continue;
    std::string name, word;
    ls >> name >> word;
    std::vector<std::size_t> shape;
    while (ls >> word && word != "offset") shape.push_back(std::stoull(word));
    layout.emplace_back(name, shape);
  }
  if (line != "end") throw std::runtime_error("parameter manifest truncated");
  for (auto& [name, shape] : layout) {
    Tensor t(shape);
    for (double& v : t.values()) v = read_le64(in);
    store.add(name, std::move(t));
  }
  return store;
}

void adam_step(ParamStore& store, const std::vector<Tensor>& gradients,
               const AdamConfig& config) {
  if (gradients.size() != store.entries_.size()) {
    throw ShapeError("adam_step got " + std::to_string(gradients.size()) +
                     " gradients for " + std::to_string(store.entries_.size()) +
                     " parameters");
  }
  for (std::size_t i = 0; i < gradients.size(); ++i) {
    const auto& e = store.entries_[i];
    if (!gradients[i].same_shape(e.value)) {
      throw ShapeError("gradient for " + e.name + " has shape " +
                       gradients[i].shape_string() + ", parameter is " +
                       e.value.shape_string());
    }
    if (!gradients[i].all_finite()) {
      throw NonFiniteError("non-finite gradient for parameter " + e.name +
                           " at step " + std::to_string(store.step_ + 1));
    }
  }
  ++store.step_;
  const double t = static_cast<double>(store.step_);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < gradients.size(); ++i) {
    auto& e = store.entries_[i];
    auto p = e.value.data();
    auto m = e.m.data();
    auto v = e.v.data();
    auto g = gradients[i].data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g[k];
      v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g[k] * g[k];
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      p[k] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

}  // namespace sbi::ndiff
