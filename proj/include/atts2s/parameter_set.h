// atts2s/parameter_set.h

// Copyright 2026  The atts2s Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ATTS2S_PARAMETER_SET_H_
#define ATTS2S_PARAMETER_SET_H_

#include <cmath>
#include <deque>
#include <string>
#include <unordered_map>
#include <utility>

#include "atts2s/tensor.h"

namespace atts2s {

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;  // same shape as value
};

/// Named trainable tensors in insertion order. Entries have stable addresses,
/// so graphs may refer to them directly.
template <typename T>
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(const ParameterSet &other) { *this = other; }
  ParameterSet &operator=(const ParameterSet &other) {
    if (this == &other) return *this;
    entries_.clear();
    index_.clear();
    for (const auto &p : other.entries_) Add(p.name, p.value);
    return *this;
  }
  ParameterSet(ParameterSet &&) = default;
  ParameterSet &operator=(ParameterSet &&) = default;

  Parameter<T> &Add(const std::string &name, Tensor<T> value) {
    if (index_.count(name)) throw ConfigError("duplicate parameter name " + name);
    Tensor<T> grad(value.shape());
    entries_.push_back({name, std::move(value), std::move(grad)});
    index_[name] = entries_.size() - 1;
    return entries_.back();
  }

  bool Contains(const std::string &name) const { return index_.count(name) != 0; }

  Parameter<T> &Get(const std::string &name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw IndexError("unknown parameter " + name);
    return entries_[it->second];
  }
  const Parameter<T> &Get(const std::string &name) const {
    return const_cast<ParameterSet *>(this)->Get(name);
  }

  std::size_t size() const { return entries_.size(); }
  std::size_t NumScalars() const {
    std::size_t n = 0;
    for (const auto &p : entries_) n += p.value.size();
    return n;
  }

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  Parameter<T> &operator[](std::size_t k) { return entries_[k]; }
  const Parameter<T> &operator[](std::size_t k) const { return entries_[k]; }

  void ZeroGrad() {
    for (auto &p : entries_) p.grad.SetZero();
  }

  double GradNorm() const {
    double s = 0;
    for (const auto &p : entries_)
      for (T g : p.grad.values()) s += double(g) * double(g);
    return std::sqrt(s);
  }

  template <typename U>
  ParameterSet<U> Cast() const {
    ParameterSet<U> out;
    for (const auto &p : entries_) out.Add(p.name, p.value.template Cast<U>());
    return out;
  }

 private:
  std::deque<Parameter<T>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace atts2s

#endif  // ATTS2S_PARAMETER_SET_H_
