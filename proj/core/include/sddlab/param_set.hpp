#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sddlab/error.hpp"
#include "sddlab/tensor.hpp"

namespace sddlab {

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  bool prunable = false;
};

// Named model parameters in a fixed insertion order. Names are unique and
// act as keys for masks, optimizer state and checkpoints.
template <typename T>
class ParamSet {
 public:
  Parameter<T>& add(std::string name, Tensor<T> value, bool prunable) {
    if (index_.contains(name)) {
      throw ConfigError("duplicate parameter name '" + name + "'");
    }
    index_.emplace(name, params_.size());
    params_.push_back(Parameter<T>{std::move(name), std::move(value), prunable});
    return params_.back();
  }

  std::size_t size() const noexcept { return params_.size(); }
  Parameter<T>& operator[](std::size_t i) { return params_[i]; }
  const Parameter<T>& operator[](std::size_t i) const { return params_[i]; }

  bool contains(const std::string& name) const { return index_.contains(name); }

  std::size_t index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return it->second;
  }

  Parameter<T>& at(const std::string& name) { return params_[index_of(name)]; }
  const Parameter<T>& at(const std::string& name) const { return params_[index_of(name)]; }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::size_t total_elements() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  std::size_t prunable_elements() const {
    std::size_t n = 0;
    for (const auto& p : params_) {
      if (p.prunable) n += p.value.size();
    }
    return n;
  }

  template <typename U>
  ParamSet<U> cast() const {
    ParamSet<U> out;
    for (const auto& p : params_) out.add(p.name, p.value.template cast<U>(), p.prunable);
    return out;
  }

 private:
  std::vector<Parameter<T>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Gradients aligned index-by-index with a ParamSet.
template <typename T>
using GradSet = std::vector<Tensor<T>>;

}  // namespace sddlab
