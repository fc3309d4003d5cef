// Copyright (c) 2026 odtq contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "odtq/rng.hpp"
#include "odtq/tensor.hpp"

namespace odtq::grad {

/// Named trainable tensors plus optimizer state. Iteration order is the
/// lexicographic parameter-name order, which keeps initialization and
/// updates deterministic.
class ParamStore {
 public:
  Tensor& add(const std::string& name, std::vector<int> shape);
  // N(0, stddev) initialization from the store-independent rng
  Tensor& add_normal(const std::string& name, std::vector<int> shape, Rng& rng,
                     double stddev);
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const { return params_.count(name) > 0; }

  // scalar metadata riding in the same container (not updated by the
  // optimizer; persisted with the checkpoint)
  void set_meta(const std::string& name, double v);
  double meta(const std::string& name) const;

  std::map<std::string, Tensor>& params() { return params_; }
  const std::map<std::string, Tensor>& params() const { return params_; }

  void zero_grads();

  /// Adaptive-moment update (beta1=0.9, beta2=0.999, eps=1e-8) over every
  /// non-meta parameter; gradients are zeroed afterwards. Throws kNumeric
  /// naming the parameter when a gradient is NaN/Inf.
  void adam_step(double lr);

  ParamStore clone() const;  // deep copy, optimizer state included

  void save(const std::string& path) const;
  static ParamStore load(const std::string& path);

 private:
  static bool is_meta(const std::string& name);

  struct Moments {
    std::vector<double> m, v;
  };
  std::map<std::string, Tensor> params_;
  std::map<std::string, Moments> moments_;
  long long step_ = 0;
};

}  // namespace odtq::grad
