// Copyright (c) 2026 odtq contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace odtq::grad {

namespace detail {

struct TensorNode {
  std::vector<int> shape;  // rank 1 ([n]) or 2 ([m,n]); scalars are [1]
  std::vector<double> val;
  std::vector<double> grad;  // allocated lazily, same length as val
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  // Accumulates d(loss)/d(parent) into the parents, reading this->grad.
  std::function<void(TensorNode&)> backprop;

  std::size_t size() const { return val.size(); }
  void ensure_grad() {
    if (grad.size() != val.size()) grad.assign(val.size(), 0.0);
  }
};

}  // namespace detail

/// Dense double-precision tensor participating in a dynamically built
/// reverse-mode graph. Copying a Tensor copies a handle to the same node.
/// A graph is confined to one thread during forward/backward; independent
/// graphs may run concurrently.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor from_values(std::vector<int> shape, std::vector<double> values,
                            bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const;
  int rank() const { return static_cast<int>(shape().size()); }
  std::size_t size() const;
  // rank-2 accessors ([n] behaves as a single row)
  int rows() const;
  int cols() const;

  const std::vector<double>& values() const;
  std::vector<double>& mutable_values();  // leaves only; do not mutate graph interiors
  double value() const;                   // scalar convenience
  double at(int i) const;
  double at(int r, int c) const;

  bool requires_grad() const;
  const std::vector<double>& grad_values() const;
  void zero_grad();

  std::shared_ptr<detail::TensorNode> node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::TensorNode> node_;

  friend Tensor make_op(std::vector<int> shape, std::vector<double> val,
                        std::vector<Tensor> parents,
                        std::function<void(detail::TensorNode&)> backprop);
};

// ---- forward ops ----

// [m,k]x[k,n] -> [m,n]; [k]x[k,n] -> [n]; [m,k]x[k] -> [m]
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);  // same shape
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& a, double k);
// v * s where s is a scalar tensor; gradient flows into both
Tensor mul_scalar(const Tensor& v, const Tensor& s);
Tensor dot(const Tensor& a, const Tensor& b);  // rank-1, -> scalar
Tensor concat(const std::vector<Tensor>& parts);  // rank-1 concatenation
// rows of table ([V,d]) selected by index -> [n,d]
Tensor gather_rows(const Tensor& table, const std::vector<int>& indices);
Tensor row(const Tensor& table, int index);  // -> [d]

Tensor relu(const Tensor& a);
Tensor tanh_fn(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor softplus(const Tensor& a);
Tensor abs_fn(const Tensor& a);
Tensor log_fn(const Tensor& a);

/// Softmax over the unmasked entries of a rank-1 logit vector. Masked
/// entries get exactly probability 0; the rest renormalize. Throws when
/// everything is masked.
Tensor softmax_masked(const Tensor& logits, const std::vector<uint8_t>& mask);

Tensor sum_over_axis(const Tensor& a, int axis);  // [m,n] -> [n] (0) or [m] (1)
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);
Tensor pick(const Tensor& a, int index);  // rank-1 element -> scalar

/// Reverse-mode sweep from a scalar loss. Gradients accumulate into every
/// reachable tensor with requires_grad; calling backward twice without
/// zeroing accumulates both sweeps.
void backward(const Tensor& loss);

}  // namespace odtq::grad
