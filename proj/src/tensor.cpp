// Copyright (c) 2026 odtq contributors
// SPDX-License-Identifier: Apache-2.0
#include "odtq/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_set>

#include "odtq/error.hpp"

namespace odtq::grad {

namespace {

std::size_t shape_size(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) fail(ErrorCode::kContract, "tensor dimensions must be positive");
    n *= static_cast<std::size_t>(d);
  }
  if (shape.empty() || shape.size() > 2)
    fail(ErrorCode::kContract, "tensors are rank 1 or 2");
  return n;
}

std::string shape_str(const std::vector<int>& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

[[noreturn]] void shape_fail(const char* op, const std::vector<int>& a,
                             const std::vector<int>& b) {
  fail(ErrorCode::kContract, std::string(op) + ": incompatible shapes " +
                                 shape_str(a) + " and " + shape_str(b));
}

}  // namespace

Tensor make_op(std::vector<int> shape, std::vector<double> val,
               std::vector<Tensor> parents,
               std::function<void(detail::TensorNode&)> backprop) {
  auto node = std::make_shared<detail::TensorNode>();
  node->shape = std::move(shape);
  node->val = std::move(val);
  bool needs = false;
  for (const Tensor& p : parents) {
    needs = needs || p.requires_grad();
    node->parents.push_back(p.node());
  }
  node->requires_grad = needs;
  if (needs) node->backprop = std::move(backprop);
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  auto node = std::make_shared<detail::TensorNode>();
  std::size_t n = shape_size(shape);
  node->shape = std::move(shape);
  node->val.assign(n, 0.0);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::from_values(std::vector<int> shape, std::vector<double> values,
                           bool requires_grad) {
  std::size_t n = shape_size(shape);
  if (values.size() != n)
    fail(ErrorCode::kContract, "value count does not match shape " + shape_str(shape));
  auto node = std::make_shared<detail::TensorNode>();
  node->shape = std::move(shape);
  node->val = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return from_values({1}, {v}, requires_grad);
}

const std::vector<int>& Tensor::shape() const {
  if (!node_) fail(ErrorCode::kContract, "empty tensor");
  return node_->shape;
}

std::size_t Tensor::size() const { return node_ ? node_->size() : 0; }

int Tensor::rows() const { return rank() == 2 ? shape()[0] : 1; }
int Tensor::cols() const { return rank() == 2 ? shape()[1] : shape()[0]; }

const std::vector<double>& Tensor::values() const {
  if (!node_) fail(ErrorCode::kContract, "empty tensor");
  return node_->val;
}

std::vector<double>& Tensor::mutable_values() {
  if (!node_) fail(ErrorCode::kContract, "empty tensor");
  return node_->val;
}

double Tensor::value() const {
  if (size() != 1) fail(ErrorCode::kContract, "value() requires a scalar tensor");
  return node_->val[0];
}

double Tensor::at(int i) const { return values().at(static_cast<size_t>(i)); }

double Tensor::at(int r, int c) const {
  if (rank() != 2) fail(ErrorCode::kContract, "at(r,c) requires rank 2");
  return node_->val[static_cast<size_t>(r) * cols() + c];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

const std::vector<double>& Tensor::grad_values() const {
  if (!node_) fail(ErrorCode::kContract, "empty tensor");
  node_->ensure_grad();
  return node_->grad;
}

void Tensor::zero_grad() {
  if (node_) node_->grad.assign(node_->val.size(), 0.0);
}

// ---- ops ----

Tensor matmul(const Tensor& a, const Tensor& b) {
  // promote rank-1 operands: a as [1,k], b as [k,1]
  int m = a.rank() == 2 ? a.shape()[0] : 1;
  int k = a.rank() == 2 ? a.shape()[1] : a.shape()[0];
  int k2 = b.rank() == 2 ? b.shape()[0] : b.shape()[0];
  int n = b.rank() == 2 ? b.shape()[1] : 1;
  if (k != k2) shape_fail("matmul", a.shape(), b.shape());

  std::vector<double> out(static_cast<size_t>(m) * n, 0.0);
  const auto& av = a.values();
  const auto& bv = b.values();
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < k; ++p) {
      double av_ip = av[static_cast<size_t>(i) * k + p];
      if (av_ip == 0.0) continue;
      const double* brow = &bv[static_cast<size_t>(p) * n];
      double* orow = &out[static_cast<size_t>(i) * n];
      for (int j = 0; j < n; ++j) orow[j] += av_ip * brow[j];
    }

  std::vector<int> shape;
  if (a.rank() == 1 && b.rank() == 1) shape = {1};
  else if (a.rank() == 1) shape = {n};
  else if (b.rank() == 1) shape = {m};
  else shape = {m, n};

  return make_op(shape, std::move(out), {a, b}, [m, k, n](detail::TensorNode& node) {
    auto& pa = *node.parents[0];
    auto& pb = *node.parents[1];
    const auto& g = node.grad;
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
          double s = 0.0;
          for (int j = 0; j < n; ++j)
            s += g[static_cast<size_t>(i) * n + j] * pb.val[static_cast<size_t>(p) * n + j];
          pa.grad[static_cast<size_t>(i) * k + p] += s;
        }
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (int p = 0; p < k; ++p)
        for (int j = 0; j < n; ++j) {
          double s = 0.0;
          for (int i = 0; i < m; ++i)
            s += pa.val[static_cast<size_t>(i) * k + p] * g[static_cast<size_t>(i) * n + j];
          pb.grad[static_cast<size_t>(p) * n + j] += s;
        }
    }
  });
}

namespace {

Tensor binary_same_shape(const char* name, const Tensor& a, const Tensor& b,
                         double (*fwd)(double, double),
                         void (*bwd)(double ga, double av, double bv, double& da,
                                     double& db)) {
  if (a.shape() != b.shape()) shape_fail(name, a.shape(), b.shape());
  std::vector<double> out(a.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = fwd(a.values()[i], b.values()[i]);
  return make_op(a.shape(), std::move(out), {a, b}, [bwd](detail::TensorNode& node) {
    auto& pa = *node.parents[0];
    auto& pb = *node.parents[1];
    if (pa.requires_grad) pa.ensure_grad();
    if (pb.requires_grad) pb.ensure_grad();
    double dummy = 0.0;
    for (size_t i = 0; i < node.val.size(); ++i) {
      double& da = pa.requires_grad ? pa.grad[i] : dummy;
      double& db = pb.requires_grad ? pb.grad[i] : dummy;
      bwd(node.grad[i], pa.val[i], pb.val[i], da, db);
    }
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_same_shape(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double g, double, double, double& da, double& db) {
        da += g;
        db += g;
      });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_same_shape(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double g, double, double, double& da, double& db) {
        da += g;
        db -= g;
      });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_same_shape(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double g, double av, double bv, double& da, double& db) {
        da += g * bv;
        db += g * av;
      });
}

Tensor scale(const Tensor& a, double k) {
  std::vector<double> out(a.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * k;
  return make_op(a.shape(), std::move(out), {a}, [k](detail::TensorNode& node) {
    auto& p = *node.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (size_t i = 0; i < node.val.size(); ++i) p.grad[i] += k * node.grad[i];
  });
}

Tensor mul_scalar(const Tensor& v, const Tensor& s) {
  if (s.size() != 1) fail(ErrorCode::kContract, "mul_scalar: s must be scalar");
  double sv = s.values()[0];
  std::vector<double> out(v.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = v.values()[i] * sv;
  return make_op(v.shape(), std::move(out), {v, s}, [](detail::TensorNode& node) {
    auto& pv = *node.parents[0];
    auto& ps = *node.parents[1];
    double sv = ps.val[0];
    if (pv.requires_grad) {
      pv.ensure_grad();
      for (size_t i = 0; i < node.val.size(); ++i) pv.grad[i] += node.grad[i] * sv;
    }
    if (ps.requires_grad) {
      ps.ensure_grad();
      double acc = 0.0;
      for (size_t i = 0; i < node.val.size(); ++i) acc += node.grad[i] * pv.val[i];
      ps.grad[0] += acc;
    }
  });
}

Tensor dot(const Tensor& a, const Tensor& b) {
  if (a.rank() != 1 || b.rank() != 1 || a.size() != b.size())
    shape_fail("dot", a.shape(), b.shape());
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a.values()[i] * b.values()[i];
  return make_op({1}, {s}, {a, b}, [](detail::TensorNode& node) {
    auto& pa = *node.parents[0];
    auto& pb = *node.parents[1];
    double g = node.grad[0];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (size_t i = 0; i < pa.val.size(); ++i) pa.grad[i] += g * pb.val[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (size_t i = 0; i < pb.val.size(); ++i) pb.grad[i] += g * pa.val[i];
    }
  });
}

Tensor concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) fail(ErrorCode::kContract, "concat of nothing");
  std::vector<double> out;
  std::vector<size_t> offsets;
  for (const Tensor& p : parts) {
    if (p.rank() != 1) fail(ErrorCode::kContract, "concat expects rank-1 parts");
    offsets.push_back(out.size());
    out.insert(out.end(), p.values().begin(), p.values().end());
  }
  int n = static_cast<int>(out.size());
  return make_op({n}, std::move(out), parts, [offsets](detail::TensorNode& node) {
    for (size_t pi = 0; pi < node.parents.size(); ++pi) {
      auto& p = *node.parents[pi];
      if (!p.requires_grad) continue;
      p.ensure_grad();
      for (size_t i = 0; i < p.val.size(); ++i) p.grad[i] += node.grad[offsets[pi] + i];
    }
  });
}

Tensor gather_rows(const Tensor& table, const std::vector<int>& indices) {
  if (table.rank() != 2) fail(ErrorCode::kContract, "gather_rows expects [V,d] table");
  int v = table.shape()[0], d = table.shape()[1];
  for (int idx : indices)
    if (idx < 0 || idx >= v)
      fail(ErrorCode::kContract, "gather_rows: index " + std::to_string(idx) +
                                     " outside table of " + std::to_string(v) + " rows");
  std::vector<double> out;
  out.reserve(indices.size() * static_cast<size_t>(d));
  for (int idx : indices) {
    const double* src = &table.values()[static_cast<size_t>(idx) * d];
    out.insert(out.end(), src, src + d);
  }
  int n = static_cast<int>(indices.size());
  return make_op({n, d}, std::move(out), {table},
                 [indices, d](detail::TensorNode& node) {
                   auto& p = *node.parents[0];
                   if (!p.requires_grad) return;
                   p.ensure_grad();
                   for (size_t r = 0; r < indices.size(); ++r)
                     for (int j = 0; j < d; ++j)
                       p.grad[static_cast<size_t>(indices[r]) * d + j] +=
                           node.grad[r * d + j];
                 });
}

Tensor row(const Tensor& table, int index) {
  if (table.rank() != 2) fail(ErrorCode::kContract, "row expects [V,d] table");
  int v = table.shape()[0], d = table.shape()[1];
  if (index < 0 || index >= v)
    fail(ErrorCode::kContract, "row index " + std::to_string(index) + " out of range");
  const double* src = &table.values()[static_cast<size_t>(index) * d];
  std::vector<double> out(src, src + d);
  return make_op({d}, std::move(out), {table}, [index, d](detail::TensorNode& node) {
    auto& p = *node.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (int j = 0; j < d; ++j)
      p.grad[static_cast<size_t>(index) * d + j] += node.grad[j];
  });
}

namespace {

Tensor unary(const Tensor& a, double (*fwd)(double),
             double (*dydx)(double x, double y)) {
  std::vector<double> out(a.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = fwd(a.values()[i]);
  return make_op(a.shape(), std::move(out), {a}, [dydx](detail::TensorNode& node) {
    auto& p = *node.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (size_t i = 0; i < node.val.size(); ++i)
      p.grad[i] += node.grad[i] * dydx(p.val[i], node.val[i]);
  });
}

double softplus_stable(double x) {
  // log(1+e^x), stable in both tails
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double sigmoid_stable(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor relu(const Tensor& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor tanh_fn(const Tensor& a) {
  return unary(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a, [](double x) { return sigmoid_stable(x); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor softplus(const Tensor& a) {
  return unary(
      a, [](double x) { return softplus_stable(x); },
      [](double x, double) { return sigmoid_stable(x); });
}

Tensor abs_fn(const Tensor& a) {
  return unary(
      a, [](double x) { return std::abs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor log_fn(const Tensor& a) {
  return unary(
      a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Tensor softmax_masked(const Tensor& logits, const std::vector<uint8_t>& mask) {
  if (logits.rank() != 1) fail(ErrorCode::kContract, "softmax_masked expects rank 1");
  if (mask.size() != logits.size())
    fail(ErrorCode::kContract, "softmax_masked: mask length mismatch");
  size_t n = logits.size();
  double max_logit = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (size_t i = 0; i < n; ++i)
    if (mask[i]) {
      any = true;
      max_logit = std::max(max_logit, logits.values()[i]);
    }
  if (!any) fail(ErrorCode::kContract, "softmax_masked: all entries masked");

  std::vector<double> out(n, 0.0);
  double denom = 0.0;
  for (size_t i = 0; i < n; ++i)
    if (mask[i]) {
      out[i] = std::exp(logits.values()[i] - max_logit);
      denom += out[i];
    }
  for (size_t i = 0; i < n; ++i) out[i] = mask[i] ? out[i] / denom : 0.0;

  return make_op(logits.shape(), std::move(out), {logits},
                 [mask](detail::TensorNode& node) {
                   auto& p = *node.parents[0];
                   if (!p.requires_grad) return;
                   p.ensure_grad();
                   double s = 0.0;
                   for (size_t i = 0; i < node.val.size(); ++i)
                     if (mask[i]) s += node.grad[i] * node.val[i];
                   for (size_t i = 0; i < node.val.size(); ++i)
                     if (mask[i]) p.grad[i] += node.val[i] * (node.grad[i] - s);
                 });
}

Tensor sum_over_axis(const Tensor& a, int axis) {
  if (a.rank() != 2) fail(ErrorCode::kContract, "sum_over_axis expects rank 2");
  int m = a.shape()[0], n = a.shape()[1];
  if (axis != 0 && axis != 1) fail(ErrorCode::kContract, "axis must be 0 or 1");
  std::vector<double> out(axis == 0 ? n : m, 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      out[axis == 0 ? j : i] += a.values()[static_cast<size_t>(i) * n + j];
  return make_op({axis == 0 ? n : m}, std::move(out), {a},
                 [m, n, axis](detail::TensorNode& node) {
                   auto& p = *node.parents[0];
                   if (!p.requires_grad) return;
                   p.ensure_grad();
                   for (int i = 0; i < m; ++i)
                     for (int j = 0; j < n; ++j)
                       p.grad[static_cast<size_t>(i) * n + j] +=
                           node.grad[axis == 0 ? j : i];
                 });
}

Tensor sum_all(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  return make_op({1}, {s}, {a}, [](detail::TensorNode& node) {
    auto& p = *node.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (size_t i = 0; i < p.val.size(); ++i) p.grad[i] += node.grad[0];
  });
}

Tensor mean_all(const Tensor& a) { return scale(sum_all(a), 1.0 / a.size()); }

Tensor pick(const Tensor& a, int index) {
  if (a.rank() != 1) fail(ErrorCode::kContract, "pick expects rank 1");
  if (index < 0 || index >= static_cast<int>(a.size()))
    fail(ErrorCode::kContract, "pick index out of range");
  return make_op({1}, {a.values()[index]}, {a}, [index](detail::TensorNode& node) {
    auto& p = *node.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    p.grad[index] += node.grad[0];
  });
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1)
    fail(ErrorCode::kContract, "backward requires a scalar loss");
  if (!loss.requires_grad()) return;

  // iterative post-order topological sort over grad-requiring nodes
  std::vector<detail::TensorNode*> order;
  std::unordered_set<detail::TensorNode*> seen;
  struct Frame {
    detail::TensorNode* node;
    size_t next_parent;
  };
  std::vector<Frame> stack;
  stack.push_back({loss.node().get(), 0});
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      detail::TensorNode* p = f.node->parents[f.next_parent++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }

  // interior grads are per-sweep scratch; only leaves accumulate across
  // backward calls
  for (detail::TensorNode* node : order)
    if (node->backprop) node->grad.assign(node->val.size(), 0.0);

  loss.node()->ensure_grad();
  loss.node()->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::TensorNode* node = *it;
    node->ensure_grad();
    if (node->backprop) node->backprop(*node);
  }
}

}  // namespace odtq::grad
