// Copyright (c) 2026 odtq contributors
// SPDX-License-Identifier: Apache-2.0
#include "odtq/param_store.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "odtq/error.hpp"

namespace odtq::grad {

namespace {

constexpr char kMagic[8] = {'O', 'D', 'T', 'Q', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

void put_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

bool get_u32(std::istream& in, uint32_t& v) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) return false;
  v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return true;
}

bool get_u64(std::istream& in, uint64_t& v) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) return false;
  v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return true;
}

bool get_f64(std::istream& in, double& v) {
  uint64_t bits;
  if (!get_u64(in, bits)) return false;
  std::memcpy(&v, &bits, 8);
  return true;
}

}  // namespace

bool ParamStore::is_meta(const std::string& name) {
  return name.rfind("meta.", 0) == 0;
}

Tensor& ParamStore::add(const std::string& name, std::vector<int> shape) {
  if (params_.count(name))
    fail(ErrorCode::kContract, "duplicate parameter '" + name + "'");
  Tensor t = Tensor::zeros(std::move(shape), !is_meta(name));
  auto [it, ok] = params_.emplace(name, std::move(t));
  (void)ok;
  return it->second;
}

Tensor& ParamStore::add_normal(const std::string& name, std::vector<int> shape,
                               Rng& rng, double stddev) {
  Tensor& t = add(name, std::move(shape));
  for (double& v : t.mutable_values()) v = stddev * rng.normal();
  return t;
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) fail(ErrorCode::kContract, "unknown parameter '" + name + "'");
  return it->second;
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) fail(ErrorCode::kContract, "unknown parameter '" + name + "'");
  return it->second;
}

void ParamStore::set_meta(const std::string& name, double v) {
  std::string full = is_meta(name) ? name : "meta." + name;
  auto it = params_.find(full);
  if (it == params_.end()) {
    Tensor t = Tensor::scalar(v, false);
    params_.emplace(full, std::move(t));
  } else {
    it->second.mutable_values()[0] = v;
  }
}

double ParamStore::meta(const std::string& name) const {
  std::string full = is_meta(name) ? name : "meta." + name;
  return get(full).value();
}

void ParamStore::zero_grads() {
  for (auto& [name, t] : params_) t.zero_grad();
}

void ParamStore::adam_step(double lr) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  ++step_;
  double c1 = 1.0 - std::pow(beta1, static_cast<double>(step_));
  double c2 = 1.0 - std::pow(beta2, static_cast<double>(step_));
  for (auto& [name, t] : params_) {
    if (is_meta(name)) continue;
    const auto& g = t.grad_values();
    auto& mo = moments_[name];
    if (mo.m.size() != g.size()) {
      mo.m.assign(g.size(), 0.0);
      mo.v.assign(g.size(), 0.0);
    }
    auto& vals = t.mutable_values();
    for (size_t i = 0; i < g.size(); ++i) {
      if (!std::isfinite(g[i]))
        fail(ErrorCode::kNumeric,
             "non-finite gradient in parameter '" + name + "'");
      mo.m[i] = beta1 * mo.m[i] + (1.0 - beta1) * g[i];
      mo.v[i] = beta2 * mo.v[i] + (1.0 - beta2) * g[i] * g[i];
      double mhat = mo.m[i] / c1;
      double vhat = mo.v[i] / c2;
      vals[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
  zero_grads();
}

ParamStore ParamStore::clone() const {
  ParamStore out;
  for (const auto& [name, t] : params_) {
    Tensor copy = Tensor::from_values(t.shape(), t.values(), t.requires_grad());
    out.params_.emplace(name, std::move(copy));
  }
  out.moments_ = moments_;
  out.step_ = step_;
  return out;
}

void ParamStore::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  out.write(kMagic, 8);
  put_u32(out, kVersion);
  for (const auto& [name, t] : params_) {
    put_u32(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(out, static_cast<uint32_t>(t.shape().size()));
    for (int d : t.shape()) put_u64(out, static_cast<uint64_t>(d));
    for (double v : t.values()) put_f64(out, v);
  }
  if (!out) fail(ErrorCode::kIo, "write failed: " + path);
}

ParamStore ParamStore::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    fail(ErrorCode::kParse, path + ": not a checkpoint file");
  uint32_t version = 0;
  if (!get_u32(in, version)) fail(ErrorCode::kParse, path + ": truncated header");
  if (version != kVersion)
    fail(ErrorCode::kParse, path + ": unsupported checkpoint version " +
                                std::to_string(version));
  ParamStore store;
  while (true) {
    uint32_t name_len = 0;
    if (!get_u32(in, name_len)) break;  // clean EOF
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len))
      fail(ErrorCode::kParse, path + ": truncated record name");
    uint32_t rank = 0;
    if (!get_u32(in, rank) || rank == 0 || rank > 2)
      fail(ErrorCode::kParse, path + ": bad tensor rank");
    std::vector<int> shape(rank);
    uint64_t count = 1;
    for (uint32_t i = 0; i < rank; ++i) {
      uint64_t d = 0;
      if (!get_u64(in, d) || d == 0) fail(ErrorCode::kParse, path + ": bad dimension");
      shape[i] = static_cast<int>(d);
      count *= d;
    }
    std::vector<double> vals(count);
    for (uint64_t i = 0; i < count; ++i)
      if (!get_f64(in, vals[i])) fail(ErrorCode::kParse, path + ": truncated payload");
    if (store.params_.count(name))
      fail(ErrorCode::kParse, path + ": duplicate parameter '" + name + "'");
    Tensor t = Tensor::from_values(std::move(shape), std::move(vals), !is_meta(name));
    store.params_.emplace(std::move(name), std::move(t));
  }
  return store;
}

}  // namespace odtq::grad
