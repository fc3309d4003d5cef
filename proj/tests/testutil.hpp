// Copyright (c) 2026 odtq contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "odtq/param_store.hpp"
#include "odtq/rng.hpp"
#include "odtq/roadnet.hpp"

namespace testutil {

inline double rel_err(double a, double b) {
  double denom = std::max({std::abs(a), std::abs(b), 1e-6});
  return std::abs(a - b) / denom;
}

struct GradCheck {
  double max_rel_err = 0.0;
  int coords_checked = 0;
};

/// Central finite differences against analytic gradients. build_loss must
/// rebuild the graph from the current parameter values on every call.
/// max_coords_per_param = 0 checks everything; otherwise a seeded random
/// subsample per parameter.
inline GradCheck check_gradients(odtq::grad::ParamStore& ps,
                                 const std::function<odtq::grad::Tensor()>& build_loss,
                                 int max_coords_per_param = 0, uint64_t seed = 0,
                                 double h = 1e-5) {
  using odtq::grad::Tensor;
  ps.zero_grads();
  Tensor loss = build_loss();
  odtq::grad::backward(loss);

  std::map<std::string, std::vector<double>> analytic;
  for (auto& [name, t] : ps.params())
    if (t.requires_grad()) analytic[name] = t.grad_values();

  GradCheck out;
  odtq::Rng pick_rng(odtq::mix_seed(seed, "fd-coords"));
  for (auto& [name, t] : ps.params()) {
    if (!t.requires_grad()) continue;
    std::vector<size_t> coords;
    size_t n = t.size();
    if (max_coords_per_param <= 0 || n <= static_cast<size_t>(max_coords_per_param)) {
      coords.resize(n);
      for (size_t i = 0; i < n; ++i) coords[i] = i;
    } else {
      for (int k = 0; k < max_coords_per_param; ++k)
        coords.push_back(pick_rng.next_u64() % n);
      std::sort(coords.begin(), coords.end());
      coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    }
    auto& vals = t.mutable_values();
    for (size_t i : coords) {
      double saved = vals[i];
      vals[i] = saved + h;
      double f_plus = build_loss().value();
      vals[i] = saved - h;
      double f_minus = build_loss().value();
      vals[i] = saved;
      double fd = (f_plus - f_minus) / (2.0 * h);
      out.max_rel_err = std::max(out.max_rel_err, rel_err(fd, analytic[name][i]));
      ++out.coords_checked;
    }
  }
  ps.zero_grads();
  return out;
}

/// Exhaustive LCS: enumerate every subsequence of a, test membership in b.
inline int lcs_bruteforce(const std::vector<int>& a, const std::vector<int>& b) {
  int n = static_cast<int>(a.size());
  int best = 0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    std::vector<int> sub;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) sub.push_back(a[i]);
    size_t j = 0;
    for (int x : b)
      if (j < sub.size() && sub[j] == x) ++j;
    if (j == sub.size()) best = std::max(best, static_cast<int>(sub.size()));
  }
  return best;
}

/// Exhaustive DTW: direct recursion over all monotone alignments
/// (no memoization).
inline double dtw_bruteforce(const std::vector<odtq::Vec2>& a,
                             const std::vector<odtq::Vec2>& b) {
  size_t n = a.size(), m = b.size();
  std::function<double(size_t, size_t)> go = [&](size_t i, size_t j) -> double {
    double c = odtq::distance(a[i], b[j]);
    if (i + 1 == n && j + 1 == m) return c;
    double best = std::numeric_limits<double>::infinity();
    if (i + 1 < n) best = std::min(best, go(i + 1, j));
    if (j + 1 < m) best = std::min(best, go(i, j + 1));
    if (i + 1 < n && j + 1 < m) best = std::min(best, go(i + 1, j + 1));
    return c + best;
  };
  return go(0, 0) / static_cast<double>(m);
}

/// Fresh empty scratch directory under the system temp root.
inline std::string scratch_dir(const std::string& name) {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "odtq_tests" / name;
  std::error_code ec;
  fs::remove_all(dir, ec);
  fs::create_directories(dir);
  return dir.string();
}

}  // namespace testutil
