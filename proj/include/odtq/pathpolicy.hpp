// Copyright (c) 2026 odtq contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "odtq/align.hpp"
#include "odtq/param_store.hpp"
#include "odtq/rng.hpp"
#include "odtq/roadnet.hpp"
#include "odtq/synthgen.hpp"
#include "odtq/tensor.hpp"
#include "odtq/traffic.hpp"

namespace odtq::policy {

struct PolicyConfig {
  int d_model = 32;
  int hidden = 64;  // prediction-head width
  int fanout = 8;   // traffic feature slots
  double gamma_discount = 1.0;      // credit decay back from the terminal step
  double gamma_policy_weight = 0.5; // weight of the policy term in the joint loss
  double omega = 1.0;               // reward scale on LCS
  double beta = 1.0;                // reward scale on DTW
  int samples_per_query = 4;
  int warmup_ce_epochs = 3;
  int epochs = 20;
  double lr = 0.01;
  int batch_size = 8;
  int lmax_mult = 2;   // rollout cap: lmax_mult * od_hops + lmax_slack
  int lmax_slack = 10;
  bool standardize_rewards = false;
  std::string encoder = "gru";  // gru | mean

  void validate() const;
};

/// Rollout state at one decoding step.
struct PolicyState {
  std::vector<int> prefix;      // generated nodes so far, starts at origin
  grad::Tensor h;               // prefix-encoder hidden state [d_model]
  std::vector<double> traffic;  // recent out-edge mean times, log1p seconds
  double dist_to_dest = 0.0;    // normalized Euclidean distance
  double dir_sin = 0.0;         // unit displacement toward destination
  double dir_cos = 1.0;
};

struct Episode {
  std::vector<int> actions;
  std::vector<grad::Tensor> log_probs;   // populated when recording gradients
  std::vector<double> log_prob_values;
  double terminal_reward = 0.0;
  bool reached = false;
  Path predicted;  // origin followed by actions
};

enum class DecodeMode { kSample, kGreedy };

class PolicyModel {
 public:
  PolicyModel(int n_nodes, const PolicyConfig& cfg, uint64_t seed);
  // restores architecture from checkpoint metadata
  explicit PolicyModel(grad::ParamStore store);

  grad::ParamStore& params() { return store_; }
  const grad::ParamStore& params() const { return store_; }
  int n_nodes() const { return n_nodes_; }
  int d_model() const { return d_model_; }
  int fanout() const { return fanout_; }

  grad::Tensor initial_hidden() const;
  // one encoder step consuming the embedding of `node`; `step` is the
  // 0-based position of `node` in the prefix
  grad::Tensor step_hidden(const grad::Tensor& h_prev, int node, int step) const;

  /// Recomputes the full state for a prefix (tests and one-off callers;
  /// rollouts keep the hidden state incrementally).
  PolicyState encode_state(const RoadNetwork& net, const TripsIndex& index,
                           double slice_len, int dest,
                           const std::vector<int>& prefix, double departure) const;

  /// Full-vocabulary logits restricted to out-neighbors of the prefix tip
  /// by masked softmax. Throws on dead ends.
  grad::Tensor action_distribution(const RoadNetwork& net, const PolicyState& state) const;

  // feature helpers, exposed for tests
  static std::pair<double, double> direction_feature(const Vec2& from, const Vec2& to);
  std::vector<double> traffic_feature(const RoadNetwork& net, const TripsIndex& index,
                                      double slice_len, int node, double departure) const;

 private:
  grad::Tensor head_logits(const PolicyState& state) const;

  int n_nodes_ = 0;
  int d_model_ = 0;
  int hidden_ = 0;
  int fanout_ = 0;
  bool mean_encoder_ = false;
  grad::ParamStore store_;
};

/// Autoregressive decode from the query origin toward its destination.
/// Terminates at the destination node, a dead end, or the length cap;
/// dead ends and overruns are scored on the partial path. `truth` may be
/// null (prediction without ground truth): the reward is then 0.
Episode rollout(const PolicyModel& model, const RoadNetwork& net, const TripsIndex& index,
                double slice_len, const OdtQuery& query, const Path* truth,
                const PolicyConfig& cfg, DecodeMode mode, Rng* rng, bool record_grads);

/// Teacher-forced mean negative log-likelihood of the true next node along
/// the ground-truth prefix.
grad::Tensor ce_loss(const PolicyModel& model, const RoadNetwork& net,
                     const TripsIndex& index, double slice_len, const Path& truth,
                     double departure);

/// Self-critical policy-gradient surrogate: -(1/N) sum_i (sum_t w_t log
/// pi(a_it)) (r_i - r_greedy), where w_t decays with gamma_discount from
/// the terminal step and rewards are constants.
grad::Tensor scst_loss(const std::vector<Episode>& sampled, const Episode& greedy,
                       const PolicyConfig& cfg);

struct PolicyTrainRow {
  int epoch = 0;
  double ce_loss = 0.0;
  double policy_loss = 0.0;
  double val_mean_reward = 0.0;
  double val_lcs = 0.0;
  double val_dtw = 0.0;
};

struct PolicyTrainResult {
  grad::ParamStore best;
  std::vector<PolicyTrainRow> log;
  int best_epoch = 0;
};

/// CE warm-up followed by the joint loss gamma_policy_weight * scst + ce.
/// Returns the parameters of the best validation epoch (mean greedy
/// reward). Deterministic for a fixed seed; validation rollouts may run in
/// parallel.
PolicyTrainResult train_policy(const Dataset& ds, const PolicyConfig& cfg,
                               double slice_len, uint64_t seed, int threads = 1);

/// Mean greedy-decode alignment stats of `model` over the given trip
/// indices (reward, raw lcs, dtw).
struct EvalStats {
  double mean_reward = 0.0;
  double mean_lcs = 0.0;
  double mean_dtw = 0.0;
};
EvalStats evaluate_policy(const PolicyModel& model, const Dataset& ds,
                          const TripsIndex& index, double slice_len,
                          const std::vector<int>& trip_indices,
                          const PolicyConfig& cfg, int threads = 1);

}  // namespace odtq::policy
