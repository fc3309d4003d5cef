// Copyright (c) 2026 odtq contributors
// SPDX-License-Identifier: Apache-2.0
#include "odtq/pathpolicy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "odtq/error.hpp"
#include "odtq/parallel.hpp"

namespace odtq::policy {

using grad::Tensor;

void PolicyConfig::validate() const {
  if (d_model < 1 || hidden < 1 || fanout < 1)
    fail(ErrorCode::kConfig, "policy dimensions must be >= 1");
  if (gamma_discount < 0.0 || gamma_discount > 1.0)
    fail(ErrorCode::kConfig, "gamma_discount must be in [0, 1]");
  if (gamma_policy_weight < 0.0 || omega < 0.0 || beta < 0.0)
    fail(ErrorCode::kConfig, "loss/reward weights must be >= 0");
  if (samples_per_query < 1) fail(ErrorCode::kConfig, "samples_per_query must be >= 1");
  if (epochs < 1 || warmup_ce_epochs < 0)
    fail(ErrorCode::kConfig, "epochs must be >= 1 and warmup >= 0");
  if (lr <= 0.0) fail(ErrorCode::kConfig, "lr must be > 0");
  if (batch_size < 1) fail(ErrorCode::kConfig, "batch_size must be >= 1");
  if (lmax_mult < 1 || lmax_slack < 0) fail(ErrorCode::kConfig, "bad rollout cap rule");
  if (encoder != "gru" && encoder != "mean")
    fail(ErrorCode::kConfig, "encoder must be 'gru' or 'mean'");
}

namespace {

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  return grad::add(grad::matmul(x, w), b);
}

constexpr double kEncGru = 0.0, kEncMean = 1.0;

}  // namespace

PolicyModel::PolicyModel(int n_nodes, const PolicyConfig& cfg, uint64_t seed) {
  cfg.validate();
  if (n_nodes < 1) fail(ErrorCode::kContract, "empty node vocabulary");
  n_nodes_ = n_nodes;
  d_model_ = cfg.d_model;
  hidden_ = cfg.hidden;
  fanout_ = cfg.fanout;
  mean_encoder_ = cfg.encoder == "mean";

  Rng rng(mix_seed(seed, "policy-init"));
  int d = d_model_;
  int in_dim = d + fanout_ + 3;  // hidden, traffic, dist, (sin, cos)
  store_.add_normal("policy.embed", {n_nodes_, d}, rng, 0.1);
  double sd = 1.0 / std::sqrt(static_cast<double>(d));
  for (const char* gate : {"z", "r", "h"}) {
    store_.add_normal(std::string("policy.gru.w") + gate, {d, d}, rng, sd);
    store_.add_normal(std::string("policy.gru.u") + gate, {d, d}, rng, sd);
    store_.add(std::string("policy.gru.b") + gate, {d});
  }
  store_.add_normal("policy.head.w1", {in_dim, hidden_}, rng,
                    1.0 / std::sqrt(static_cast<double>(in_dim)));
  store_.add("policy.head.b1", {hidden_});
  store_.add_normal("policy.head.w2", {hidden_, n_nodes_}, rng,
                    1.0 / std::sqrt(static_cast<double>(hidden_)));
  store_.add("policy.head.b2", {n_nodes_});

  store_.set_meta("policy.n_nodes", n_nodes_);
  store_.set_meta("policy.d_model", d_model_);
  store_.set_meta("policy.hidden", hidden_);
  store_.set_meta("policy.fanout", fanout_);
  store_.set_meta("policy.encoder", mean_encoder_ ? kEncMean : kEncGru);
}

PolicyModel::PolicyModel(grad::ParamStore store) : store_(std::move(store)) {
  n_nodes_ = static_cast<int>(store_.meta("policy.n_nodes"));
  d_model_ = static_cast<int>(store_.meta("policy.d_model"));
  hidden_ = static_cast<int>(store_.meta("policy.hidden"));
  fanout_ = static_cast<int>(store_.meta("policy.fanout"));
  mean_encoder_ = store_.meta("policy.encoder") == kEncMean;
}

Tensor PolicyModel::initial_hidden() const { return Tensor::zeros({d_model_}); }

Tensor PolicyModel::step_hidden(const Tensor& h_prev, int node, int step) const {
  if (node < 0 || node >= n_nodes_)
    fail(ErrorCode::kContract, "node " + std::to_string(node) + " has no embedding");
  Tensor x = grad::row(store_.get("policy.embed"), node);
  if (mean_encoder_) {
    // running mean of prefix embeddings
    double t = static_cast<double>(step);
    return grad::scale(grad::add(grad::scale(h_prev, t), x), 1.0 / (t + 1.0));
  }
  const auto& s = store_;
  Tensor z = grad::sigmoid(grad::add(
      linear(x, s.get("policy.gru.wz"), s.get("policy.gru.bz")),
      grad::matmul(h_prev, s.get("policy.gru.uz"))));
  Tensor r = grad::sigmoid(grad::add(
      linear(x, s.get("policy.gru.wr"), s.get("policy.gru.br")),
      grad::matmul(h_prev, s.get("policy.gru.ur"))));
  Tensor cand = grad::tanh_fn(grad::add(
      linear(x, s.get("policy.gru.wh"), s.get("policy.gru.bh")),
      grad::matmul(grad::mul(r, h_prev), s.get("policy.gru.uh"))));
  // h' = (1-z) * h + z * cand
  Tensor keep = grad::sub(Tensor::from_values({d_model_}, std::vector<double>(d_model_, 1.0)), z);
  return grad::add(grad::mul(keep, h_prev), grad::mul(z, cand));
}

std::pair<double, double> PolicyModel::direction_feature(const Vec2& from, const Vec2& to) {
  double dx = to.x - from.x;
  double dy = to.y - from.y;
  if (dx == 0.0 && dy == 0.0) return {0.0, 1.0};  // angle 0 at zero displacement
  double ang = std::atan2(dy, dx);
  return {std::sin(ang), std::cos(ang)};
}

std::vector<double> PolicyModel::traffic_feature(const RoadNetwork& net,
                                                 const TripsIndex& index,
                                                 double slice_len, int node,
                                                 double departure) const {
  // mean observed traversal time per candidate out-edge over the time slice
  // preceding the departure slice; zero when unobserved
  std::vector<double> out(fanout_, 0.0);
  double slice_start = std::floor(departure / slice_len) * slice_len;
  const auto& eids = net.out_edge_ids(node);
  for (size_t i = 0; i < eids.size() && i < static_cast<size_t>(fanout_); ++i) {
    double mean = index.mean_in_window(eids[i], slice_start - slice_len, slice_start);
    out[i] = std::log1p(mean);
  }
  return out;
}

PolicyState PolicyModel::encode_state(const RoadNetwork& net, const TripsIndex& index,
                                      double slice_len, int dest,
                                      const std::vector<int>& prefix,
                                      double departure) const {
  if (prefix.empty()) fail(ErrorCode::kContract, "encode_state needs a non-empty prefix");
  PolicyState st;
  st.prefix = prefix;
  st.h = initial_hidden();
  for (size_t t = 0; t < prefix.size(); ++t)
    st.h = step_hidden(st.h, prefix[t], static_cast<int>(t));
  int cur = prefix.back();
  st.traffic = traffic_feature(net, index, slice_len, cur, departure);
  Vec2 p = net.normalized_node(cur);
  Vec2 q = net.normalized_node(dest);
  st.dist_to_dest = distance(p, q);
  std::tie(st.dir_sin, st.dir_cos) = direction_feature(p, q);
  return st;
}

Tensor PolicyModel::head_logits(const PolicyState& state) const {
  std::vector<double> extras = state.traffic;
  extras.push_back(state.dist_to_dest);
  extras.push_back(state.dir_sin);
  extras.push_back(state.dir_cos);
  Tensor feats = grad::concat(
      {state.h, Tensor::from_values({static_cast<int>(extras.size())}, extras)});
  Tensor h1 = grad::relu(linear(feats, store_.get("policy.head.w1"),
                                store_.get("policy.head.b1")));
  return linear(h1, store_.get("policy.head.w2"), store_.get("policy.head.b2"));
}

Tensor PolicyModel::action_distribution(const RoadNetwork& net,
                                        const PolicyState& state) const {
  int cur = state.prefix.back();
  const auto& nbr = net.out_neighbors(cur);
  if (nbr.empty())
    fail(ErrorCode::kContract, "dead end at node " + std::to_string(cur));
  std::vector<uint8_t> mask(n_nodes_, 0);
  for (int v : nbr) mask[v] = 1;
  return grad::softmax_masked(head_logits(state), mask);
}

namespace {

int choose_action(const RoadNetwork& net, const Tensor& probs, int cur,
                  DecodeMode mode, Rng* rng) {
  const auto& nbr = net.out_neighbors(cur);
  if (mode == DecodeMode::kGreedy) {
    int best = nbr.front();
    double best_p = -1.0;
    for (int v : nbr) {  // ascending ids; strict > keeps the smallest on ties
      if (probs.at(v) > best_p) {
        best_p = probs.at(v);
        best = v;
      }
    }
    return best;
  }
  if (rng == nullptr) fail(ErrorCode::kContract, "sampling requires an rng");
  double u = rng->uniform01();
  double cum = 0.0;
  for (int v : nbr) {
    cum += probs.at(v);
    if (u < cum) return v;
  }
  return nbr.back();
}

}  // namespace

Episode rollout(const PolicyModel& model, const RoadNetwork& net, const TripsIndex& index,
                double slice_len, const OdtQuery& query, const Path* truth,
                const PolicyConfig& cfg, DecodeMode mode, Rng* rng, bool record_grads) {
  int origin = nearest_node(net, query.lng_o, query.lat_o);
  int dest = nearest_node(net, query.lng_d, query.lat_d);
  if (origin == dest)
    fail(ErrorCode::kContract, "query " + std::to_string(query.id) +
                                   " resolves to a single node");
  int hops = bfs_hops(net, origin, dest);
  int l_max = hops > 0 ? cfg.lmax_mult * hops + cfg.lmax_slack
                       : cfg.lmax_mult * net.n_nodes();

  Episode ep;
  PolicyState st;
  st.prefix.push_back(origin);
  st.h = model.initial_hidden();
  Vec2 dest_p = net.normalized_node(dest);
  int cur = origin;
  int step = 0;
  while (cur != dest && static_cast<int>(ep.actions.size()) < l_max) {
    if (net.out_neighbors(cur).empty()) break;  // dead end, score the partial path
    st.h = model.step_hidden(st.h, cur, step);
    st.traffic = model.traffic_feature(net, index, slice_len, cur, query.departure);
    Vec2 p = net.normalized_node(cur);
    st.dist_to_dest = distance(p, dest_p);
    std::tie(st.dir_sin, st.dir_cos) = PolicyModel::direction_feature(p, dest_p);

    Tensor probs = model.action_distribution(net, st);
    int a = choose_action(net, probs, cur, mode, rng);
    double lp_value = std::log(probs.at(a));
    if (!std::isfinite(lp_value))
      fail(ErrorCode::kNumeric, "non-finite log-probability during rollout");
    if (record_grads) ep.log_probs.push_back(grad::log_fn(grad::pick(probs, a)));
    ep.log_prob_values.push_back(lp_value);
    ep.actions.push_back(a);
    st.prefix.push_back(a);
    cur = a;
    ++step;
  }
  ep.reached = cur == dest;
  ep.predicted.nodes = st.prefix;
  if (truth != nullptr)
    ep.terminal_reward = align::reward(ep.predicted, *truth, net, cfg.omega, cfg.beta);
  return ep;
}

grad::Tensor ce_loss(const PolicyModel& model, const RoadNetwork& net,
                     const TripsIndex& index, double slice_len, const Path& truth,
                     double departure) {
  if (truth.length() < 2) fail(ErrorCode::kContract, "ce_loss needs a path of length >= 2");
  int dest = truth.nodes.back();
  Vec2 dest_p = net.normalized_node(dest);
  PolicyState st;
  st.h = model.initial_hidden();
  Tensor nll = Tensor::scalar(0.0);
  int steps = truth.length() - 1;
  for (int t = 0; t < steps; ++t) {
    int cur = truth.nodes[t];
    st.prefix.push_back(cur);
    st.h = model.step_hidden(st.h, cur, t);
    st.traffic = model.traffic_feature(net, index, slice_len, cur, departure);
    Vec2 p = net.normalized_node(cur);
    st.dist_to_dest = distance(p, dest_p);
    std::tie(st.dir_sin, st.dir_cos) = PolicyModel::direction_feature(p, dest_p);
    Tensor probs = model.action_distribution(net, st);
    int target = truth.nodes[t + 1];
    if (probs.at(target) <= 0.0)
      fail(ErrorCode::kValidation,
           "ground-truth step " + std::to_string(cur) + " -> " +
               std::to_string(target) + " is not an adjacent move");
    nll = grad::sub(nll, grad::log_fn(grad::pick(probs, target)));
  }
  return grad::scale(nll, 1.0 / static_cast<double>(steps));
}

grad::Tensor scst_loss(const std::vector<Episode>& sampled, const Episode& greedy,
                       const PolicyConfig& cfg) {
  if (sampled.empty()) fail(ErrorCode::kContract, "scst_loss needs sampled episodes");
  for (const Episode& ep : sampled) {
    if (ep.actions.empty() || ep.log_probs.size() != ep.actions.size())
      fail(ErrorCode::kContract, "scst_loss: episode without recorded log-probs");
  }
  size_t n = sampled.size();
  std::vector<double> adv(n);
  for (size_t i = 0; i < n; ++i)
    adv[i] = sampled[i].terminal_reward - greedy.terminal_reward;
  if (cfg.standardize_rewards) {
    double mean = 0.0;
    for (double a : adv) mean += a;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double a : adv) var += (a - mean) * (a - mean);
    double sd = std::sqrt(var / static_cast<double>(n));
    for (double& a : adv) a = (a - mean) / std::max(sd, 1e-8);
  }

  Tensor loss = Tensor::scalar(0.0);
  for (size_t i = 0; i < n; ++i) {
    const Episode& ep = sampled[i];
    int t_max = static_cast<int>(ep.log_probs.size());
    Tensor weighted;
    if (cfg.gamma_discount < 1.0) {
      // terminal-only reward: credit decays with distance from the end
      weighted = Tensor::scalar(0.0);
      for (int t = 0; t < t_max; ++t) {
        double w = std::pow(cfg.gamma_discount, static_cast<double>(t_max - 1 - t));
        weighted = grad::add(weighted, grad::scale(ep.log_probs[t], w));
      }
    } else {
      weighted = ep.log_probs[0];
      for (int t = 1; t < t_max; ++t) weighted = grad::add(weighted, ep.log_probs[t]);
    }
    loss = grad::add(loss, grad::scale(weighted, -adv[i] / static_cast<double>(n)));
  }
  return loss;
}

EvalStats evaluate_policy(const PolicyModel& model, const Dataset& ds,
                          const TripsIndex& index, double slice_len,
                          const std::vector<int>& trip_indices,
                          const PolicyConfig& cfg, int threads) {
  EvalStats stats;
  if (trip_indices.empty()) return stats;
  std::vector<double> rewards(trip_indices.size()), lcses(trip_indices.size()),
      dtws(trip_indices.size());
  parallel_for(trip_indices.size(), threads, [&](size_t k) {
    int i = trip_indices[k];
    Path truth = ds.trips[i].path();
    Episode ep = rollout(model, ds.net, index, slice_len, ds.queries[i], &truth, cfg,
                         DecodeMode::kGreedy, nullptr, false);
    align::AlignmentScores s = align::score(ep.predicted, truth, ds.net);
    rewards[k] = ep.terminal_reward;
    lcses[k] = s.lcs_len;
    dtws[k] = s.dtw_norm;
  });
  for (size_t k = 0; k < trip_indices.size(); ++k) {
    stats.mean_reward += rewards[k];
    stats.mean_lcs += lcses[k];
    stats.mean_dtw += dtws[k];
  }
  double denom = static_cast<double>(trip_indices.size());
  stats.mean_reward /= denom;
  stats.mean_lcs /= denom;
  stats.mean_dtw /= denom;
  return stats;
}

PolicyTrainResult train_policy(const Dataset& ds, const PolicyConfig& cfg,
                               double slice_len, uint64_t seed, int threads) {
  cfg.validate();
  std::vector<int> train_idx = ds.indices_of(Split::kTrain);
  std::vector<int> val_idx = ds.indices_of(Split::kVal);
  if (train_idx.empty() || val_idx.empty())
    fail(ErrorCode::kContract, "train_policy needs non-empty train and val splits");

  std::vector<Trip> train_trips;
  for (int i : train_idx) train_trips.push_back(ds.trips[i]);
  TripsIndex index(ds.net, train_trips);

  PolicyModel model(ds.net.n_nodes(), cfg, seed);

  PolicyTrainResult result;
  double best_reward = -std::numeric_limits<double>::infinity();
  int since_step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    bool joint = cfg.gamma_policy_weight > 0.0 && epoch > cfg.warmup_ce_epochs;
    double ce_sum = 0.0, pol_sum = 0.0;
    int pol_count = 0;
    for (size_t k = 0; k < train_idx.size(); ++k) {
      int i = train_idx[k];
      Path truth = ds.trips[i].path();
      Tensor total = ce_loss(model, ds.net, index, slice_len, truth,
                             ds.queries[i].departure);
      ce_sum += total.value();
      if (joint) {
        Episode greedy = rollout(model, ds.net, index, slice_len, ds.queries[i], &truth,
                                 cfg, DecodeMode::kGreedy, nullptr, false);
        Rng ep_rng(mix_seed(mix_seed(seed, "scst", static_cast<uint64_t>(epoch)),
                            static_cast<uint64_t>(i)));
        std::vector<Episode> sampled;
        sampled.reserve(cfg.samples_per_query);
        for (int s = 0; s < cfg.samples_per_query; ++s)
          sampled.push_back(rollout(model, ds.net, index, slice_len, ds.queries[i],
                                    &truth, cfg, DecodeMode::kSample, &ep_rng, true));
        Tensor pol = scst_loss(sampled, greedy, cfg);
        pol_sum += pol.value();
        ++pol_count;
        total = grad::add(grad::scale(pol, cfg.gamma_policy_weight), total);
      }
      if (!std::isfinite(total.value()))
        fail(ErrorCode::kNumeric, "training diverged (non-finite loss) at epoch " +
                                      std::to_string(epoch));
      grad::backward(total);
      if (++since_step >= cfg.batch_size || k + 1 == train_idx.size()) {
        model.params().adam_step(cfg.lr);
        since_step = 0;
      }
    }

    EvalStats val = evaluate_policy(model, ds, index, slice_len, val_idx, cfg, threads);
    PolicyTrainRow row;
    row.epoch = epoch;
    row.ce_loss = ce_sum / static_cast<double>(train_idx.size());
    row.policy_loss = pol_count > 0 ? pol_sum / pol_count : 0.0;
    row.val_mean_reward = val.mean_reward;
    row.val_lcs = val.mean_lcs;
    row.val_dtw = val.mean_dtw;
    result.log.push_back(row);
    if (val.mean_reward > best_reward) {
      best_reward = val.mean_reward;
      result.best = model.params().clone();
      result.best_epoch = epoch;
    }
  }
  return result;
}

}  // namespace odtq::policy
