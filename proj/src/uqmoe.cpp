// Copyright (c) 2026 odtq contributors
// SPDX-License-Identifier: Apache-2.0
#include "odtq/uqmoe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "odtq/error.hpp"
#include "odtq/parallel.hpp"

namespace odtq::uq {

using grad::Tensor;

void UqConfig::validate() const {
  if (n_experts < 1) fail(ErrorCode::kConfig, "n_experts must be >= 1");
  if (top_k < 1 || top_k > n_experts)
    fail(ErrorCode::kConfig, "top_k must be in [1, n_experts]");
  if (m < 1) fail(ErrorCode::kConfig, "m must be >= 1");
  if (expert_width < 1 || hidden < 1 || seg_dim < 1 || d_edge < 1 || d_time < 1)
    fail(ErrorCode::kConfig, "uq dimensions must be >= 1");
  if (epochs < 1 || batch_size < 1 || lr <= 0.0)
    fail(ErrorCode::kConfig, "bad uq training parameters");
  if (rho <= 0.0 || rho >= 1.0) fail(ErrorCode::kConfig, "rho must be in (0, 1)");
  if (hist_window <= 0.0 || hist_bucket <= 0.0)
    fail(ErrorCode::kConfig, "histogram window and bucket must be > 0");
  if (hist_mode != "largest" && hist_mode != "frequent")
    fail(ErrorCode::kConfig, "hist_mode must be 'largest' or 'frequent'");
  if (path_mode != "predicted" && path_mode != "truth")
    fail(ErrorCode::kConfig, "path_mode must be 'predicted' or 'truth'");
}

SegmentHistogram segment_histogram(const TripsIndex& index, int edge, double departure,
                                   double window, int m, double bucket,
                                   const std::string& mode) {
  if (m < 1) fail(ErrorCode::kContract, "m must be >= 1");
  if (bucket <= 0.0) fail(ErrorCode::kContract, "bucket must be > 0");
  SegmentHistogram h;
  h.d.assign(m, 0.0);
  h.f.assign(m, 0.0);
  auto obs = index.in_window(edge, departure - window, departure);
  if (obs.empty()) return h;

  std::map<long long, int> counts;  // bucket index -> count
  for (const Traversal& t : obs)
    counts[static_cast<long long>(std::floor(t.duration / bucket))]++;
  double total = static_cast<double>(obs.size());

  std::vector<std::pair<double, int>> entries;  // (bucket value, count)
  for (const auto& [b, c] : counts)
    entries.push_back({static_cast<double>(b) * bucket, c});

  if (mode == "largest") {
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
  } else if (mode == "frequent") {
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first > b.first;
    });
  } else {
    fail(ErrorCode::kContract, "unknown histogram mode '" + mode + "'");
  }
  if (entries.size() > static_cast<size_t>(m)) entries.resize(m);
  // report selected buckets by descending travel time
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  for (size_t i = 0; i < entries.size(); ++i) {
    h.d[i] = entries[i].first;
    h.f[i] = entries[i].second / total;
  }
  return h;
}

namespace {

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  return grad::add(grad::matmul(x, w), b);
}

std::string expert_prefix(int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "uq.expert%02d.", i);
  return buf;
}

constexpr double kModeLargest = 0.0, kModeFrequent = 1.0;

}  // namespace

UqModel::UqModel(int n_edges, int n_slices, double slice_len, const UqConfig& cfg,
                 uint64_t seed) {
  cfg.validate();
  if (n_edges < 1 || n_slices < 1)
    fail(ErrorCode::kContract, "UqModel needs at least one edge and one slice");
  n_edges_ = n_edges;
  n_slices_ = n_slices;
  slice_len_ = slice_len;
  n_experts_ = cfg.n_experts;
  top_k_ = cfg.top_k;
  expert_width_ = cfg.expert_width;
  m_ = cfg.m;
  hidden_ = cfg.hidden;
  seg_dim_ = cfg.seg_dim;
  d_edge_ = cfg.d_edge;
  d_time_ = cfg.d_time;
  hist_window_ = cfg.hist_window;
  hist_bucket_ = cfg.hist_bucket;
  hist_mode_ = cfg.hist_mode;
  gate_noise_ = cfg.gate_noise;

  Rng rng(mix_seed(seed, "uq-init"));
  store_.add_normal("uq.edge_embed", {n_edges_, d_edge_}, rng, 0.1);
  store_.add_normal("uq.time_embed", {n_slices_, d_time_}, rng, 0.1);
  int in_dim = 2 * m_ + d_edge_ + d_time_;
  store_.add_normal("uq.seg.w1", {in_dim, hidden_}, rng,
                    1.0 / std::sqrt(static_cast<double>(in_dim)));
  store_.add("uq.seg.b1", {hidden_});
  store_.add_normal("uq.seg.w2", {hidden_, seg_dim_}, rng,
                    1.0 / std::sqrt(static_cast<double>(hidden_)));
  store_.add("uq.seg.b2", {seg_dim_});
  double sd_in = 1.0 / std::sqrt(static_cast<double>(seg_dim_));
  double sd_h = 1.0 / std::sqrt(static_cast<double>(hidden_));
  for (const char* g : {"i", "f", "o", "g"}) {
    store_.add_normal(std::string("uq.lstm.w") + g, {seg_dim_, hidden_}, rng, sd_in);
    store_.add_normal(std::string("uq.lstm.u") + g, {hidden_, hidden_}, rng, sd_h);
    store_.add(std::string("uq.lstm.b") + g, {hidden_});
  }
  store_.add_normal("uq.gate.wg", {hidden_, n_experts_}, rng, sd_h);
  store_.add_normal("uq.gate.wnoise", {hidden_, n_experts_}, rng, sd_h);
  for (int i = 0; i < n_experts_; ++i) {
    std::string p = expert_prefix(i);
    store_.add_normal(p + "w1", {hidden_, expert_width_}, rng, sd_h);
    store_.add(p + "b1", {expert_width_});
    store_.add_normal(p + "w2", {expert_width_, hidden_}, rng,
                      1.0 / std::sqrt(static_cast<double>(expert_width_)));
    store_.add(p + "b2", {hidden_});
  }
  for (const char* head : {"y", "l", "u"}) {
    store_.add_normal(std::string("uq.head_") + head + ".w", {hidden_}, rng, sd_h);
    store_.add(std::string("uq.head_") + head + ".b", {1});
  }

  if (!cfg.embed_file.empty()) {
    std::ifstream in(cfg.embed_file);
    if (!in) fail(ErrorCode::kIo, "cannot open embedding file " + cfg.embed_file);
    auto& table = store_.get("uq.edge_embed").mutable_values();
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::istringstream ss(line);
      int e;
      if (!(ss >> e) || e < 0 || e >= n_edges_)
        fail(ErrorCode::kParse, cfg.embed_file + ":" + std::to_string(lineno) +
                                    ": bad edge id");
      for (int j = 0; j < d_edge_; ++j)
        if (!(ss >> table[static_cast<size_t>(e) * d_edge_ + j]))
          fail(ErrorCode::kParse, cfg.embed_file + ":" + std::to_string(lineno) +
                                      ": expected " + std::to_string(d_edge_) +
                                      " values");
    }
  }

  store_.set_meta("uq.n_edges", n_edges_);
  store_.set_meta("uq.n_slices", n_slices_);
  store_.set_meta("uq.slice_len", slice_len_);
  store_.set_meta("uq.n_experts", n_experts_);
  store_.set_meta("uq.top_k", top_k_);
  store_.set_meta("uq.expert_width", expert_width_);
  store_.set_meta("uq.m", m_);
  store_.set_meta("uq.hidden", hidden_);
  store_.set_meta("uq.seg_dim", seg_dim_);
  store_.set_meta("uq.d_edge", d_edge_);
  store_.set_meta("uq.d_time", d_time_);
  store_.set_meta("uq.hist_window", hist_window_);
  store_.set_meta("uq.hist_bucket", hist_bucket_);
  store_.set_meta("uq.hist_mode", hist_mode_ == "largest" ? kModeLargest : kModeFrequent);
  store_.set_meta("uq.gate_noise", gate_noise_ ? 1.0 : 0.0);
  store_.set_meta("uq.y_scale", 1.0);
}

UqModel::UqModel(grad::ParamStore store) : store_(std::move(store)) {
  n_edges_ = static_cast<int>(store_.meta("uq.n_edges"));
  n_slices_ = static_cast<int>(store_.meta("uq.n_slices"));
  slice_len_ = store_.meta("uq.slice_len");
  n_experts_ = static_cast<int>(store_.meta("uq.n_experts"));
  top_k_ = static_cast<int>(store_.meta("uq.top_k"));
  expert_width_ = static_cast<int>(store_.meta("uq.expert_width"));
  m_ = static_cast<int>(store_.meta("uq.m"));
  hidden_ = static_cast<int>(store_.meta("uq.hidden"));
  seg_dim_ = static_cast<int>(store_.meta("uq.seg_dim"));
  d_edge_ = static_cast<int>(store_.meta("uq.d_edge"));
  d_time_ = static_cast<int>(store_.meta("uq.d_time"));
  hist_window_ = store_.meta("uq.hist_window");
  hist_bucket_ = store_.meta("uq.hist_bucket");
  hist_mode_ = store_.meta("uq.hist_mode") == kModeLargest ? "largest" : "frequent";
  gate_noise_ = store_.meta("uq.gate_noise") != 0.0;
}

Tensor UqModel::gate_scores(const Tensor& r_prime, bool training, Rng* rng) const {
  Tensor scores = grad::matmul(r_prime, store_.get("uq.gate.wg"));
  if (training && gate_noise_) {
    if (rng == nullptr) fail(ErrorCode::kContract, "gate noise requires an rng");
    Tensor sp = grad::softplus(grad::matmul(r_prime, store_.get("uq.gate.wnoise")));
    std::vector<double> eps(n_experts_);
    for (double& e : eps) e = rng->normal();
    scores = grad::add(scores, grad::mul(Tensor::from_values({n_experts_}, eps), sp));
  }
  return scores;
}

Tensor UqModel::gate(const Tensor& r_prime, bool training, Rng* rng) const {
  Tensor scores = gate_scores(r_prime, training, rng);
  // top-k as a mask into the softmax; identical to -inf substitution
  std::vector<int> order(n_experts_);
  for (int i = 0; i < n_experts_; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores.at(a) != scores.at(b)) return scores.at(a) > scores.at(b);
    return a < b;
  });
  std::vector<uint8_t> mask(n_experts_, 0);
  for (int i = 0; i < top_k_; ++i) mask[order[i]] = 1;
  return grad::softmax_masked(scores, mask);
}

Tensor UqModel::moe_output(const Tensor& r_prime, bool training, Rng* rng) const {
  Tensor g = gate(r_prime, training, rng);
  Tensor out;
  for (int i = 0; i < n_experts_; ++i) {
    if (g.at(i) == 0.0) continue;  // unrouted expert: no compute, no gradient
    std::string p = expert_prefix(i);
    Tensor e = linear(grad::relu(linear(r_prime, store_.get(p + "w1"),
                                        store_.get(p + "b1"))),
                      store_.get(p + "w2"), store_.get(p + "b2"));
    Tensor term = grad::mul_scalar(e, grad::pick(g, i));
    out = out.defined() ? grad::add(out, term) : term;
  }
  return out;
}

Tensor UqModel::encode_segments_one(const Tensor& h_prev, const Tensor& c_prev,
                                    const Tensor& x, Tensor& c_next) const {
  const auto& s = store_;
  Tensor i = grad::sigmoid(grad::add(linear(x, s.get("uq.lstm.wi"), s.get("uq.lstm.bi")),
                                     grad::matmul(h_prev, s.get("uq.lstm.ui"))));
  Tensor f = grad::sigmoid(grad::add(linear(x, s.get("uq.lstm.wf"), s.get("uq.lstm.bf")),
                                     grad::matmul(h_prev, s.get("uq.lstm.uf"))));
  Tensor o = grad::sigmoid(grad::add(linear(x, s.get("uq.lstm.wo"), s.get("uq.lstm.bo")),
                                     grad::matmul(h_prev, s.get("uq.lstm.uo"))));
  Tensor g = grad::tanh_fn(grad::add(linear(x, s.get("uq.lstm.wg"), s.get("uq.lstm.bg")),
                                     grad::matmul(h_prev, s.get("uq.lstm.ug"))));
  c_next = grad::add(grad::mul(f, c_prev), grad::mul(i, g));
  return grad::mul(o, grad::tanh_fn(c_next));
}

UqOutput UqModel::forward(const RoadNetwork& net, const Path& path, double departure,
                          const TripsIndex& index, bool training, Rng* rng) const {
  if (path.length() < 2) fail(ErrorCode::kContract, "forward needs a path of length >= 2");
  int slot = static_cast<int>(std::floor(departure / slice_len_)) % n_slices_;
  if (slot < 0) slot += n_slices_;
  Tensor time_emb = grad::row(store_.get("uq.time_embed"), slot);

  Tensor h = Tensor::zeros({hidden_});
  Tensor c = Tensor::zeros({hidden_});
  Tensor pooled;
  for (size_t j = 0; j + 1 < path.nodes.size(); ++j) {
    int e = net.edge_between(path.nodes[j], path.nodes[j + 1]);
    if (e < 0)
      fail(ErrorCode::kValidation, "path step " + std::to_string(path.nodes[j]) +
                                       " -> " + std::to_string(path.nodes[j + 1]) +
                                       " is not an edge");
    SegmentHistogram hist =
        segment_histogram(index, e, departure, hist_window_, m_, hist_bucket_, hist_mode_);
    std::vector<double> feat(2 * m_);
    for (int i = 0; i < m_; ++i) {
      feat[2 * i] = std::log1p(hist.d[i]);
      feat[2 * i + 1] = hist.f[i];
    }
    Tensor x = grad::concat({Tensor::from_values({2 * m_}, feat),
                             grad::row(store_.get("uq.edge_embed"), e), time_emb});
    Tensor r = linear(grad::relu(linear(x, store_.get("uq.seg.w1"),
                                        store_.get("uq.seg.b1"))),
                      store_.get("uq.seg.w2"), store_.get("uq.seg.b2"));
    Tensor c_next;
    h = encode_segments_one(h, c, r, c_next);
    c = c_next;
    Tensor r2 = moe_output(h, training, rng);
    pooled = pooled.defined() ? grad::add(pooled, r2) : r2;
  }

  UqOutput out;
  out.y_hat = grad::add(grad::dot(store_.get("uq.head_y.w"), pooled),
                        store_.get("uq.head_y.b"));
  out.sigma_l = grad::softplus(grad::add(grad::dot(store_.get("uq.head_l.w"), pooled),
                                         store_.get("uq.head_l.b")));
  out.sigma_u = grad::softplus(grad::add(grad::dot(store_.get("uq.head_u.w"), pooled),
                                         store_.get("uq.head_u.b")));
  return out;
}

IntervalEstimate UqModel::predict(const RoadNetwork& net, const Path& path,
                                  double departure, const TripsIndex& index) const {
  UqOutput out = forward(net, path, departure, index, false, nullptr);
  double s = y_scale();
  IntervalEstimate e;
  e.y_hat = out.y_hat.value() * s;
  e.sigma_l = out.sigma_l.value() * s;
  e.sigma_u = out.sigma_u.value() * s;
  if (!std::isfinite(e.y_hat) || !std::isfinite(e.sigma_l) || !std::isfinite(e.sigma_u))
    fail(ErrorCode::kNumeric, "interval model produced non-finite output");
  return e;
}

grad::Tensor mis_loss(const std::vector<UqOutput>& preds,
                      const std::vector<double>& truths, double rho) {
  if (rho <= 0.0 || rho >= 1.0) fail(ErrorCode::kContract, "rho must be in (0, 1)");
  if (preds.empty() || preds.size() != truths.size())
    fail(ErrorCode::kContract, "mis_loss needs matched non-empty batches");
  double penalty = 2.0 / rho;
  Tensor total = Tensor::scalar(0.0);
  for (size_t i = 0; i < preds.size(); ++i) {
    Tensor y = Tensor::scalar(truths[i]);
    Tensor upper = grad::add(preds[i].y_hat, preds[i].sigma_u);
    Tensor lower = grad::sub(preds[i].y_hat, preds[i].sigma_l);
    Tensor width = grad::sub(upper, lower);
    Tensor over = grad::scale(grad::relu(grad::sub(y, upper)), penalty);
    Tensor under = grad::scale(grad::relu(grad::sub(lower, y)), penalty);
    Tensor point = grad::abs_fn(grad::sub(y, preds[i].y_hat));
    total = grad::add(total, grad::add(grad::add(width, over), grad::add(under, point)));
  }
  return grad::scale(total, 1.0 / static_cast<double>(preds.size()));
}

double mis_value(const IntervalEstimate& e, double y, double rho) {
  if (rho <= 0.0 || rho >= 1.0) fail(ErrorCode::kContract, "rho must be in (0, 1)");
  double upper = e.y_hat + e.sigma_u;
  double lower = e.y_hat - e.sigma_l;
  double v = upper - lower + std::abs(y - e.y_hat);
  if (y > upper) v += 2.0 / rho * (y - upper);
  if (y < lower) v += 2.0 / rho * (lower - y);
  return v;
}

UqTrainResult train_uq(const Dataset& ds, const std::vector<Path>& paths,
                       const UqConfig& cfg, double slice_len, double horizon,
                       uint64_t seed, int threads) {
  cfg.validate();
  if (paths.size() != ds.trips.size())
    fail(ErrorCode::kContract, "train_uq needs one path per trip");
  std::vector<int> train_idx = ds.indices_of(Split::kTrain);
  std::vector<int> val_idx = ds.indices_of(Split::kVal);
  if (train_idx.empty() || val_idx.empty())
    fail(ErrorCode::kContract, "train_uq needs non-empty train and val splits");

  std::vector<Trip> train_trips;
  for (int i : train_idx) train_trips.push_back(ds.trips[i]);
  TripsIndex index(ds.net, train_trips);

  int n_slices = std::max(1, static_cast<int>(horizon / slice_len));
  UqModel model(ds.net.n_edges(), n_slices, slice_len, cfg, seed);
  double y_scale = 0.0;
  for (int i : train_idx) y_scale += ds.trips[i].travel_time();
  y_scale = std::max(1.0, y_scale / static_cast<double>(train_idx.size()));
  model.set_y_scale(y_scale);

  auto val_mis = [&]() {
    std::vector<double> scores(val_idx.size());
    parallel_for(val_idx.size(), threads, [&](size_t k) {
      int i = val_idx[k];
      IntervalEstimate e =
          model.predict(ds.net, paths[i], ds.queries[i].departure, index);
      scores[k] = mis_value(e, ds.trips[i].travel_time(), cfg.rho);
    });
    double s = 0.0;
    for (double v : scores) s += v;
    return s / static_cast<double>(scores.size());
  };

  UqTrainResult result;
  double best = std::numeric_limits<double>::infinity();
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng noise_rng(mix_seed(mix_seed(seed, "uq-noise"), static_cast<uint64_t>(epoch)));
    double train_sum = 0.0;
    std::vector<UqOutput> batch;
    std::vector<double> batch_y;
    auto flush = [&]() {
      if (batch.empty()) return;
      Tensor loss = mis_loss(batch, batch_y, cfg.rho);
      if (!std::isfinite(loss.value()))
        fail(ErrorCode::kNumeric, "uq training diverged (non-finite loss) at epoch " +
                                      std::to_string(epoch));
      train_sum += loss.value() * static_cast<double>(batch.size());
      grad::backward(loss);
      model.params().adam_step(cfg.lr);
      batch.clear();
      batch_y.clear();
    };
    for (int i : train_idx) {
      batch.push_back(model.forward(ds.net, paths[i], ds.queries[i].departure, index,
                                    true, &noise_rng));
      batch_y.push_back(ds.trips[i].travel_time() / y_scale);
      if (static_cast<int>(batch.size()) >= cfg.batch_size) flush();
    }
    flush();

    UqTrainRow row;
    row.epoch = epoch;
    row.train_mis = train_sum / static_cast<double>(train_idx.size()) * y_scale;
    row.val_mis = val_mis();
    result.log.push_back(row);
    if (row.val_mis < best) {
      best = row.val_mis;
      result.best = model.params().clone();
      result.best_epoch = epoch;
    }
  }
  return result;
}

}  // namespace odtq::uq
