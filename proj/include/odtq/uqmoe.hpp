// Copyright (c) 2026 odtq contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "odtq/param_store.hpp"
#include "odtq/rng.hpp"
#include "odtq/roadnet.hpp"
#include "odtq/synthgen.hpp"
#include "odtq/tensor.hpp"
#include "odtq/traffic.hpp"

namespace odtq::uq {

struct UqConfig {
  int n_experts = 8;
  int top_k = 2;
  int expert_width = 64;
  int m = 5;         // histogram entries per segment
  int hidden = 64;   // sequence-encoder width
  int seg_dim = 32;  // per-segment embedding width
  int d_edge = 16;
  int d_time = 8;
  int epochs = 30;
  double lr = 0.01;
  int batch_size = 16;
  double rho = 0.1;  // MIS confidence parameter (1-rho coverage target)
  double hist_window = 600.0;
  double hist_bucket = 5.0;
  std::string hist_mode = "largest";   // largest | frequent
  std::string path_mode = "predicted"; // predicted | truth
  bool gate_noise = true;
  std::string embed_file;  // optional pretrained edge-embedding table

  void validate() const;
};

/// Top-m (travel time, relative frequency) pairs for one segment, built
/// from observations strictly before the departure time. Bucketed travel
/// times, values descending, zero-padded to m entries.
struct SegmentHistogram {
  std::vector<double> d;
  std::vector<double> f;
};

SegmentHistogram segment_histogram(const TripsIndex& index, int edge, double departure,
                                   double window, int m, double bucket = 5.0,
                                   const std::string& mode = "largest");

struct IntervalEstimate {
  double y_hat = 0.0;
  double sigma_l = 0.0;
  double sigma_u = 0.0;
};

/// Graph handles of one forward pass (normalized target scale).
struct UqOutput {
  grad::Tensor y_hat, sigma_l, sigma_u;
};

class UqModel {
 public:
  UqModel(int n_edges, int n_slices, double slice_len, const UqConfig& cfg,
          uint64_t seed);
  explicit UqModel(grad::ParamStore store);  // architecture from metadata

  grad::ParamStore& params() { return store_; }
  const grad::ParamStore& params() const { return store_; }

  double y_scale() const { return store_.meta("uq.y_scale"); }
  void set_y_scale(double s) { store_.set_meta("uq.y_scale", s); }

  int n_experts() const { return n_experts_; }
  int top_k() const { return top_k_; }
  int m() const { return m_; }
  double hist_window() const { return hist_window_; }
  double hist_bucket() const { return hist_bucket_; }
  const std::string& hist_mode() const { return hist_mode_; }

  /// Pre-softmax gate scores; training adds N(0,1)*softplus(r'*W_noise)
  /// per coordinate.
  grad::Tensor gate_scores(const grad::Tensor& r_prime, bool training, Rng* rng) const;

  /// Noisy top-k gate over one encoded segment: softmax restricted to the
  /// k highest gate scores; exactly min(k, n_experts) strictly positive
  /// weights. Noise is injected only when training.
  grad::Tensor gate(const grad::Tensor& r_prime, bool training, Rng* rng) const;

  /// Mixture output sum_{i in TopK} G_i * E_i(r') for one segment.
  grad::Tensor moe_output(const grad::Tensor& r_prime, bool training, Rng* rng) const;

  /// Segment features -> sequence encoder -> mixture; pooled by summing
  /// over the sequence; three heads (point, lower offset, upper offset).
  UqOutput forward(const RoadNetwork& net, const Path& path, double departure,
                   const TripsIndex& index, bool training, Rng* rng) const;

  /// Denormalized interval estimate in seconds (deterministic: noiseless gate).
  IntervalEstimate predict(const RoadNetwork& net, const Path& path, double departure,
                           const TripsIndex& index) const;

 private:
  grad::Tensor encode_segments_one(const grad::Tensor& h_prev, const grad::Tensor& c_prev,
                                   const grad::Tensor& x, grad::Tensor& c_next) const;

  int n_edges_ = 0, n_slices_ = 0;
  double slice_len_ = 600.0;
  int n_experts_ = 0, top_k_ = 0, expert_width_ = 0, m_ = 0;
  int hidden_ = 0, seg_dim_ = 0, d_edge_ = 0, d_time_ = 0;
  double hist_window_ = 600.0, hist_bucket_ = 5.0;
  std::string hist_mode_ = "largest";
  bool gate_noise_ = true;
  grad::ParamStore store_;
};

/// Mean interval score over a batch: width plus 2/rho-scaled excursions
/// outside [l, u] plus the absolute point error.
grad::Tensor mis_loss(const std::vector<UqOutput>& preds,
                      const std::vector<double>& truths, double rho);
double mis_value(const IntervalEstimate& e, double y, double rho);

struct UqTrainRow {
  int epoch = 0;
  double train_mis = 0.0;  // seconds scale
  double val_mis = 0.0;
};

struct UqTrainResult {
  grad::ParamStore best;
  std::vector<UqTrainRow> log;
  int best_epoch = 0;
};

/// Trains the interval model on MIS loss. paths[i] is the encoding path
/// for trip i (greedy-decoded or ground truth per config). Histograms are
/// indexed over training-split trips only; horizon/slice_len sizes the
/// departure-slot embedding table.
UqTrainResult train_uq(const Dataset& ds, const std::vector<Path>& paths,
                       const UqConfig& cfg, double slice_len, double horizon,
                       uint64_t seed, int threads = 1);

}  // namespace odtq::uq
