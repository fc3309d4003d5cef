// Copyright (c) 2026 odtq contributors
// SPDX-License-Identifier: Apache-2.0
#include "odtq/config.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "odtq/error.hpp"

namespace odtq {

void CalibConfig::validate() const {
  if (alpha <= 0.0 || alpha >= 1.0) fail(ErrorCode::kConfig, "alpha must be in (0, 1)");
  if (delta <= 0.0 || delta >= 1.0) fail(ErrorCode::kConfig, "delta must be in (0, 1)");
  if (grid_max <= 0.0 || grid_step <= 0.0)
    fail(ErrorCode::kConfig, "grid_max and grid_step must be > 0");
}

void PipelineConfig::validate() const {
  policy.validate();
  uq.validate();
  calibration.validate();
}

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Parser {
  std::string path;
  int lineno = 0;

  [[noreturn]] void err(const std::string& what) const {
    fail(ErrorCode::kConfig, path + ":" + std::to_string(lineno) + ": " + what);
  }

  double number(const std::string& key, const std::string& v) const {
    try {
      size_t used = 0;
      double d = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      err("key '" + key + "' expects a number, got '" + v + "'");
    }
  }

  int integer(const std::string& key, const std::string& v) const {
    double d = number(key, v);
    int i = static_cast<int>(d);
    if (static_cast<double>(i) != d) err("key '" + key + "' expects an integer");
    return i;
  }

  uint64_t unsigned64(const std::string& key, const std::string& v) const {
    try {
      size_t used = 0;
      unsigned long long u = std::stoull(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return u;
    } catch (const std::exception&) {
      err("key '" + key + "' expects an unsigned integer, got '" + v + "'");
    }
  }

  bool boolean(const std::string& key, const std::string& v) const {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    err("key '" + key + "' expects a boolean, got '" + v + "'");
  }
};

}  // namespace

PipelineConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open config " + path);

  PipelineConfig cfg;
  Parser p{path, 0};
  std::string section;
  std::string line;
  while (std::getline(in, line)) {
    ++p.lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') p.err("malformed section header");
      section = t.substr(1, t.size() - 2);
      if (section != "data" && section != "policy" && section != "uq" &&
          section != "calibration" && section != "eval")
        p.err("unknown section [" + section + "]");
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos) p.err("expected 'key = value'");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (section.empty()) p.err("key '" + key + "' outside any section");

    if (section == "data") {
      auto& d = cfg.data;
      if (key == "seed") d.seed = p.unsigned64(key, value);
      else if (key == "rows") d.rows = p.integer(key, value);
      else if (key == "cols") d.cols = p.integer(key, value);
      else if (key == "spacing") d.spacing = p.number(key, value);
      else if (key == "coord_jitter") d.coord_jitter = p.number(key, value);
      else if (key == "max_nodes") d.max_nodes = p.integer(key, value);
      else if (key == "trips") d.n_trips = p.integer(key, value);
      else if (key == "split_train") d.split_train = p.number(key, value);
      else if (key == "split_val") d.split_val = p.number(key, value);
      else if (key == "split_calib") d.split_calib = p.number(key, value);
      else if (key == "split_test") d.split_test = p.number(key, value);
      else if (key == "slice_len") d.slice_len = p.number(key, value);
      else if (key == "horizon") d.horizon = p.number(key, value);
      else if (key == "base_speed") d.base_speed = p.number(key, value);
      else if (key == "multiplier_min") d.multiplier_min = p.number(key, value);
      else if (key == "multiplier_max") d.multiplier_max = p.number(key, value);
      else if (key == "congestion_wave") d.congestion_wave = p.number(key, value);
      else if (key == "noise_mode") d.noise_mode = value;
      else if (key == "noise_scale") d.noise_scale = p.number(key, value);
      else if (key == "noise_low") d.noise_low = p.number(key, value);
      else if (key == "noise_high") d.noise_high = p.number(key, value);
      else if (key == "path_epsilon") d.path_epsilon = p.number(key, value);
      else if (key == "min_hops") d.min_hops = p.integer(key, value);
      else if (key == "query_jitter") d.query_jitter = p.number(key, value);
      else p.err("unknown key '" + key + "' in [data]");
    } else if (section == "policy") {
      auto& c = cfg.policy;
      if (key == "d_model") c.d_model = p.integer(key, value);
      else if (key == "hidden") c.hidden = p.integer(key, value);
      else if (key == "fanout") c.fanout = p.integer(key, value);
      else if (key == "gamma_discount") c.gamma_discount = p.number(key, value);
      else if (key == "gamma_policy_weight") c.gamma_policy_weight = p.number(key, value);
      else if (key == "omega") c.omega = p.number(key, value);
      else if (key == "beta") c.beta = p.number(key, value);
      else if (key == "samples_per_query") c.samples_per_query = p.integer(key, value);
      else if (key == "warmup_ce_epochs") c.warmup_ce_epochs = p.integer(key, value);
      else if (key == "epochs") c.epochs = p.integer(key, value);
      else if (key == "lr") c.lr = p.number(key, value);
      else if (key == "batch_size") c.batch_size = p.integer(key, value);
      else if (key == "lmax_mult") c.lmax_mult = p.integer(key, value);
      else if (key == "lmax_slack") c.lmax_slack = p.integer(key, value);
      else if (key == "standardize_rewards") c.standardize_rewards = p.boolean(key, value);
      else if (key == "encoder") c.encoder = value;
      else p.err("unknown key '" + key + "' in [policy]");
    } else if (section == "uq") {
      auto& c = cfg.uq;
      if (key == "n_experts") c.n_experts = p.integer(key, value);
      else if (key == "top_k") c.top_k = p.integer(key, value);
      else if (key == "expert_width") c.expert_width = p.integer(key, value);
      else if (key == "m") c.m = p.integer(key, value);
      else if (key == "hidden") c.hidden = p.integer(key, value);
      else if (key == "seg_dim") c.seg_dim = p.integer(key, value);
      else if (key == "d_edge") c.d_edge = p.integer(key, value);
      else if (key == "d_time") c.d_time = p.integer(key, value);
      else if (key == "epochs") c.epochs = p.integer(key, value);
      else if (key == "lr") c.lr = p.number(key, value);
      else if (key == "batch_size") c.batch_size = p.integer(key, value);
      else if (key == "rho") c.rho = p.number(key, value);
      else if (key == "hist_window") c.hist_window = p.number(key, value);
      else if (key == "hist_bucket") c.hist_bucket = p.number(key, value);
      else if (key == "hist_mode") c.hist_mode = value;
      else if (key == "path_mode") c.path_mode = value;
      else if (key == "gate_noise") c.gate_noise = p.boolean(key, value);
      else if (key == "embed_file") c.embed_file = value;
      else p.err("unknown key '" + key + "' in [uq]");
    } else if (section == "calibration") {
      auto& c = cfg.calibration;
      if (key == "alpha") c.alpha = p.number(key, value);
      else if (key == "delta") c.delta = p.number(key, value);
      else if (key == "grid_max") c.grid_max = p.number(key, value);
      else if (key == "grid_step") c.grid_step = p.number(key, value);
      else p.err("unknown key '" + key + "' in [calibration]");
    } else {  // eval
      auto& c = cfg.eval;
      if (key == "apply_calibration") c.apply_calibration = p.boolean(key, value);
      else if (key == "queries_file") c.queries_file = value;
      else p.err("unknown key '" + key + "' in [eval]");
    }
  }
  cfg.validate();
  return cfg;
}

std::string PipelineConfig::canonical() const {
  std::ostringstream out;
  out << "data.seed=" << data.seed
      << " data.rows=" << data.rows << " data.cols=" << data.cols
      << " data.spacing=" << format_float(data.spacing)
      << " data.coord_jitter=" << format_float(data.coord_jitter)
      << " data.max_nodes=" << data.max_nodes
      << " data.trips=" << data.n_trips
      << " data.splits=" << format_float(data.split_train) << '/'
      << format_float(data.split_val) << '/' << format_float(data.split_calib) << '/'
      << format_float(data.split_test)
      << " data.slice_len=" << format_float(data.slice_len)
      << " data.horizon=" << format_float(data.horizon)
      << " data.base_speed=" << format_float(data.base_speed)
      << " data.multiplier=" << format_float(data.multiplier_min) << '/'
      << format_float(data.multiplier_max)
      << " data.congestion_wave=" << format_float(data.congestion_wave)
      << " data.noise=" << data.noise_mode << '/' << format_float(data.noise_scale)
      << '/' << format_float(data.noise_low) << '/' << format_float(data.noise_high)
      << " data.path_epsilon=" << format_float(data.path_epsilon)
      << " data.min_hops=" << data.min_hops
      << " data.query_jitter=" << format_float(data.query_jitter)
      << " policy.d_model=" << policy.d_model << " policy.hidden=" << policy.hidden
      << " policy.fanout=" << policy.fanout
      << " policy.gamma_discount=" << format_float(policy.gamma_discount)
      << " policy.gamma_policy_weight=" << format_float(policy.gamma_policy_weight)
      << " policy.omega=" << format_float(policy.omega)
      << " policy.beta=" << format_float(policy.beta)
      << " policy.samples_per_query=" << policy.samples_per_query
      << " policy.warmup_ce_epochs=" << policy.warmup_ce_epochs
      << " policy.epochs=" << policy.epochs
      << " policy.lr=" << format_float(policy.lr)
      << " policy.batch_size=" << policy.batch_size
      << " policy.lmax=" << policy.lmax_mult << '+' << policy.lmax_slack
      << " policy.standardize_rewards=" << policy.standardize_rewards
      << " policy.encoder=" << policy.encoder
      << " uq.n_experts=" << uq.n_experts << " uq.top_k=" << uq.top_k
      << " uq.expert_width=" << uq.expert_width << " uq.m=" << uq.m
      << " uq.hidden=" << uq.hidden << " uq.seg_dim=" << uq.seg_dim
      << " uq.d_edge=" << uq.d_edge << " uq.d_time=" << uq.d_time
      << " uq.epochs=" << uq.epochs << " uq.lr=" << format_float(uq.lr)
      << " uq.batch_size=" << uq.batch_size << " uq.rho=" << format_float(uq.rho)
      << " uq.hist_window=" << format_float(uq.hist_window)
      << " uq.hist_bucket=" << format_float(uq.hist_bucket)
      << " uq.hist_mode=" << uq.hist_mode << " uq.path_mode=" << uq.path_mode
      << " uq.gate_noise=" << uq.gate_noise << " uq.embed_file=" << uq.embed_file
      << " calibration.alpha=" << format_float(calibration.alpha)
      << " calibration.delta=" << format_float(calibration.delta)
      << " calibration.grid=" << format_float(calibration.grid_max) << '/'
      << format_float(calibration.grid_step)
      << " eval.apply_calibration=" << eval.apply_calibration
      << " eval.queries_file=" << eval.queries_file;
  return out.str();
}

std::string PipelineConfig::digest() const {
  std::string c = canonical();
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : c) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace odtq
