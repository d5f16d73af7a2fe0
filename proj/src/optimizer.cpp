// Copyright 2026 The NQFS Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nqfs/optimizer.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace nqfs {

using nlohmann::json;

void AdamConfig::validate() const {
  if (!(lr_net >= 0.0) || !(lr_reg >= 0.0)) {
    throw ConfigError("adam: learning rates must be non-negative");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("adam: betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw ConfigError("adam: eps must be positive");
}

void project_regularization(std::span<double> params, std::size_t reg_offset) {
  if (reg_offset + 3 > params.size()) {
    throw ConfigError("project_regularization: parameter vector too short");
  }
  double& c1 = params[reg_offset];
  double& c2 = params[reg_offset + 1];
  double& s = params[reg_offset + 2];
  c1 = std::max(c1, 0.0);
  c2 = std::max(c2, c1);
  s = std::max(s, kMinSharpness);
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad,
               const AdamConfig& cfg, std::size_t reg_offset) {
  const std::size_t P = params.size();
  if (grad.size() != P || state.m.size() != P || state.v.size() != P) {
    throw ConfigError("adam_step: shape mismatch");
  }
  double norm2 = 0.0;
  for (double g : grad) {
    if (!std::isfinite(g)) throw NumericalError("adam_step: gradient is not finite");
    norm2 += g * g;
  }
  double scale = 1.0;
  if (cfg.clip_norm > 0.0 && norm2 > cfg.clip_norm * cfg.clip_norm) {
    scale = cfg.clip_norm / std::sqrt(norm2);
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t p = 0; p < P; ++p) {
    const double g = scale * grad[p];
    state.m[p] = cfg.beta1 * state.m[p] + (1.0 - cfg.beta1) * g;
    state.v[p] = cfg.beta2 * state.v[p] + (1.0 - cfg.beta2) * g * g;
    const double mh = state.m[p] / bc1;
    const double vh = state.v[p] / bc2;
    const double lr = p < reg_offset ? cfg.lr_net : cfg.lr_reg;
    params[p] -= lr * mh / (std::sqrt(vh) + cfg.eps);
  }
  project_regularization(params, reg_offset);
}

void write_trace_header(std::ostream& os) { os << "iter,E,E_err,mean_n,acc_disp,acc_pm\n"; }

void write_trace_row(std::ostream& os, const TraceRow& r) {
  os << std::setprecision(17) << r.iter << ',' << r.energy << ',' << r.energy_err << ','
     << r.mean_n << ',' << r.acc_disp << ',' << r.acc_pm << '\n';
}

TrainState make_train_state(const NqfsModel& model, ParamVector params,
                            const SamplerConfig& sampler) {
  if (params.size() != model.num_params()) {
    throw ConfigError("make_train_state: parameter vector does not match the model");
  }
  TrainState st;
  st.chains = init_chains(model, params, sampler);
  st.adam = AdamState(params.size());
  st.params = std::move(params);
  return st;
}

void train(TrainState& state, const NqfsModel& model, const HamiltonianSpec& spec,
           const SamplerConfig& sampler, const TrainConfig& cfg,
           const TrainCallback& on_iteration, const TrainCallback& on_checkpoint) {
  cfg.adam.validate();
  sampler.validate();
  if (cfg.n_iters < 0) throw ConfigError("train: n_iters must be non-negative");
  const int burn = cfg.burn_in < 0 ? sampler.effective_burn_in() : cfg.burn_in;
  EstimatorOptions est;
  est.threads = cfg.threads;
  SamplerConfig scfg = sampler;
  scfg.threads = cfg.threads;
  for (int it = 0; it < cfg.n_iters; ++it) {
    const SampleBatch batch = advance_chains(state.chains, model, state.params, scfg, burn);
    const GradientEstimate ge = estimate_gradient(batch, spec, model, state.params, est);
    const MoveStats ms = batch.total_stats();
    TraceRow row;
    row.iter = state.iter;
    row.energy = ge.energy.mean;
    row.energy_err = ge.energy.std_err;
    row.mean_n = ge.mean_n.mean;
    row.acc_disp = ms.disp_rate();
    row.acc_pm = ms.pm_rate();
    adam_step(state.adam, state.params, ge.grad, cfg.adam, model.reg_offset());
    for (auto& c : state.chains) c.log_amp = model.log_amplitude(state.params, c.config);
    state.trace.push_back(row);
    ++state.iter;
    if (on_iteration) on_iteration(state);
    if (on_checkpoint && cfg.checkpoint_every > 0 &&
        state.iter % static_cast<std::uint64_t>(cfg.checkpoint_every) == 0) {
      on_checkpoint(state);
    }
  }
}

json checkpoint_to_json(const TrainState& st, const json& meta) {
  json doc;
  doc["format"] = "nqfs-checkpoint";
  doc["version"] = kCheckpointVersion;
  doc["meta"] = meta;
  doc["iter"] = st.iter;
  doc["params"] = st.params;
  doc["adam"] = {{"step", st.adam.step}, {"m", st.adam.m}, {"v", st.adam.v}};
  json chains = json::array();
  for (const auto& c : st.chains) {
    std::ostringstream rng;
    rng << c.rng;
    chains.push_back({{"positions", c.config.positions}, {"rng", rng.str()}});
  }
  doc["chains"] = std::move(chains);
  json trace = json::array();
  for (const auto& r : st.trace) {
    trace.push_back({r.iter, r.energy, r.energy_err, r.mean_n, r.acc_disp, r.acc_pm});
  }
  doc["trace"] = std::move(trace);
  return doc;
}

TrainState checkpoint_from_json(const json& doc, const NqfsModel& model) {
  try {
    if (doc.at("format").get<std::string>() != "nqfs-checkpoint") {
      throw ConfigError("checkpoint: unknown format");
    }
    if (doc.at("version").get<int>() != kCheckpointVersion) {
      throw ConfigError("checkpoint: unsupported version");
    }
    TrainState st;
    st.iter = doc.at("iter").get<std::uint64_t>();
    st.params = doc.at("params").get<std::vector<double>>();
    if (st.params.size() != model.num_params()) {
      throw ConfigError("checkpoint: parameter count " + std::to_string(st.params.size()) +
                        " does not match the model (" + std::to_string(model.num_params()) +
                        ")");
    }
    const auto& a = doc.at("adam");
    st.adam.step = a.at("step").get<std::uint64_t>();
    st.adam.m = a.at("m").get<std::vector<double>>();
    st.adam.v = a.at("v").get<std::vector<double>>();
    if (st.adam.m.size() != st.params.size() || st.adam.v.size() != st.params.size()) {
      throw ConfigError("checkpoint: optimizer moments have the wrong length");
    }
    for (const auto& c : doc.at("chains")) {
      ChainState cs;
      cs.config = Configuration(c.at("positions").get<std::vector<double>>());
      std::istringstream rng(c.at("rng").get<std::string>());
      rng >> cs.rng;
      if (!rng) throw ConfigError("checkpoint: bad generator state");
      cs.log_amp = model.log_amplitude(st.params, cs.config);
      st.chains.push_back(std::move(cs));
    }
    for (const auto& r : doc.at("trace")) {
      st.trace.push_back({r.at(0).get<std::uint64_t>(), r.at(1).get<double>(),
                          r.at(2).get<double>(), r.at(3).get<double>(), r.at(4).get<double>(),
                          r.at(5).get<double>()});
    }
    return st;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const TrainState& state, const json& meta) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write checkpoint " + path);
  os << checkpoint_to_json(state, meta).dump(1) << '\n';
  if (!os) throw ConfigError("failed writing checkpoint " + path);
}

namespace {

json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open checkpoint " + path);
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError("checkpoint " + path + ": " + e.what());
  }
}

}  // namespace

TrainState load_checkpoint(const std::string& path, const NqfsModel& model, json* meta_out) {
  const json doc = read_json_file(path);
  TrainState st = checkpoint_from_json(doc, model);
  if (meta_out) *meta_out = doc.value("meta", json::object());
  return st;
}

json read_checkpoint_meta(const std::string& path) {
  return read_json_file(path).value("meta", json::object());
}

}  // namespace nqfs
