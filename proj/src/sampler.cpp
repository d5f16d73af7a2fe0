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

#include "nqfs/sampler.hpp"

#include <algorithm>
#include <cmath>

namespace nqfs {
namespace {

double uniform01(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

bool accept(double log_ratio, std::mt19937_64& rng) {
  if (log_ratio >= 0.0) return true;
  if (std::isnan(log_ratio) || log_ratio == -INFINITY) return false;
  return uniform01(rng) < std::exp(log_ratio);
}

void step_impl(ChainState& st, const NqfsModel& model, std::span<const double> params,
               const SamplerConfig& cfg, MoveStats* stats, bool pairs) {
  auto& rng = st.rng;
  const Geometry& geom = model.geometry();
  const double L = geom.length;
  const double u = uniform01(rng);
  const double p0 = 1.0 - 2.0 * cfg.p_pm;
  thread_local std::vector<double> prop;
  const auto& x = st.config.positions;
  const std::size_t n = x.size();

  if (u < p0) {
    if (stats) ++stats->disp_proposed;
    if (n == 0) {
      if (stats) ++stats->disp_accepted;
      return;
    }
    const double w = cfg.effective_step(L);
    std::uniform_real_distribution<double> xi(-0.5 * w, 0.5 * w);
    prop.assign(x.begin(), x.end());
    if (cfg.single_coordinate) {
      const std::size_t i = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
      prop[i] = wrap_position(prop[i] + xi(rng), geom);
    } else {
      for (auto& p : prop) p = wrap_position(p + xi(rng), geom);
    }
    const double la = model.log_amplitude(params, prop);
    if (is_log_zero(la)) return;
    if (accept(2.0 * (la - st.log_amp), rng)) {
      st.config.positions.assign(prop.begin(), prop.end());
      st.log_amp = la;
      if (stats) ++stats->disp_accepted;
    }
    return;
  }

  if (stats) ++stats->pm_proposed;
  const bool insert = u < p0 + cfg.p_pm;
  const double logL = std::log(L);
  double log_factor = 0.0;
  if (insert) {
    std::uniform_real_distribution<double> pos(0.0, L);
    prop.assign(x.begin(), x.end());
    prop.push_back(pos(rng));
    if (pairs) prop.push_back(pos(rng));
    log_factor = (pairs ? 2.0 : 1.0) * logL;
  } else {
    const std::size_t k = pairs ? 2 : 1;
    if (n < k) return;
    prop.assign(x.begin(), x.end());
    const std::size_t i = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    if (pairs) {
      std::size_t j = std::uniform_int_distribution<std::size_t>(0, n - 2)(rng);
      if (j >= i) ++j;
      const std::size_t hi = std::max(i, j), lo = std::min(i, j);
      prop.erase(prop.begin() + hi);
      prop.erase(prop.begin() + lo);
    } else {
      prop.erase(prop.begin() + i);
    }
    log_factor = -(pairs ? 2.0 : 1.0) * logL;
  }
  const double la = model.log_amplitude(params, prop);
  if (is_log_zero(la)) return;
  if (accept(2.0 * (la - st.log_amp) + log_factor, rng)) {
    st.config.positions.assign(prop.begin(), prop.end());
    st.log_amp = la;
    if (stats) ++stats->pm_accepted;
  }
}

}  // namespace

void SamplerConfig::validate() const {
  if (n_chains <= 0) throw ConfigError("sampler: n_chains must be positive");
  if (sweep_length <= 0) throw ConfigError("sampler: sweep_length must be positive");
  if (!(p_pm >= 0.0 && 1.0 - 2.0 * p_pm >= 0.0)) {
    throw ConfigError("sampler: p_pm must lie in [0, 1/2]");
  }
  if (thin <= 0) throw ConfigError("sampler: thin must be positive");
  if (initial_n < 0) throw ConfigError("sampler: initial_n must be non-negative");
  if (threads <= 0) throw ConfigError("sampler: threads must be positive");
}

std::size_t SampleBatch::size() const {
  std::size_t s = 0;
  for (const auto& c : chains) s += c.size();
  return s;
}

MoveStats SampleBatch::total_stats() const {
  MoveStats t;
  for (const auto& s : stats) t.merge(s);
  return t;
}

std::uint64_t chain_seed(std::uint64_t seed, std::size_t chain) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(chain)));
}

std::vector<ChainState> init_chains(const NqfsModel& model, std::span<const double> params,
                                    const SamplerConfig& cfg) {
  cfg.validate();
  const double L = model.geometry().length;
  std::vector<ChainState> chains(cfg.n_chains);
  for (int c = 0; c < cfg.n_chains; ++c) {
    auto& st = chains[c];
    st.rng.seed(chain_seed(cfg.seed, c));
    std::uniform_real_distribution<double> pos(0.0, L);
    std::vector<double> x;
    for (int k = 0; k < cfg.initial_n; ++k) x.push_back(pos(st.rng));
    double la = model.log_amplitude(params, x);
    if (is_log_zero(la)) {
      x.clear();
      la = model.log_amplitude(params, x);
    }
    if (is_log_zero(la)) throw NumericalError("sampler: no valid initial configuration");
    st.config = Configuration(std::move(x));
    st.log_amp = la;
  }
  return chains;
}

void mh_step(ChainState& state, const NqfsModel& model, std::span<const double> params,
             const SamplerConfig& cfg, MoveStats* stats) {
  step_impl(state, model, params, cfg, stats, false);
}

void mh_pair_step(ChainState& state, const NqfsModel& model,
                  std::span<const double> params, const SamplerConfig& cfg,
                  MoveStats* stats) {
  step_impl(state, model, params, cfg, stats, true);
}

SampleBatch advance_chains(std::vector<ChainState>& chains, const NqfsModel& model,
                           std::span<const double> params, const SamplerConfig& cfg,
                           int burn_in) {
  cfg.validate();
  SampleBatch batch;
  batch.chains.resize(chains.size());
  batch.stats.resize(chains.size());
  parallel_for(chains.size(), cfg.threads, [&](std::size_t c) {
    auto& st = chains[c];
    st.log_amp = model.log_amplitude(params, st.config);
    if (is_log_zero(st.log_amp)) {
      st.config.positions.clear();
      st.log_amp = model.log_amplitude(params, st.config);
      if (is_log_zero(st.log_amp)) throw NumericalError("sampler: vacuum has zero amplitude");
    }
    auto step = [&](MoveStats* s) {
      if (cfg.pair_moves) {
        mh_pair_step(st, model, params, cfg, s);
      } else {
        mh_step(st, model, params, cfg, s);
      }
    };
    for (int b = 0; b < burn_in; ++b) step(nullptr);
    auto& out = batch.chains[c];
    out.reserve(cfg.sweep_length);
    for (int s = 0; s < cfg.sweep_length; ++s) {
      for (int t = 0; t < cfg.thin; ++t) step(&batch.stats[c]);
      out.push_back(st.config);
    }
  });
  return batch;
}

SampleBatch run_sampling(const NqfsModel& model, std::span<const double> params,
                         const SamplerConfig& cfg) {
  auto chains = init_chains(model, params, cfg);
  return advance_chains(chains, model, params, cfg, cfg.effective_burn_in());
}

}  // namespace nqfs
