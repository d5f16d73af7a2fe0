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

// Metropolis-Hastings over Fock space. Each step is one of
//   displacement  x -> x + xi, xi ~ U(-w/2, w/2) per coordinate   (1 - 2 p_pm)
//   insertion     one particle uniform on [0, L]                  (p_pm)
//   removal       one uniformly chosen particle                   (p_pm)
// With pair moves the last two insert or remove two particles at once.
//
// Chain c of a run with seed s draws from mt19937_64 seeded with
// splitmix64(s ^ splitmix64(c)).

#ifndef NQFS_SAMPLER_HPP
#define NQFS_SAMPLER_HPP

#include <cstdint>
#include <random>
#include <vector>

#include "nqfs/ansatz.hpp"
#include "nqfs/core.hpp"

namespace nqfs {

struct SamplerConfig {
  int n_chains = 32;
  int sweep_length = 400;
  /// Negative: 20% of sweep_length.
  int burn_in = -1;
  double p_pm = 0.25;
  /// Non-positive: 0.1 L.
  double step_width = -1.0;
  std::uint64_t seed = 1;
  bool pair_moves = false;
  /// Displace one random coordinate instead of all of them.
  bool single_coordinate = false;
  /// MH steps between recorded samples.
  int thin = 1;
  /// Particle number of the initial configurations (uniform positions).
  int initial_n = 0;
  int threads = 1;

  void validate() const;
  int effective_burn_in() const { return burn_in < 0 ? sweep_length / 5 : burn_in; }
  double effective_step(double length) const {
    return step_width > 0.0 ? step_width : 0.1 * length;
  }
};

struct MoveStats {
  std::uint64_t disp_proposed = 0, disp_accepted = 0;
  std::uint64_t pm_proposed = 0, pm_accepted = 0;

  void merge(const MoveStats& o) {
    disp_proposed += o.disp_proposed;
    disp_accepted += o.disp_accepted;
    pm_proposed += o.pm_proposed;
    pm_accepted += o.pm_accepted;
  }
  double disp_rate() const {
    return disp_proposed ? static_cast<double>(disp_accepted) / disp_proposed : 0.0;
  }
  double pm_rate() const {
    return pm_proposed ? static_cast<double>(pm_accepted) / pm_proposed : 0.0;
  }
};

struct ChainState {
  Configuration config;
  double log_amp = 0.0;
  std::mt19937_64 rng;
};

struct SampleBatch {
  std::vector<std::vector<Configuration>> chains;
  std::vector<MoveStats> stats;

  std::size_t size() const;
  MoveStats total_stats() const;
};

std::uint64_t chain_seed(std::uint64_t seed, std::size_t chain);

/// Fresh chains in sector initial_n (vacuum when that sector is excluded).
std::vector<ChainState> init_chains(const NqfsModel& model, std::span<const double> params,
                                    const SamplerConfig& cfg);

/// One step with single-particle insert/remove moves.
void mh_step(ChainState& state, const NqfsModel& model, std::span<const double> params,
             const SamplerConfig& cfg, MoveStats* stats = nullptr);

/// One step with pair insert/remove moves.
void mh_pair_step(ChainState& state, const NqfsModel& model,
                  std::span<const double> params, const SamplerConfig& cfg,
                  MoveStats* stats = nullptr);

/// Re-evaluates cached amplitudes (after a parameter change), runs `burn_in`
/// unrecorded steps and then records `cfg.sweep_length` samples per chain.
SampleBatch advance_chains(std::vector<ChainState>& chains, const NqfsModel& model,
                           std::span<const double> params, const SamplerConfig& cfg,
                           int burn_in);

/// init_chains followed by advance_chains with the configured burn-in.
SampleBatch run_sampling(const NqfsModel& model, std::span<const double> params,
                         const SamplerConfig& cfg);

}  // namespace nqfs

#endif  // NQFS_SAMPLER_HPP
