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

#ifndef NQFS_OPTIMIZER_HPP
#define NQFS_OPTIMIZER_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "nqfs/ansatz.hpp"
#include "nqfs/estimators.hpp"
#include "nqfs/hamiltonians.hpp"
#include "nqfs/sampler.hpp"

namespace nqfs {

struct AdamConfig {
  double lr_net = 3e-4;
  double lr_reg = 3e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Global-norm clipping threshold; non-positive disables clipping.
  double clip_norm = 10.0;

  void validate() const;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// Smallest value s is projected to.
inline constexpr double kMinSharpness = 1e-6;

/// Enforces s > 0 and 0 <= c1 <= c2 on the (c1, c2, s) block at reg_offset.
void project_regularization(std::span<double> params, std::size_t reg_offset);

/// One ADAM update: lr_net on [0, reg_offset), lr_reg on the regularization
/// block, then project_regularization. Throws NumericalError (leaving state
/// and params untouched) when the gradient is not finite.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad,
               const AdamConfig& cfg, std::size_t reg_offset);

struct TraceRow {
  std::uint64_t iter = 0;
  double energy = 0.0;
  double energy_err = 0.0;
  double mean_n = 0.0;
  double acc_disp = 0.0;
  double acc_pm = 0.0;
};

void write_trace_header(std::ostream& os);
void write_trace_row(std::ostream& os, const TraceRow& row);

struct TrainState {
  ParamVector params;
  AdamState adam;
  std::vector<ChainState> chains;
  std::uint64_t iter = 0;
  std::vector<TraceRow> trace;
};

/// Fresh optimizer state and chains for `params`.
TrainState make_train_state(const NqfsModel& model, ParamVector params,
                            const SamplerConfig& sampler);

struct TrainConfig {
  int n_iters = 0;
  AdamConfig adam;
  /// Unrecorded steps before each iteration's samples; negative uses the
  /// sampler's burn-in.
  int burn_in = -1;
  int threads = 1;
  /// Calls on_checkpoint every this many iterations (0: never).
  int checkpoint_every = 0;
};

using TrainCallback = std::function<void(const TrainState&)>;

/// Runs n_iters iterations of sample, estimate, update on `state`. Chains
/// persist across iterations.
void train(TrainState& state, const NqfsModel& model, const HamiltonianSpec& spec,
           const SamplerConfig& sampler, const TrainConfig& cfg,
           const TrainCallback& on_iteration = {}, const TrainCallback& on_checkpoint = {});

/// Checkpoint document: a JSON object with a versioned header, the caller's
/// `meta` (typically the experiment config), parameters, ADAM moments, the
/// iteration counter, every chain's configuration and generator state, and
/// the trace. Doubles are written in shortest round-trip form.
nlohmann::json checkpoint_to_json(const TrainState& state, const nlohmann::json& meta);
TrainState checkpoint_from_json(const nlohmann::json& doc, const NqfsModel& model);

void save_checkpoint(const std::string& path, const TrainState& state,
                     const nlohmann::json& meta);
/// Reads a checkpoint; `meta_out` receives the stored meta object when non-null.
TrainState load_checkpoint(const std::string& path, const NqfsModel& model,
                           nlohmann::json* meta_out = nullptr);
nlohmann::json read_checkpoint_meta(const std::string& path);

inline constexpr int kCheckpointVersion = 1;

}  // namespace nqfs

#endif  // NQFS_OPTIMIZER_HPP
