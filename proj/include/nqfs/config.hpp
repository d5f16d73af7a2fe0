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

// Experiment configuration files. The format is JSON with the sections
// model, ansatz, sampler, optimizer and output; the schema is documented in
// configs/README.md. Unknown keys are errors.

#ifndef NQFS_CONFIG_HPP
#define NQFS_CONFIG_HPP

#include <cstdint>
#include <string>

#include "json.hpp"
#include "nqfs/ansatz.hpp"
#include "nqfs/hamiltonians.hpp"
#include "nqfs/optimizer.hpp"
#include "nqfs/sampler.hpp"

namespace nqfs {

struct OptimizerSection {
  int n_iters = 0;
  AdamConfig adam;
  int burn_in = -1;
  int checkpoint_every = 0;
};

struct OutputSection {
  bool p_n = true;
  bool densities = false;
  bool g1 = false;
  int density_grid = 128;
  int pair_grid = 32;
  int g1_points = 64;
  /// Samples of the exact-state Monte Carlo behind `exact` g1 tables.
  int exact_g1_samples = 200000;
};

struct ExperimentConfig {
  std::string name;
  std::uint64_t seed = 1;
  HamiltonianSpec hamiltonian;
  ModelOptions model;
  SamplerConfig sampler;
  OptimizerSection optimizer;
  OutputSection output;

  /// Cross-field checks; throws ConfigError naming the offending field.
  void validate() const;
};

/// Parses and validates. `source` prefixes diagnostics ("file:line:col: ...").
ExperimentConfig parse_config(const std::string& text, const std::string& source = "config");
ExperimentConfig load_config(const std::string& path);

/// Every field written explicitly; parse_config(serialize(c)) reproduces c.
nlohmann::json config_to_json(const ExperimentConfig& cfg);
std::string serialize_config(const ExperimentConfig& cfg);

/// Jastrow kind implied by the Hamiltonian when the ansatz says "auto".
JastrowKind default_jastrow(const HamiltonianSpec& spec);

}  // namespace nqfs

#endif  // NQFS_CONFIG_HPP
