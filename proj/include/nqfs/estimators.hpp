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

#ifndef NQFS_ESTIMATORS_HPP
#define NQFS_ESTIMATORS_HPP

#include <iosfwd>
#include <span>
#include <vector>

#include "nqfs/ansatz.hpp"
#include "nqfs/core.hpp"
#include "nqfs/hamiltonians.hpp"
#include "nqfs/sampler.hpp"

namespace nqfs {

/// Everything the energy and gradient estimators need from one sample.
///
/// For Klein-Gordon the creation term of E_loc is 2h. The gradient of the
/// energy is then
///   2 cov(O, E_loc - h) + 2 E[K - h mean(O)]
/// with O = d ln phi / d theta and K the companion of h (see kg_pair_half).
/// Without a creation term h = K = 0 and this is 2 cov(O, E_loc).
struct SampleTerms {
  std::size_t n = 0;
  LocalTerms parts;
  double e_loc = 0.0;
  double h = 0.0;
  std::vector<double> O;
  std::vector<double> K;
};

void compute_sample_terms(const HamiltonianSpec& spec, const NqfsModel& model,
                          std::span<const double> params, std::span<const double> x,
                          bool want_gradient, SampleTerms& out);

/// The gradient formula above with explicit normalized weights (sum to 1).
std::vector<double> gradient_from_terms(std::span<const SampleTerms> terms,
                                        std::span<const double> weights);

struct GradientEstimate {
  std::vector<double> grad;
  /// Binned standard error per component; empty unless requested.
  std::vector<double> grad_err;
  EstimateResult energy;
  EstimateResult mean_n;
  double energy_variance = 0.0;
};

struct EstimatorOptions {
  int threads = 1;
  /// 0: default_bin_size of the chain length.
  std::size_t bin_size = 0;
  bool gradient_errors = false;
};

EstimateResult estimate_energy(const SampleBatch& batch, const HamiltonianSpec& spec,
                               const NqfsModel& model, std::span<const double> params,
                               const EstimatorOptions& opt = {});

/// Energy, particle number and parameter gradient in one pass.
GradientEstimate estimate_gradient(const SampleBatch& batch, const HamiltonianSpec& spec,
                                   const NqfsModel& model, std::span<const double> params,
                                   const EstimatorOptions& opt = {});

struct ParticleStats {
  EstimateResult mean_n;
  std::vector<double> p_n;
  std::vector<double> p_n_err;
};

ParticleStats estimate_particle_stats(const SampleBatch& batch, std::size_t bin_size = 0);

struct DensityProfiles {
  std::vector<double> grid;
  std::vector<EstimateResult> number;
  std::vector<EstimateResult> kinetic;
  std::vector<EstimateResult> interaction;
};

struct DensityOptions {
  int threads = 1;
  std::size_t bin_size = 0;
  /// Interior points per axis of the grid used to normalize pinned pairs.
  int pair_grid = 32;
  bool interaction = true;
};

/// kL/(count+1), k = 1..count: interior points of a hard-wall box.
std::vector<double> interior_grid(double length, int count);

/// Pinned-coordinate density estimators. The grid must be sorted and lie
/// inside the box; normalizing integrals use the trapezoid rule on the grid,
/// closed by the walls (where the amplitude vanishes) or by periodicity.
DensityProfiles estimate_density_profiles(const SampleBatch& batch,
                                          const HamiltonianSpec& spec,
                                          const NqfsModel& model,
                                          std::span<const double> params,
                                          std::span<const double> grid,
                                          const DensityOptions& opt = {});

/// g1(x) = E[(n/L) phi_n(x_1 + x, ...) / phi_n(x_1, ...)], averaged over the
/// choice of displaced particle.
std::vector<EstimateResult> estimate_g1(const SampleBatch& batch, const NqfsModel& model,
                                        std::span<const double> params,
                                        std::span<const double> displacements,
                                        int threads = 1, std::size_t bin_size = 0);

/// count evenly spaced points on [0, L] including both ends.
std::vector<double> g1_displacements(double length, int count = 64);

void write_density_csv(std::ostream& os, std::span<const double> grid,
                       std::span<const EstimateResult> values);
void write_pn_csv(std::ostream& os, const ParticleStats& stats);
void write_g1_csv(std::ostream& os, std::span<const double> displacements,
                  std::span<const EstimateResult> values);

}  // namespace nqfs

#endif  // NQFS_ESTIMATORS_HPP
