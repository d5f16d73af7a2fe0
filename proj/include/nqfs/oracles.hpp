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

// Exact and semi-analytic ground states of the benchmark models.

#ifndef NQFS_ORACLES_HPP
#define NQFS_ORACLES_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "nqfs/core.hpp"

namespace nqfs {

struct GroundState {
  double energy = 0.0;
  int n0 = 0;
};

/// Free fermions in a box of length L: E(n) = pi^2 n(n+1)(2n+1)/(12 m L^2) - mu n.
double tg_energy(int n, double m, double mu, double L);

/// Minimizes tg_energy over 0 <= n <= n_max.
GroundState tg_ground_state(double m, double mu, double L, int n_max = 1000);

struct DensityPair {
  std::vector<double> number;
  std::vector<double> kinetic;
};

DensityPair tg_densities(int n0, double m, double L, std::span<const double> grid);

struct BetheSolution {
  std::vector<double> k;
  double energy = 0.0;
  int n = 0;
  double residual = 0.0;
  int iterations = 0;
};

/// Hard-wall Lieb-Liniger pseudomomenta for fixed n,
///   k_i L = pi i - sum_{j != i} [atan((k_i - k_j)/c) + atan((k_i + k_j)/c)],
/// c = 2 m g, i = 1..n. Damped Newton, falling back to continuation in c.
BetheSolution bethe_solve(double m, double mu, double g, double L, int n);

/// bethe_solve minimized over n.
BetheSolution bethe_ground(double m, double mu, double g, double L, int n_max = 1000);

struct CsGround {
  double energy = 0.0;
  int n0 = 0;
  double lambda = 1.0;
};

/// (1 + sqrt(1 + 4 m g)) / 2.
double cs_lambda(double m, double g);

/// pi^2 lambda^2 n (n^2 - 1) / (6 m L^2) - mu n.
double cs_energy(int n, double m, double mu, double g, double L);

CsGround cs_ground(double m, double mu, double g, double L, int n_max = 1000);

/// g1 over the exact state prod |sin(pi x_ij / L)|^lambda by Metropolis
/// sampling with the displaced-particle ratio estimator.
std::vector<EstimateResult> cs_exact_g1(double m, double g, double L, int n0,
                                        std::span<const double> displacements,
                                        std::size_t mc_samples, std::uint64_t seed = 1);

struct BogoliubovSolution {
  std::vector<double> p;
  std::vector<double> u;
  std::vector<double> v;
  double eps0 = 0.0;
  std::vector<double> p_n;
  double mean_n = 0.0;
  double mean_n_from_pn = 0.0;
  /// 1 - sum_{n <= n_trunc} P_n before normalization.
  double truncation = 0.0;
};

/// Bogoliubov vacuum of H = sum_p (p^2 + v) a+_p a_p + lambda sum_p (a+_p a+_-p + h.c.)
/// on a ring of length L, modes p = 2 pi j / L with |j| <= j_max.
/// j_max <= 0 picks the smallest j_max whose last mode adds < 1e-12.
/// At |lambda/v| = 1/2 the zero mode is critical: eps0 stays finite, mean_n
/// is infinite and p_n is empty.
BogoliubovSolution bogoliubov_solve(double v, double lambda, double L, int j_max = 0,
                                    int n_trunc = 100);

}  // namespace nqfs

#endif  // NQFS_ORACLES_HPP
