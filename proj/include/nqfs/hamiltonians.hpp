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

#ifndef NQFS_HAMILTONIANS_HPP
#define NQFS_HAMILTONIANS_HPP

#include <functional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "nqfs/ansatz.hpp"
#include "nqfs/core.hpp"

namespace nqfs {

/// -1/(2m) sum d^2 + g sum_{i<j} 2 delta(x_i - x_j) - mu n, hard walls.
struct LiebLiniger {
  double m = 0.5;
  double mu = 0.0;
  double g = 0.0;
};

/// -1/(2m) sum d^2 + (g pi^2/L^2) sum_{i<j} 1/sin^2(pi x_ij/L) - mu n, ring.
struct CalogeroSutherland {
  double m = 0.5;
  double mu = 0.0;
  double g = 0.0;
};

/// Quadratic field theory: grad psi^dag grad psi + v psi^dag psi
///   + lambda (psi^dag psi^dag + psi psi), ring, m = 1/2.
struct RegularizedKleinGordon {
  double v = 1.0;
  double lambda = 0.0;
  int quad_points = 64;
};

struct HamiltonianSpec {
  std::variant<LiebLiniger, CalogeroSutherland, RegularizedKleinGordon> model;
  /// Optional external potential V(x); empty means V = 0.
  std::function<double(double)> external;

  /// Checks couplings and that the geometry matches the model.
  void validate(const Geometry& geometry) const;
  double mass() const;
  bool is_kg() const { return std::holds_alternative<RegularizedKleinGordon>(model); }
};

/// Pieces of E_loc at one configuration.
struct LocalTerms {
  double kinetic = 0.0;
  double one_body = 0.0;
  double interaction = 0.0;
  double pair = 0.0;  // Klein-Gordon creation term, already doubled
  double total() const { return kinetic + one_body + interaction + pair; }
};

/// Uses precomputed position derivatives (grad_positions, laplacian) of the
/// model at x. For Klein-Gordon a precomputed half pair term may be passed.
LocalTerms local_terms(const HamiltonianSpec& spec, const NqfsModel& model,
                       std::span<const double> params, std::span<const double> x,
                       const AmplitudeDerivatives& d, const double* pair_half = nullptr);

double local_energy(const HamiltonianSpec& spec, const NqfsModel& model,
                    std::span<const double> params, const Configuration& config);

/// Trapezoid nodes and weights on the ring: x_k = k L / Q, w_k = L / Q.
std::pair<std::vector<double>, std::vector<double>> periodic_trapezoid(double length,
                                                                       int quad_points);

/// 2 lambda sqrt((n+1)(n+2)) int dx' phi_{n+2}(x, x', x') / phi_n(x).
double kg_pair_term(const NqfsModel& model, std::span<const double> params,
                    std::span<const double> x, double lambda, int quad_points);

/// Half the pair term h and the matching gradient companion
/// K = lambda sqrt((n+1)(n+2)) int dx' [phi_{n+2}/phi_n] d ln phi_{n+2}/d theta.
/// K is added to `k_out` when it is non-empty.
double kg_pair_half(const NqfsModel& model, std::span<const double> params,
                    std::span<const double> x, double log_amp, double lambda,
                    int quad_points, std::span<double> k_out);

/// (v, lambda) = ((m^2 + Lambda^2)/2, (m^2 - Lambda^2)/4).
std::pair<double, double> kg_from_physical(double mass, double cutoff);

}  // namespace nqfs

#endif  // NQFS_HAMILTONIANS_HPP
