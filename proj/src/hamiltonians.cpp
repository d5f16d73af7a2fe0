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

#include "nqfs/hamiltonians.hpp"

#include <cmath>
#include <numbers>

namespace nqfs {
namespace {

constexpr double kPi = std::numbers::pi;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

void HamiltonianSpec::validate(const Geometry& geometry) const {
  std::visit(
      overloaded{
          [&](const LiebLiniger& h) {
            if (!(h.m > 0.0)) throw ConfigError("Lieb-Liniger: m must be positive");
            if (h.g < 0.0) throw ConfigError("Lieb-Liniger: g must be non-negative");
            if (geometry.periodic()) throw ConfigError("Lieb-Liniger requires hard walls");
          },
          [&](const CalogeroSutherland& h) {
            if (!(h.m > 0.0)) throw ConfigError("Calogero-Sutherland: m must be positive");
            if (h.g < 0.0) throw ConfigError("Calogero-Sutherland: g must be non-negative");
            if (!geometry.periodic()) throw ConfigError("Calogero-Sutherland requires a ring");
          },
          [&](const RegularizedKleinGordon& h) {
            if (!(h.v > 0.0)) throw ConfigError("Klein-Gordon: v must be positive");
            if (std::abs(h.lambda / h.v) > 0.5) {
              throw ConfigError("Klein-Gordon: |lambda / v| must not exceed 1/2");
            }
            if (h.quad_points < 2) throw ConfigError("Klein-Gordon: quad_points must be >= 2");
            if (!geometry.periodic()) throw ConfigError("Klein-Gordon requires a ring");
          },
      },
      model);
}

double HamiltonianSpec::mass() const {
  return std::visit(overloaded{
                        [](const LiebLiniger& h) { return h.m; },
                        [](const CalogeroSutherland& h) { return h.m; },
                        [](const RegularizedKleinGordon&) { return 0.5; },
                    },
                    model);
}

LocalTerms local_terms(const HamiltonianSpec& spec, const NqfsModel& model,
                       std::span<const double> params, std::span<const double> x,
                       const AmplitudeDerivatives& d, const double* pair_half) {
  LocalTerms t;
  const std::size_t n = x.size();
  const double L = model.geometry().length;
  double g2 = 0.0;
  for (double gi : d.grad_positions) g2 += gi * gi;
  t.kinetic = -(d.laplacian + g2) / (2.0 * spec.mass());

  double ext = 0.0;
  if (spec.external) {
    for (double xi : x) ext += spec.external(xi);
  }

  std::visit(overloaded{
                 [&](const LiebLiniger& h) { t.one_body = ext - h.mu * static_cast<double>(n); },
                 [&](const CalogeroSutherland& h) {
                   t.one_body = ext - h.mu * static_cast<double>(n);
                   if (h.g == 0.0) return;
                   const double k = kPi / L;
                   double w = 0.0;
                   for (std::size_t i = 0; i < n; ++i) {
                     for (std::size_t j = i + 1; j < n; ++j) {
                       double dij = std::fmod(std::abs(x[i] - x[j]), L);
                       if (dij < 1e-12 * L || L - dij < 1e-12 * L) {
                         throw NumericalError("Calogero-Sutherland: coincident particles");
                       }
                       const double s = std::sin(k * dij);
                       w += 1.0 / (s * s);
                     }
                   }
                   t.interaction = h.g * k * k * w;
                 },
                 [&](const RegularizedKleinGordon& h) {
                   t.one_body = ext + h.v * static_cast<double>(n);
                   t.pair = 2.0 * (pair_half ? *pair_half
                                             : kg_pair_half(model, params, x, d.value,
                                                            h.lambda, h.quad_points, {}));
                 },
             },
             spec.model);
  return t;
}

double local_energy(const HamiltonianSpec& spec, const NqfsModel& model,
                    std::span<const double> params, const Configuration& config) {
  AmplitudeDerivatives d;
  model.log_amplitude_derivatives(params, config.positions, true, false, d);
  return local_terms(spec, model, params, config.positions, d).total();
}

std::pair<std::vector<double>, std::vector<double>> periodic_trapezoid(double length,
                                                                       int quad_points) {
  std::vector<double> nodes(quad_points), weights(quad_points, length / quad_points);
  for (int k = 0; k < quad_points; ++k) nodes[k] = k * length / quad_points;
  return {nodes, weights};
}

double kg_pair_half(const NqfsModel& model, std::span<const double> params,
                    std::span<const double> x, double log_amp, double lambda,
                    int quad_points, std::span<double> k_out) {
  const std::size_t n = x.size();
  if (lambda == 0.0 || !model.sector_allowed(n + 2)) return 0.0;
  const double L = model.geometry().length;
  thread_local std::vector<double> out;
  auto [nodes, weights] = periodic_trapezoid(L, quad_points);
  out.resize(nodes.size());
  const double c = lambda * std::sqrt(static_cast<double>((n + 1) * (n + 2)));
  if (!k_out.empty()) {
    for (auto& w : weights) w *= c;
    model.pair_insertions(params, x, nodes, out, weights, log_amp, k_out);
    for (auto& w : weights) w /= c;
  } else {
    model.pair_insertions(params, x, nodes, out);
  }
  double r = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (!is_log_zero(out[k])) r += weights[k] * std::exp(out[k] - log_amp);
  }
  return c * r;
}

double kg_pair_term(const NqfsModel& model, std::span<const double> params,
                    std::span<const double> x, double lambda, int quad_points) {
  const double la = model.log_amplitude(params, x);
  if (is_log_zero(la)) throw NumericalError("kg_pair_term: amplitude is zero");
  return 2.0 * kg_pair_half(model, params, x, la, lambda, quad_points, {});
}

std::pair<double, double> kg_from_physical(double mass, double cutoff) {
  if (!(cutoff > 0.0)) throw ConfigError("kg_from_physical: cutoff must be positive");
  const double m2 = mass * mass, c2 = cutoff * cutoff;
  return {0.5 * (m2 + c2), 0.25 * (m2 - c2)};
}

}  // namespace nqfs
