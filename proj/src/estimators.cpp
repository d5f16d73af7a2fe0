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

#include "nqfs/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "nqfs/kernels.hpp"

namespace nqfs {
namespace {

std::size_t chain_bin_size(const SampleBatch& batch, std::size_t requested) {
  if (requested > 0) return requested;
  std::size_t len = 0;
  for (const auto& c : batch.chains) len = std::max(len, c.size());
  return default_bin_size(len);
}

void require_samples(const SampleBatch& batch) {
  if (batch.size() == 0) throw InsufficientDataError("estimator: empty sample batch");
}

// Trapezoid weights on a sorted grid closed by walls at 0 and L (hard wall)
// or by periodic images.
std::vector<double> closed_trapezoid(std::span<const double> t, const Geometry& geom) {
  const std::size_t G = t.size();
  const double L = geom.length;
  std::vector<double> w(G);
  for (std::size_t k = 0; k < G; ++k) {
    double lo, hi;
    if (geom.periodic()) {
      lo = k == 0 ? t[G - 1] - L : t[k - 1];
      hi = k + 1 == G ? t[0] + L : t[k + 1];
    } else {
      lo = k == 0 ? 0.0 : t[k - 1];
      hi = k + 1 == G ? L : t[k + 1];
    }
    w[k] = 0.5 * (hi - lo);
  }
  return w;
}

struct ChainAcc {
  double shift = 0.0;
  std::size_t count = 0;
  std::vector<double> sO, sOE, sK;
  double sE = 0.0, sh = 0.0;
  std::vector<double> e_series, n_series;
  std::vector<std::vector<double>> bO, bOE, bK;
  std::vector<double> bE, bh;
};

}  // namespace

void compute_sample_terms(const HamiltonianSpec& spec, const NqfsModel& model,
                          std::span<const double> params, std::span<const double> x,
                          bool want_gradient, SampleTerms& out) {
  thread_local AmplitudeDerivatives d;
  model.log_amplitude_derivatives(params, x, true, want_gradient, d);
  out.n = x.size();
  double h = 0.0;
  if (const auto* kg = std::get_if<RegularizedKleinGordon>(&spec.model)) {
    if (want_gradient) out.K.assign(model.num_params(), 0.0);
    h = kg_pair_half(model, params, x, d.value, kg->lambda, kg->quad_points,
                     want_gradient ? std::span<double>(out.K) : std::span<double>());
    out.parts = local_terms(spec, model, params, x, d, &h);
  } else {
    out.K.clear();
    out.parts = local_terms(spec, model, params, x, d);
  }
  out.h = h;
  out.e_loc = out.parts.total();
  if (!std::isfinite(out.e_loc)) throw NumericalError("local energy is not finite");
  if (want_gradient) out.O = d.grad_params;
}

std::vector<double> gradient_from_terms(std::span<const SampleTerms> terms,
                                        std::span<const double> weights) {
  if (terms.empty() || terms.size() != weights.size()) {
    throw InsufficientDataError("gradient_from_terms: need one weight per sample");
  }
  const std::size_t P = terms[0].O.size();
  std::vector<double> Obar(P, 0.0), grad(P, 0.0);
  double Ebar = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const auto& t = terms[i];
    for (std::size_t p = 0; p < P; ++p) Obar[p] += weights[i] * t.O[p];
    Ebar += weights[i] * (t.e_loc - t.h);
  }
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const auto& t = terms[i];
    const double e = t.e_loc - t.h - Ebar;
    for (std::size_t p = 0; p < P; ++p) {
      double g = 2.0 * weights[i] * t.O[p] * e - 2.0 * weights[i] * t.h * Obar[p];
      if (!t.K.empty()) g += 2.0 * weights[i] * t.K[p];
      grad[p] += g;
    }
  }
  return grad;
}

namespace {

std::vector<ChainAcc> accumulate(const SampleBatch& batch, const HamiltonianSpec& spec,
                                 const NqfsModel& model, std::span<const double> params,
                                 bool want_gradient, bool want_bins, std::size_t B,
                                 int threads) {
  const std::size_t P = model.num_params();
  std::vector<ChainAcc> acc(batch.chains.size());
  parallel_for(batch.chains.size(), threads, [&](std::size_t c) {
    const auto& chain = batch.chains[c];
    auto& a = acc[c];
    const std::size_t nbins = want_bins ? chain.size() / B : 0;
    if (want_gradient) {
      a.sO.assign(P, 0.0);
      a.sOE.assign(P, 0.0);
      a.sK.assign(P, 0.0);
      a.bO.assign(nbins, std::vector<double>(P, 0.0));
      a.bOE.assign(nbins, std::vector<double>(P, 0.0));
      a.bK.assign(nbins, std::vector<double>(P, 0.0));
      a.bE.assign(nbins, 0.0);
      a.bh.assign(nbins, 0.0);
    }
    a.e_series.reserve(chain.size());
    a.n_series.reserve(chain.size());
    const auto& kt = kernels::active();
    SampleTerms t;
    for (std::size_t s = 0; s < chain.size(); ++s) {
      if (s == 0 || !(chain[s] == chain[s - 1])) {
        compute_sample_terms(spec, model, params, chain[s].positions, want_gradient, t);
      }
      a.e_series.push_back(t.e_loc);
      a.n_series.push_back(static_cast<double>(t.n));
      ++a.count;
      if (!want_gradient) continue;
      const double ep = t.e_loc - t.h;
      if (s == 0) a.shift = ep;
      const double e = ep - a.shift;
      const int Pi = static_cast<int>(P);
      kt.axpy(Pi, 1.0, t.O.data(), a.sO.data());
      kt.axpy(Pi, e, t.O.data(), a.sOE.data());
      if (!t.K.empty()) kt.axpy(Pi, 1.0, t.K.data(), a.sK.data());
      a.sE += e;
      a.sh += t.h;
      const std::size_t b = s / B;
      if (b < nbins) {
        kt.axpy(Pi, 1.0, t.O.data(), a.bO[b].data());
        kt.axpy(Pi, e, t.O.data(), a.bOE[b].data());
        if (!t.K.empty()) kt.axpy(Pi, 1.0, t.K.data(), a.bK[b].data());
        a.bE[b] += e;
        a.bh[b] += t.h;
      }
    }
  });
  return acc;
}

EstimateResult series_stats(const std::vector<ChainAcc>& acc, bool energy, std::size_t B) {
  std::vector<std::vector<double>> series;
  series.reserve(acc.size());
  for (const auto& a : acc) series.push_back(energy ? a.e_series : a.n_series);
  return binned_statistics(series, B);
}

}  // namespace

EstimateResult estimate_energy(const SampleBatch& batch, const HamiltonianSpec& spec,
                               const NqfsModel& model, std::span<const double> params,
                               const EstimatorOptions& opt) {
  require_samples(batch);
  const std::size_t B = chain_bin_size(batch, opt.bin_size);
  const auto acc = accumulate(batch, spec, model, params, false, false, B, opt.threads);
  return series_stats(acc, true, B);
}

GradientEstimate estimate_gradient(const SampleBatch& batch, const HamiltonianSpec& spec,
                                   const NqfsModel& model, std::span<const double> params,
                                   const EstimatorOptions& opt) {
  require_samples(batch);
  const std::size_t B = chain_bin_size(batch, opt.bin_size);
  const std::size_t P = model.num_params();
  const auto acc =
      accumulate(batch, spec, model, params, true, opt.gradient_errors, B, opt.threads);

  GradientEstimate r;
  r.energy = series_stats(acc, true, B);
  r.mean_n = series_stats(acc, false, B);
  double var = 0.0;
  for (const auto& a : acc) {
    for (double e : a.e_series) var += (e - r.energy.mean) * (e - r.energy.mean);
  }
  r.energy_variance = var / static_cast<double>(r.energy.n_samples);

  // Ebar = e0 + dE, kept apart so that shift - Ebar is formed from small
  // differences.
  double N = 0.0, dE = 0.0, hbar = 0.0;
  double e0 = 0.0;
  for (const auto& a : acc) {
    if (a.count > 0) {
      e0 = a.shift;
      break;
    }
  }
  std::vector<double> Obar(P, 0.0), Kbar(P, 0.0);
  for (const auto& a : acc) {
    N += static_cast<double>(a.count);
    dE += a.sE + (a.shift - e0) * static_cast<double>(a.count);
    hbar += a.sh;
    for (std::size_t p = 0; p < P; ++p) {
      Obar[p] += a.sO[p];
      Kbar[p] += a.sK[p];
    }
  }
  dE /= N;
  hbar /= N;
  for (std::size_t p = 0; p < P; ++p) {
    Obar[p] /= N;
    Kbar[p] /= N;
  }
  std::vector<double> cov(P, 0.0);
  for (const auto& a : acc) {
    const double d = (a.shift - e0) - dE;
    for (std::size_t p = 0; p < P; ++p) cov[p] += a.sOE[p] + d * a.sO[p];
  }
  r.grad.resize(P);
  for (std::size_t p = 0; p < P; ++p) {
    r.grad[p] = 2.0 * cov[p] / N + 2.0 * (Kbar[p] - hbar * Obar[p]);
    if (!std::isfinite(r.grad[p])) throw NumericalError("gradient estimate is not finite");
  }

  if (opt.gradient_errors) {
    std::size_t nb = 0;
    for (const auto& a : acc) nb += a.bE.size();
    if (nb < 2) throw InsufficientDataError("gradient errors need at least two bins");
    std::vector<double> m1(P, 0.0), m2(P, 0.0);
    const double Bd = static_cast<double>(B);
    for (const auto& a : acc) {
      const double d = (a.shift - e0) - dE;
      for (std::size_t b = 0; b < a.bE.size(); ++b) {
        const double eb = a.bE[b] + d * Bd;
        for (std::size_t p = 0; p < P; ++p) {
          const double y = 2.0 / Bd *
                           (a.bOE[b][p] + d * a.bO[b][p] - Obar[p] * eb + a.bK[b][p] -
                            Obar[p] * a.bh[b]);
          m1[p] += y;
          m2[p] += y * y;
        }
      }
    }
    r.grad_err.resize(P);
    const double nbd = static_cast<double>(nb);
    for (std::size_t p = 0; p < P; ++p) {
      const double mean = m1[p] / nbd;
      const double v = std::max(0.0, (m2[p] - nbd * mean * mean) / (nbd - 1.0));
      r.grad_err[p] = std::sqrt(v / nbd);
    }
  }
  return r;
}

ParticleStats estimate_particle_stats(const SampleBatch& batch, std::size_t bin_size) {
  require_samples(batch);
  const std::size_t B = chain_bin_size(batch, bin_size);
  std::size_t n_hi = 0;
  for (const auto& c : batch.chains) {
    for (const auto& s : c) n_hi = std::max(n_hi, s.n());
  }
  ParticleStats r;
  std::vector<std::vector<double>> series(batch.chains.size());
  for (std::size_t c = 0; c < batch.chains.size(); ++c) {
    for (const auto& s : batch.chains[c]) series[c].push_back(static_cast<double>(s.n()));
  }
  r.mean_n = binned_statistics(series, B);
  r.p_n.assign(n_hi + 1, 0.0);
  r.p_n_err.assign(n_hi + 1, 0.0);
  for (std::size_t n = 0; n <= n_hi; ++n) {
    for (std::size_t c = 0; c < batch.chains.size(); ++c) {
      for (std::size_t s = 0; s < batch.chains[c].size(); ++s) {
        series[c][s] = batch.chains[c][s].n() == n ? 1.0 : 0.0;
      }
    }
    const auto e = binned_statistics(series, B);
    r.p_n[n] = e.mean;
    r.p_n_err[n] = e.std_err;
  }
  return r;
}

std::vector<double> interior_grid(double length, int count) {
  std::vector<double> g(count);
  for (int k = 0; k < count; ++k) g[k] = length * (k + 1) / (count + 1);
  return g;
}

DensityProfiles estimate_density_profiles(const SampleBatch& batch,
                                          const HamiltonianSpec& spec,
                                          const NqfsModel& model,
                                          std::span<const double> params,
                                          std::span<const double> grid,
                                          const DensityOptions& opt) {
  if (grid.empty()) throw ConfigError("density profiles: empty grid");
  require_samples(batch);
  const std::size_t G = grid.size();
  const std::size_t B = chain_bin_size(batch, opt.bin_size);
  const Geometry& geom = model.geometry();
  const auto wgrid = closed_trapezoid(grid, geom);
  const auto pgrid = interior_grid(geom.length, opt.pair_grid);
  const auto wpair = closed_trapezoid(pgrid, geom);
  const double inv2m = 1.0 / (2.0 * spec.mass());
  const auto* ll = std::get_if<LiebLiniger>(&spec.model);
  const bool do_inter = opt.interaction && ll != nullptr;

  // series[c][quantity * G + k] is the per-sample series of one grid value.
  std::vector<std::vector<std::vector<double>>> series(batch.chains.size());
  parallel_for(batch.chains.size(), opt.threads, [&](std::size_t c) {
    const auto& chain = batch.chains[c];
    auto& out = series[c];
    out.assign(3 * G, std::vector<double>());
    for (auto& s : out) s.reserve(chain.size());
    std::vector<double> num(G), kin(G), inter(G), lv(G), gv(G), lp(pgrid.size() * pgrid.size());
    std::vector<double> y;
    AmplitudeDerivatives d;
    for (std::size_t s = 0; s < chain.size(); ++s) {
      if (s == 0 || !(chain[s] == chain[s - 1])) {
        std::fill(num.begin(), num.end(), 0.0);
        std::fill(kin.begin(), kin.end(), 0.0);
        std::fill(inter.begin(), inter.end(), 0.0);
        const auto& x = chain[s].positions;
        const std::size_t n = x.size();
        for (std::size_t i = 0; i < n; ++i) {
          y.assign(x.begin(), x.end());
          double mx = kLogZero;
          for (std::size_t k = 0; k < G; ++k) {
            y[i] = grid[k];
            const double la = model.log_amplitude(params, y);
            lv[k] = la;
            gv[k] = 0.0;
            if (!is_log_zero(la)) {
              model.log_amplitude_derivatives(params, y, true, false, d);
              gv[k] = d.grad_positions[i];
            }
            mx = std::max(mx, la);
          }
          if (is_log_zero(mx)) continue;
          double Z = 0.0;
          for (std::size_t k = 0; k < G; ++k) {
            lv[k] = is_log_zero(lv[k]) ? 0.0 : std::exp(2.0 * (lv[k] - mx));
            Z += wgrid[k] * lv[k];
          }
          for (std::size_t k = 0; k < G; ++k) {
            num[k] += lv[k] / Z;
            kin[k] += inv2m * lv[k] * gv[k] * gv[k] / Z;
          }
        }
        if (do_inter) {
          const std::size_t Pg = pgrid.size();
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
              y.assign(x.begin(), x.end());
              double mx = kLogZero;
              for (std::size_t a = 0; a < Pg; ++a) {
                for (std::size_t b = 0; b < Pg; ++b) {
                  y[i] = pgrid[a];
                  y[j] = pgrid[b];
                  lp[a * Pg + b] = model.log_amplitude(params, y);
                  mx = std::max(mx, lp[a * Pg + b]);
                }
              }
              if (is_log_zero(mx)) continue;
              double Z = 0.0;
              for (std::size_t a = 0; a < Pg; ++a) {
                for (std::size_t b = 0; b < Pg; ++b) {
                  const double l = lp[a * Pg + b];
                  if (!is_log_zero(l)) Z += wpair[a] * wpair[b] * std::exp(2.0 * (l - mx));
                }
              }
              for (std::size_t k = 0; k < G; ++k) {
                y[i] = y[j] = grid[k];
                const double l = model.log_amplitude(params, y);
                if (!is_log_zero(l)) inter[k] += 2.0 * ll->g * std::exp(2.0 * (l - mx)) / Z;
              }
            }
          }
        }
      }
      for (std::size_t k = 0; k < G; ++k) {
        out[k].push_back(num[k]);
        out[G + k].push_back(kin[k]);
        out[2 * G + k].push_back(inter[k]);
      }
    }
  });

  DensityProfiles r;
  r.grid.assign(grid.begin(), grid.end());
  std::vector<std::vector<double>> per_chain(batch.chains.size());
  auto collect = [&](std::size_t q, std::vector<EstimateResult>& dst) {
    dst.resize(G);
    for (std::size_t k = 0; k < G; ++k) {
      for (std::size_t c = 0; c < series.size(); ++c) per_chain[c] = std::move(series[c][q * G + k]);
      dst[k] = binned_statistics(per_chain, B);
    }
  };
  collect(0, r.number);
  collect(1, r.kinetic);
  collect(2, r.interaction);
  return r;
}

std::vector<double> g1_displacements(double length, int count) {
  std::vector<double> d(count);
  for (int k = 0; k < count; ++k) d[k] = count == 1 ? 0.0 : length * k / (count - 1);
  return d;
}

std::vector<EstimateResult> estimate_g1(const SampleBatch& batch, const NqfsModel& model,
                                        std::span<const double> params,
                                        std::span<const double> displacements, int threads,
                                        std::size_t bin_size) {
  const Geometry& geom = model.geometry();
  if (!geom.periodic()) throw ConfigError("g1 estimator requires a periodic geometry");
  require_samples(batch);
  const std::size_t D = displacements.size();
  const std::size_t B = chain_bin_size(batch, bin_size);
  const double L = geom.length;
  std::vector<std::vector<std::vector<double>>> series(batch.chains.size());
  parallel_for(batch.chains.size(), threads, [&](std::size_t c) {
    const auto& chain = batch.chains[c];
    auto& out = series[c];
    out.assign(D, std::vector<double>());
    std::vector<double> val(D), y;
    for (std::size_t s = 0; s < chain.size(); ++s) {
      if (s == 0 || !(chain[s] == chain[s - 1])) {
        const auto& x = chain[s].positions;
        const std::size_t n = x.size();
        std::fill(val.begin(), val.end(), 0.0);
        if (n > 0) {
          const double l0 = model.log_amplitude(params, x);
          if (is_log_zero(l0)) throw NumericalError("g1: sample has zero amplitude");
          for (std::size_t k = 0; k < D; ++k) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
              y.assign(x.begin(), x.end());
              y[i] = wrap_position(y[i] + displacements[k], geom);
              const double l = model.log_amplitude(params, y);
              if (!is_log_zero(l)) acc += std::exp(l - l0);
            }
            val[k] = acc / L;
          }
        }
      }
      for (std::size_t k = 0; k < D; ++k) out[k].push_back(val[k]);
    }
  });
  std::vector<EstimateResult> r(D);
  std::vector<std::vector<double>> per_chain(batch.chains.size());
  for (std::size_t k = 0; k < D; ++k) {
    for (std::size_t c = 0; c < series.size(); ++c) per_chain[c] = std::move(series[c][k]);
    r[k] = binned_statistics(per_chain, B);
  }
  return r;
}

void write_density_csv(std::ostream& os, std::span<const double> grid,
                       std::span<const EstimateResult> values) {
  os << "x,value,err\n" << std::setprecision(17);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    os << grid[k] << ',' << values[k].mean << ',' << values[k].std_err << '\n';
  }
}

void write_pn_csv(std::ostream& os, const ParticleStats& stats) {
  os << "n,prob,err\n" << std::setprecision(17);
  for (std::size_t n = 0; n < stats.p_n.size(); ++n) {
    os << n << ',' << stats.p_n[n] << ',' << stats.p_n_err[n] << '\n';
  }
}

void write_g1_csv(std::ostream& os, std::span<const double> displacements,
                  std::span<const EstimateResult> values) {
  write_density_csv(os, displacements, values);
}

}  // namespace nqfs
