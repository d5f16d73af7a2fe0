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

#include "nqfs/ansatz.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "nqfs/kernels.hpp"

namespace nqfs {
namespace {

constexpr double kPi = std::numbers::pi;

double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double radical_inverse(int base, std::uint64_t i) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

std::vector<int> first_primes(int count) {
  std::vector<int> p;
  for (int c = 2; static_cast<int>(p.size()) < count; ++c) {
    bool prime = true;
    for (int q : p) {
      if (q * q > c) break;
      if (c % q == 0) {
        prime = false;
        break;
      }
    }
    if (prime) p.push_back(c);
  }
  return p;
}

// Pair factor f(delta) for delta = x_i - x_j, with derivatives in delta.
// Returns false where the factor vanishes.
bool pair_factor(const JastrowSpec& j, double L, double delta, double& f, double& d1,
                 double& d2) {
  switch (j.kind) {
    case JastrowKind::LiebLiniger: {
      const double r = std::abs(delta) + 1.0 / (j.mass * j.g);
      const double sgn = delta > 0.0 ? 1.0 : (delta < 0.0 ? -1.0 : 0.0);
      f = std::log(r / L);
      d1 = sgn / r;
      d2 = -1.0 / (r * r);
      return true;
    }
    case JastrowKind::CalogeroTanh: {
      double d = std::fmod(delta, L);
      if (d < 0.0) d += L;
      if (d <= 0.0 || d >= L) return false;
      const double a = j.kappa / L;
      const double t1 = std::tanh(a * d);
      const double t2 = std::tanh(a * (L - d));
      f = j.lambda * (std::log(t1) + std::log(t2));
      const double s1 = 1.0 - t1 * t1, s2 = 1.0 - t2 * t2;
      d1 = j.lambda * a * (s1 / t1 - s2 / t2);
      d2 = -j.lambda * a * a *
           ((1.0 + t1 * t1) * s1 / (t1 * t1) + (1.0 + t2 * t2) * s2 / (t2 * t2));
      return true;
    }
    case JastrowKind::CalogeroSine: {
      const double k = kPi / L;
      const double sn = std::sin(k * delta);
      if (sn == 0.0) return false;
      const double cs = std::cos(k * delta);
      f = j.lambda * std::log(std::abs(sn));
      d1 = j.lambda * k * cs / sn;
      d2 = -j.lambda * k * k / (sn * sn);
      return true;
    }
    default:
      f = d1 = d2 = 0.0;
      return true;
  }
}

struct NetWork {
  Mlp::Tape rho_tape;
  std::vector<Mlp::Tape> tapes;
  Mlp::TangentScratch scratch;
  std::vector<double> S, D, DD, g1, g2, dS;
};

NetWork& net_work() {
  thread_local NetWork w;
  return w;
}

}  // namespace

int EmbeddingSpec::dim() const {
  switch (kind) {
    case EmbeddingKind::HardWallPosition:
    case EmbeddingKind::PeriodicPosition:
      return 2;
    default:
      return 1;
  }
}

void embed_with_derivatives(const EmbeddingSpec& spec, double raw, double* e,
                            double* de, double* dde) {
  const double L = spec.length;
  switch (spec.kind) {
    case EmbeddingKind::HardWallPosition:
      e[0] = raw / L;
      e[1] = 1.0 - raw / L;
      de[0] = 1.0 / L;
      de[1] = -1.0 / L;
      dde[0] = dde[1] = 0.0;
      break;
    case EmbeddingKind::HardWallSeparation:
      e[0] = (raw / L) * (raw / L);
      de[0] = 2.0 * raw / (L * L);
      dde[0] = 2.0 / (L * L);
      break;
    case EmbeddingKind::PeriodicPosition: {
      const double k = 2.0 * kPi / L;
      const double s = std::sin(k * raw), c = std::cos(k * raw);
      e[0] = s;
      e[1] = c;
      de[0] = k * c;
      de[1] = -k * s;
      dde[0] = -k * k * s;
      dde[1] = -k * k * c;
      break;
    }
    case EmbeddingKind::PeriodicSeparation: {
      const double k = 2.0 * kPi / L;
      const double s = std::sin(k * raw), c = std::cos(k * raw);
      e[0] = c;
      de[0] = -k * s;
      dde[0] = -k * k * c;
      break;
    }
  }
}

std::vector<double> embed(const EmbeddingSpec& spec, double raw) {
  double e[2], de[2], dde[2];
  embed_with_derivatives(spec, raw, e, de, dde);
  return std::vector<double>(e, e + spec.dim());
}

double deepset_eval(const DeepSet& ds, std::span<const double> params,
                    const EmbeddingSpec& spec, std::span<const double> raws) {
  if (params.size() != ds.num_params()) throw Error("deepset: parameter slice size mismatch");
  if (spec.dim() != ds.phi.input_dim()) throw Error("deepset: embedding/phi dimension mismatch");
  const auto pphi = params.subspan(0, ds.phi.num_params());
  const auto prho = params.subspan(ds.phi.num_params());
  const int F = ds.phi.output_dim();
  std::vector<double> S(F, 0.0), out(F);
  double e[2], de[2], dde[2];
  for (double r : raws) {
    embed_with_derivatives(spec, r, e, de, dde);
    ds.phi.forward(pphi, std::span<const double>(e, spec.dim()), out);
    for (int f = 0; f < F; ++f) S[f] += out[f];
  }
  return mlp_forward(ds.rho, prho, S);
}

double log_reg_factor(int n, double c1, double c2, double s) {
  return -softplus(-s * (n - c1)) - softplus(s * (n - c2));
}

void log_reg_factor_gradient(int n, double c1, double c2, double s, double* out) {
  const double a = sigmoid(-s * (n - c1));
  const double b = sigmoid(s * (n - c2));
  out[0] = -s * a;
  out[1] = s * b;
  out[2] = (n - c1) * a - (n - c2) * b;
}

double log_cutoff_factor(std::span<const double> x, double L) {
  double v = -0.5 * static_cast<double>(x.size()) * std::log(L / 30.0);
  for (double xi : x) {
    if (!(xi > 0.0 && xi < L)) return kLogZero;
    v += std::log(xi / L) + std::log1p(-xi / L);
  }
  return v;
}

double log_jastrow(std::span<const double> x, const JastrowSpec& spec, double L) {
  const std::size_t n = x.size();
  if (spec.kind == JastrowKind::None) return 0.0;
  double v = 0.0;
  if (spec.kind == JastrowKind::TonksGirardeau) {
    const double k = kPi / L;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = std::sin(k * x[i]);
      if (!(s > 0.0)) return kLogZero;
      v += std::log(s);
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double d = std::abs(std::cos(k * x[i]) - std::cos(k * x[j]));
        if (d == 0.0) return kLogZero;
        v += std::log(d);
      }
    }
    return v;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double f, d1, d2;
      if (!pair_factor(spec, L, x[i] - x[j], f, d1, d2)) return kLogZero;
      v += f;
    }
  }
  return v;
}

double jastrow_log_norm(int n, const JastrowSpec& spec, double L, int qmc_points) {
  if (spec.kind != JastrowKind::LiebLiniger) {
    throw ConfigError("jastrow_log_norm is defined for the Lieb-Liniger factor only");
  }
  if (n < 0) throw ConfigError("jastrow_log_norm: negative particle number");
  if (n <= 1) return n * std::log(L);
  const double mgL = spec.mass * spec.g * L;
  if (mgL >= kHardCoreThreshold) {
    double v = n * std::log(L);
    for (int j = 0; j < n; ++j) {
      v += 2.0 * std::lgamma(1.0 + j) + std::lgamma(2.0 + j) - std::lgamma(1.0 + n + j);
    }
    return v;
  }
  const double a = 1.0 / mgL;
  const auto primes = first_primes(n);
  std::vector<double> u(n);
  std::vector<double> logs(qmc_points);
  for (int p = 0; p < qmc_points; ++p) {
    for (int k = 0; k < n; ++k) u[k] = radical_inverse(primes[k], static_cast<std::uint64_t>(p) + 1);
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) s += 2.0 * std::log(std::abs(u[i] - u[j]) + a);
    }
    logs[p] = s;
  }
  const double mx = *std::max_element(logs.begin(), logs.end());
  double acc = 0.0;
  for (double l : logs) acc += std::exp(l - mx);
  return mx + std::log(acc / qmc_points) + n * std::log(L);
}

NqfsModel::NqfsModel(const ModelOptions& options) : opt_(options) {
  if (opt_.n_max < 0) throw ConfigError("n_max must be non-negative");
  if (!(opt_.s > 0.0) || opt_.c1 < 0.0 || opt_.c2 < opt_.c1) {
    throw ConfigError("regularization init must satisfy s > 0 and 0 <= c1 <= c2");
  }
  const double L = opt_.geometry.length;
  const auto& j = opt_.jastrow;
  if (j.kind == JastrowKind::LiebLiniger) {
    if (!(j.mass > 0.0) || !(j.g > 0.0)) {
      throw ConfigError("Lieb-Liniger Jastrow needs m > 0 and g > 0");
    }
    // Cusp: u'(0) / u(0) must equal m g.
    const double u0 = 1.0 / (j.mass * j.g * L);
    const double du0 = 1.0 / L;
    if (std::abs(du0 / u0 - j.mass * j.g) > 1e-9 * j.mass * j.g) {
      throw NumericalError("Lieb-Liniger Jastrow violates the cusp condition");
    }
  }
  if (j.kind == JastrowKind::TonksGirardeau && opt_.geometry.periodic()) {
    throw ConfigError("the Tonks-Girardeau reference state is a hard-wall state");
  }
  if (opt_.cutoff && opt_.geometry.periodic()) {
    throw ConfigError("the cutoff factor applies to hard-wall geometries only");
  }

  if (opt_.nets) {
    if (opt_.width <= 0 || opt_.depth < 0 || opt_.feature_dim <= 0) {
      throw ConfigError("network width, depth and feature_dim must be positive");
    }
    auto widths = [&](int in, int out) {
      std::vector<int> w{in};
      for (int d = 0; d < opt_.depth; ++d) w.push_back(opt_.width);
      w.push_back(out);
      return w;
    };
    const int pe = position_embedding().dim();
    const int se = separation_embedding().dim();
    f1_ = DeepSet{Mlp(widths(pe, opt_.feature_dim)), Mlp(widths(opt_.feature_dim, 1))};
    f2_ = DeepSet{Mlp(widths(se, opt_.feature_dim)), Mlp(widths(opt_.feature_dim, 1))};
    off_phi1_ = 0;
    off_rho1_ = off_phi1_ + f1_.phi.num_params();
    off_phi2_ = off_rho1_ + f1_.rho.num_params();
    off_rho2_ = off_phi2_ + f2_.phi.num_params();
    reg_offset_ = off_rho2_ + f2_.rho.num_params();
  }
  num_params_ = reg_offset_ + 3;

  log_norm_.assign(opt_.n_max + 1, 0.0);
  if (j.kind == JastrowKind::LiebLiniger) {
    for (int n = 0; n <= opt_.n_max; ++n) log_norm_[n] = nqfs::jastrow_log_norm(n, j, L);
  }
}

EmbeddingSpec NqfsModel::position_embedding() const {
  return {opt_.geometry.periodic() ? EmbeddingKind::PeriodicPosition
                                   : EmbeddingKind::HardWallPosition,
          opt_.geometry.length};
}

EmbeddingSpec NqfsModel::separation_embedding() const {
  return {opt_.geometry.periodic() ? EmbeddingKind::PeriodicSeparation
                                   : EmbeddingKind::HardWallSeparation,
          opt_.geometry.length};
}

ParamVector NqfsModel::init_params(std::uint64_t seed) const {
  ParamVector p(num_params_, 0.0);
  std::mt19937_64 rng(splitmix64(seed));
  if (opt_.nets) {
    f1_.phi.init_params(std::span(p).subspan(off_phi1_, f1_.phi.num_params()), rng);
    f1_.rho.init_params(std::span(p).subspan(off_rho1_, f1_.rho.num_params()), rng);
    f2_.phi.init_params(std::span(p).subspan(off_phi2_, f2_.phi.num_params()), rng);
    f2_.rho.init_params(std::span(p).subspan(off_rho2_, f2_.rho.num_params()), rng);
  }
  p[reg_offset_] = opt_.c1;
  p[reg_offset_ + 1] = opt_.c2;
  p[reg_offset_ + 2] = opt_.s;
  return p;
}

bool NqfsModel::sector_allowed(std::size_t n) const {
  if (n > static_cast<std::size_t>(opt_.n_max)) return false;
  if (opt_.parity == Parity::EvenOnly && n % 2 != 0) return false;
  return true;
}

double NqfsModel::jastrow_log_norm(std::size_t n) const {
  if (n >= log_norm_.size()) throw ConfigError("jastrow_log_norm: n exceeds n_max");
  return log_norm_[n];
}

double NqfsModel::analytic_log(std::span<const double> params,
                               std::span<const double> x) const {
  const std::size_t n = x.size();
  const double L = opt_.geometry.length;
  double v = -0.5 * static_cast<double>(n) * std::log(L);
  v += log_reg_factor(static_cast<int>(n), params[reg_offset_], params[reg_offset_ + 1],
                      params[reg_offset_ + 2]);
  if (opt_.cutoff) {
    const double c = log_cutoff_factor(x, L);
    if (is_log_zero(c)) return kLogZero;
    v += c;
  }
  if (opt_.jastrow.kind != JastrowKind::None) {
    const double jv = log_jastrow(x, opt_.jastrow, L);
    if (is_log_zero(jv)) return kLogZero;
    v += jv - 0.5 * log_norm_[n];
  }
  return v;
}

double NqfsModel::log_amplitude(std::span<const double> params,
                                std::span<const double> x) const {
  if (params.size() != num_params_) throw Error("log_amplitude: parameter vector has wrong length");
  const std::size_t n = x.size();
  if (!sector_allowed(n)) return kLogZero;
  const double L = opt_.geometry.length;
  if (!opt_.geometry.periodic()) {
    for (double xi : x) {
      if (!(xi > 0.0 && xi < L)) return kLogZero;
    }
  }
  double v = analytic_log(params, x);
  if (is_log_zero(v) || !opt_.nets) return v;

  NetWork& w = net_work();
  const int F = opt_.feature_dim;
  double e[2], de[2], dde[2];
  auto& tape = w.rho_tape;

  const auto pe = position_embedding();
  const auto pphi1 = params.subspan(off_phi1_, f1_.phi.num_params());
  w.S.assign(F, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    embed_with_derivatives(pe, x[i], e, de, dde);
    f1_.phi.forward(pphi1, std::span<const double>(e, pe.dim()), tape);
    kernels::active().axpy(F, 1.0, tape.act.back().data(), w.S.data());
  }
  f1_.rho.forward(params.subspan(off_rho1_, f1_.rho.num_params()), w.S, tape);
  v += tape.act.back()[0];

  const auto se = separation_embedding();
  const auto pphi2 = params.subspan(off_phi2_, f2_.phi.num_params());
  w.S.assign(F, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      embed_with_derivatives(se, x[i] - x[j], e, de, dde);
      f2_.phi.forward(pphi2, std::span<const double>(e, 1), tape);
      kernels::active().axpy(F, 1.0, tape.act.back().data(), w.S.data());
    }
  }
  f2_.rho.forward(params.subspan(off_rho2_, f2_.rho.num_params()), w.S, tape);
  v += tape.act.back()[0];
  return v;
}

void NqfsModel::log_amplitude_derivatives(std::span<const double> params,
                                          std::span<const double> x, bool want_pos,
                                          bool want_params,
                                          AmplitudeDerivatives& out) const {
  out.value = log_amplitude(params, x);
  if (is_log_zero(out.value)) {
    throw NumericalError("log_amplitude_derivatives: amplitude is zero at this configuration");
  }
  const std::size_t n = x.size();
  const double L = opt_.geometry.length;
  out.laplacian = 0.0;
  if (want_pos) out.grad_positions.assign(n, 0.0);
  if (want_params) out.grad_params.assign(num_params_, 0.0);

  if (want_params) {
    log_reg_factor_gradient(static_cast<int>(n), params[reg_offset_],
                            params[reg_offset_ + 1], params[reg_offset_ + 2],
                            out.grad_params.data() + reg_offset_);
  }

  if (want_pos) {
    auto& g = out.grad_positions;
    if (opt_.cutoff) {
      for (std::size_t i = 0; i < n; ++i) {
        const double a = x[i], b = L - x[i];
        g[i] += 1.0 / a - 1.0 / b;
        out.laplacian += -1.0 / (a * a) - 1.0 / (b * b);
      }
    }
    const auto& jk = opt_.jastrow;
    if (jk.kind == JastrowKind::TonksGirardeau) {
      const double k = kPi / L;
      std::vector<double> c(n), dc(n), ddc(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double s = std::sin(k * x[i]);
        c[i] = std::cos(k * x[i]);
        dc[i] = -k * s;
        ddc[i] = -k * k * c[i];
        g[i] += k * c[i] / s;
        out.laplacian += -k * k / (s * s);
      }
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          const double d = c[i] - c[j];
          g[i] += dc[i] / d;
          g[j] -= dc[j] / d;
          out.laplacian += ddc[i] / d - dc[i] * dc[i] / (d * d);
          out.laplacian += -ddc[j] / d - dc[j] * dc[j] / (d * d);
        }
      }
    } else if (jk.kind != JastrowKind::None) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          double f, d1, d2;
          pair_factor(jk, L, x[i] - x[j], f, d1, d2);
          g[i] += d1;
          g[j] -= d1;
          out.laplacian += 2.0 * d2;
        }
      }
    }
  }

  if (!opt_.nets) return;

  NetWork& w = net_work();
  const auto& kt = kernels::active();
  const int F = opt_.feature_dim;
  double e[2], de[2], dde[2];
  w.g1.resize(F);
  w.g2.resize(F);
  w.dS.resize(F);
  double dy = 0.0, ddy = 0.0;
  const double one = 1.0;

  auto finish = [&](const DeepSet& ds, std::size_t off_phi, std::size_t off_rho,
                    std::size_t n_elems) {
    const auto pphi = params.subspan(off_phi, ds.phi.num_params());
    const auto prho = params.subspan(off_rho, ds.rho.num_params());
    ds.rho.forward(prho, w.S, w.rho_tape);
    if (want_pos) {
      for (std::size_t i = 0; i < n; ++i) {
        ds.rho.tangent(prho, w.rho_tape, std::span<const double>(w.D).subspan(i * F, F),
                       std::span<const double>(w.DD).subspan(i * F, F),
                       std::span<double>(&dy, 1), std::span<double>(&ddy, 1), w.scratch);
        out.grad_positions[i] += dy;
        out.laplacian += ddy;
      }
    }
    if (want_params) {
      ds.rho.backward(prho, w.rho_tape, std::span<const double>(&one, 1),
                      std::span(out.grad_params).subspan(off_rho, ds.rho.num_params()),
                      w.dS);
      auto gphi = std::span(out.grad_params).subspan(off_phi, ds.phi.num_params());
      for (std::size_t t = 0; t < n_elems; ++t) {
        ds.phi.backward(pphi, w.tapes[t], w.dS, gphi, {});
      }
    }
  };

  // Positions.
  {
    const auto pe = position_embedding();
    const auto pphi = params.subspan(off_phi1_, f1_.phi.num_params());
    if (w.tapes.size() < n) w.tapes.resize(n);
    w.S.assign(F, 0.0);
    if (want_pos) {
      w.D.assign(n * F, 0.0);
      w.DD.assign(n * F, 0.0);
    }
    for (std::size_t i = 0; i < n; ++i) {
      embed_with_derivatives(pe, x[i], e, de, dde);
      f1_.phi.forward(pphi, std::span<const double>(e, pe.dim()), w.tapes[i]);
      kt.axpy(F, 1.0, w.tapes[i].act.back().data(), w.S.data());
      if (want_pos) {
        f1_.phi.tangent(pphi, w.tapes[i], std::span<const double>(de, pe.dim()),
                        std::span<const double>(dde, pe.dim()),
                        std::span<double>(w.D).subspan(i * F, F),
                        std::span<double>(w.DD).subspan(i * F, F), w.scratch);
      }
    }
    finish(f1_, off_phi1_, off_rho1_, n);
  }

  // Separations.
  {
    const auto se = separation_embedding();
    const auto pphi = params.subspan(off_phi2_, f2_.phi.num_params());
    const std::size_t np = n < 2 ? 0 : n * (n - 1) / 2;
    if (w.tapes.size() < np) w.tapes.resize(np);
    w.S.assign(F, 0.0);
    if (want_pos) {
      w.D.assign(n * F, 0.0);
      w.DD.assign(n * F, 0.0);
    }
    std::size_t t = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j, ++t) {
        embed_with_derivatives(se, x[i] - x[j], e, de, dde);
        f2_.phi.forward(pphi, std::span<const double>(e, 1), w.tapes[t]);
        kt.axpy(F, 1.0, w.tapes[t].act.back().data(), w.S.data());
        if (want_pos) {
          f2_.phi.tangent(pphi, w.tapes[t], std::span<const double>(de, 1),
                          std::span<const double>(dde, 1), w.g1, w.g2, w.scratch);
          kt.axpy(F, 1.0, w.g1.data(), w.D.data() + i * F);
          kt.axpy(F, -1.0, w.g1.data(), w.D.data() + j * F);
          kt.axpy(F, 1.0, w.g2.data(), w.DD.data() + i * F);
          kt.axpy(F, 1.0, w.g2.data(), w.DD.data() + j * F);
        }
      }
    }
    finish(f2_, off_phi2_, off_rho2_, np);
  }
}


void NqfsModel::pair_insertions(std::span<const double> params, std::span<const double> x,
                                std::span<const double> nodes, std::span<double> out_log,
                                std::span<const double> node_weights, double log_base,
                                std::span<double> grad) const {
  if (params.size() != num_params_) throw Error("pair_insertions: parameter vector has wrong length");
  const std::size_t n = x.size();
  const std::size_t Q = nodes.size();
  const bool want_grad = !grad.empty();
  if (out_log.size() != Q) throw Error("pair_insertions: output size mismatch");
  if (want_grad && (node_weights.size() != Q || grad.size() != num_params_)) {
    throw Error("pair_insertions: weight or gradient size mismatch");
  }
  if (!sector_allowed(n + 2)) {
    std::fill(out_log.begin(), out_log.end(), kLogZero);
    return;
  }

  std::vector<double> aug(x.begin(), x.end());
  aug.resize(n + 2);
  double reg_grad[3];
  log_reg_factor_gradient(static_cast<int>(n + 2), params[reg_offset_],
                          params[reg_offset_ + 1], params[reg_offset_ + 2], reg_grad);
  const double L = opt_.geometry.length;
  for (std::size_t k = 0; k < Q; ++k) {
    aug[n] = aug[n + 1] = nodes[k];
    bool inside = true;
    if (!opt_.geometry.periodic()) {
      for (double xi : aug) inside = inside && xi > 0.0 && xi < L;
    }
    out_log[k] = inside ? analytic_log(params, aug) : kLogZero;
  }
  if (!opt_.nets) {
    if (want_grad) {
      double wsum = 0.0;
      for (std::size_t k = 0; k < Q; ++k) {
        if (!is_log_zero(out_log[k])) wsum += node_weights[k] * std::exp(out_log[k] - log_base);
      }
      for (int r = 0; r < 3; ++r) grad[reg_offset_ + r] += wsum * reg_grad[r];
    }
    return;
  }

  const auto& kt = kernels::active();
  const int F = opt_.feature_dim;
  const auto pe = position_embedding();
  const auto se = separation_embedding();
  const auto pphi1 = params.subspan(off_phi1_, f1_.phi.num_params());
  const auto prho1 = params.subspan(off_rho1_, f1_.rho.num_params());
  const auto pphi2 = params.subspan(off_phi2_, f2_.phi.num_params());
  const auto prho2 = params.subspan(off_rho2_, f2_.rho.num_params());
  double e[2], de[2], dde[2];

  thread_local std::vector<Mlp::Tape> base1, base2, node2;
  thread_local Mlp::Tape t_node1, t_zero, t_rho;
  thread_local std::vector<double> S1, S2, S1k, S2k, a1, a2, A1, A2;
  const std::size_t np = n < 2 ? 0 : n * (n - 1) / 2;
  if (base1.size() < n) base1.resize(n);
  if (base2.size() < np) base2.resize(np);
  if (node2.size() < n) node2.resize(n);

  S1.assign(F, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    embed_with_derivatives(pe, x[i], e, de, dde);
    f1_.phi.forward(pphi1, std::span<const double>(e, pe.dim()), base1[i]);
    kt.axpy(F, 1.0, base1[i].act.back().data(), S1.data());
  }
  S2.assign(F, 0.0);
  for (std::size_t i = 0, t = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j, ++t) {
      embed_with_derivatives(se, x[i] - x[j], e, de, dde);
      f2_.phi.forward(pphi2, std::span<const double>(e, 1), base2[t]);
      kt.axpy(F, 1.0, base2[t].act.back().data(), S2.data());
    }
  }
  embed_with_derivatives(se, 0.0, e, de, dde);
  f2_.phi.forward(pphi2, std::span<const double>(e, 1), t_zero);
  kt.axpy(F, 1.0, t_zero.act.back().data(), S2.data());

  if (want_grad) {
    A1.assign(F, 0.0);
    A2.assign(F, 0.0);
    a1.resize(F);
    a2.resize(F);
  }
  thread_local Mlp::Tape t_rho2;
  double wsum = 0.0;
  for (std::size_t k = 0; k < Q; ++k) {
    if (is_log_zero(out_log[k])) continue;
    const double y = nodes[k];
    S1k = S1;
    embed_with_derivatives(pe, y, e, de, dde);
    f1_.phi.forward(pphi1, std::span<const double>(e, pe.dim()), t_node1);
    kt.axpy(F, 2.0, t_node1.act.back().data(), S1k.data());
    S2k = S2;
    for (std::size_t i = 0; i < n; ++i) {
      embed_with_derivatives(se, x[i] - y, e, de, dde);
      f2_.phi.forward(pphi2, std::span<const double>(e, 1), node2[i]);
      kt.axpy(F, 2.0, node2[i].act.back().data(), S2k.data());
    }
    f1_.rho.forward(prho1, S1k, t_rho);
    f2_.rho.forward(prho2, S2k, t_rho2);
    out_log[k] += t_rho.act.back()[0] + t_rho2.act.back()[0];
    if (!want_grad) continue;

    const double wk = node_weights[k] * std::exp(out_log[k] - log_base);
    if (wk == 0.0) continue;
    wsum += wk;
    f1_.rho.backward(prho1, t_rho, std::span<const double>(&wk, 1),
                     grad.subspan(off_rho1_, f1_.rho.num_params()), a1);
    f2_.rho.backward(prho2, t_rho2, std::span<const double>(&wk, 1),
                     grad.subspan(off_rho2_, f2_.rho.num_params()), a2);
    kt.axpy(F, 1.0, a1.data(), A1.data());
    kt.axpy(F, 1.0, a2.data(), A2.data());
    for (int f = 0; f < F; ++f) {
      a1[f] *= 2.0;
      a2[f] *= 2.0;
    }
    f1_.phi.backward(pphi1, t_node1, a1, grad.subspan(off_phi1_, f1_.phi.num_params()), {});
    for (std::size_t i = 0; i < n; ++i) {
      f2_.phi.backward(pphi2, node2[i], a2, grad.subspan(off_phi2_, f2_.phi.num_params()), {});
    }
  }
  if (!want_grad) return;
  auto gphi1 = grad.subspan(off_phi1_, f1_.phi.num_params());
  auto gphi2 = grad.subspan(off_phi2_, f2_.phi.num_params());
  for (std::size_t i = 0; i < n; ++i) f1_.phi.backward(pphi1, base1[i], A1, gphi1, {});
  for (std::size_t t = 0; t < np; ++t) f2_.phi.backward(pphi2, base2[t], A2, gphi2, {});
  f2_.phi.backward(pphi2, t_zero, A2, gphi2, {});
  for (int r = 0; r < 3; ++r) grad[reg_offset_ + r] += wsum * reg_grad[r];
}

}  // namespace nqfs
