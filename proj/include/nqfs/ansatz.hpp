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

// The neural quantum field state: for every particle number n,
//
//   ln phi_n(x) = -(n/2) ln L + rho1(sum_i phi1(e1(x_i)))
//                 + rho2(sum_{i<j} phi2(e2(x_i - x_j)))
//                 + ln q_n + ln C(x) + ln J(x)
//
// with q_n a smoothed pulse in n, C the hard-wall cutoff and J a Jastrow
// factor. Both Deep Sets enter as log-factors, so the state is positive.
//
// ParamVector layout: [phi1 | rho1 | phi2 | rho2 | c1 | c2 | s], each net in
// the Mlp layout. With nets disabled only [c1 | c2 | s] remains.

#ifndef NQFS_ANSATZ_HPP
#define NQFS_ANSATZ_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "nqfs/core.hpp"
#include "nqfs/smoothnet.hpp"

namespace nqfs {

enum class EmbeddingKind {
  HardWallPosition,
  HardWallSeparation,
  PeriodicPosition,
  PeriodicSeparation
};

struct EmbeddingSpec {
  EmbeddingKind kind = EmbeddingKind::HardWallPosition;
  double length = 1.0;

  int dim() const;
};

std::vector<double> embed(const EmbeddingSpec& spec, double raw);

/// Embedding and its first two derivatives with respect to `raw`.
void embed_with_derivatives(const EmbeddingSpec& spec, double raw, double* e,
                            double* de, double* dde);

struct DeepSet {
  Mlp phi;
  Mlp rho;

  std::size_t num_params() const { return phi.num_params() + rho.num_params(); }
};

/// rho(sum_k phi(embed(raw_k))); `params` is the phi slice followed by rho.
/// The empty set evaluates rho(0).
double deepset_eval(const DeepSet& ds, std::span<const double> params,
                    const EmbeddingSpec& spec, std::span<const double> raws);

enum class JastrowKind {
  None,
  LiebLiniger,    // prod (|x_ij|/L + 1/(m g L)), normalized per n
  CalogeroTanh,   // prod [tanh(k d/L) tanh(k (1 - d/L))]^lambda, d = x_ij mod L
  CalogeroSine,   // prod |sin(pi x_ij / L)|^lambda: exact CS ground state
  TonksGirardeau  // prod sin(pi x_i/L) prod |cos(pi x_i/L) - cos(pi x_j/L)|
};

struct JastrowSpec {
  JastrowKind kind = JastrowKind::None;
  double mass = 0.5;
  double g = 0.0;
  double lambda = 1.0;
  double kappa = 12.0;
};

/// Above this value of m g L the Lieb-Liniger normalization uses the
/// hard-core closed form.
inline constexpr double kHardCoreThreshold = 1e4;

enum class Parity { All, EvenOnly };

double log_reg_factor(int n, double c1, double c2, double s);

/// d ln q_n / d(c1, c2, s).
void log_reg_factor_gradient(int n, double c1, double c2, double s, double* out);

/// -(n/2) ln(L/30) + sum ln[(x/L)(1 - x/L)]; -inf on or outside the walls.
double log_cutoff_factor(std::span<const double> x, double length);

/// Unnormalized ln J for the pairwise (and, for TonksGirardeau, one-body)
/// factors. -inf where the factor vanishes.
double log_jastrow(std::span<const double> x, const JastrowSpec& spec, double length);

/// ln of the integral of the squared Lieb-Liniger factor over [0, L]^n.
/// Closed form when m g L >= kHardCoreThreshold, otherwise a Halton
/// quasi-Monte Carlo estimate with `qmc_points` nodes.
double jastrow_log_norm(int n, const JastrowSpec& spec, double length,
                        int qmc_points = 1 << 14);

struct ModelOptions {
  Geometry geometry;
  bool nets = true;
  int width = 32;
  int depth = 2;
  int feature_dim = 32;
  JastrowSpec jastrow;
  bool cutoff = false;
  Parity parity = Parity::All;
  int n_max = 20;
  double c1 = 0.0;
  double c2 = 12.0;
  double s = 1.0;
};

struct AmplitudeDerivatives {
  double value = 0.0;
  std::vector<double> grad_positions;
  double laplacian = 0.0;
  std::vector<double> grad_params;
};

class NqfsModel {
 public:
  explicit NqfsModel(const ModelOptions& options);

  const ModelOptions& options() const { return opt_; }
  const Geometry& geometry() const { return opt_.geometry; }
  int n_max() const { return opt_.n_max; }

  std::size_t num_params() const { return num_params_; }
  /// Index of c1; c2 and s follow.
  std::size_t reg_offset() const { return reg_offset_; }
  /// Network parameters occupy [0, reg_offset()).
  std::size_t num_net_params() const { return reg_offset_; }

  /// Fresh parameters: scaled-uniform net weights from `seed`, zero biases,
  /// regularization from the options.
  ParamVector init_params(std::uint64_t seed) const;

  /// True when sector n can carry amplitude (n <= n_max, parity).
  bool sector_allowed(std::size_t n) const;

  double log_amplitude(std::span<const double> params, std::span<const double> x) const;
  double log_amplitude(std::span<const double> params, const Configuration& c) const {
    return log_amplitude(params, std::span<const double>(c.positions));
  }

  /// Fills value, and depending on the flags grad_positions and laplacian
  /// and/or grad_params. Throws NumericalError when the amplitude is zero.
  void log_amplitude_derivatives(std::span<const double> params,
                                 std::span<const double> x, bool want_positions,
                                 bool want_params, AmplitudeDerivatives& out) const;

  AmplitudeDerivatives log_amplitude_derivatives(std::span<const double> params,
                                                 const Configuration& c) const {
    AmplitudeDerivatives d;
    log_amplitude_derivatives(params, c.positions, true, true, d);
    return d;
  }

  /// Coincident-pair insertions. For every node y_k writes
  /// ln phi_{n+2}(x, y_k, y_k) to out_log[k]. When `grad` is non-empty, also
  /// adds sum_k node_weights[k] * exp(out_log[k] - log_base) *
  /// d ln phi_{n+2}(x, y_k, y_k) / d theta to it.
  void pair_insertions(std::span<const double> params, std::span<const double> x,
                       std::span<const double> nodes, std::span<double> out_log,
                       std::span<const double> node_weights = {}, double log_base = 0.0,
                       std::span<double> grad = {}) const;

  /// Cached per-sector Jastrow normalization (0 for kinds without one).
  double jastrow_log_norm(std::size_t n) const;

  const DeepSet& f1() const { return f1_; }
  const DeepSet& f2() const { return f2_; }
  EmbeddingSpec position_embedding() const;
  EmbeddingSpec separation_embedding() const;

 private:
  double analytic_log(std::span<const double> params, std::span<const double> x) const;

  ModelOptions opt_;
  DeepSet f1_, f2_;
  std::size_t off_phi1_ = 0, off_rho1_ = 0, off_phi2_ = 0, off_rho2_ = 0;
  std::size_t reg_offset_ = 0;
  std::size_t num_params_ = 0;
  std::vector<double> log_norm_;
};

}  // namespace nqfs

#endif  // NQFS_ANSATZ_HPP
