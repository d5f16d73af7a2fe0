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

#include "nqfs/oracles.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace nqfs {
namespace {

constexpr double kPi = std::numbers::pi;

void check_positive(double value, const char* what) {
  if (!(value > 0.0)) throw ConfigError(std::string(what) + " must be positive");
}

// F_i(k) = k_i L + sum_{j != i} [atan((k_i - k_j)/c) + atan((k_i + k_j)/c)] - pi i
double bethe_residual(const Eigen::VectorXd& k, double c, double L, Eigen::VectorXd& F) {
  const int n = static_cast<int>(k.size());
  F.resize(n);
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    double s = k[i] * L - kPi * (i + 1);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      s += std::atan((k[i] - k[j]) / c) + std::atan((k[i] + k[j]) / c);
    }
    F[i] = s;
    worst = std::max(worst, std::abs(s));
  }
  return worst;
}

void bethe_jacobian(const Eigen::VectorXd& k, double c, double L, Eigen::MatrixXd& J) {
  const int n = static_cast<int>(k.size());
  J.setZero(n, n);
  for (int i = 0; i < n; ++i) {
    J(i, i) = L;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dm = (k[i] - k[j]) / c, dp = (k[i] + k[j]) / c;
      const double a = 1.0 / (c * (1.0 + dm * dm));
      const double b = 1.0 / (c * (1.0 + dp * dp));
      J(i, i) += a + b;
      J(i, j) += b - a;
    }
  }
}

// Damped Newton with backtracking on the max-norm residual.
bool bethe_newton(Eigen::VectorXd& k, double c, double L, double tol, int max_iter,
                  double& residual, int& iterations) {
  Eigen::VectorXd F, trial, Ft;
  Eigen::MatrixXd J;
  residual = bethe_residual(k, c, L, F);
  for (int it = 0; it < max_iter; ++it) {
    if (residual < tol) {
      iterations += it;
      return true;
    }
    bethe_jacobian(k, c, L, J);
    const Eigen::VectorXd step = J.partialPivLu().solve(F);
    double t = 1.0;
    bool improved = false;
    for (int b = 0; b < 40; ++b) {
      trial = k - t * step;
      const double r = bethe_residual(trial, c, L, Ft);
      if (std::isfinite(r) && r < residual) {
        k = trial;
        F = Ft;
        residual = r;
        improved = true;
        break;
      }
      t *= 0.5;
    }
    if (!improved) {
      iterations += it;
      return residual < tol;
    }
  }
  iterations += max_iter;
  return residual < tol;
}

}  // namespace

double tg_energy(int n, double m, double mu, double L) {
  const double nn = n;
  return kPi * kPi * nn * (nn + 1.0) * (2.0 * nn + 1.0) / (12.0 * m * L * L) - mu * nn;
}

GroundState tg_ground_state(double m, double mu, double L, int n_max) {
  check_positive(m, "tg_ground_state: m");
  check_positive(L, "tg_ground_state: L");
  GroundState best{0.0, 0};
  for (int n = 1; n <= n_max; ++n) {
    const double e = tg_energy(n, m, mu, L);
    if (e < best.energy) best = {e, n};
  }
  return best;
}

DensityPair tg_densities(int n0, double m, double L, std::span<const double> grid) {
  if (n0 < 0) throw ConfigError("tg_densities: n0 must be non-negative");
  check_positive(m, "tg_densities: m");
  check_positive(L, "tg_densities: L");
  DensityPair r;
  r.number.assign(grid.size(), 0.0);
  r.kinetic.assign(grid.size(), 0.0);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    for (int j = 1; j <= n0; ++j) {
      const double q = j * kPi / L;
      const double s = std::sin(q * grid[k]), c = std::cos(q * grid[k]);
      r.number[k] += 2.0 / L * s * s;
      r.kinetic[k] += 1.0 / (2.0 * m) * 2.0 / L * q * q * c * c;
    }
  }
  return r;
}

BetheSolution bethe_solve(double m, double mu, double g, double L, int n) {
  check_positive(m, "bethe_solve: m");
  check_positive(g, "bethe_solve: g");
  check_positive(L, "bethe_solve: L");
  if (n < 0) throw ConfigError("bethe_solve: n must be non-negative");
  BetheSolution sol;
  sol.n = n;
  if (n == 0) return sol;
  const double c = 2.0 * m * g;
  constexpr double kTol = 1e-11;
  Eigen::VectorXd k(n);
  const double scale = L + 2.0 * (n - 1) / c;
  for (int i = 0; i < n; ++i) k[i] = kPi * (i + 1) / scale;
  bool ok = bethe_newton(k, c, L, kTol, 200, sol.residual, sol.iterations);
  if (!ok) {
    // Continuation from the hard-core limit.
    double cc = std::max(c, 1e6 * n / L);
    for (int i = 0; i < n; ++i) k[i] = kPi * (i + 1) / (L + 2.0 * (n - 1) / cc);
    while (true) {
      ok = bethe_newton(k, cc, L, kTol, 200, sol.residual, sol.iterations);
      if (!ok) break;
      if (cc == c) break;
      cc = std::max(c, 0.7 * cc);
    }
  }
  if (!ok) {
    std::ostringstream os;
    os << "bethe_solve: Newton did not converge for n=" << n << ", residual "
       << sol.residual;
    throw NumericalError(os.str());
  }
  sol.k.assign(k.data(), k.data() + n);
  for (int i = 0; i < n; ++i) {
    if (!(sol.k[i] > 0.0) || (i > 0 && !(sol.k[i] > sol.k[i - 1]))) {
      throw NumericalError("bethe_solve: pseudomomenta not strictly increasing");
    }
  }
  double e = 0.0;
  for (double ki : sol.k) e += ki * ki;
  sol.energy = e / (2.0 * m) - mu * n;
  return sol;
}

BetheSolution bethe_ground(double m, double mu, double g, double L, int n_max) {
  BetheSolution best = bethe_solve(m, mu, g, L, 0);
  for (int n = 1; n <= n_max; ++n) {
    BetheSolution s = bethe_solve(m, mu, g, L, n);
    if (s.energy < best.energy) {
      best = std::move(s);
    } else if (n > best.n + 3) {
      break;
    }
  }
  return best;
}

double cs_lambda(double m, double g) {
  check_positive(m, "cs_lambda: m");
  if (g < 0.0) throw ConfigError("cs_lambda: g must be non-negative");
  return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * m * g));
}

double cs_energy(int n, double m, double mu, double g, double L) {
  const double lam = cs_lambda(m, g);
  const double nn = n;
  return kPi * kPi * lam * lam / (6.0 * m * L * L) * nn * (nn * nn - 1.0) - mu * nn;
}

CsGround cs_ground(double m, double mu, double g, double L, int n_max) {
  check_positive(L, "cs_ground: L");
  CsGround best{0.0, 0, cs_lambda(m, g)};
  for (int n = 1; n <= n_max; ++n) {
    const double e = cs_energy(n, m, mu, g, L);
    if (e < best.energy) {
      best.energy = e;
      best.n0 = n;
    }
  }
  return best;
}

std::vector<EstimateResult> cs_exact_g1(double m, double g, double L, int n0,
                                        std::span<const double> displacements,
                                        std::size_t mc_samples, std::uint64_t seed) {
  if (n0 < 1) throw ConfigError("cs_exact_g1: n0 must be at least 1");
  check_positive(L, "cs_exact_g1: L");
  const double lam = cs_lambda(m, g);
  const std::size_t n = n0;
  const std::size_t D = displacements.size();
  constexpr int kChains = 4;
  const std::size_t per_chain = std::max<std::size_t>(mc_samples / kChains, 1);

  // ln psi contribution of particle i placed at y, against all others.
  auto partial = [&](const std::vector<double>& x, std::size_t i, double y) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) s += std::log(std::abs(std::sin(kPi * (y - x[j]) / L)));
    }
    return lam * s;
  };

  std::vector<std::vector<std::vector<double>>> series(D, std::vector<std::vector<double>>(kChains));
  for (int c = 0; c < kChains; ++c) {
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(c))));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = (i + u01(rng) * 0.5) * L / n;
    const double w = L / n;
    auto sweep = [&]() {
      for (std::size_t i = 0; i < n; ++i) {
        double y = std::fmod(x[i] + w * (u01(rng) - 0.5) + L, L);
        const double d = partial(x, i, y) - partial(x, i, x[i]);
        if (d >= 0.0 || u01(rng) < std::exp(2.0 * d)) x[i] = y;
      }
    };
    for (int b = 0; b < 1000; ++b) sweep();
    for (auto& s : series) s[c].reserve(per_chain);
    for (std::size_t s = 0; s < per_chain; ++s) {
      sweep();
      for (std::size_t k = 0; k < D; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double y = std::fmod(x[i] + displacements[k], L);
          acc += std::exp(partial(x, i, y) - partial(x, i, x[i]));
        }
        series[k][c].push_back(acc / L);
      }
    }
  }
  std::vector<EstimateResult> r(D);
  const std::size_t B = default_bin_size(per_chain);
  for (std::size_t k = 0; k < D; ++k) r[k] = binned_statistics(series[k], B);
  return r;
}

BogoliubovSolution bogoliubov_solve(double v, double lambda, double L, int j_max,
                                    int n_trunc) {
  check_positive(v, "bogoliubov_solve: v");
  check_positive(L, "bogoliubov_solve: L");
  if (std::abs(lambda / v) > 0.5) {
    throw ConfigError("bogoliubov_solve: |lambda / v| must not exceed 1/2");
  }
  if (n_trunc < 0) throw ConfigError("bogoliubov_solve: n_trunc must be non-negative");
  const double l2 = lambda * lambda;
  struct Mode {
    double p, u2, v2, de;
  };
  auto mode = [&](int j) {
    Mode md;
    md.p = 2.0 * kPi * j / L;
    const double a = md.p * md.p + v;
    const double s = std::sqrt(std::max(a * a - 4.0 * l2, 0.0));
    md.v2 = s > 0.0 ? 2.0 * l2 / (s * (a + s)) : std::numeric_limits<double>::infinity();
    md.u2 = 1.0 + md.v2;
    md.de = -4.0 * l2 / (s + a);
    return md;
  };
  if (j_max <= 0) {
    j_max = 1;
    while (true) {
      const Mode md = mode(j_max);
      const double contrib = std::max(std::abs(md.de) / (2.0 * L), md.v2);
      if (contrib < 1e-12 || j_max > 10000000) break;
      ++j_max;
    }
  }

  BogoliubovSolution r;
  const int nt = n_trunc;
  std::vector<double> pn(nt + 1, 0.0), next(nt + 1);
  pn[0] = 1.0;
  double log_norm = 0.0;
  auto convolve = [&](const std::vector<double>& w, std::size_t len) {
    std::fill(next.begin(), next.end(), 0.0);
    for (int a = 0; a <= nt; a += 2) {
      if (pn[a] == 0.0) continue;
      for (int b = 0; a + b <= nt && b / 2 < static_cast<int>(len); b += 2) {
        next[a + b] += pn[a] * w[b / 2];
      }
    }
    pn.swap(next);
  };

  double eps = 0.0, mean = 0.0;
  std::vector<double> w(nt / 2 + 1);
  std::size_t len = 0;
  for (int j = -j_max; j <= j_max; ++j) {
    const Mode md = mode(j);
    r.p.push_back(md.p);
    r.u.push_back(std::sqrt(md.u2));
    r.v.push_back(std::sqrt(md.v2));
    eps += md.de;
    mean += md.v2;
    if (j < 0 || std::isinf(md.v2)) continue;
    const double ratio2 = md.v2 / md.u2;
    if (j == 0) {
      // Occupation 2l with weight (v/2u)^{2l} (2l)! / (l!)^2.
      w[0] = 1.0;
      for (len = 1; len < w.size() && w[len - 1] > 1e-40; ++len) {
        w[len] = w[len - 1] * ratio2 * (2.0 * len) * (2.0 * len - 1.0) / (4.0 * len * len);
      }
      log_norm += 0.5 * std::log(md.u2);
    } else {
      // l particles at +p and l at -p.
      w[0] = 1.0;
      for (len = 1; len < w.size() && w[len - 1] > 1e-40; ++len) w[len] = w[len - 1] * ratio2;
      log_norm += std::log(md.u2);
    }
    convolve(w, len);
  }
  r.eps0 = eps / (2.0 * L);
  r.mean_n = mean;
  if (std::isinf(mean)) {
    r.mean_n_from_pn = mean;
    r.truncation = 1.0;
    return r;
  }
  double total = 0.0;
  for (double x : pn) total += x;
  r.truncation = -std::expm1(std::log(total) - log_norm);
  r.p_n.resize(nt + 1);
  double mn = 0.0;
  for (int n = 0; n <= nt; ++n) {
    r.p_n[n] = pn[n] / total;
    mn += n * r.p_n[n];
  }
  r.mean_n_from_pn = mn;
  return r;
}

}  // namespace nqfs
