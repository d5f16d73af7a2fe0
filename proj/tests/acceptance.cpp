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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.
//
//   nqfs_acceptance [criterion ...] [--threads N]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <numbers>
#include <utility>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nqfs/config.hpp"
#include "nqfs/estimators.hpp"
#include "nqfs/oracles.hpp"
#include "nqfs/optimizer.hpp"
#include "nqfs/sampler.hpp"
#include "test_util.hpp"

using namespace nqfs;
using std::numbers::pi;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_threads = 1;

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ExperimentConfig shipped_config(const std::string& rel) {
  return load_config((fs::path(NQFS_SOURCE_DIR) / "configs" / rel).string());
}

// ---------------------------------------------------------------------------
// 1. Derivatives against central differences.

NqfsModel random_model(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> coin(0, 1), kind(0, 2), wd(3, 8), fd(2, 5), dp(1, 2);
  std::uniform_real_distribution<double> len(0.8, 3.0), lg(std::log(0.5), std::log(50.0));
  ModelOptions o;
  const bool periodic = coin(rng);
  o.geometry = Geometry(len(rng), periodic ? Boundary::Periodic : Boundary::HardWall);
  o.nets = kind(rng) != 0;
  o.width = wd(rng);
  o.depth = dp(rng);
  o.feature_dim = fd(rng);
  o.n_max = 6;
  o.c1 = 0.5;
  o.c2 = 4.0;
  o.s = 1.3;
  o.jastrow.mass = 0.5;
  const int k = kind(rng);
  if (periodic) {
    o.jastrow.kind = k == 0 ? JastrowKind::None
                            : (k == 1 ? JastrowKind::CalogeroTanh : JastrowKind::CalogeroSine);
    o.jastrow.lambda = 1.0 + 2.0 * std::uniform_real_distribution<double>()(rng);
  } else {
    o.jastrow.kind = k == 0 ? JastrowKind::None
                            : (k == 1 ? JastrowKind::LiebLiniger : JastrowKind::TonksGirardeau);
    o.jastrow.g = std::exp(lg(rng));
    o.cutoff = o.jastrow.kind != JastrowKind::TonksGirardeau;
  }
  if (!o.nets && o.jastrow.kind == JastrowKind::None) o.nets = true;
  return NqfsModel(o);
}

Outcome criterion_derivatives() {
  std::mt19937_64 rng(20260101);
  double worst_param = 0.0, worst_grad = 0.0, worst_lap = 0.0;
  const int cases = 120;
  for (int c = 0; c < cases; ++c) {
    const auto model = random_model(rng);
    const double L = model.geometry().length;
    const auto p = testing::random_params(model, 1000 + c, 0.7);
    const std::size_t n = 1 + c % 5;
    const auto x = testing::spread_positions(n, L, 0.05 * L, rng);
    AmplitudeDerivatives d;
    model.log_amplitude_derivatives(p, x, true, true, d);

    std::vector<double> fd_params(p.size());
    const double hp = 1e-5;
    for (std::size_t k = 0; k < p.size(); ++k) {
      auto pp = p, pm = p;
      pp[k] += hp;
      pm[k] -= hp;
      fd_params[k] = (model.log_amplitude(pp, x) - model.log_amplitude(pm, x)) / (2.0 * hp);
    }
    worst_param = std::max(worst_param, testing::vec_rel_err(d.grad_params, fd_params));

    std::vector<double> fd_grad(n);
    const double hx = 1e-5 * L;
    auto shifted = [&](std::size_t i, double dx) {
      auto y = x;
      y[i] += dx;
      return model.log_amplitude(p, y);
    };
    double lap = 0.0;
    const double f0 = model.log_amplitude(p, x);
    for (std::size_t i = 0; i < n; ++i) {
      fd_grad[i] = (shifted(i, hx) - shifted(i, -hx)) / (2.0 * hx);
      auto second = [&](double h) { return (shifted(i, h) - 2.0 * f0 + shifted(i, -h)) / (h * h); };
      const double h2 = 2e-3 * L;
      lap += (4.0 * second(h2 / 2) - second(h2)) / 3.0;
    }
    worst_grad = std::max(worst_grad, testing::vec_rel_err(d.grad_positions, fd_grad));
    worst_lap = std::max(worst_lap, testing::rel_err(d.laplacian, lap, 1.0));
  }
  Outcome o;
  o.pass = worst_param <= 1e-5 && worst_grad <= 1e-5 && worst_lap <= 1e-4;
  o.detail = fmt("%d models; worst rel err params %.2e, positions %.2e, laplacian %.2e", cases,
                 worst_param, worst_grad, worst_lap);
  return o;
}

// ---------------------------------------------------------------------------
// 2. Sampler stationarity on the constant-sector toy.

NqfsModel toy_model(int n_max, Parity parity) {
  ModelOptions o;
  o.geometry = Geometry(1.0, Boundary::HardWall);
  o.nets = false;
  o.n_max = n_max;
  o.parity = parity;
  o.c1 = 1.0;
  o.c2 = 2.5;
  o.s = 1.2;
  return NqfsModel(o);
}

// Largest |P_n - exact| / sigma_n over the sectors.
double toy_deviation(const NqfsModel& m, bool pair_moves) {
  const auto p = m.init_params(1);
  SamplerConfig cfg;
  cfg.n_chains = 8;
  cfg.sweep_length = 100000;
  cfg.seed = 2026;
  cfg.pair_moves = pair_moves;
  cfg.initial_n = 2;
  cfg.threads = g_threads;
  const auto stats = estimate_particle_stats(run_sampling(m, p, cfg));
  std::vector<double> w(m.n_max() + 1, 0.0);
  double z = 0.0;
  for (int n = 0; n <= m.n_max(); ++n) {
    if (m.sector_allowed(n)) w[n] = std::exp(2.0 * log_reg_factor(n, p[0], p[1], p[2]));
    z += w[n];
  }
  double worst = 0.0;
  for (int n = 0; n <= m.n_max(); ++n) {
    const double diff = std::abs(stats.p_n[n] - w[n] / z);
    if (diff == 0.0) continue;
    worst = std::max(worst, diff / stats.p_n_err[n]);
  }
  return worst;
}

Outcome criterion_sampler() {
  const double single = toy_deviation(toy_model(4, Parity::All), false);
  const double pair = toy_deviation(toy_model(2, Parity::EvenOnly), true);
  return {single <= 3.0 && pair <= 3.0,
          fmt("max deviation %.2f sigma (sectors 0-4), %.2f sigma (pair moves, sectors 0 and 2)",
              single, pair)};
}

// ---------------------------------------------------------------------------
// 3 and 7. Exact Calogero-Sutherland state.

struct CsExact {
  double m = 0.5, L = 5.0, g = 5.0, lambda = 0.0, mu = 0.0;
  NqfsModel model;
  ParamVector params;
  HamiltonianSpec spec;
};

// With nets, both Deep Sets get a zero output layer: the state is unchanged
// but the output-layer derivatives vary from sample to sample.
CsExact cs_exact(bool nets = false) {
  const double m = 0.5, L = 5.0, g = 5.0;
  const double lambda = cs_lambda(m, g);
  ModelOptions o;
  o.geometry = Geometry(L, Boundary::Periodic);
  o.nets = nets;
  o.width = 8;
  o.depth = 1;
  o.feature_dim = 4;
  o.jastrow.kind = JastrowKind::CalogeroSine;
  o.jastrow.lambda = lambda;
  o.n_max = 10;
  o.c1 = 5.0;
  o.c2 = 5.0;
  o.s = 40.0;
  CsExact c{m, L, g, lambda, 75.0 * pi * pi * lambda * lambda / (6.0 * m * L * L),
            NqfsModel(o), {}, {}};
  c.params = c.model.init_params(1);
  if (nets) {
    const auto& f1 = c.model.f1();
    const auto& f2 = c.model.f2();
    for (auto [end, rho] : {std::pair{f1.num_params(), &f1.rho},
                            std::pair{c.model.reg_offset(), &f2.rho}}) {
      const auto& w = rho->widths();
      const std::size_t last = static_cast<std::size_t>(w[w.size() - 2]) + 1;
      std::fill(c.params.begin() + (end - last), c.params.begin() + end, 0.0);
    }
  }
  c.spec = HamiltonianSpec{CalogeroSutherland{m, c.mu, g}, {}};
  return c;
}

SampleBatch cs_batch(const CsExact& c, std::uint64_t seed) {
  SamplerConfig cfg;
  cfg.n_chains = 8;
  cfg.sweep_length = 4000;
  cfg.initial_n = 5;
  cfg.step_width = 0.5;
  cfg.seed = seed;
  cfg.threads = g_threads;
  return run_sampling(c.model, c.params, cfg);
}

Outcome criterion_zero_variance() {
  const auto c = cs_exact();
  const auto batch = cs_batch(c, 31);
  EstimatorOptions opt;
  opt.threads = g_threads;
  const auto ge = estimate_gradient(batch, c.spec, c.model, c.params, opt);
  const double e = ge.energy.mean;
  const double ratio = ge.energy_variance / (e * e);
  return {std::abs(e - (-156.317)) <= 1e-3 && ratio <= 1e-10,
          fmt("E = %.6f +- %.1e, var/E^2 = %.1e", e, ge.energy.std_err, ratio)};
}

Outcome criterion_gradient_at_optimum() {
  bool ok = true;
  std::string detail;
  for (bool nets : {false, true}) {
    const auto c = cs_exact(nets);
    const auto batch = cs_batch(c, 37);
    EstimatorOptions opt;
    opt.threads = g_threads;
    opt.gradient_errors = true;
    const auto ge = estimate_gradient(batch, c.spec, c.model, c.params, opt);
    double worst = 0.0;
    std::size_t varying = 0;
    for (std::size_t k = 0; k < ge.grad.size(); ++k) {
      ok = ok && std::abs(ge.grad[k]) <= 3.0 * ge.grad_err[k];
      if (ge.grad_err[k] > 0.0) {
        ++varying;
        worst = std::max(worst, std::abs(ge.grad[k]) / ge.grad_err[k]);
      }
    }
    detail += fmt("%s%s: %zu components (%zu with non-zero error), max |grad|/err = %.2f, "
                  "max |grad| = %.1e",
                  nets ? "; " : "", nets ? "with zeroed nets" : "analytic", ge.grad.size(),
                  varying, worst, testing::max_abs(ge.grad));
  }
  return {ok, detail};
}

// ---------------------------------------------------------------------------
// 4. Oracle cross-checks.

Outcome criterion_oracles() {
  const double mu_tg = std::pow(8.75 * pi, 2);
  const auto b6 = bethe_ground(0.5, mu_tg, 1e6, 1.0);
  const auto tg = tg_ground_state(0.5, mu_tg, 1.0);
  const auto b10 = bethe_ground(0.5, 185.0, 10.0, 1.0);
  const double l5 = cs_lambda(0.5, 5.0), l30 = cs_lambda(0.5, 30.0);
  const auto cs5 = cs_ground(0.5, 75.0 * pi * pi * l5 * l5 / (6.0 * 0.5 * 25.0), 5.0, 5.0);
  const auto cs30 = cs_ground(0.5, 300.0 * pi * pi * l30 * l30 / (6.0 * 0.5 * 25.0), 30.0, 5.0);
  const auto bog = bogoliubov_solve(6.0, -0.475 * 6.0, 1.0);
  const auto free = bogoliubov_solve(6.0, 0.0, 1.0);

  const double tg_rel = std::abs(b6.energy - tg.energy) / std::abs(tg.energy);
  const double dn = std::abs(bog.mean_n - bog.mean_n_from_pn);
  const bool ok = std::abs(b6.energy - (-4031.79)) <= 0.01 && tg_rel <= 1e-4 &&
                  std::abs(b10.energy - (-954.60)) <= 0.01 && b10.n == 10 &&
                  std::round(cs5.energy * 1e3) / 1e3 == -156.317 && cs5.n0 == 5 &&
                  std::round(cs30.energy * 1e2) / 1e2 == -5132.76 && cs30.n0 == 10 &&
                  dn <= 1e-8 && free.eps0 == 0.0;
  return {ok, fmt("Bethe g=1e6 %.4f (TG rel diff %.1e), Bethe g=10 %.4f, CS %.4f / %.3f, "
                  "|sum nP_n - sum v^2| = %.1e, eps0(0) = %g",
                  b6.energy, tg_rel, b10.energy, cs5.energy, cs30.energy, dn, free.eps0)};
}

// ---------------------------------------------------------------------------
// 5, 6 and 8. Desk-scale training.

struct TrainedRun {
  ExperimentConfig cfg;
  std::unique_ptr<NqfsModel> model;
  TrainState state;
  double seconds = 0.0;
};

TrainedRun train_config(const std::string& rel) {
  TrainedRun r;
  r.cfg = shipped_config(rel);
  r.model = std::make_unique<NqfsModel>(r.cfg.model);
  r.state = make_train_state(*r.model, r.model->init_params(r.cfg.seed), r.cfg.sampler);
  TrainConfig tc;
  tc.n_iters = r.cfg.optimizer.n_iters;
  tc.adam = r.cfg.optimizer.adam;
  tc.burn_in = r.cfg.optimizer.burn_in;
  tc.threads = g_threads;
  const auto t0 = std::chrono::steady_clock::now();
  train(r.state, *r.model, r.cfg.hamiltonian, r.cfg.sampler, tc);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

// A longer sample of the final state, continuing the training chains.
SampleBatch final_batch(TrainedRun& r, int sweep_length) {
  SamplerConfig s = r.cfg.sampler;
  s.sweep_length = sweep_length;
  s.threads = g_threads;
  return advance_chains(r.state.chains, *r.model, r.state.params, s, s.effective_burn_in());
}

TrainedRun* g_ll_run = nullptr;

Outcome criterion_ll_training() {
  static TrainedRun run = train_config("desk/ll_reduced.json");
  g_ll_run = &run;
  const auto& ll = std::get<LiebLiniger>(run.cfg.hamiltonian.model);
  const double L = run.cfg.model.geometry.length;
  const auto exact = bethe_ground(ll.m, ll.mu, ll.g, L);
  const auto batch = final_batch(run, 2000);
  EstimatorOptions eo;
  eo.threads = g_threads;
  const auto e = estimate_energy(batch, run.cfg.hamiltonian, *run.model, run.state.params, eo);
  const auto ps = estimate_particle_stats(batch);
  const double rel = std::abs(e.mean - exact.energy) / std::abs(exact.energy);
  return {rel <= 0.02 && std::abs(ps.mean_n.mean - 3.0) < 0.15,
          fmt("%d iters in %.0f s; E = %.3f +- %.3f vs %.3f (rel %.2e), mean_n = %.4f",
              run.cfg.optimizer.n_iters, run.seconds, e.mean, e.std_err, exact.energy, rel,
              ps.mean_n.mean)};
}

Outcome criterion_kg_training() {
  auto run = train_config("desk/kg_v6.json");
  const auto& kg = std::get<RegularizedKleinGordon>(run.cfg.hamiltonian.model);
  const double L = run.cfg.model.geometry.length;
  const auto exact = bogoliubov_solve(kg.v, kg.lambda, L);
  const auto batch = final_batch(run, 300000);
  EstimatorOptions eo;
  eo.threads = g_threads;
  const auto e = estimate_energy(batch, run.cfg.hamiltonian, *run.model, run.state.params, eo);
  const auto ps = estimate_particle_stats(batch);
  const double eps = e.mean / L;
  const double rel = std::abs(eps - exact.eps0) / std::abs(exact.eps0);
  double tv = 0.0;
  const std::size_t N = std::max(ps.p_n.size(), exact.p_n.size());
  for (std::size_t n = 0; n < N; ++n) {
    const double a = n < ps.p_n.size() ? ps.p_n[n] : 0.0;
    const double b = n < exact.p_n.size() ? exact.p_n[n] : 0.0;
    tv += 0.5 * std::abs(a - b);
  }
  return {rel <= 0.05 && tv <= 0.1,
          fmt("%d iters in %.0f s; eps = %.4f +- %.4f vs %.4f (rel %.2e), P_n TV = %.3f",
              run.cfg.optimizer.n_iters, run.seconds, eps, e.std_err / L, exact.eps0, rel, tv)};
}

Outcome criterion_densities() {
  if (g_ll_run == nullptr) criterion_ll_training();
  auto& run = *g_ll_run;
  SamplerConfig s = run.cfg.sampler;
  s.n_chains = 16;
  s.sweep_length = 200;
  s.seed = run.cfg.seed + 1;
  s.threads = g_threads;
  auto chains = init_chains(*run.model, run.state.params, s);
  const auto batch = advance_chains(chains, *run.model, run.state.params, s, 200);
  const double L = run.cfg.model.geometry.length;
  const auto grid = interior_grid(L, run.cfg.output.density_grid);
  DensityOptions dopt;
  dopt.threads = g_threads;
  dopt.interaction = false;
  const auto prof =
      estimate_density_profiles(batch, run.cfg.hamiltonian, *run.model, run.state.params, grid, dopt);
  // Trapezoid closed by the walls, where the density vanishes.
  double integral = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double lo = k == 0 ? 0.0 : grid[k - 1];
    const double hi = k + 1 == grid.size() ? L : grid[k + 1];
    integral += 0.5 * (hi - lo) * prof.number[k].mean;
  }
  const double mean_n = estimate_particle_stats(batch).mean_n.mean;
  const double rel = std::abs(integral - mean_n) / mean_n;

  // Tonks-Girardeau reference state against the closed form.
  const int n0 = 3;
  ModelOptions o;
  o.geometry = Geometry(1.0, Boundary::HardWall);
  o.nets = false;
  o.jastrow.kind = JastrowKind::TonksGirardeau;
  o.n_max = 6;
  o.c1 = n0;
  o.c2 = n0;
  o.s = 40.0;
  const NqfsModel tg(o);
  const auto tp = tg.init_params(1);
  SamplerConfig ts;
  ts.n_chains = 8;
  ts.sweep_length = 4000;
  ts.initial_n = n0;
  ts.step_width = 0.3;
  ts.seed = 41;
  ts.threads = g_threads;
  const auto tbatch = run_sampling(tg, tp, ts);
  const auto tgrid = interior_grid(1.0, 16);
  const auto tprof = estimate_density_profiles(tbatch, HamiltonianSpec{LiebLiniger{0.5, 0.0, 1e6}, {}},
                                               tg, tp, tgrid, dopt);
  const auto ref = tg_densities(n0, 0.5, 1.0, tgrid);
  double worst = 0.0;
  for (std::size_t k = 0; k < tgrid.size(); ++k) {
    worst = std::max(worst, std::abs(tprof.number[k].mean - ref.number[k]) / tprof.number[k].std_err);
  }
  return {rel <= 0.02 && worst <= 3.0,
          fmt("trained LL: integral %.4f vs mean_n %.4f (rel %.2e); TG reference max dev %.2f sigma",
              integral, mean_n, rel, worst)};
}

// ---------------------------------------------------------------------------
// 9. Determinism.

std::string run_fingerprint(const ExperimentConfig& cfg, int threads) {
  const NqfsModel model(cfg.model);
  auto st = make_train_state(model, model.init_params(cfg.seed), cfg.sampler);
  TrainConfig tc;
  tc.n_iters = cfg.optimizer.n_iters;
  tc.adam = cfg.optimizer.adam;
  tc.threads = threads;
  train(st, model, cfg.hamiltonian, cfg.sampler, tc);
  std::ostringstream trace;
  write_trace_header(trace);
  for (const auto& r : st.trace) write_trace_row(trace, r);
  const auto path = fs::temp_directory_path() / "nqfs_acceptance_ckpt.json";
  save_checkpoint(path.string(), st, config_to_json(cfg));
  std::ifstream is(path, std::ios::binary);
  std::ostringstream bytes;
  bytes << is.rdbuf();
  fs::remove(path);
  return trace.str() + "\n--\n" + bytes.str();
}

Outcome criterion_determinism() {
  bool ok = true;
  std::string detail;
  for (const char* rel : {"desk/ll_reduced.json", "desk/kg_v6.json"}) {
    auto cfg = shipped_config(rel);
    cfg.model.width = 8;
    cfg.model.feature_dim = 8;
    cfg.sampler.n_chains = 4;
    cfg.sampler.sweep_length = 100;
    cfg.optimizer.n_iters = 5;
    for (int threads : {1, 2}) {
      const auto a = run_fingerprint(cfg, threads);
      const auto b = run_fingerprint(cfg, threads);
      ok = ok && a == b;
      detail += fmt("%s%s/%d threads: %s (%zu bytes)", detail.empty() ? "" : "; ",
                    cfg.name.c_str(), threads, a == b ? "identical" : "DIFFERENT", a.size());
    }
  }
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--threads" && i + 1 < argc) {
      g_threads = std::max(1, std::atoi(argv[++i]));
    } else {
      selected.insert(std::atoi(a.c_str()));
    }
  }
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"derivative correctness", criterion_derivatives},
      {"sampler stationarity", criterion_sampler},
      {"zero-variance eigenstate", criterion_zero_variance},
      {"oracle cross-checks", criterion_oracles},
      {"desk-scale Lieb-Liniger training", criterion_ll_training},
      {"desk-scale Klein-Gordon training", criterion_kg_training},
      {"gradient at the optimum", criterion_gradient_at_optimum},
      {"density consistency", criterion_densities},
      {"determinism", criterion_determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "criterion " << id << " " << (o.pass ? "PASS" : "FAIL") << " ["
              << criteria[i].first << "] " << o.detail << fmt(" (%.1f s)", s) << std::endl;
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
