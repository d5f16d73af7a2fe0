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

// nqfs: train, evaluate, exact, sample.
//
// Exit codes: 0 ok, 2 configuration or usage error, 3 numerical failure.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "nqfs/config.hpp"
#include "nqfs/estimators.hpp"
#include "nqfs/optimizer.hpp"
#include "nqfs/oracles.hpp"
#include "nqfs/sampler.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  int threads = 1;
};

nqfs::ExperimentConfig load(const std::string& path, const GlobalOptions& g) {
  auto cfg = nqfs::load_config(path);
  if (g.seed) {
    cfg.seed = *g.seed;
    cfg.sampler.seed = *g.seed;
  }
  cfg.sampler.threads = g.threads;
  return cfg;
}

std::ofstream open_out(const GlobalOptions& g, const std::string& name) {
  fs::create_directories(g.out_dir);
  const fs::path p = fs::path(g.out_dir) / name;
  std::ofstream os(p);
  if (!os) throw nqfs::ConfigError("cannot write " + p.string());
  return os;
}

json estimate_json(const nqfs::EstimateResult& e) {
  return {{"mean", e.mean}, {"err", e.std_err}, {"n_samples", e.n_samples}, {"n_bins", e.n_bins}};
}

void write_json(const GlobalOptions& g, const std::string& name, const json& j) {
  auto os = open_out(g, name);
  os << std::setw(2) << j << '\n';
}

int cmd_train(const std::string& config_path, const std::string& resume,
              const GlobalOptions& g) {
  const auto cfg = load(config_path, g);
  const nqfs::NqfsModel model(cfg.model);
  const json meta = nqfs::config_to_json(cfg);
  nqfs::TrainState state =
      resume.empty() ? nqfs::make_train_state(model, model.init_params(cfg.seed), cfg.sampler)
                     : nqfs::load_checkpoint(resume, model);
  fs::create_directories(g.out_dir);
  const std::string ckpt = (fs::path(g.out_dir) / "checkpoint.json").string();

  nqfs::TrainConfig tc;
  tc.n_iters = cfg.optimizer.n_iters;
  tc.adam = cfg.optimizer.adam;
  tc.burn_in = cfg.optimizer.burn_in;
  tc.threads = g.threads;
  tc.checkpoint_every = cfg.optimizer.checkpoint_every;

  auto trace = open_out(g, "trace.csv");
  nqfs::write_trace_header(trace);
  for (const auto& r : state.trace) nqfs::write_trace_row(trace, r);
  nqfs::train(
      state, model, cfg.hamiltonian, cfg.sampler, tc,
      [&](const nqfs::TrainState& s) {
        nqfs::write_trace_row(trace, s.trace.back());
        trace.flush();
      },
      [&](const nqfs::TrainState& s) { nqfs::save_checkpoint(ckpt, s, meta); });
  nqfs::save_checkpoint(ckpt, state, meta);

  json summary = {{"name", cfg.name}, {"iterations", state.iter}};
  if (!state.trace.empty()) {
    const auto& last = state.trace.back();
    summary["energy"] = last.energy;
    summary["energy_err"] = last.energy_err;
    summary["mean_n"] = last.mean_n;
  }
  write_json(g, "summary.json", summary);
  std::cout << std::setw(2) << summary << '\n';
  return 0;
}

nqfs::TrainState load_for_sampling(const nqfs::ExperimentConfig& cfg,
                                   const nqfs::NqfsModel& model, const std::string& ckpt) {
  if (!fs::exists(ckpt)) throw nqfs::ConfigError("checkpoint not found: " + ckpt);
  auto st = nqfs::load_checkpoint(ckpt, model);
  if (st.chains.size() != static_cast<std::size_t>(cfg.sampler.n_chains)) {
    st.chains = nqfs::init_chains(model, st.params, cfg.sampler);
  }
  for (std::size_t c = 0; c < st.chains.size(); ++c) {
    st.chains[c].rng.seed(nqfs::chain_seed(cfg.sampler.seed, c));
  }
  return st;
}

int cmd_evaluate(const std::string& config_path, const std::string& ckpt,
                 const GlobalOptions& g) {
  const auto cfg = load(config_path, g);
  const nqfs::NqfsModel model(cfg.model);
  auto st = load_for_sampling(cfg, model, ckpt);
  const auto batch = nqfs::advance_chains(st.chains, model, st.params, cfg.sampler,
                                          cfg.sampler.effective_burn_in());
  nqfs::EstimatorOptions eo;
  eo.threads = g.threads;
  const auto energy = nqfs::estimate_energy(batch, cfg.hamiltonian, model, st.params, eo);
  const auto ps = nqfs::estimate_particle_stats(batch);
  const auto ms = batch.total_stats();
  json summary = {{"name", cfg.name},
                  {"energy", estimate_json(energy)},
                  {"mean_n", estimate_json(ps.mean_n)},
                  {"acc_disp", ms.disp_rate()},
                  {"acc_pm", ms.pm_rate()}};
  if (cfg.output.p_n) {
    auto os = open_out(g, "p_n.csv");
    nqfs::write_pn_csv(os, ps);
  }
  const double L = cfg.model.geometry.length;
  if (cfg.output.densities) {
    const auto grid = nqfs::interior_grid(L, cfg.output.density_grid);
    nqfs::DensityOptions dopt;
    dopt.threads = g.threads;
    dopt.pair_grid = cfg.output.pair_grid;
    const auto d =
        nqfs::estimate_density_profiles(batch, cfg.hamiltonian, model, st.params, grid, dopt);
    auto a = open_out(g, "density_number.csv");
    nqfs::write_density_csv(a, d.grid, d.number);
    auto b = open_out(g, "density_kinetic.csv");
    nqfs::write_density_csv(b, d.grid, d.kinetic);
    auto c = open_out(g, "density_interaction.csv");
    nqfs::write_density_csv(c, d.grid, d.interaction);
  }
  if (cfg.output.g1) {
    const auto disp = nqfs::g1_displacements(L, cfg.output.g1_points);
    const auto g1 = nqfs::estimate_g1(batch, model, st.params, disp, g.threads);
    auto os = open_out(g, "g1.csv");
    nqfs::write_g1_csv(os, disp, g1);
  }
  write_json(g, "evaluate.json", summary);
  std::cout << std::setw(2) << summary << '\n';
  return 0;
}

int cmd_exact(const std::string& config_path, const GlobalOptions& g) {
  const auto cfg = load(config_path, g);
  const double L = cfg.model.geometry.length;
  json out = {{"name", cfg.name}};
  if (const auto* ll = std::get_if<nqfs::LiebLiniger>(&cfg.hamiltonian.model)) {
    const auto b = nqfs::bethe_ground(ll->m, ll->mu, ll->g, L);
    const auto t = nqfs::tg_ground_state(ll->m, ll->mu, L);
    out["model"] = "lieb_liniger";
    out["E0"] = b.energy;
    out["n0"] = b.n;
    out["pseudomomenta"] = b.k;
    out["bethe_residual"] = b.residual;
    out["tonks_girardeau"] = {{"E0", t.energy}, {"n0", t.n0}};
    if (cfg.output.densities) {
      const auto grid = nqfs::interior_grid(L, cfg.output.density_grid);
      const auto d = nqfs::tg_densities(t.n0, ll->m, L, grid);
      out["tonks_girardeau"]["grid"] = grid;
      out["tonks_girardeau"]["number_density"] = d.number;
      out["tonks_girardeau"]["kinetic_density"] = d.kinetic;
    }
  } else if (const auto* cs = std::get_if<nqfs::CalogeroSutherland>(&cfg.hamiltonian.model)) {
    const auto r = nqfs::cs_ground(cs->m, cs->mu, cs->g, L);
    out["model"] = "calogero_sutherland";
    out["E0"] = r.energy;
    out["n0"] = r.n0;
    out["lambda"] = r.lambda;
    if (cfg.output.g1 && r.n0 > 0) {
      const auto disp = nqfs::g1_displacements(L, cfg.output.g1_points);
      const auto g1 = nqfs::cs_exact_g1(cs->m, cs->g, L, r.n0, disp,
                                        cfg.output.exact_g1_samples, cfg.seed);
      json table = json::array();
      for (std::size_t k = 0; k < disp.size(); ++k) {
        table.push_back({disp[k], g1[k].mean, g1[k].std_err});
      }
      out["g1"] = table;
    }
  } else {
    const auto& kg = std::get<nqfs::RegularizedKleinGordon>(cfg.hamiltonian.model);
    const auto b = nqfs::bogoliubov_solve(kg.v, kg.lambda, L);
    out["model"] = "klein_gordon";
    out["eps0"] = b.eps0;
    out["E0"] = b.eps0 * L;
    out["mean_n"] = b.mean_n;
    out["mean_n_from_pn"] = b.mean_n_from_pn;
    out["p_n"] = b.p_n;
    out["truncation"] = b.truncation;
    out["modes"] = b.p.size();
  }
  write_json(g, "exact.json", out);
  std::cout << std::setw(2) << out << '\n';
  return 0;
}

int cmd_sample(const std::string& config_path, const std::string& ckpt,
               const GlobalOptions& g) {
  const auto cfg = load(config_path, g);
  const nqfs::NqfsModel model(cfg.model);
  auto st = load_for_sampling(cfg, model, ckpt);
  const auto batch = nqfs::advance_chains(st.chains, model, st.params, cfg.sampler,
                                          cfg.sampler.effective_burn_in());
  auto os = open_out(g, "samples.csv");
  os << "chain,index,n,positions\n" << std::setprecision(17);
  for (std::size_t c = 0; c < batch.chains.size(); ++c) {
    for (std::size_t s = 0; s < batch.chains[c].size(); ++s) {
      const auto& x = batch.chains[c][s].positions;
      os << c << ',' << s << ',' << x.size() << ',';
      for (std::size_t i = 0; i < x.size(); ++i) os << (i ? " " : "") << x[i];
      os << '\n';
    }
  }
  std::cout << "wrote " << batch.size() << " samples to "
            << (fs::path(g.out_dir) / "samples.csv").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural quantum field states: variational Monte Carlo in Fock space"};
  app.require_subcommand(1);
  GlobalOptions g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Override the config seed");
  app.add_option("--out-dir", g.out_dir, "Output directory");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);

  std::string config, checkpoint, resume;
  auto* train = app.add_subcommand("train", "Optimize the state; writes trace, checkpoint, summary");
  train->add_option("config", config, "Experiment config")->required();
  train->add_option("--resume", resume, "Continue from a checkpoint");
  auto* evaluate = app.add_subcommand("evaluate", "Estimate observables of a checkpoint");
  evaluate->add_option("config", config)->required();
  evaluate->add_option("checkpoint", checkpoint)->required();
  auto* exact = app.add_subcommand("exact", "Exact oracle values");
  exact->add_option("config", config)->required();
  auto* sample = app.add_subcommand("sample", "Dump sampled configurations");
  sample->add_option("config", config)->required();
  sample->add_option("checkpoint", checkpoint)->required();
  for (auto* sub : {train, evaluate, exact, sample}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (*train) return cmd_train(config, resume, g);
    if (*evaluate) return cmd_evaluate(config, checkpoint, g);
    if (*exact) return cmd_exact(config, g);
    if (*sample) return cmd_sample(config, checkpoint, g);
  } catch (const nqfs::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const nqfs::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const nqfs::InsufficientDataError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitConfig;
}
