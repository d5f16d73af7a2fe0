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

#include "nqfs/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "nqfs/oracles.hpp"

namespace nqfs {

using nlohmann::json;

namespace {

class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    std::string field = path_;
    if (!key.empty()) field += field.empty() ? key : "." + key;
    throw ConfigError("field '" + field + "': " + what);
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key, double def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_number()) fail(key, "expected a number");
    return v->get<double>();
  }

  int integer(const std::string& key, int def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_number_integer()) fail(key, "expected an integer");
    return v->get<int>();
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_number_unsigned()) fail(key, "expected a non-negative integer");
    return v->get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_boolean()) fail(key, "expected true or false");
    return v->get<bool>();
  }

  std::string string(const std::string& key, const std::string& def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_string()) fail(key, "expected a string");
    return v->get<std::string>();
  }

  Section sub(const std::string& key) {
    static const json kEmpty = json::object();
    const json* v = find(key);
    return Section(v ? *v : kEmpty, path_.empty() ? key : path_ + "." + key);
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) fail(k, "unknown key");
    }
  }

 private:
  const json* find(const std::string& key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

const char* jastrow_name(JastrowKind k) {
  switch (k) {
    case JastrowKind::None: return "none";
    case JastrowKind::LiebLiniger: return "lieb_liniger";
    case JastrowKind::CalogeroTanh: return "calogero_tanh";
    case JastrowKind::CalogeroSine: return "calogero_sine";
    case JastrowKind::TonksGirardeau: return "tonks_girardeau";
  }
  return "none";
}

std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return std::to_string(line) + ":" + std::to_string(col);
}

void parse_model(Section s, ExperimentConfig& cfg) {
  const std::string h = s.string("hamiltonian", "");
  Boundary natural;
  if (h == "lieb_liniger") {
    LiebLiniger m;
    m.m = s.number("mass", m.m);
    m.mu = s.number("mu", m.mu);
    m.g = s.number("g", m.g);
    cfg.hamiltonian.model = m;
    natural = Boundary::HardWall;
  } else if (h == "calogero_sutherland") {
    CalogeroSutherland m;
    m.m = s.number("mass", m.m);
    m.mu = s.number("mu", m.mu);
    m.g = s.number("g", m.g);
    cfg.hamiltonian.model = m;
    natural = Boundary::Periodic;
  } else if (h == "klein_gordon") {
    RegularizedKleinGordon m;
    m.v = s.number("v", m.v);
    m.lambda = s.number("lambda", m.lambda);
    m.quad_points = s.integer("quad_points", m.quad_points);
    cfg.hamiltonian.model = m;
    natural = Boundary::Periodic;
  } else if (h.empty()) {
    s.fail("hamiltonian", "missing");
  } else {
    s.fail("hamiltonian",
           "expected lieb_liniger, calogero_sutherland or klein_gordon, got '" + h + "'");
  }
  const double L = s.number("length", 1.0);
  if (!(L > 0.0)) s.fail("length", "must be positive");
  const std::string b =
      s.string("boundary", natural == Boundary::HardWall ? "hard_wall" : "periodic");
  Boundary boundary;
  if (b == "hard_wall") {
    boundary = Boundary::HardWall;
  } else if (b == "periodic") {
    boundary = Boundary::Periodic;
  } else {
    s.fail("boundary", "expected hard_wall or periodic");
  }
  cfg.model.geometry = Geometry(L, boundary);
  s.finish();
}

void parse_ansatz(Section s, ExperimentConfig& cfg) {
  auto& m = cfg.model;
  const bool kg = cfg.hamiltonian.is_kg();
  m.nets = s.boolean("nets", m.nets);
  m.width = s.integer("width", m.width);
  m.depth = s.integer("depth", m.depth);
  m.feature_dim = s.integer("feature_dim", m.feature_dim);
  m.n_max = s.integer("n_max", m.n_max);
  m.cutoff = s.boolean("cutoff", !m.geometry.periodic());
  const std::string parity = s.string("parity", kg ? "even" : "all");
  if (parity == "all") {
    m.parity = Parity::All;
  } else if (parity == "even") {
    m.parity = Parity::EvenOnly;
  } else {
    s.fail("parity", "expected all or even");
  }
  const std::string jk = s.string("jastrow", "auto");
  JastrowKind kind;
  if (jk == "auto") {
    kind = default_jastrow(cfg.hamiltonian);
  } else if (jk == "none") {
    kind = JastrowKind::None;
  } else if (jk == "lieb_liniger") {
    kind = JastrowKind::LiebLiniger;
  } else if (jk == "calogero_tanh") {
    kind = JastrowKind::CalogeroTanh;
  } else if (jk == "calogero_sine") {
    kind = JastrowKind::CalogeroSine;
  } else if (jk == "tonks_girardeau") {
    kind = JastrowKind::TonksGirardeau;
  } else {
    s.fail("jastrow", "unknown kind '" + jk + "'");
  }
  m.jastrow = JastrowSpec{};
  m.jastrow.kind = kind;
  m.jastrow.mass = cfg.hamiltonian.mass();
  if (const auto* ll = std::get_if<LiebLiniger>(&cfg.hamiltonian.model)) m.jastrow.g = ll->g;
  double lam = 1.0;
  if (const auto* cs = std::get_if<CalogeroSutherland>(&cfg.hamiltonian.model)) {
    m.jastrow.g = cs->g;
    if (cs->m > 0.0 && cs->g >= 0.0) lam = cs_lambda(cs->m, cs->g);
  }
  m.jastrow.lambda = s.number("jastrow_lambda", lam);
  m.jastrow.kappa = s.number("jastrow_kappa", m.jastrow.kappa);
  Section reg = s.sub("reg");
  m.c1 = reg.number("c1", m.c1);
  m.c2 = reg.number("c2", m.c2);
  m.s = reg.number("s", m.s);
  reg.finish();
  s.finish();
}

void parse_sampler(Section s, ExperimentConfig& cfg) {
  auto& c = cfg.sampler;
  const bool kg = cfg.hamiltonian.is_kg();
  c.n_chains = s.integer("n_chains", c.n_chains);
  c.sweep_length = s.integer("sweep_length", c.sweep_length);
  c.burn_in = s.integer("burn_in", c.burn_in);
  c.p_pm = s.number("p_pm", c.p_pm);
  c.step_width = s.number("step_width", c.step_width);
  c.pair_moves = s.boolean("pair_moves", kg);
  c.single_coordinate = s.boolean("single_coordinate", c.single_coordinate);
  c.thin = s.integer("thin", c.thin);
  c.initial_n = s.integer("initial_n", c.initial_n);
  s.finish();
}

void parse_optimizer(Section s, ExperimentConfig& cfg) {
  auto& o = cfg.optimizer;
  o.n_iters = s.integer("n_iters", o.n_iters);
  o.adam.lr_net = s.number("lr_net", o.adam.lr_net);
  o.adam.lr_reg = s.number("lr_reg", o.adam.lr_reg);
  o.adam.beta1 = s.number("beta1", o.adam.beta1);
  o.adam.beta2 = s.number("beta2", o.adam.beta2);
  o.adam.eps = s.number("eps", o.adam.eps);
  o.adam.clip_norm = s.number("clip_norm", o.adam.clip_norm);
  o.burn_in = s.integer("burn_in", o.burn_in);
  o.checkpoint_every = s.integer("checkpoint_every", o.checkpoint_every);
  s.finish();
}

void parse_output(Section s, ExperimentConfig& cfg) {
  auto& o = cfg.output;
  o.p_n = s.boolean("p_n", o.p_n);
  o.densities = s.boolean("densities", o.densities);
  o.g1 = s.boolean("g1", o.g1);
  o.density_grid = s.integer("density_grid", o.density_grid);
  o.pair_grid = s.integer("pair_grid", o.pair_grid);
  o.g1_points = s.integer("g1_points", o.g1_points);
  o.exact_g1_samples = s.integer("exact_g1_samples", o.exact_g1_samples);
  s.finish();
}

// Rethrows component validation errors with the section that owns them.
template <class Fn>
void check_section(const char* section, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("section '") + section + "': " + e.what());
  }
}

}  // namespace

JastrowKind default_jastrow(const HamiltonianSpec& spec) {
  if (std::holds_alternative<LiebLiniger>(spec.model)) return JastrowKind::LiebLiniger;
  if (std::holds_alternative<CalogeroSutherland>(spec.model)) return JastrowKind::CalogeroTanh;
  return JastrowKind::None;
}

void ExperimentConfig::validate() const {
  check_section("model", [&] { hamiltonian.validate(model.geometry); });
  const bool ll = std::holds_alternative<LiebLiniger>(hamiltonian.model);
  if (ll && !model.cutoff) {
    throw ConfigError("field 'ansatz.cutoff': Lieb-Liniger requires the hard-wall cutoff");
  }
  if (hamiltonian.is_kg()) {
    if (model.parity != Parity::EvenOnly) {
      throw ConfigError("field 'ansatz.parity': Klein-Gordon requires even");
    }
    if (!sampler.pair_moves) {
      throw ConfigError("field 'sampler.pair_moves': Klein-Gordon requires pair moves");
    }
  }
  if (model.parity == Parity::EvenOnly && !sampler.pair_moves) {
    throw ConfigError("field 'sampler.pair_moves': even parity requires pair moves");
  }
  if (model.width <= 0 || model.depth < 0 || model.feature_dim <= 0) {
    throw ConfigError("field 'ansatz': width and feature_dim must be positive, depth >= 0");
  }
  if (model.n_max < 0) throw ConfigError("field 'ansatz.n_max': must be non-negative");
  check_section("ansatz", [&] { NqfsModel probe(model); });
  check_section("sampler", [&] { sampler.validate(); });
  if (sampler.initial_n > model.n_max) {
    throw ConfigError("field 'sampler.initial_n': exceeds ansatz.n_max");
  }
  if (optimizer.n_iters < 0) throw ConfigError("field 'optimizer.n_iters': must be >= 0");
  if (optimizer.checkpoint_every < 0) {
    throw ConfigError("field 'optimizer.checkpoint_every': must be >= 0");
  }
  check_section("optimizer", [&] { optimizer.adam.validate(); });
  if (output.density_grid < 2) throw ConfigError("field 'output.density_grid': must be >= 2");
  if (output.pair_grid < 2) throw ConfigError("field 'output.pair_grid': must be >= 2");
  if (output.g1_points < 1) throw ConfigError("field 'output.g1_points': must be >= 1");
  if (output.exact_g1_samples < 1) {
    throw ConfigError("field 'output.exact_g1_samples': must be >= 1");
  }
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ":" + line_col(text, e.byte) + ": " + e.what());
  }
  try {
    ExperimentConfig cfg;
    Section root(j, "");
    cfg.name = root.string("name", "");
    cfg.seed = root.unsigned_integer("seed", cfg.seed);
    if (!root.has("model")) root.fail("model", "missing");
    parse_model(root.sub("model"), cfg);
    parse_ansatz(root.sub("ansatz"), cfg);
    parse_sampler(root.sub("sampler"), cfg);
    parse_optimizer(root.sub("optimizer"), cfg);
    parse_output(root.sub("output"), cfg);
    root.finish();
    cfg.sampler.seed = cfg.seed;
    cfg.validate();
    return cfg;
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), path);
}

json config_to_json(const ExperimentConfig& cfg) {
  json model;
  std::visit(
      [&](const auto& h) {
        using T = std::decay_t<decltype(h)>;
        if constexpr (std::is_same_v<T, LiebLiniger>) {
          model = {{"hamiltonian", "lieb_liniger"}, {"mass", h.m}, {"mu", h.mu}, {"g", h.g}};
        } else if constexpr (std::is_same_v<T, CalogeroSutherland>) {
          model = {{"hamiltonian", "calogero_sutherland"}, {"mass", h.m}, {"mu", h.mu},
                   {"g", h.g}};
        } else {
          model = {{"hamiltonian", "klein_gordon"}, {"v", h.v}, {"lambda", h.lambda},
                   {"quad_points", h.quad_points}};
        }
      },
      cfg.hamiltonian.model);
  model["length"] = cfg.model.geometry.length;
  model["boundary"] = cfg.model.geometry.periodic() ? "periodic" : "hard_wall";

  const auto& m = cfg.model;
  json ansatz = {
      {"nets", m.nets},
      {"width", m.width},
      {"depth", m.depth},
      {"feature_dim", m.feature_dim},
      {"jastrow", jastrow_name(m.jastrow.kind)},
      {"jastrow_lambda", m.jastrow.lambda},
      {"jastrow_kappa", m.jastrow.kappa},
      {"cutoff", m.cutoff},
      {"parity", m.parity == Parity::EvenOnly ? "even" : "all"},
      {"n_max", m.n_max},
      {"reg", {{"c1", m.c1}, {"c2", m.c2}, {"s", m.s}}},
  };
  const auto& s = cfg.sampler;
  json sampler = {
      {"n_chains", s.n_chains},   {"sweep_length", s.sweep_length},
      {"burn_in", s.burn_in},     {"p_pm", s.p_pm},
      {"step_width", s.step_width}, {"pair_moves", s.pair_moves},
      {"single_coordinate", s.single_coordinate}, {"thin", s.thin},
      {"initial_n", s.initial_n},
  };
  const auto& o = cfg.optimizer;
  json optimizer = {
      {"n_iters", o.n_iters},         {"lr_net", o.adam.lr_net},
      {"lr_reg", o.adam.lr_reg},      {"beta1", o.adam.beta1},
      {"beta2", o.adam.beta2},        {"eps", o.adam.eps},
      {"clip_norm", o.adam.clip_norm}, {"burn_in", o.burn_in},
      {"checkpoint_every", o.checkpoint_every},
  };
  const auto& out = cfg.output;
  json output = {
      {"p_n", out.p_n},
      {"densities", out.densities},
      {"g1", out.g1},
      {"density_grid", out.density_grid},
      {"pair_grid", out.pair_grid},
      {"g1_points", out.g1_points},
      {"exact_g1_samples", out.exact_g1_samples},
  };
  return {{"name", cfg.name},   {"seed", cfg.seed},         {"model", model},
          {"ansatz", ansatz},   {"sampler", sampler},       {"optimizer", optimizer},
          {"output", output}};
}

std::string serialize_config(const ExperimentConfig& cfg) {
  return config_to_json(cfg).dump(2) + "\n";
}

}  // namespace nqfs
