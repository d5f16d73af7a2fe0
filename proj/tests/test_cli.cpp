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

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "nqfs/config.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Workspace {
  fs::path dir;
  explicit Workspace(const std::string& name)
      : dir(fs::temp_directory_path() / ("nqfs_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string path(const std::string& f) const { return (dir / f).string(); }
};

int run(const std::string& args) {
  const std::string cmd = std::string(NQFS_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json read_json(const std::string& path) {
  std::ifstream is(path);
  REQUIRE(is.good());
  return json::parse(is);
}

json shipped(const std::string& rel) {
  return read_json((fs::path(NQFS_SOURCE_DIR) / "configs" / rel).string());
}

std::string write_config(const Workspace& ws, const std::string& name, const json& j) {
  const auto p = ws.path(name);
  std::ofstream(p) << j.dump(2);
  return p;
}

// A tiny version of the reduced Lieb-Liniger instance.
json tiny_ll() {
  json j = shipped("desk/ll_reduced.json");
  j["ansatz"]["width"] = 4;
  j["ansatz"]["depth"] = 1;
  j["ansatz"]["feature_dim"] = 3;
  j["sampler"]["n_chains"] = 4;
  j["sampler"]["sweep_length"] = 200;
  j["optimizer"]["n_iters"] = 2;
  j["optimizer"]["lr_net"] = 1e-5;
  j["optimizer"]["lr_reg"] = 1e-5;
  j["output"]["density_grid"] = 8;
  j["output"]["pair_grid"] = 4;
  return j;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("exact on the Calogero-Sutherland config") {
    Workspace ws("exact");
    json j = shipped("cs_g5.json");
    j["output"]["g1"] = false;
    const auto cfg = write_config(ws, "cs.json", j);
    REQUIRE(run("--out-dir " + ws.dir.string() + " exact " + cfg) == 0);
    const auto out = read_json(ws.path("exact.json"));
    CHECK(std::abs(out["E0"].get<double>() - (-156.317)) < 5e-4);
    CHECK(out["n0"].get<int>() == 5);
  }

  TEST_CASE("train with zero iterations writes the initial parameters") {
    Workspace ws("train0");
    json j = tiny_ll();
    j["optimizer"]["n_iters"] = 0;
    const auto cfg = write_config(ws, "ll.json", j);
    REQUIRE(run("--out-dir " + ws.dir.string() + " train " + cfg) == 0);
    const auto ckpt = read_json(ws.path("checkpoint.json"));
    const auto parsed = nqfs::load_config(cfg);
    const nqfs::NqfsModel model(parsed.model);
    CHECK(ckpt["params"].get<std::vector<double>>() == model.init_params(parsed.seed));
    CHECK(ckpt["iter"].get<int>() == 0);
    CHECK(ckpt["meta"] == nqfs::config_to_json(parsed));
    std::ifstream trace(ws.path("trace.csv"));
    std::string header, extra;
    std::getline(trace, header);
    CHECK(header == "iter,E,E_err,mean_n,acc_disp,acc_pm");
    CHECK(!std::getline(trace, extra));
  }

  TEST_CASE("train, evaluate and sample") {
    Workspace ws("pipeline");
    const auto cfg = write_config(ws, "ll.json", tiny_ll());
    const std::string out = "--out-dir " + ws.dir.string() + " ";
    REQUIRE(run(out + "train " + cfg) == 0);
    const auto summary = read_json(ws.path("summary.json"));
    CHECK(summary["iterations"].get<int>() == 2);
    const std::string ckpt = ws.path("checkpoint.json");
    REQUIRE(run(out + "--threads 2 evaluate " + cfg + " " + ckpt) == 0);
    const auto ev = read_json(ws.path("evaluate.json"));
    const double e = ev["energy"]["mean"].get<double>();
    const double s = std::hypot(ev["energy"]["err"].get<double>(),
                                summary["energy_err"].get<double>());
    CHECK(std::abs(e - summary["energy"].get<double>()) <= 3.0 * s);
    for (const char* f : {"p_n.csv", "density_number.csv", "density_kinetic.csv",
                          "density_interaction.csv"}) {
      CAPTURE(f);
      CHECK(fs::exists(ws.path(f)));
    }
    REQUIRE(run(out + "sample " + cfg + " " + ckpt) == 0);
    std::ifstream samples(ws.path("samples.csv"));
    std::string line;
    std::getline(samples, line);
    CHECK(line == "chain,index,n,positions");
    int rows = 0;
    while (std::getline(samples, line)) ++rows;
    CHECK(rows == 4 * 200);

    REQUIRE(run(out + "train --resume " + ckpt + " " + cfg) == 0);
    CHECK(read_json(ws.path("summary.json"))["iterations"].get<int>() == 4);
  }

  TEST_CASE("exit codes") {
    Workspace ws("codes");
    const std::string out = "--out-dir " + ws.dir.string() + " ";
    std::ofstream(ws.path("bad.json")) << "{\"model\": {\"hamiltonian\": \"lieb_liniger\",,}";
    CHECK(run(out + "exact " + ws.path("bad.json")) == 2);
    json j = tiny_ll();
    j["ansatz"]["parity"] = "sideways";
    CHECK(run(out + "exact " + write_config(ws, "field.json", j)) == 2);
    const auto good = write_config(ws, "ll.json", tiny_ll());
    CHECK(run(out + "evaluate " + good + " " + ws.path("missing.json")) == 2);
    CHECK(run(out + "frobnicate") == 2);
    CHECK(run("") == 2);
    json one = tiny_ll();
    one["sampler"]["sweep_length"] = 1;
    one["optimizer"]["n_iters"] = 0;
    const auto short_cfg = write_config(ws, "short.json", one);
    REQUIRE(run(out + "train " + short_cfg) == 0);
    CHECK(run(out + "evaluate " + short_cfg + " " + ws.path("checkpoint.json")) == 3);
  }
}
