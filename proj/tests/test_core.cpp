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

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "nqfs/core.hpp"

using namespace nqfs;

TEST_SUITE("core") {
  TEST_CASE("binned error of white noise") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<std::vector<double>> chains(2, std::vector<double>(10000));
    for (auto& c : chains) {
      for (auto& v : c) v = nd(rng);
    }
    const auto r = binned_statistics(chains, 100);
    const double expected = 1.0 / std::sqrt(2e4);
    CHECK(r.n_samples == 20000);
    CHECK(r.n_bins == 200);
    CHECK(r.std_err > expected / 1.5);
    CHECK(r.std_err < expected * 1.5);
    CHECK(std::abs(r.mean) < 4.0 * expected);
  }

  TEST_CASE("binning grows the error of a correlated series") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<std::vector<double>> chains(1, std::vector<double>(40000));
    double y = 0.0;
    for (auto& v : chains[0]) {
      y = 0.95 * y + nd(rng);
      v = y;
    }
    const auto naive = binned_statistics(chains, 1);
    const auto binned = binned_statistics(chains, 400);
    CHECK(binned.std_err > 3.0 * naive.std_err);
  }

  TEST_CASE("too few bins") {
    std::vector<std::vector<double>> one(1, std::vector<double>(1, 2.0));
    CHECK_THROWS_AS(binned_statistics(one, 1), InsufficientDataError);
    std::vector<std::vector<double>> short_chain(1, std::vector<double>(15, 1.0));
    CHECK_THROWS_AS(binned_statistics(short_chain, 10), InsufficientDataError);
    CHECK_THROWS_AS(binned_statistics(short_chain, 0), InsufficientDataError);
  }

  TEST_CASE("constant series has zero error") {
    std::vector<std::vector<double>> c(3, std::vector<double>(50, 5.0));
    const auto r = binned_statistics(c, 10);
    CHECK(r.mean == 5.0);
    CHECK(r.std_err == 0.0);
  }

  TEST_CASE("default bin size") {
    CHECK(default_bin_size(0) == 10);
    CHECK(default_bin_size(400) == 20);
    CHECK(default_bin_size(100) == 10);
  }

  TEST_CASE("wrap_position") {
    const Geometry ring(2.0, Boundary::Periodic);
    CHECK(wrap_position(2.5, ring) == doctest::Approx(0.5));
    CHECK(wrap_position(-0.5, ring) == doctest::Approx(1.5));
    CHECK(wrap_position(-1e-300, ring) < 2.0);
    CHECK(wrap_position(4.0, ring) == 0.0);
    const Geometry box(2.0, Boundary::HardWall);
    CHECK(wrap_position(2.5, box) == 2.5);
    CHECK_THROWS_AS(Geometry(0.0, Boundary::HardWall), ConfigError);
  }

  TEST_CASE("parallel_for covers every index once and rethrows") {
    std::vector<int> hits(37, 0);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);
    CHECK_THROWS_AS(parallel_for(8, 3,
                                 [](std::size_t i) {
                                   if (i == 5) throw NumericalError("boom");
                                 }),
                    NumericalError);
  }

  TEST_CASE("splitmix64 reference values") {
    CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
    CHECK(splitmix64(1) != splitmix64(2));
  }

  TEST_CASE("vacuum configuration") {
    Configuration c;
    CHECK(c.n() == 0);
    CHECK(c == Configuration(std::vector<double>{}));
  }
}
