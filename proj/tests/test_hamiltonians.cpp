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
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "nqfs/hamiltonians.hpp"
#include "nqfs/oracles.hpp"
#include "test_util.hpp"

using namespace nqfs;

namespace {

constexpr double kPi = std::numbers::pi;

struct CsInstance {
  double m = 0.5, L = 5.0, g = 5.0, mu = 0.0, lambda = 0.0;
};

CsInstance cs_instance() {
  CsInstance c;
  c.lambda = cs_lambda(c.m, c.g);
  c.mu = 75.0 * kPi * kPi * c.lambda * c.lambda / (6.0 * c.m * c.L * c.L);
  return c;
}

}  // namespace

TEST_SUITE("hamiltonians") {
  TEST_CASE("exact Calogero-Sutherland state has constant local energy") {
    const auto c = cs_instance();
    ModelOptions o;
    o.geometry = Geometry(c.L, Boundary::Periodic);
    o.nets = false;
    o.jastrow.kind = JastrowKind::CalogeroSine;
    o.jastrow.lambda = c.lambda;
    const NqfsModel model(o);
    const auto p = model.init_params(1);
    HamiltonianSpec spec{CalogeroSutherland{c.m, c.mu, c.g}, {}};
    std::mt19937_64 rng(2);
    double mean = 0.0, m2 = 0.0;
    const int N = 1000;
    for (int t = 0; t < N; ++t) {
      const Configuration x(testing::uniform_positions(5, 0.0, c.L, rng));
      const double e = local_energy(spec, model, p, x);
      mean += e;
      m2 += e * e;
      CHECK(testing::rel_err(e, -156.317, 1.0) < 1e-5);
    }
    mean /= N;
    const double var = m2 / N - mean * mean;
    CHECK(var / (mean * mean) <= 1e-10);
    CHECK(mean == doctest::Approx(cs_energy(5, c.m, c.mu, c.g, c.L)).epsilon(1e-10));
  }

  TEST_CASE("Tonks-Girardeau state is a hard-wall eigenstate") {
    const double L = 1.3, m = 0.5, mu = 40.0;
    ModelOptions o;
    o.geometry = Geometry(L, Boundary::HardWall);
    o.nets = false;
    o.jastrow.kind = JastrowKind::TonksGirardeau;
    const NqfsModel model(o);
    const auto p = model.init_params(1);
    HamiltonianSpec spec{LiebLiniger{m, mu, 1e12}, {}};
    std::mt19937_64 rng(6);
    for (int n = 1; n <= 4; ++n) {
      for (int t = 0; t < 20; ++t) {
        const Configuration x(testing::spread_positions(n, L, 1e-3, rng));
        CHECK(local_energy(spec, model, p, x) ==
              doctest::Approx(tg_energy(n, m, mu, L)).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("local energy pieces") {
    ModelOptions o;
    o.geometry = Geometry(2.0, Boundary::HardWall);
    o.nets = false;
    o.cutoff = true;
    const NqfsModel model(o);
    const auto p = model.init_params(1);
    // One particle in the cutoff state sqrt(x (L - x)) up to constants:
    // d ln phi = 1/x - 1/(L - x), d2 ln phi = -1/x^2 - 1/(L-x)^2.
    const double x = 0.7, L = 2.0, m = 0.5;
    const double g = 1 / x - 1 / (L - x), lap = -1 / (x * x) - 1 / ((L - x) * (L - x));
    HamiltonianSpec spec{LiebLiniger{m, 3.0, 1.0}, [](double y) { return y * y; }};
    AmplitudeDerivatives d;
    model.log_amplitude_derivatives(p, std::vector<double>{x}, true, false, d);
    const auto t = local_terms(spec, model, p, std::vector<double>{x}, d);
    CHECK(t.kinetic == doctest::Approx(-(lap + g * g) / (2 * m)));
    CHECK(t.one_body == doctest::Approx(x * x - 3.0));
    CHECK(t.interaction == 0.0);
    CHECK(t.pair == 0.0);
  }

  TEST_CASE("Klein-Gordon creation term by direct summation") {
    ModelOptions o;
    o.geometry = Geometry(1.0, Boundary::Periodic);
    o.width = 5;
    o.feature_dim = 4;
    o.parity = Parity::EvenOnly;
    o.n_max = 6;
    const NqfsModel model(o);
    const auto p = testing::random_params(model, 3, 1.0);
    const double lambda = -0.7;
    const int Q = 16;
    for (std::size_t n : {0, 2, 4, 6}) {
      std::mt19937_64 rng(n);
      const auto x = testing::uniform_positions(n, 0.0, 1.0, rng);
      const double base = model.log_amplitude(p, x);
      double direct = 0.0;
      for (int k = 0; k < Q; ++k) {
        auto y = x;
        y.push_back(k / double(Q));
        y.push_back(k / double(Q));
        const double l = model.log_amplitude(p, y);
        if (!is_log_zero(l)) direct += (1.0 / Q) * std::exp(l - base);
      }
      direct *= 2.0 * lambda * std::sqrt(double((n + 1) * (n + 2)));
      CHECK(kg_pair_term(model, p, x, lambda, Q) == doctest::Approx(direct).epsilon(1e-12));
      HamiltonianSpec spec{RegularizedKleinGordon{2.0, lambda, Q}, {}};
      const auto t = local_terms(spec, model, p, x, model.log_amplitude_derivatives(p, Configuration(x)));
      CHECK(t.pair == doctest::Approx(direct).epsilon(1e-12));
      CHECK(t.one_body == doctest::Approx(2.0 * n));
    }
    // Past n_max the insertion lands outside the support.
    CHECK(kg_pair_term(model, p, std::vector<double>(6, 0.3), lambda, Q) == 0.0);
  }

  TEST_CASE("periodic trapezoid integrates trigonometric polynomials exactly") {
    auto [nodes, weights] = periodic_trapezoid(2.0, 8);
    double s = 0.0, c = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      s += weights[k] * std::cos(2 * kPi * nodes[k] / 2.0) * std::cos(2 * kPi * nodes[k] / 2.0);
      c += weights[k];
    }
    CHECK(s == doctest::Approx(1.0));
    CHECK(c == doctest::Approx(2.0));
  }

  TEST_CASE("validation") {
    const Geometry ring(1.0, Boundary::Periodic), box(1.0, Boundary::HardWall);
    auto spec = [](auto model) { return HamiltonianSpec{model, {}}; };
    const auto ll = spec(LiebLiniger{0.5, 1.0, 1.0});
    CHECK_THROWS_AS(ll.validate(ring), ConfigError);
    CHECK_NOTHROW(ll.validate(box));
    const auto cs = spec(CalogeroSutherland{0.5, 1.0, 1.0});
    CHECK_THROWS_AS(cs.validate(box), ConfigError);
    const auto strong = spec(RegularizedKleinGordon{1.0, 0.6, 64});
    CHECK_THROWS_AS(strong.validate(ring), ConfigError);
    const auto edge = spec(RegularizedKleinGordon{1.0, -0.5, 64});
    CHECK_NOTHROW(edge.validate(ring));
    CHECK(edge.mass() == 0.5);
  }

  TEST_CASE("Klein-Gordon couplings from mass and cutoff") {
    const auto [v, lambda] = kg_from_physical(1.0, 3.0);
    CHECK(v == doctest::Approx(5.0));
    CHECK(lambda == doctest::Approx(-2.0));
    CHECK(std::abs(lambda / v) <= 0.5);
    CHECK_THROWS_AS(kg_from_physical(1.0, 0.0), ConfigError);
  }
}
