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
#include "nqfs/kernels.hpp"

using namespace nqfs::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("scalar table matches direct loops") {
    const auto& s = scalar_table();
    std::mt19937_64 rng(1);
    const int in = 5, out = 7;
    auto W = random_vec(in * out, rng), b = random_vec(out, rng), x = random_vec(in, rng);
    std::vector<double> y(out);
    s.affine(in, out, W.data(), b.data(), x.data(), y.data());
    for (int j = 0; j < out; ++j) {
      double r = b[j];
      for (int k = 0; k < in; ++k) r += W[k * out + j] * x[k];
      CHECK(y[j] == doctest::Approx(r).epsilon(1e-15));
    }
    std::vector<double> z{-3.0, -0.1, 0.0, 0.2, 25.0};
    s.tanh_inplace(static_cast<int>(z.size()), z.data());
    CHECK(z[0] == std::tanh(-3.0));
    CHECK(z[4] == 1.0);
  }

  TEST_CASE("runtime selection") {
    CHECK(select("scalar"));
    CHECK(std::string(active().name) == "scalar");
    CHECK_FALSE(select("no-such-table"));
    if (avx2_table()) {
      CHECK(select("avx2"));
      CHECK(std::string(active().name) == "avx2");
    }
    select(avx2_table() ? "avx2" : "scalar");
  }

  TEST_CASE("avx2 kernels agree with the scalar reference") {
    const KernelTable* v = avx2_table();
    if (!v) {
      MESSAGE("AVX2 unavailable on this machine; equivalence test skipped");
      return;
    }
    const auto& s = scalar_table();
    std::mt19937_64 rng(7);
    for (int in : {1, 2, 3, 4, 5, 8, 13, 32}) {
      for (int out : {1, 3, 4, 7, 8, 16, 33}) {
        CAPTURE(in);
        CAPTURE(out);
        auto W = random_vec(in * out, rng), b = random_vec(out, rng);
        auto x = random_vec(in, rng), x2 = random_vec(in, rng);
        std::vector<double> ys(out), yv(out), y2s(out), y2v(out);
        s.affine(in, out, W.data(), b.data(), x.data(), ys.data());
        v->affine(in, out, W.data(), b.data(), x.data(), yv.data());
        CHECK(max_diff(ys, yv) < 1e-13);
        s.affine_tangent(in, out, W.data(), x.data(), x2.data(), ys.data(), y2s.data());
        v->affine_tangent(in, out, W.data(), x.data(), x2.data(), yv.data(), y2v.data());
        CHECK(max_diff(ys, yv) < 1e-13);
        CHECK(max_diff(y2s, y2v) < 1e-13);

        auto delta = random_vec(out, rng);
        std::vector<double> gWs(in * out, 0.5), gWv(in * out, 0.5), gbs(out, 0.1),
            gbv(out, 0.1), dis(in), div(in);
        s.affine_backward(in, out, W.data(), x.data(), delta.data(), gWs.data(), gbs.data(),
                          dis.data());
        v->affine_backward(in, out, W.data(), x.data(), delta.data(), gWv.data(), gbv.data(),
                           div.data());
        CHECK(max_diff(gWs, gWv) < 1e-13);
        CHECK(max_diff(gbs, gbv) < 1e-13);
        CHECK(max_diff(dis, div) < 1e-13);
        v->affine_backward(in, out, W.data(), x.data(), delta.data(), gWv.data(), gbv.data(),
                           nullptr);
      }
    }
    for (int n : {1, 3, 4, 5, 8, 31, 64, 100}) {
      CAPTURE(n);
      auto z = random_vec(n, rng, 12.0);
      auto zs = z, zv = z;
      s.tanh_inplace(n, zs.data());
      v->tanh_inplace(n, zv.data());
      CHECK(max_diff(zs, zv) < 4e-16);
      auto t1 = random_vec(n, rng), t2 = random_vec(n, rng);
      auto a1 = t1, a2 = t2, c1 = t1, c2 = t2;
      s.tanh_tangent(n, zs.data(), a1.data(), a2.data());
      v->tanh_tangent(n, zs.data(), c1.data(), c2.data());
      CHECK(max_diff(a1, c1) < 1e-14);
      CHECK(max_diff(a2, c2) < 1e-14);
      auto d = t1, e = t1;
      s.tanh_backward(n, zs.data(), d.data());
      v->tanh_backward(n, zs.data(), e.data());
      CHECK(max_diff(d, e) < 1e-15);
      CHECK(std::abs(s.dot(n, t1.data(), t2.data()) - v->dot(n, t1.data(), t2.data())) < 1e-13);
      auto ys = t2, yv = t2;
      s.axpy(n, 0.7, t1.data(), ys.data());
      v->axpy(n, 0.7, t1.data(), yv.data());
      CHECK(max_diff(ys, yv) < 1e-15);
    }
  }

  TEST_CASE("avx2 tanh accuracy over a wide range") {
    const KernelTable* v = avx2_table();
    if (!v) return;
    std::vector<double> z;
    for (double t = -40.0; t <= 40.0; t += 0.00137) z.push_back(t);
    z.push_back(800.0);
    z.push_back(-800.0);
    z.push_back(1e-300);
    auto r = z;
    v->tanh_inplace(static_cast<int>(r.size()), r.data());
    double worst = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double ref = std::tanh(z[i]);
      worst = std::max(worst, std::abs(r[i] - ref) / std::max(std::abs(ref), 1e-300));
    }
    CHECK(worst < 4e-16);
  }
}
