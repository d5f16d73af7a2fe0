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

#include "nqfs/smoothnet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nqfs/core.hpp"
#include "nqfs/kernels.hpp"

namespace nqfs {
namespace {

void check_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw Error(std::string("mlp: ") + what + " has size " + std::to_string(got) +
                ", expected " + std::to_string(want));
  }
}

}  // namespace

Mlp::Mlp(std::vector<int> widths) : widths_(std::move(widths)) {
  if (widths_.size() < 2) throw ConfigError("mlp needs at least input and output widths");
  for (int w : widths_) {
    if (w <= 0) throw ConfigError("mlp layer widths must be positive");
  }
  for (int l = 0; l < num_layers(); ++l) {
    const std::size_t in = widths_[l], out = widths_[l + 1];
    w_offset_.push_back(num_params_);
    num_params_ += in * out;
    b_offset_.push_back(num_params_);
    num_params_ += out;
  }
}

void Mlp::init_params(std::span<double> params, std::mt19937_64& rng) const {
  check_dim(params.size(), num_params_, "parameter slice");
  for (int l = 0; l < num_layers(); ++l) {
    const int in = widths_[l], out = widths_[l + 1];
    const double a = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> dist(-a, a);
    for (std::size_t i = 0; i < static_cast<std::size_t>(in) * out; ++i) {
      params[w_offset_[l] + i] = dist(rng);
    }
    for (int j = 0; j < out; ++j) params[b_offset_[l] + j] = 0.0;
  }
}

void Mlp::forward(std::span<const double> params, std::span<const double> x,
                  Tape& tape) const {
  check_dim(x.size(), static_cast<std::size_t>(input_dim()), "input");
  const auto& k = kernels::active();
  const int nl = num_layers();
  tape.act.resize(nl + 1);
  tape.act[0].assign(x.begin(), x.end());
  for (int l = 0; l < nl; ++l) {
    auto& y = tape.act[l + 1];
    y.resize(widths_[l + 1]);
    k.affine(widths_[l], widths_[l + 1], params.data() + w_offset_[l],
             params.data() + b_offset_[l], tape.act[l].data(), y.data());
    if (l + 1 < nl) k.tanh_inplace(widths_[l + 1], y.data());
  }
}

void Mlp::forward(std::span<const double> params, std::span<const double> x,
                  std::span<double> y) const {
  check_dim(y.size(), static_cast<std::size_t>(output_dim()), "output");
  thread_local Tape tape;
  forward(params, x, tape);
  std::copy(tape.act.back().begin(), tape.act.back().end(), y.begin());
}

void Mlp::tangent(std::span<const double> params, const Tape& tape,
                  std::span<const double> dx, std::span<const double> ddx,
                  std::span<double> dy, std::span<double> ddy,
                  TangentScratch& s) const {
  const auto& k = kernels::active();
  const int nl = num_layers();
  s.a1.assign(dx.begin(), dx.end());
  s.a2.assign(ddx.begin(), ddx.end());
  for (int l = 0; l < nl; ++l) {
    const int out = widths_[l + 1];
    s.b1.resize(out);
    s.b2.resize(out);
    k.affine_tangent(widths_[l], out, params.data() + w_offset_[l], s.a1.data(),
                     s.a2.data(), s.b1.data(), s.b2.data());
    if (l + 1 < nl) k.tanh_tangent(out, tape.act[l + 1].data(), s.b1.data(), s.b2.data());
    std::swap(s.a1, s.b1);
    std::swap(s.a2, s.b2);
  }
  std::copy(s.a1.begin(), s.a1.end(), dy.begin());
  std::copy(s.a2.begin(), s.a2.end(), ddy.begin());
}

void Mlp::backward(std::span<const double> params, const Tape& tape,
                   std::span<const double> dy, std::span<double> grad,
                   std::span<double> dx) const {
  check_dim(grad.size(), num_params_, "gradient slice");
  const auto& k = kernels::active();
  thread_local std::vector<double> delta, delta_in;
  delta.assign(dy.begin(), dy.end());
  const int nl = num_layers();
  for (int l = nl - 1; l >= 0; --l) {
    const int in = widths_[l], out = widths_[l + 1];
    if (l + 1 < nl) k.tanh_backward(out, tape.act[l + 1].data(), delta.data());
    const bool need_in = l > 0 || !dx.empty();
    delta_in.resize(in);
    k.affine_backward(in, out, params.data() + w_offset_[l], tape.act[l].data(),
                      delta.data(), grad.data() + w_offset_[l],
                      grad.data() + b_offset_[l], need_in ? delta_in.data() : nullptr);
    if (need_in) std::swap(delta, delta_in);
  }
  if (!dx.empty()) std::copy(delta.begin(), delta.begin() + input_dim(), dx.begin());
}

double mlp_forward(const Mlp& net, std::span<const double> params,
                   std::span<const double> input) {
  check_dim(static_cast<std::size_t>(net.output_dim()), 1, "output");
  double y = 0.0;
  net.forward(params, input, std::span<double>(&y, 1));
  return y;
}

std::vector<double> mlp_param_gradient(const Mlp& net, std::span<const double> params,
                                       std::span<const double> input) {
  check_dim(static_cast<std::size_t>(net.output_dim()), 1, "output");
  Mlp::Tape tape;
  net.forward(params, input, tape);
  std::vector<double> grad(net.num_params(), 0.0);
  const double one = 1.0;
  net.backward(params, tape, std::span<const double>(&one, 1), grad, {});
  return grad;
}

InputDerivatives mlp_input_derivatives(const Mlp& net, std::span<const double> params,
                                       std::span<const double> input) {
  check_dim(static_cast<std::size_t>(net.output_dim()), 1, "output");
  Mlp::Tape tape;
  net.forward(params, input, tape);
  InputDerivatives r;
  r.value = tape.act.back()[0];
  const int d = net.input_dim();
  r.grad.resize(d);
  r.diag_second.resize(d);
  std::vector<double> e(d, 0.0), zero(d, 0.0);
  Mlp::TangentScratch scratch;
  for (int i = 0; i < d; ++i) {
    e[i] = 1.0;
    net.tangent(params, tape, e, zero, std::span<double>(&r.grad[i], 1),
                std::span<double>(&r.diag_second[i], 1), scratch);
    e[i] = 0.0;
  }
  return r;
}

}  // namespace nqfs
