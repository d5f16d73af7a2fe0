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

#include "nqfs/kernels.hpp"

namespace nqfs::kernels {
namespace {

void affine(int in, int out, const double* W, const double* b, const double* x,
            double* y) {
  for (int j = 0; j < out; ++j) y[j] = b[j];
  for (int k = 0; k < in; ++k) {
    const double xk = x[k];
    const double* w = W + static_cast<long>(k) * out;
    for (int j = 0; j < out; ++j) y[j] += xk * w[j];
  }
}

void affine_tangent(int in, int out, const double* W, const double* x1,
                    const double* x2, double* y1, double* y2) {
  for (int j = 0; j < out; ++j) {
    y1[j] = 0.0;
    y2[j] = 0.0;
  }
  for (int k = 0; k < in; ++k) {
    const double a = x1[k];
    const double c = x2[k];
    const double* w = W + static_cast<long>(k) * out;
    for (int j = 0; j < out; ++j) {
      y1[j] += a * w[j];
      y2[j] += c * w[j];
    }
  }
}

void tanh_inplace(int n, double* z) {
  for (int i = 0; i < n; ++i) z[i] = std::tanh(z[i]);
}

void tanh_tangent(int n, const double* h, double* z1, double* z2) {
  for (int i = 0; i < n; ++i) {
    const double t = 1.0 - h[i] * h[i];
    const double d1 = z1[i];
    z1[i] = t * d1;
    z2[i] = t * z2[i] - 2.0 * h[i] * t * d1 * d1;
  }
}

void tanh_backward(int n, const double* h, double* delta) {
  for (int i = 0; i < n; ++i) delta[i] *= 1.0 - h[i] * h[i];
}

void affine_backward(int in, int out, const double* W, const double* x,
                     const double* delta, double* gW, double* gb,
                     double* delta_in) {
  for (int j = 0; j < out; ++j) gb[j] += delta[j];
  for (int k = 0; k < in; ++k) {
    const double xk = x[k];
    const double* w = W + static_cast<long>(k) * out;
    double* g = gW + static_cast<long>(k) * out;
    double s = 0.0;
    for (int j = 0; j < out; ++j) {
      g[j] += xk * delta[j];
      s += w[j] * delta[j];
    }
    if (delta_in) delta_in[k] = s;
  }
}

double dot(int n, const double* x, const double* y) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy(int n, double a, const double* x, double* y) {
  for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{"scalar",     affine,          affine_tangent,
                                 tanh_inplace, tanh_tangent,    tanh_backward,
                                 affine_backward, dot,          axpy};
  return table;
}

}  // namespace nqfs::kernels
