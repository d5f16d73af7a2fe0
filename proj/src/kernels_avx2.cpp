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

// Compiled with -mavx2 -mfma. Nothing here may run before the dispatcher has
// checked the CPU.

#include <immintrin.h>

#include <cmath>

#include "nqfs/kernels.hpp"

namespace nqfs::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

// exp for x in [0, 40], rational approximation after Cody-Waite reduction.
inline __m256d exp_pos(__m256d x) {
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
  const __m256d c1 = _mm256_set1_pd(6.93145751953125E-1);
  const __m256d c2 = _mm256_set1_pd(1.42860682030941723212E-6);
  __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                              _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, c1, x);
  r = _mm256_fnmadd_pd(n, c2, r);
  const __m256d r2 = _mm256_mul_pd(r, r);
  __m256d p = _mm256_set1_pd(1.26177193074810590878E-4);
  p = _mm256_fmadd_pd(p, r2, _mm256_set1_pd(3.02994407707441961300E-2));
  p = _mm256_fmadd_pd(p, r2, _mm256_set1_pd(9.99999999999999999910E-1));
  p = _mm256_mul_pd(p, r);
  __m256d q = _mm256_set1_pd(3.00198505138664455042E-6);
  q = _mm256_fmadd_pd(q, r2, _mm256_set1_pd(2.52448340349684104192E-3));
  q = _mm256_fmadd_pd(q, r2, _mm256_set1_pd(2.27265548208155028766E-1));
  q = _mm256_fmadd_pd(q, r2, _mm256_set1_pd(2.00000000000000000009E0));
  __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  e = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, _mm256_set1_pd(1.0));
  // Scale by 2^n through the exponent field.
  const __m128i ni = _mm256_cvtpd_epi32(n);
  __m256i bits = _mm256_cvtepi32_epi64(ni);
  bits = _mm256_slli_epi64(_mm256_add_epi64(bits, _mm256_set1_epi64x(1023)), 52);
  return _mm256_mul_pd(e, _mm256_castsi256_pd(bits));
}

inline __m256d tanh4(__m256d x) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  const __m256d ax = _mm256_andnot_pd(sign_mask, x);
  const __m256d sgn = _mm256_and_pd(sign_mask, x);

  // Large branch: 1 - 2 / (exp(2|x|) + 1).
  const __m256d two_ax = _mm256_min_pd(_mm256_add_pd(ax, ax), _mm256_set1_pd(40.0));
  const __m256d e = exp_pos(two_ax);
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d big = _mm256_sub_pd(
      one, _mm256_div_pd(_mm256_set1_pd(2.0), _mm256_add_pd(e, one)));
  big = _mm256_or_pd(big, sgn);

  // Small branch: x + x z P(z) / Q(z), z = x^2.
  const __m256d z = _mm256_mul_pd(x, x);
  __m256d p = _mm256_set1_pd(-9.64399179425052238628E-1);
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(-9.92877231001918586564E1));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(-1.61468768441708447952E3));
  __m256d q = _mm256_add_pd(z, _mm256_set1_pd(1.12811678491632931402E2));
  q = _mm256_fmadd_pd(q, z, _mm256_set1_pd(2.23548839060100448583E3));
  q = _mm256_fmadd_pd(q, z, _mm256_set1_pd(4.84406305325125486048E3));
  const __m256d small =
      _mm256_fmadd_pd(_mm256_mul_pd(x, z), _mm256_div_pd(p, q), x);

  const __m256d use_small = _mm256_cmp_pd(ax, _mm256_set1_pd(0.625), _CMP_LT_OQ);
  return _mm256_blendv_pd(big, small, use_small);
}

void affine(int in, int out, const double* W, const double* b, const double* x,
            double* y) {
  int j = 0;
  for (; j + 8 <= out; j += 8) {
    __m256d a0 = _mm256_loadu_pd(b + j);
    __m256d a1 = _mm256_loadu_pd(b + j + 4);
    for (int k = 0; k < in; ++k) {
      const __m256d xk = _mm256_set1_pd(x[k]);
      const double* w = W + static_cast<long>(k) * out + j;
      a0 = _mm256_fmadd_pd(xk, _mm256_loadu_pd(w), a0);
      a1 = _mm256_fmadd_pd(xk, _mm256_loadu_pd(w + 4), a1);
    }
    _mm256_storeu_pd(y + j, a0);
    _mm256_storeu_pd(y + j + 4, a1);
  }
  for (; j + 4 <= out; j += 4) {
    __m256d a0 = _mm256_loadu_pd(b + j);
    for (int k = 0; k < in; ++k) {
      a0 = _mm256_fmadd_pd(_mm256_set1_pd(x[k]),
                           _mm256_loadu_pd(W + static_cast<long>(k) * out + j), a0);
    }
    _mm256_storeu_pd(y + j, a0);
  }
  for (; j < out; ++j) {
    double s = b[j];
    for (int k = 0; k < in; ++k) s = std::fma(x[k], W[static_cast<long>(k) * out + j], s);
    y[j] = s;
  }
}

void affine_tangent(int in, int out, const double* W, const double* x1,
                    const double* x2, double* y1, double* y2) {
  int j = 0;
  for (; j + 4 <= out; j += 4) {
    __m256d a = _mm256_setzero_pd();
    __m256d c = _mm256_setzero_pd();
    for (int k = 0; k < in; ++k) {
      const __m256d w = _mm256_loadu_pd(W + static_cast<long>(k) * out + j);
      a = _mm256_fmadd_pd(_mm256_set1_pd(x1[k]), w, a);
      c = _mm256_fmadd_pd(_mm256_set1_pd(x2[k]), w, c);
    }
    _mm256_storeu_pd(y1 + j, a);
    _mm256_storeu_pd(y2 + j, c);
  }
  for (; j < out; ++j) {
    double a = 0.0, c = 0.0;
    for (int k = 0; k < in; ++k) {
      const double w = W[static_cast<long>(k) * out + j];
      a = std::fma(x1[k], w, a);
      c = std::fma(x2[k], w, c);
    }
    y1[j] = a;
    y2[j] = c;
  }
}

void tanh_inplace(int n, double* z) {
  int i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(z + i, tanh4(_mm256_loadu_pd(z + i)));
  for (; i < n; ++i) z[i] = std::tanh(z[i]);
}

void tanh_tangent(int n, const double* h, double* z1, double* z2) {
  int i = 0;
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d m2 = _mm256_set1_pd(-2.0);
  for (; i + 4 <= n; i += 4) {
    const __m256d hv = _mm256_loadu_pd(h + i);
    const __m256d t = _mm256_fnmadd_pd(hv, hv, one);
    const __m256d d1 = _mm256_loadu_pd(z1 + i);
    const __m256d d2 = _mm256_loadu_pd(z2 + i);
    const __m256d curv = _mm256_mul_pd(_mm256_mul_pd(m2, hv), _mm256_mul_pd(t, d1));
    _mm256_storeu_pd(z1 + i, _mm256_mul_pd(t, d1));
    _mm256_storeu_pd(z2 + i, _mm256_fmadd_pd(curv, d1, _mm256_mul_pd(t, d2)));
  }
  for (; i < n; ++i) {
    const double t = 1.0 - h[i] * h[i];
    const double d1 = z1[i];
    z1[i] = t * d1;
    z2[i] = t * z2[i] - 2.0 * h[i] * t * d1 * d1;
  }
}

void tanh_backward(int n, const double* h, double* delta) {
  int i = 0;
  const __m256d one = _mm256_set1_pd(1.0);
  for (; i + 4 <= n; i += 4) {
    const __m256d hv = _mm256_loadu_pd(h + i);
    _mm256_storeu_pd(delta + i, _mm256_mul_pd(_mm256_loadu_pd(delta + i),
                                              _mm256_fnmadd_pd(hv, hv, one)));
  }
  for (; i < n; ++i) delta[i] *= 1.0 - h[i] * h[i];
}

void affine_backward(int in, int out, const double* W, const double* x,
                     const double* delta, double* gW, double* gb,
                     double* delta_in) {
  int j = 0;
  for (; j + 4 <= out; j += 4) {
    _mm256_storeu_pd(gb + j, _mm256_add_pd(_mm256_loadu_pd(gb + j),
                                           _mm256_loadu_pd(delta + j)));
  }
  for (; j < out; ++j) gb[j] += delta[j];

  for (int k = 0; k < in; ++k) {
    const double* w = W + static_cast<long>(k) * out;
    double* g = gW + static_cast<long>(k) * out;
    const __m256d xk = _mm256_set1_pd(x[k]);
    __m256d acc = _mm256_setzero_pd();
    int jj = 0;
    for (; jj + 4 <= out; jj += 4) {
      const __m256d d = _mm256_loadu_pd(delta + jj);
      _mm256_storeu_pd(g + jj, _mm256_fmadd_pd(xk, d, _mm256_loadu_pd(g + jj)));
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + jj), d, acc);
    }
    double s = hsum(acc);
    for (; jj < out; ++jj) {
      g[jj] += x[k] * delta[jj];
      s += w[jj] * delta[jj];
    }
    if (delta_in) delta_in[k] = s;
  }
}

double dot(int n, const double* x, const double* y) {
  __m256d acc = _mm256_setzero_pd();
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy(int n, double a, const double* x, double* y) {
  const __m256d av = _mm256_set1_pd(a);
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

}  // namespace

const KernelTable& avx2_table_impl() {
  static const KernelTable table{"avx2",       affine,          affine_tangent,
                                 tanh_inplace, tanh_tangent,    tanh_backward,
                                 affine_backward, dot,          axpy};
  return table;
}

}  // namespace nqfs::kernels
