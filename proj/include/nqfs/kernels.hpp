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

// Dense-layer inner loops. A scalar reference table is always available; an
// AVX2+FMA table is compiled on x86-64 and picked at runtime when the CPU
// supports it. Set NQFS_KERNELS=scalar to force the reference path.
//
// Weight matrices are stored input-major: W[k * out + j] connects input k to
// output j, so every loop below streams contiguously over the output index.

#ifndef NQFS_KERNELS_HPP
#define NQFS_KERNELS_HPP

#include <string_view>

namespace nqfs::kernels {

struct KernelTable {
  const char* name;

  // y = b + W^T x
  void (*affine)(int in, int out, const double* W, const double* b,
                 const double* x, double* y);
  // y1 = W^T x1, y2 = W^T x2
  void (*affine_tangent)(int in, int out, const double* W, const double* x1,
                         const double* x2, double* y1, double* y2);
  // In place: h = tanh(z).
  void (*tanh_inplace)(int n, double* z);
  // Given h = tanh(z) already stored, maps tangents (z1, z2) in place to
  // (h1, h2) = ((1-h^2) z1, (1-h^2) z2 - 2 h (1-h^2) z1^2).
  void (*tanh_tangent)(int n, const double* h, double* z1, double* z2);
  // delta *= (1 - h^2)
  void (*tanh_backward)(int n, const double* h, double* delta);
  // gb += delta; gW += x delta^T; delta_in = W delta (skipped when null).
  void (*affine_backward)(int in, int out, const double* W, const double* x,
                          const double* delta, double* gW, double* gb,
                          double* delta_in);
  double (*dot)(int n, const double* x, const double* y);
  // y += a x
  void (*axpy)(int n, double a, const double* x, double* y);
};

const KernelTable& scalar_table();

/// nullptr when the build or the CPU lacks AVX2+FMA.
const KernelTable* avx2_table();

/// The table used by the library. Chosen once on first use.
const KernelTable& active();

/// Override the active table ("scalar" or "avx2"). Returns false when the
/// requested table is unavailable. Not thread-safe; call before evaluation.
bool select(std::string_view name);

}  // namespace nqfs::kernels

#endif  // NQFS_KERNELS_HPP
