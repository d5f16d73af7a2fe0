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

#ifndef NQFS_SMOOTHNET_HPP
#define NQFS_SMOOTHNET_HPP

#include <cstddef>
#include <random>
#include <span>
#include <vector>

namespace nqfs {

/// Fully connected network with tanh on hidden layers and an identity output.
///
/// Parameters live outside the object in a flat slice. Layer l occupies
///   W_l : widths[l] * widths[l+1] values, input-major (W[k * out + j])
///   b_l : widths[l+1] values
/// and layers follow each other in order.
class Mlp {
 public:
  /// Activations recorded by a forward pass. act[0] is the input and
  /// act[l + 1] the output of layer l (after tanh for hidden layers).
  struct Tape {
    std::vector<std::vector<double>> act;
  };

  /// Scratch for tangent propagation; reuse across calls to avoid allocation.
  struct TangentScratch {
    std::vector<double> a1, a2, b1, b2;
  };

  Mlp() = default;
  /// widths = {input_dim, hidden..., output_dim}; at least two entries.
  explicit Mlp(std::vector<int> widths);

  int input_dim() const { return widths_.front(); }
  int output_dim() const { return widths_.back(); }
  int num_layers() const { return static_cast<int>(widths_.size()) - 1; }
  const std::vector<int>& widths() const { return widths_; }
  std::size_t num_params() const { return num_params_; }

  /// Uniform(-sqrt(6/(fan_in+fan_out)), +...) weights, zero biases.
  void init_params(std::span<double> params, std::mt19937_64& rng) const;

  void forward(std::span<const double> params, std::span<const double> x,
               std::span<double> y) const;
  void forward(std::span<const double> params, std::span<const double> x,
               Tape& tape) const;

  /// Propagates an input tangent pair (dx, ddx) through the network whose
  /// activations are in `tape`: with x(t) = x + t dx + t^2/2 ddx, returns the
  /// first and second t-derivatives of the output at t = 0.
  void tangent(std::span<const double> params, const Tape& tape,
               std::span<const double> dx, std::span<const double> ddx,
               std::span<double> dy, std::span<double> ddy,
               TangentScratch& scratch) const;

  /// Reverse pass for output adjoint dy. Parameter gradients are ADDED to
  /// grad; input adjoints are written to dx when it is non-empty.
  void backward(std::span<const double> params, const Tape& tape,
                std::span<const double> dy, std::span<double> grad,
                std::span<double> dx) const;

 private:
  std::vector<int> widths_;
  std::vector<std::size_t> w_offset_;
  std::vector<std::size_t> b_offset_;
  std::size_t num_params_ = 0;
};

/// Scalar-output convenience forms.
double mlp_forward(const Mlp& net, std::span<const double> params,
                   std::span<const double> input);

std::vector<double> mlp_param_gradient(const Mlp& net,
                                       std::span<const double> params,
                                       std::span<const double> input);

struct InputDerivatives {
  double value = 0.0;
  std::vector<double> grad;
  std::vector<double> diag_second;
};

InputDerivatives mlp_input_derivatives(const Mlp& net,
                                       std::span<const double> params,
                                       std::span<const double> input);

}  // namespace nqfs

#endif  // NQFS_SMOOTHNET_HPP
