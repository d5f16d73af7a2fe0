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

#ifndef NQFS_CORE_HPP
#define NQFS_CORE_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nqfs {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input: malformed configuration, inconsistent options.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure could not produce a finite or converged result.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Too few samples to form an estimate (e.g. fewer than two bins).
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// Log-amplitude of a configuration outside the support of the state.
inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

inline bool is_log_zero(double log_amp) { return log_amp == kLogZero; }

enum class Boundary { HardWall, Periodic };

struct Geometry {
  double length = 1.0;
  Boundary boundary = Boundary::HardWall;

  Geometry() = default;
  Geometry(double length, Boundary boundary);

  bool periodic() const { return boundary == Boundary::Periodic; }
};

/// HardWall: identity. Periodic: maps x into [0, L).
double wrap_position(double x, const Geometry& geom);

/// A point in Fock space: n particle positions. Storage order carries no
/// meaning; consumers are permutation invariant.
struct Configuration {
  std::vector<double> positions;

  Configuration() = default;
  explicit Configuration(std::vector<double> x) : positions(std::move(x)) {}

  std::size_t n() const { return positions.size(); }
  bool operator==(const Configuration&) const = default;
};

/// Flat parameter vector: network weights followed by the regularization
/// parameters (c1, c2, s). Layout is documented in ansatz.hpp.
using ParamVector = std::vector<double>;

struct EstimateResult {
  double mean = 0.0;
  double std_err = 0.0;
  std::size_t n_samples = 0;
  std::size_t n_bins = 0;
};

/// Binning analysis over per-chain series. Each chain is cut into
/// consecutive bins of `bin_size` (trailing partial bins dropped); the error
/// is the standard deviation of all bin means divided by sqrt(#bins). The
/// mean is the grand mean over every sample. Throws InsufficientDataError
/// when fewer than two complete bins exist.
EstimateResult binned_statistics(std::span<const std::vector<double>> chains,
                                 std::size_t bin_size);

/// chain_length / 20, at least 10.
std::size_t default_bin_size(std::size_t chain_length);

/// Runs fn(i) for i in [0, n) on up to `threads` workers with a static
/// contiguous partition. Exceptions from workers are rethrown.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& fn);

/// SplitMix64 finalizer; used to derive independent per-chain seeds.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace nqfs

#endif  // NQFS_CORE_HPP
