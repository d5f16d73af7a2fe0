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

#include "nqfs/core.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace nqfs {

Geometry::Geometry(double len, Boundary b) : length(len), boundary(b) {
  if (!(len > 0.0) || !std::isfinite(len)) {
    throw ConfigError("geometry length must be positive and finite");
  }
}

double wrap_position(double x, const Geometry& geom) {
  if (!geom.periodic()) return x;
  const double L = geom.length;
  double y = std::fmod(x, L);
  if (y < 0.0) y += L;
  // fmod of a tiny negative number can round up to exactly L.
  if (y >= L) y = 0.0;
  return y;
}

EstimateResult binned_statistics(std::span<const std::vector<double>> chains,
                                 std::size_t bin_size) {
  if (bin_size == 0) throw InsufficientDataError("bin size must be positive");
  std::vector<double> bin_means;
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& chain : chains) {
    for (double v : chain) total += v;
    count += chain.size();
    const std::size_t nb = chain.size() / bin_size;
    for (std::size_t b = 0; b < nb; ++b) {
      double s = 0.0;
      for (std::size_t k = 0; k < bin_size; ++k) s += chain[b * bin_size + k];
      bin_means.push_back(s / static_cast<double>(bin_size));
    }
  }
  if (bin_means.size() < 2) {
    throw InsufficientDataError("binning needs at least two complete bins (got " +
                                std::to_string(bin_means.size()) + ")");
  }
  EstimateResult r;
  r.mean = total / static_cast<double>(count);
  r.n_samples = count;
  r.n_bins = bin_means.size();
  double bm = 0.0;
  for (double m : bin_means) bm += m;
  bm /= static_cast<double>(bin_means.size());
  double var = 0.0;
  for (double m : bin_means) var += (m - bm) * (m - bm);
  var /= static_cast<double>(bin_means.size() - 1);
  r.std_err = std::sqrt(var / static_cast<double>(bin_means.size()));
  return r;
}

std::size_t default_bin_size(std::size_t chain_length) {
  return std::max<std::size_t>(10, chain_length / 20);
}

void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = n * w / workers;
    const std::size_t end = n * (w + 1) / workers;
    pool.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace nqfs
