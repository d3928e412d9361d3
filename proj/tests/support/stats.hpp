// Copyright 2026 The PerturbKit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PERTURBKIT_TESTS_SUPPORT_STATS_HPP_
#define PERTURBKIT_TESTS_SUPPORT_STATS_HPP_

#include <algorithm>
#include <cmath>
#include <vector>

namespace pk_test {

// Two-sided Kolmogorov-Smirnov statistic against U(0, 1).
inline double ks_uniform01(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double sup = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double lo = samples[i] - static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n - samples[i];
    sup = std::max(sup, std::max(lo, hi));
  }
  return sup;
}

inline double sample_mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline double population_std(const std::vector<double>& xs) {
  const double mu = sample_mean(xs);
  double v = 0.0;
  for (double x : xs) v += (x - mu) * (x - mu);
  return std::sqrt(v / static_cast<double>(xs.size()));
}

}  // namespace pk_test

#endif  // PERTURBKIT_TESTS_SUPPORT_STATS_HPP_
