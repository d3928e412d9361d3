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

#ifndef PERTURBKIT_NOISE_HPP_
#define PERTURBKIT_NOISE_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "perturbkit/param_store.hpp"
#include "perturbkit/selector.hpp"

namespace perturbkit {

enum class NoiseDistribution { kUniform, kGaussian };

// One perturbation request: noise intensity, where it lands, and the seed
// that makes it reproducible.
struct NoiseSpec {
  double lambda = 0.0;
  SelectorPtr selector;
  std::uint64_t seed = 0;
  NoiseDistribution distribution = NoiseDistribution::kUniform;
};

// Counter-based stream generator. The k-th draw is
//   mix(key + (k+1) * GOLDEN_GAMMA)
// where mix is the SplitMix64 finalizer and the stream key is
//   fnv1a64(tensor_name) ^ mix(seed).
// Uniform doubles in [0,1) come from the top 53 bits divided by 2^53.
// The construction is frozen; golden tests replay it step by step.
class CounterRng {
 public:
  static constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ull;

  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64();
  // [0, 1)
  double next_unit();
  // Standard normal via Box-Muller; draws two uniforms per pair.
  double next_gaussian();

  static std::uint64_t mix(std::uint64_t z);
  static std::uint64_t fnv1a64(const std::string& s);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

CounterRng derive_substream(std::uint64_t seed, const std::string& tensor_name);

// Population standard deviation of the flattened tensor, computed in f64.
double tensor_std(const TensorRecord& rec);

// W + u * sigma(W), u elementwise ~ U(-lambda/2, lambda/2) (or Gaussian with
// std lambda/2). Metadata and shape pass through unchanged.
TensorRecord perturb_tensor(const TensorRecord& rec, double lambda,
                            CounterRng rng,
                            NoiseDistribution distribution =
                                NoiseDistribution::kUniform);

struct TensorPerturbation {
  std::string name;
  std::size_t elements = 0;
  double sigma = 0.0;
  double max_abs_delta = 0.0;
  double mean_delta = 0.0;
};

struct PerturbationReport {
  std::vector<TensorPerturbation> tensors;
  std::size_t tensors_touched = 0;
  std::size_t elements_perturbed = 0;
};

// Applies perturb_tensor to every record matched by spec.selector; all other
// records are returned bitwise unchanged. Per-tensor substreams make the
// result independent of store order and scheduling.
std::pair<ParamStore, PerturbationReport> apply_noise(const ParamStore& store,
                                                      const NoiseSpec& spec);

NoiseDistribution parse_distribution(const std::string& name);
const char* distribution_name(NoiseDistribution d);

}  // namespace perturbkit

#endif  // PERTURBKIT_NOISE_HPP_
