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

#include "perturbkit/noise.hpp"

#include <cmath>
#include <numbers>

#include "perturbkit/errors.hpp"

namespace perturbkit {

std::uint64_t CounterRng::mix(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

std::uint64_t CounterRng::fnv1a64(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

std::uint64_t CounterRng::next_u64() {
  ++counter_;
  return mix(key_ + counter_ * kGoldenGamma);
}

double CounterRng::next_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double CounterRng::next_gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // Box-Muller on (0,1] x [0,1) so the log argument never hits zero.
  const double u1 =
      static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  const double u2 = next_unit();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

CounterRng derive_substream(std::uint64_t seed,
                            const std::string& tensor_name) {
  return CounterRng(CounterRng::fnv1a64(tensor_name) ^ CounterRng::mix(seed));
}

double tensor_std(const TensorRecord& rec) {
  const std::size_t n = rec.data.size();
  if (n == 0) return 0.0;
  double mean = 0.0;
  for (float v : rec.data) mean += static_cast<double>(v);
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (float v : rec.data) {
    const double d = static_cast<double>(v) - mean;
    var += d * d;
  }
  var /= static_cast<double>(n);
  return std::sqrt(var);
}

TensorRecord perturb_tensor(const TensorRecord& rec, double lambda,
                            CounterRng rng, NoiseDistribution distribution) {
  TensorRecord out = rec;
  if (lambda == 0.0) return out;
  const double sigma = tensor_std(rec);
  if (sigma == 0.0) return out;
  for (std::size_t k = 0; k < out.data.size(); ++k) {
    double u;
    if (distribution == NoiseDistribution::kUniform) {
      u = lambda * (rng.next_unit() - 0.5);  // U(-lambda/2, lambda/2)
    } else {
      u = (lambda / 2.0) * rng.next_gaussian();
    }
    const double v = static_cast<double>(rec.data[k]) + u * sigma;
    const float vf = static_cast<float>(v);
    if (!std::isfinite(vf)) throw NonFiniteResultError(rec.name);
    out.data[k] = vf;
  }
  return out;
}

std::pair<ParamStore, PerturbationReport> apply_noise(const ParamStore& store,
                                                      const NoiseSpec& spec) {
  if (!spec.selector) throw ConfigError("NoiseSpec has no selector");
  ParamStore out;
  PerturbationReport report;
  for (const TensorRecord& rec : store.records()) {
    if (!matches(*spec.selector, rec)) {
      out.put(rec);
      continue;
    }
    TensorRecord perturbed =
        perturb_tensor(rec, spec.lambda,
                       derive_substream(spec.seed, rec.name),
                       spec.distribution);
    TensorPerturbation tp;
    tp.name = rec.name;
    tp.elements = rec.data.size();
    tp.sigma = tensor_std(rec);
    double sum_delta = 0.0;
    for (std::size_t k = 0; k < rec.data.size(); ++k) {
      const double d = static_cast<double>(perturbed.data[k]) -
                       static_cast<double>(rec.data[k]);
      tp.max_abs_delta = std::max(tp.max_abs_delta, std::abs(d));
      sum_delta += d;
    }
    tp.mean_delta = sum_delta / static_cast<double>(rec.data.size());
    report.tensors.push_back(std::move(tp));
    ++report.tensors_touched;
    report.elements_perturbed += rec.data.size();
    out.put(std::move(perturbed));
  }
  return {std::move(out), std::move(report)};
}

NoiseDistribution parse_distribution(const std::string& name) {
  if (name == "uniform") return NoiseDistribution::kUniform;
  if (name == "gaussian") return NoiseDistribution::kGaussian;
  throw ConfigError("unknown distribution: " + name);
}

const char* distribution_name(NoiseDistribution d) {
  return d == NoiseDistribution::kUniform ? "uniform" : "gaussian";
}

}  // namespace perturbkit
