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

#ifndef PERTURBKIT_TRAIN_HPP_
#define PERTURBKIT_TRAIN_HPP_

#include <map>
#include <string>

#include "perturbkit/autodiff.hpp"
#include "perturbkit/noise.hpp"

namespace perturbkit {

// Ordered f64 parameter set; insertion order is preserved so checkpoint
// serialization stays deterministic.
class Params {
 public:
  void add(const std::string& name, Tensor t);
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool has(const std::string& name) const { return lookup_.count(name) > 0; }
  const std::vector<std::pair<std::string, Tensor>>& entries() const {
    return entries_;
  }
  std::vector<std::pair<std::string, Tensor>>& entries() { return entries_; }

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::map<std::string, std::size_t> lookup_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam. State shapes mirror the parameter set.
class AdamState {
 public:
  void step(Params& params, const std::map<std::string, Tensor>& grads,
            const AdamConfig& cfg);
  long step_count() const { return t_; }

 private:
  std::map<std::string, Tensor> m_;
  std::map<std::string, Tensor> v_;
  long t_ = 0;
};

// Truncated normal (resample beyond 2 std) with the given std.
Tensor truncated_normal(std::vector<std::size_t> shape, double stddev,
                        CounterRng& rng);

}  // namespace perturbkit

#endif  // PERTURBKIT_TRAIN_HPP_
