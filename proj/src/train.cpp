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

#include "perturbkit/train.hpp"

#include <cmath>

namespace perturbkit {

void Params::add(const std::string& name, Tensor t) {
  if (lookup_.count(name)) throw DuplicateNameError(name);
  lookup_.emplace(name, entries_.size());
  entries_.emplace_back(name, std::move(t));
}

Tensor& Params::at(const std::string& name) {
  auto it = lookup_.find(name);
  if (it == lookup_.end()) throw Error("unknown parameter: " + name);
  return entries_[it->second].second;
}

const Tensor& Params::at(const std::string& name) const {
  auto it = lookup_.find(name);
  if (it == lookup_.end()) throw Error("unknown parameter: " + name);
  return entries_[it->second].second;
}

void AdamState::step(Params& params, const std::map<std::string, Tensor>& grads,
                     const AdamConfig& cfg) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg.beta1, t_);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t_);
  for (auto& [name, p] : params.entries()) {
    auto git = grads.find(name);
    if (git == grads.end()) continue;
    const Tensor& g = git->second;
    if (g.shape != p.shape)
      throw ShapeError("adam gradient shape mismatch for " + name);
    Tensor& m = m_.try_emplace(name, Tensor::zeros(p.shape)).first->second;
    Tensor& v = v_.try_emplace(name, Tensor::zeros(p.shape)).first->second;
    for (std::size_t i = 0; i < p.numel(); ++i) {
      m.data[i] = cfg.beta1 * m.data[i] + (1.0 - cfg.beta1) * g.data[i];
      v.data[i] =
          cfg.beta2 * v.data[i] + (1.0 - cfg.beta2) * g.data[i] * g.data[i];
      const double mhat = m.data[i] / bc1;
      const double vhat = v.data[i] / bc2;
      p.data[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

Tensor truncated_normal(std::vector<std::size_t> shape, double stddev,
                        CounterRng& rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.data) {
    double z;
    do {
      z = rng.next_gaussian();
    } while (std::abs(z) > 2.0);
    v = z * stddev;
  }
  return t;
}

}  // namespace perturbkit
