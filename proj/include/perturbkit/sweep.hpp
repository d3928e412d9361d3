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

#ifndef PERTURBKIT_SWEEP_HPP_
#define PERTURBKIT_SWEEP_HPP_

#include <string>
#include <vector>

#include "perturbkit/noise.hpp"
#include "perturbkit/pipeline.hpp"

namespace perturbkit {

enum class Task { kTagging, kSeq2Seq };

struct LocationSpec {
  std::string location;   // display name: preset name or selector text
  SelectorPtr selector;
  std::vector<double> lambdas;
};

struct DatasetConfig {
  std::size_t size = 256;
  std::size_t eval_size = 64;
  std::uint64_t generator_seed = 1;
  int shift = 1;  // task shift between pre-training and fine-tuning
};

struct ExperimentConfig {
  Task task = Task::kTagging;
  ModelConfig model;
  std::vector<LocationSpec> locations;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  TrainConfig pretrain;
  TrainConfig finetune;
  DatasetConfig dataset;
  NoiseDistribution distribution = NoiseDistribution::kUniform;
  std::string output_prefix = "results";
  // Wall-clock timing makes output bytes run-dependent; off by default so
  // identical configs emit identical files.
  bool record_timing = false;

  void validate() const;
};

// Aggregate over the seed axis for one (location, lambda) cell.
struct RunResult {
  std::string location;
  double lambda = 0.0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> per_seed_metric;
  std::vector<double> per_seed_seconds;
  double mean = 0.0;
  double stddev = 0.0;  // population std over seeds
};

ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

// Noise seed for one run, a pure function of the config's generator seed and
// the run seed.
std::uint64_t derive_noise_seed(std::uint64_t generator_seed,
                                std::uint64_t run_seed);

// Pre-train once, then perturb -> fine-tune -> evaluate per
// (location, lambda, seed). Runs execute in parallel up to
// PERTURBKIT_THREADS; results are deterministic regardless of scheduling.
// A ("none", lambda=0) baseline row is always included.
std::vector<RunResult> run_experiment(const ExperimentConfig& config);

// Writes <prefix>.csv and <prefix>.json. CSV header:
//   location,lambda,seed,metric,mean,std,seconds
// one row per seed, 6-decimal fixed point, sorted by (location, lambda, seed
// order).
void emit_results(const std::vector<RunResult>& results,
                  const std::string& prefix);

std::string results_csv(const std::vector<RunResult>& results);
std::string results_json(const std::vector<RunResult>& results);

// Pre-trained checkpoint for a config (shared starting point of every run).
ParamStore pretrain_checkpoint(const ExperimentConfig& config);

// Evaluation loss of a perturbed checkpoint before any fine-tuning.
double pre_finetune_loss(const ExperimentConfig& config,
                         const ParamStore& perturbed);

unsigned max_threads();

}  // namespace perturbkit

#endif  // PERTURBKIT_SWEEP_HPP_
