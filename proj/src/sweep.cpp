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

#include "perturbkit/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace perturbkit {

namespace {

using nlohmann::json;

TaggingShift tagging_shift(int shift) {
  return TaggingShift{shift % 3, (shift * 7) % 20};
}

Seq2SeqShift seq2seq_shift(int shift) { return Seq2SeqShift{shift % 12}; }

struct RunJob {
  std::size_t location_idx;
  double lambda;
  std::size_t seed_idx;
};

std::string fixed6(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(6);
  os << v;
  return os.str();
}

TrainConfig parse_train(const json& j) {
  TrainConfig cfg;
  cfg.steps = j.value("steps", cfg.steps);
  cfg.batch = j.value("batch", cfg.batch);
  cfg.adam.lr = j.value("lr", cfg.adam.lr);
  cfg.adam.beta1 = j.value("beta1", cfg.adam.beta1);
  cfg.adam.beta2 = j.value("beta2", cfg.adam.beta2);
  cfg.adam.eps = j.value("eps", cfg.adam.eps);
  return cfg;
}

}  // namespace

void ExperimentConfig::validate() const {
  model.validate();
  if (seeds.empty()) throw ConfigError("seeds must be non-empty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() !=
      seeds.size())
    throw ConfigError("seeds must be pairwise distinct");
  for (const LocationSpec& loc : locations) {
    if (!loc.selector) throw ConfigError("location without selector");
    for (double l : loc.lambdas)
      if (l < 0.0) throw ConfigError("lambda must be >= 0");
  }
  if (pretrain.steps < 0 || finetune.steps < 0 || pretrain.batch < 1 ||
      finetune.batch < 1)
    throw ConfigError("bad train config");
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j = json::parse(json_text);
  ExperimentConfig cfg;
  const std::string task = j.value("task", "tagging");
  if (task == "tagging") {
    cfg.task = Task::kTagging;
  } else if (task == "seq2seq") {
    cfg.task = Task::kSeq2Seq;
  } else {
    throw ConfigError("unknown task: " + task);
  }
  if (j.contains("model")) {
    const json& m = j["model"];
    cfg.model.layers = m.value("layers", cfg.model.layers);
    cfg.model.model_dim = m.value("model_dim", cfg.model.model_dim);
    cfg.model.heads = m.value("heads", cfg.model.heads);
    cfg.model.vocab = m.value("vocab", cfg.model.vocab);
    cfg.model.max_len = m.value("max_len", cfg.model.max_len);
    cfg.model.decoder_layers =
        m.value("decoder_layers", cfg.model.decoder_layers);
  }
  cfg.locations.clear();
  for (const json& l : j.value("locations", json::array())) {
    LocationSpec spec;
    if (l.contains("preset")) {
      spec.location = l["preset"].get<std::string>();
      spec.selector = preset(spec.location, cfg.model.layers);
    } else if (l.contains("selector")) {
      spec.location = l["selector"].get<std::string>();
      spec.selector = parse_selector(spec.location);
    } else {
      throw ConfigError("location needs 'preset' or 'selector'");
    }
    for (const json& lam : l.value("lambdas", json::array()))
      spec.lambdas.push_back(lam.get<double>());
    if (spec.lambdas.empty()) throw ConfigError("location without lambdas");
    cfg.locations.push_back(std::move(spec));
  }
  if (j.contains("seeds")) {
    cfg.seeds.clear();
    for (const json& s : j["seeds"]) cfg.seeds.push_back(s.get<std::uint64_t>());
  }
  if (j.contains("pretrain")) cfg.pretrain = parse_train(j["pretrain"]);
  if (j.contains("finetune")) cfg.finetune = parse_train(j["finetune"]);
  if (j.contains("dataset")) {
    const json& d = j["dataset"];
    cfg.dataset.size = d.value("size", cfg.dataset.size);
    cfg.dataset.eval_size = d.value("eval_size", cfg.dataset.eval_size);
    cfg.dataset.generator_seed =
        d.value("generator_seed", cfg.dataset.generator_seed);
    cfg.dataset.shift = d.value("shift", cfg.dataset.shift);
  }
  cfg.distribution = parse_distribution(j.value("distribution", "uniform"));
  cfg.output_prefix = j.value("output", cfg.output_prefix);
  cfg.record_timing = j.value("record_timing", cfg.record_timing);
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

std::uint64_t derive_noise_seed(std::uint64_t generator_seed,
                                std::uint64_t run_seed) {
  return CounterRng::mix(CounterRng::mix(generator_seed) + run_seed);
}

unsigned max_threads() {
  if (const char* env = std::getenv("PERTURBKIT_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

ParamStore pretrain_checkpoint(const ExperimentConfig& config) {
  const DatasetConfig& ds = config.dataset;
  if (config.task == Task::kTagging) {
    auto data = gen_tagging_data(ds.generator_seed, ds.size);
    TaggerModel model = TaggerModel::init(config.model, ds.generator_seed);
    train_tagger(model, data, config.pretrain, ds.generator_seed);
    return model.to_store();
  }
  auto data = gen_seq2seq_data(ds.generator_seed, ds.size);
  Seq2SeqModel model = Seq2SeqModel::init(config.model, ds.generator_seed);
  train_seq2seq(model, data, config.pretrain, ds.generator_seed);
  return model.to_store();
}

double pre_finetune_loss(const ExperimentConfig& config,
                         const ParamStore& perturbed) {
  const DatasetConfig& ds = config.dataset;
  if (config.task == Task::kTagging) {
    auto eval = gen_tagging_data(ds.generator_seed + 2, ds.eval_size,
                                 tagging_shift(ds.shift));
    return tagger_eval_loss(TaggerModel::from_store(config.model, perturbed),
                            eval);
  }
  auto eval = gen_seq2seq_data(ds.generator_seed + 2, ds.eval_size,
                               seq2seq_shift(ds.shift));
  return seq2seq_eval_loss(Seq2SeqModel::from_store(config.model, perturbed),
                           eval);
}

std::vector<RunResult> run_experiment(const ExperimentConfig& input_config) {
  ExperimentConfig config = input_config;
  config.validate();
  // Baseline row is always part of the table.
  const bool has_baseline = std::any_of(
      config.locations.begin(), config.locations.end(),
      [](const LocationSpec& l) {
        return l.location == "none" &&
               std::count(l.lambdas.begin(), l.lambdas.end(), 0.0) > 0;
      });
  if (!has_baseline) {
    LocationSpec baseline;
    baseline.location = "none";
    baseline.selector = make_selector(SelectorExpr::None{});
    baseline.lambdas = {0.0};
    config.locations.insert(config.locations.begin(), std::move(baseline));
  }

  const DatasetConfig& ds = config.dataset;
  const ParamStore pretrained = pretrain_checkpoint(config);

  std::vector<TaggingExample> tag_train, tag_eval;
  std::vector<Seq2SeqExample> s2s_train, s2s_eval;
  if (config.task == Task::kTagging) {
    tag_train = gen_tagging_data(ds.generator_seed + 1, ds.size,
                                 tagging_shift(ds.shift));
    tag_eval = gen_tagging_data(ds.generator_seed + 2, ds.eval_size,
                                tagging_shift(ds.shift));
  } else {
    s2s_train = gen_seq2seq_data(ds.generator_seed + 1, ds.size,
                                 seq2seq_shift(ds.shift));
    s2s_eval = gen_seq2seq_data(ds.generator_seed + 2, ds.eval_size,
                                seq2seq_shift(ds.shift));
  }

  std::vector<RunJob> jobs;
  for (std::size_t li = 0; li < config.locations.size(); ++li)
    for (double lambda : config.locations[li].lambdas)
      for (std::size_t si = 0; si < config.seeds.size(); ++si)
        jobs.push_back(RunJob{li, lambda, si});

  std::vector<double> metrics(jobs.size(), 0.0);
  std::vector<double> seconds(jobs.size(), 0.0);

  auto run_one = [&](std::size_t j) {
    const RunJob& job = jobs[j];
    const std::uint64_t run_seed = config.seeds[job.seed_idx];
    const auto t0 = std::chrono::steady_clock::now();
    NoiseSpec spec;
    spec.lambda = job.lambda;
    spec.selector = config.locations[job.location_idx].selector;
    spec.seed = derive_noise_seed(ds.generator_seed, run_seed);
    spec.distribution = config.distribution;
    auto [perturbed, report] = apply_noise(pretrained, spec);
    double metric;
    if (config.task == Task::kTagging) {
      TaggerModel model = TaggerModel::from_store(config.model, perturbed);
      train_tagger(model, tag_train, config.finetune, run_seed);
      metric = tagger_adjusted_f1(model, tag_eval);
    } else {
      Seq2SeqModel model = Seq2SeqModel::from_store(config.model, perturbed);
      train_seq2seq(model, s2s_train, config.finetune, run_seed);
      metric = seq2seq_rouge_average(model, s2s_eval);
    }
    metrics[j] = metric;
    if (config.record_timing) {
      seconds[j] = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
    }
  };

  const unsigned n_threads =
      std::min<unsigned>(max_threads(),
                         static_cast<unsigned>(std::max<std::size_t>(jobs.size(), 1)));
  if (n_threads <= 1) {
    for (std::size_t j = 0; j < jobs.size(); ++j) run_one(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (unsigned t = 0; t < n_threads; ++t)
      workers.emplace_back([&]() {
        for (;;) {
          const std::size_t j = next.fetch_add(1);
          if (j >= jobs.size()) return;
          run_one(j);
        }
      });
    for (std::thread& w : workers) w.join();
  }

  // Collect into per-(location, lambda) aggregates.
  std::vector<RunResult> results;
  std::size_t j = 0;
  for (std::size_t li = 0; li < config.locations.size(); ++li)
    for (double lambda : config.locations[li].lambdas) {
      RunResult rr;
      rr.location = config.locations[li].location;
      rr.lambda = lambda;
      for (std::size_t si = 0; si < config.seeds.size(); ++si, ++j) {
        rr.seeds.push_back(config.seeds[si]);
        rr.per_seed_metric.push_back(metrics[j]);
        rr.per_seed_seconds.push_back(seconds[j]);
      }
      double mean = 0.0;
      for (double v : rr.per_seed_metric) mean += v;
      mean /= static_cast<double>(rr.per_seed_metric.size());
      double var = 0.0;
      for (double v : rr.per_seed_metric) var += (v - mean) * (v - mean);
      var /= static_cast<double>(rr.per_seed_metric.size());
      rr.mean = mean;
      rr.stddev = std::sqrt(var);
      results.push_back(std::move(rr));
    }

  std::stable_sort(results.begin(), results.end(),
                   [](const RunResult& a, const RunResult& b) {
                     if (a.location != b.location) return a.location < b.location;
                     return a.lambda < b.lambda;
                   });
  return results;
}

std::string results_csv(const std::vector<RunResult>& results) {
  std::string out = "location,lambda,seed,metric,mean,std,seconds\n";
  for (const RunResult& rr : results)
    for (std::size_t si = 0; si < rr.seeds.size(); ++si) {
      out += rr.location + "," + fixed6(rr.lambda) + "," +
             std::to_string(rr.seeds[si]) + "," +
             fixed6(rr.per_seed_metric[si]) + "," + fixed6(rr.mean) + "," +
             fixed6(rr.stddev) + "," + fixed6(rr.per_seed_seconds[si]) + "\n";
    }
  return out;
}

std::string results_json(const std::vector<RunResult>& results) {
  json arr = json::array();
  for (const RunResult& rr : results) {
    json row;
    row["location"] = rr.location;
    row["lambda"] = fixed6(rr.lambda);
    row["mean"] = fixed6(rr.mean);
    row["std"] = fixed6(rr.stddev);
    json per_seed = json::array();
    for (std::size_t si = 0; si < rr.seeds.size(); ++si) {
      json s;
      s["seed"] = rr.seeds[si];
      s["metric"] = fixed6(rr.per_seed_metric[si]);
      s["seconds"] = fixed6(rr.per_seed_seconds[si]);
      per_seed.push_back(std::move(s));
    }
    row["runs"] = std::move(per_seed);
    arr.push_back(std::move(row));
  }
  return arr.dump(2) + "\n";
}

void emit_results(const std::vector<RunResult>& results,
                  const std::string& prefix) {
  if (results.empty()) throw ConfigError("no results to emit");
  auto write = [](const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw IoError("write failed for '" + path + "'");
  };
  write(prefix + ".csv", results_csv(results));
  write(prefix + ".json", results_json(results));
}

}  // namespace perturbkit
