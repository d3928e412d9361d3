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

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "perturbkit/noise.hpp"
#include "perturbkit/param_store.hpp"
#include "perturbkit/relation_metrics.hpp"
#include "perturbkit/rouge.hpp"
#include "perturbkit/selector.hpp"
#include "perturbkit/sweep.hpp"

namespace {

using nlohmann::json;
using namespace perturbkit;

std::string fixed6(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << v;
  return os.str();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<RelationInstance> relations_from_json(const std::string& path) {
  const json doc = json::parse(slurp(path));
  std::vector<RelationInstance> out;
  for (const json& r : doc.at("relations")) {
    RelationInstance rel;
    rel.label = r.at("label").get<std::string>();
    auto read_span = [](const json& s) {
      EntitySpan span;
      span.label = s.at("label").get<std::string>();
      for (const json& t : s.at("tokens")) span.token_ids.insert(t.get<int>());
      return span;
    };
    rel.head = read_span(r.at("head"));
    rel.tail = read_span(r.at("tail"));
    out.push_back(std::move(rel));
  }
  return out;
}

int cmd_perturb(const std::string& in, const std::string& out, double lambda,
                std::uint64_t seed, const std::string& preset_name,
                const std::string& select_expr, int layers,
                const std::string& dist, const std::string& report_path) {
  NoiseSpec spec;
  spec.lambda = lambda;
  spec.seed = seed;
  spec.distribution = parse_distribution(dist);
  if (!preset_name.empty()) {
    spec.selector = preset(preset_name, layers);
  } else {
    spec.selector = parse_selector(select_expr);
  }
  const ParamStore store = read_checkpoint(in);
  auto [perturbed, report] = apply_noise(store, spec);
  write_checkpoint(perturbed, out);
  if (!report_path.empty()) {
    json doc;
    doc["tensors_touched"] = report.tensors_touched;
    doc["elements_perturbed"] = report.elements_perturbed;
    json tensors = json::array();
    for (const TensorPerturbation& t : report.tensors) {
      json row;
      row["name"] = t.name;
      row["elements"] = t.elements;
      row["sigma"] = t.sigma;
      row["max_abs_delta"] = t.max_abs_delta;
      row["mean_delta"] = t.mean_delta;
      tensors.push_back(std::move(row));
    }
    doc["tensors"] = std::move(tensors);
    std::ofstream rep(report_path, std::ios::trunc);
    if (!rep) throw IoError("cannot open '" + report_path + "'");
    rep << doc.dump(2) << "\n";
  }
  std::cout << "perturbed " << report.tensors_touched << " of " << store.size()
            << " tensors (" << report.elements_perturbed << " elements)\n";
  return 0;
}

int cmd_eval_jnere(const std::string& pred_path, const std::string& gold_path) {
  const auto preds = relations_from_json(pred_path);
  const auto golds = relations_from_json(gold_path);
  json out;
  out["adjusted_f1"] = fixed6(adjusted_f1(preds, golds));
  out["predictions"] = preds.size();
  out["gold"] = golds.size();
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_eval_rouge(const std::string& cand_dir, const std::string& ref_dir) {
  namespace fs = std::filesystem;
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(cand_dir))
    if (entry.is_regular_file()) names.push_back(entry.path().filename());
  std::sort(names.begin(), names.end());
  if (names.empty()) throw IoError("no candidate files in '" + cand_dir + "'");
  RougeScores total;
  std::size_t n = 0;
  for (const std::string& name : names) {
    const fs::path ref = fs::path(ref_dir) / name;
    if (!fs::exists(ref)) throw IoError("missing reference for '" + name + "'");
    const RougeScores s =
        rouge_all(tokenize_sentences(slurp(fs::path(cand_dir) / name)),
                  tokenize_sentences(slurp(ref)));
    total.rouge1_f1 += s.rouge1_f1;
    total.rouge2_f1 += s.rouge2_f1;
    total.rougeL_f1 += s.rougeL_f1;
    total.rougeLsum_f1 += s.rougeLsum_f1;
    ++n;
  }
  const double inv = 1.0 / static_cast<double>(n);
  json out;
  out["rouge1_f1"] = fixed6(total.rouge1_f1 * inv);
  out["rouge2_f1"] = fixed6(total.rouge2_f1 * inv);
  out["rougeL_f1"] = fixed6(total.rougeL_f1 * inv);
  out["rougeLsum_f1"] = fixed6(total.rougeLsum_f1 * inv);
  out["rouge_average"] = fixed6((total.rouge1_f1 + total.rouge2_f1 +
                                 total.rougeL_f1 + total.rougeLsum_f1) *
                                inv / 4.0);
  out["documents"] = n;
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_sweep(const std::string& config_path) {
  const ExperimentConfig config = load_experiment_config(config_path);
  const auto results = run_experiment(config);
  emit_results(results, config.output_prefix);
  std::cout << results_csv(results);
  std::cout << "wrote " << config.output_prefix << ".csv and "
            << config.output_prefix << ".json\n";
  return 0;
}

int cmd_inspect(const std::string& ckpt) {
  const ParamStore store = read_checkpoint(ckpt);
  std::cout << std::left << std::setw(28) << "name" << std::setw(10) << "kind"
            << std::setw(10) << "zone" << std::setw(7) << "layer"
            << std::setw(16) << "shape" << "sigma\n";
  for (const TensorRecord& rec : store.records()) {
    std::string shape = "[";
    for (std::size_t i = 0; i < rec.shape.size(); ++i) {
      if (i) shape += "x";
      shape += std::to_string(rec.shape[i]);
    }
    shape += "]";
    std::cout << std::left << std::setw(28) << rec.name << std::setw(10)
              << kind_name(rec.kind) << std::setw(10)
              << zone_name(rec.zone.component) << std::setw(7)
              << (rec.zone.layer_index ? std::to_string(*rec.zone.layer_index)
                                       : "-")
              << std::setw(16) << shape << fixed6(tensor_std(rec)) << "\n";
  }
  std::cout << store.size() << " tensors\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"localized parameter-noise regularization toolkit"};
  app.require_subcommand(1);

  auto* perturb = app.add_subcommand("perturb", "add noise to a checkpoint");
  std::string in, out, preset_name, select_expr, dist = "uniform", report;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  int layers = 0;
  perturb->add_option("--in", in)->required();
  perturb->add_option("--out", out)->required();
  perturb->add_option("--lambda", lambda)->required();
  perturb->add_option("--seed", seed)->required();
  auto* opt_preset = perturb->add_option("--preset", preset_name);
  auto* opt_select = perturb->add_option("--select", select_expr);
  opt_preset->excludes(opt_select);
  perturb->add_option("--layers", layers,
                      "encoder layer count for layer-zone presets");
  perturb->add_option("--dist", dist)->check(CLI::IsMember({"uniform", "gaussian"}));
  perturb->add_option("--report", report);

  auto* eval = app.add_subcommand("eval", "evaluation metrics");
  eval->require_subcommand(1);
  auto* jnere = eval->add_subcommand("jnere", "adjusted F1 for relations");
  std::string pred, gold;
  jnere->add_option("--pred", pred)->required();
  jnere->add_option("--gold", gold)->required();
  auto* rouge = eval->add_subcommand("rouge", "ROUGE scores over text dirs");
  std::string cand_dir, ref_dir;
  rouge->add_option("--cand", cand_dir)->required();
  rouge->add_option("--ref", ref_dir)->required();

  auto* sweep = app.add_subcommand("sweep", "run an experiment grid");
  std::string config_path;
  sweep->add_option("--config", config_path)->required();

  auto* inspect = app.add_subcommand("inspect", "list checkpoint tensors");
  std::string ckpt;
  inspect->add_option("--ckpt", ckpt)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (perturb->parsed()) {
      if (preset_name.empty() && select_expr.empty())
        throw ConfigError("perturb needs --preset or --select");
      return cmd_perturb(in, out, lambda, seed, preset_name, select_expr,
                         layers, dist, report);
    }
    if (jnere->parsed()) return cmd_eval_jnere(pred, gold);
    if (rouge->parsed()) return cmd_eval_rouge(cand_dir, ref_dir);
    if (sweep->parsed()) return cmd_sweep(config_path);
    if (inspect->parsed()) return cmd_inspect(ckpt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
