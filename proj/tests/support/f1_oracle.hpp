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

#ifndef PERTURBKIT_TESTS_SUPPORT_F1_ORACLE_HPP_
#define PERTURBKIT_TESTS_SUPPORT_F1_ORACLE_HPP_

#include <string>
#include <vector>

#include "perturbkit/noise.hpp"
#include "perturbkit/relation_metrics.hpp"

namespace pk_test {

// Brute-force adjusted-F1 scorer written independently of the library
// implementation: scans remaining label-compatible pairs for the largest tp
// each round and tallies counts from first principles.
inline double oracle_adjusted_f1(
    const std::vector<perturbkit::RelationInstance>& preds,
    const std::vector<perturbkit::RelationInstance>& gts) {
  using perturbkit::RelationInstance;
  if (preds.empty() && gts.empty()) return 1.0;
  auto inter = [](const std::set<int>& a, const std::set<int>& b) {
    int n = 0;
    for (int x : a) n += b.count(x) ? 1 : 0;
    return double(n);
  };
  auto tp_of = [&](const RelationInstance& p, const RelationInstance& g) {
    return 0.5 * (inter(p.head.token_ids, g.head.token_ids) /
                      double(g.head.token_ids.size()) +
                  inter(p.tail.token_ids, g.tail.token_ids) /
                      double(g.tail.token_ids.size()));
  };
  std::vector<bool> p_used(preds.size(), false), g_used(gts.size(), false);
  double TP = 0, FN = 0, FP = 0;
  for (;;) {
    double best_tp = -1;
    std::size_t best_p = 0, best_g = 0;
    for (std::size_t p = 0; p < preds.size(); ++p) {
      if (p_used[p]) continue;
      for (std::size_t g = 0; g < gts.size(); ++g) {
        if (g_used[g]) continue;
        if (preds[p].label != gts[g].label ||
            preds[p].head.label != gts[g].head.label ||
            preds[p].tail.label != gts[g].tail.label)
          continue;
        const double tp = tp_of(preds[p], gts[g]);
        if (tp > best_tp) {
          best_tp = tp;
          best_p = p;
          best_g = g;
        }
      }
    }
    if (best_tp < 0) break;
    p_used[best_p] = true;
    g_used[best_g] = true;
    const RelationInstance& p = preds[best_p];
    const RelationInstance& g = gts[best_g];
    TP += best_tp;
    FN += 1.0 - best_tp;
    FP += 0.5 * ((double(p.head.token_ids.size()) -
                  inter(p.head.token_ids, g.head.token_ids)) /
                     double(p.head.token_ids.size()) +
                 (double(p.tail.token_ids.size()) -
                  inter(p.tail.token_ids, g.tail.token_ids)) /
                     double(p.tail.token_ids.size()));
  }
  for (std::size_t p = 0; p < preds.size(); ++p)
    if (!p_used[p]) FP += 1.0;
  for (std::size_t g = 0; g < gts.size(); ++g)
    if (!g_used[g]) FN += 1.0;
  const double denom = 2 * TP + FP + FN;
  return denom == 0 ? 0.0 : 2 * TP / denom;
}

// Random relation lists for property tests.
inline std::vector<perturbkit::RelationInstance> random_relations(
    perturbkit::CounterRng& rng, std::size_t max_relations) {
  using perturbkit::EntitySpan;
  using perturbkit::RelationInstance;
  auto rand_int = [&rng](int lo, int hi) {
    return lo + int(rng.next_unit() * (hi - lo + 1));
  };
  const std::vector<std::string> rel_labels = {"kpi-cy", "kpi-py"};
  const std::vector<std::string> ent_labels = {"kpi", "cy", "py"};
  std::vector<RelationInstance> out;
  const int n = rand_int(0, int(max_relations));
  for (int i = 0; i < n; ++i) {
    RelationInstance r;
    r.label = rel_labels[rand_int(0, 1)];
    auto make_span = [&](int base) {
      EntitySpan s;
      s.label = ent_labels[rand_int(0, 2)];
      const int len = rand_int(1, 4);
      const int start = base + rand_int(0, 5);
      for (int k = 0; k < len; ++k) s.token_ids.insert(start + k);
      return s;
    };
    r.head = make_span(0);
    r.tail = make_span(12);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace pk_test

#endif  // PERTURBKIT_TESTS_SUPPORT_F1_ORACLE_HPP_
