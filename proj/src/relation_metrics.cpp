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

#include "perturbkit/relation_metrics.hpp"

#include <algorithm>

namespace perturbkit {

int overlap(const EntitySpan& pred, const EntitySpan& gt) {
  int n = 0;
  for (int t : pred.token_ids)
    if (gt.token_ids.count(t)) ++n;
  return n;
}

RelationScore score_relation(const RelationInstance& pred,
                             const RelationInstance& gt) {
  const double o_head = overlap(pred.head, gt.head);
  const double o_tail = overlap(pred.tail, gt.tail);
  const double n_head_gt = static_cast<double>(gt.head.token_ids.size());
  const double n_tail_gt = static_cast<double>(gt.tail.token_ids.size());
  const double n_head_pred = static_cast<double>(pred.head.token_ids.size());
  const double n_tail_pred = static_cast<double>(pred.tail.token_ids.size());
  RelationScore s;
  s.tp = 0.5 * (o_head / n_head_gt + o_tail / n_tail_gt);
  s.fn = 1.0 - s.tp;
  s.fp = 0.5 * ((n_head_pred - o_head) / n_head_pred +
                (n_tail_pred - o_tail) / n_tail_pred);
  return s;
}

namespace {

bool labels_compatible(const RelationInstance& pred,
                       const RelationInstance& gt) {
  return pred.label == gt.label && pred.head.label == gt.head.label &&
         pred.tail.label == gt.tail.label;
}

struct Candidate {
  std::size_t pred_idx;
  std::size_t gold_idx;
  RelationScore score;
};

}  // namespace

double adjusted_f1(const std::vector<RelationInstance>& preds,
                   const std::vector<RelationInstance>& gts) {
  if (preds.empty() && gts.empty()) return 1.0;

  std::vector<Candidate> candidates;
  for (std::size_t p = 0; p < preds.size(); ++p)
    for (std::size_t g = 0; g < gts.size(); ++g)
      if (labels_compatible(preds[p], gts[g]))
        candidates.push_back({p, g, score_relation(preds[p], gts[g])});

  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) {
                     if (a.score.tp != b.score.tp) return a.score.tp > b.score.tp;
                     if (a.pred_idx != b.pred_idx) return a.pred_idx < b.pred_idx;
                     return a.gold_idx < b.gold_idx;
                   });

  std::vector<bool> pred_used(preds.size(), false);
  std::vector<bool> gold_used(gts.size(), false);
  double tp = 0.0, fn = 0.0, fp = 0.0;
  for (const Candidate& c : candidates) {
    if (pred_used[c.pred_idx] || gold_used[c.gold_idx]) continue;
    pred_used[c.pred_idx] = true;
    gold_used[c.gold_idx] = true;
    tp += c.score.tp;
    fn += c.score.fn;
    fp += c.score.fp;
  }
  for (std::size_t p = 0; p < preds.size(); ++p)
    if (!pred_used[p]) fp += 1.0;
  for (std::size_t g = 0; g < gts.size(); ++g)
    if (!gold_used[g]) fn += 1.0;

  const double denom = 2.0 * tp + fp + fn;
  if (denom == 0.0) return 0.0;
  return 2.0 * tp / denom;
}

}  // namespace perturbkit
