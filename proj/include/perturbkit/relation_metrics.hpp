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

#ifndef PERTURBKIT_RELATION_METRICS_HPP_
#define PERTURBKIT_RELATION_METRICS_HPP_

#include <set>
#include <string>
#include <vector>

namespace perturbkit {

struct EntitySpan {
  std::set<int> token_ids;
  std::string label;

  bool operator==(const EntitySpan&) const = default;
};

struct RelationInstance {
  EntitySpan head;
  EntitySpan tail;
  std::string label;

  bool operator==(const RelationInstance&) const = default;
};

// Fractional true/false positive credit for one matched (pred, gold) pair.
// tp + fn == 1 by construction.
struct RelationScore {
  double tp = 0.0;
  double fn = 0.0;
  double fp = 0.0;
};

// |pred tokens ∩ gt tokens|
int overlap(const EntitySpan& pred, const EntitySpan& gt);

// Partial-credit scoring of a prediction against one gold relation:
//   tp = (o_head/n_head_gt + o_tail/n_tail_gt) / 2
//   fn = 1 - tp
//   fp = ((n_head_pred - o_head)/n_head_pred
//         + (n_tail_pred - o_tail)/n_tail_pred) / 2
RelationScore score_relation(const RelationInstance& pred,
                             const RelationInstance& gt);

// Micro-aggregated partial-credit F1 over a prediction and gold list.
//
// Matching policy: a prediction may pair with a gold relation only when the
// relation label and both entity labels agree. Candidate pairs are matched
// greedily in descending tp, ties broken by (pred index, gold index); each
// side matches at most once. Unmatched predictions count fp = 1, unmatched
// gold relations fn = 1. Both lists empty scores 1.
double adjusted_f1(const std::vector<RelationInstance>& preds,
                   const std::vector<RelationInstance>& gts);

}  // namespace perturbkit

#endif  // PERTURBKIT_RELATION_METRICS_HPP_
