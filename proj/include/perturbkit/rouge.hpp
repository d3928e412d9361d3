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

#ifndef PERTURBKIT_ROUGE_HPP_
#define PERTURBKIT_ROUGE_HPP_

#include <string>
#include <vector>

namespace perturbkit {

struct PrecisionRecallF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

using TokenSeq = std::vector<std::string>;

// Lowercases and splits on runs of non-alphanumeric characters.
TokenSeq tokenize(const std::string& text);
// One sentence per line.
std::vector<TokenSeq> tokenize_sentences(const std::string& text);

// Clipped n-gram overlap with multiplicity. Either side without n-grams
// scores zero.
PrecisionRecallF1 rouge_n(const TokenSeq& candidate, const TokenSeq& reference,
                          int n);

// Longest-common-subsequence based.
PrecisionRecallF1 rouge_l(const TokenSeq& candidate, const TokenSeq& reference);

// Union-LCS of each reference sentence against the whole candidate,
// micro-aggregated.
double rouge_lsum(const std::vector<TokenSeq>& candidate_sentences,
                  const std::vector<TokenSeq>& reference_sentences);

struct RougeScores {
  double rouge1_f1 = 0.0;
  double rouge2_f1 = 0.0;
  double rougeL_f1 = 0.0;
  double rougeLsum_f1 = 0.0;

  double average() const {
    return (rouge1_f1 + rouge2_f1 + rougeL_f1 + rougeLsum_f1) / 4.0;
  }
};

RougeScores rouge_all(const std::vector<TokenSeq>& candidate_sentences,
                      const std::vector<TokenSeq>& reference_sentences);

// Mean of ROUGE-1/2/L/Lsum F1 on newline-segmented raw text.
double rouge_average(const std::string& candidate, const std::string& reference);

}  // namespace perturbkit

#endif  // PERTURBKIT_ROUGE_HPP_
