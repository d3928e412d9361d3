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

#include "perturbkit/rouge.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

namespace perturbkit {

namespace {

PrecisionRecallF1 prf(double matches, double cand_total, double ref_total) {
  PrecisionRecallF1 out;
  if (cand_total > 0.0) out.precision = matches / cand_total;
  if (ref_total > 0.0) out.recall = matches / ref_total;
  if (out.precision + out.recall > 0.0)
    out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  return out;
}

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1
                                    : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// Positions in `ref` that take part in one LCS of (ref, cand).
std::set<std::size_t> lcs_ref_positions(const TokenSeq& ref,
                                        const TokenSeq& cand) {
  const std::size_t n = ref.size(), m = cand.size();
  std::vector<std::vector<std::size_t>> dp(n + 1,
                                           std::vector<std::size_t>(m + 1, 0));
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      dp[i][j] = ref[i - 1] == cand[j - 1]
                     ? dp[i - 1][j - 1] + 1
                     : std::max(dp[i - 1][j], dp[i][j - 1]);
  std::set<std::size_t> positions;
  std::size_t i = n, j = m;
  while (i > 0 && j > 0) {
    if (ref[i - 1] == cand[j - 1]) {
      positions.insert(i - 1);
      --i, --j;
    } else if (dp[i - 1][j] >= dp[i][j - 1]) {
      --i;
    } else {
      --j;
    }
  }
  return positions;
}

TokenSeq flatten(const std::vector<TokenSeq>& sentences) {
  TokenSeq out;
  for (const TokenSeq& s : sentences) out.insert(out.end(), s.begin(), s.end());
  return out;
}

}  // namespace

TokenSeq tokenize(const std::string& text) {
  TokenSeq tokens;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::vector<TokenSeq> tokenize_sentences(const std::string& text) {
  std::vector<TokenSeq> sentences;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    TokenSeq toks = tokenize(line);
    if (!toks.empty()) sentences.push_back(std::move(toks));
  }
  return sentences;
}

PrecisionRecallF1 rouge_n(const TokenSeq& candidate, const TokenSeq& reference,
                          int n) {
  const std::size_t un = static_cast<std::size_t>(n);
  if (candidate.size() < un || reference.size() < un)
    return PrecisionRecallF1{};
  auto ngram_counts = [un](const TokenSeq& seq) {
    std::map<std::vector<std::string>, int> counts;
    for (std::size_t i = 0; i + un <= seq.size(); ++i)
      ++counts[std::vector<std::string>(seq.begin() + i,
                                        seq.begin() + i + un)];
    return counts;
  };
  const auto cand = ngram_counts(candidate);
  const auto ref = ngram_counts(reference);
  double matches = 0.0;
  for (const auto& [gram, count] : cand) {
    auto it = ref.find(gram);
    if (it != ref.end()) matches += std::min(count, it->second);
  }
  return prf(matches, static_cast<double>(candidate.size() - un + 1),
             static_cast<double>(reference.size() - un + 1));
}

PrecisionRecallF1 rouge_l(const TokenSeq& candidate,
                          const TokenSeq& reference) {
  if (candidate.empty() || reference.empty()) return PrecisionRecallF1{};
  const double lcs = static_cast<double>(lcs_length(candidate, reference));
  return prf(lcs, static_cast<double>(candidate.size()),
             static_cast<double>(reference.size()));
}

double rouge_lsum(const std::vector<TokenSeq>& candidate_sentences,
                  const std::vector<TokenSeq>& reference_sentences) {
  const TokenSeq cand_flat = flatten(candidate_sentences);
  const TokenSeq ref_flat = flatten(reference_sentences);
  if (cand_flat.empty() || ref_flat.empty()) return 0.0;
  double union_hits = 0.0;
  for (const TokenSeq& ref_sent : reference_sentences) {
    std::set<std::size_t> hit;
    for (const TokenSeq& cand_sent : candidate_sentences) {
      const auto pos = lcs_ref_positions(ref_sent, cand_sent);
      hit.insert(pos.begin(), pos.end());
    }
    union_hits += static_cast<double>(hit.size());
  }
  return prf(union_hits, static_cast<double>(cand_flat.size()),
             static_cast<double>(ref_flat.size()))
      .f1;
}

RougeScores rouge_all(const std::vector<TokenSeq>& candidate_sentences,
                      const std::vector<TokenSeq>& reference_sentences) {
  const TokenSeq cand = flatten(candidate_sentences);
  const TokenSeq ref = flatten(reference_sentences);
  RougeScores s;
  s.rouge1_f1 = rouge_n(cand, ref, 1).f1;
  s.rouge2_f1 = rouge_n(cand, ref, 2).f1;
  s.rougeL_f1 = rouge_l(cand, ref).f1;
  s.rougeLsum_f1 = rouge_lsum(candidate_sentences, reference_sentences);
  return s;
}

double rouge_average(const std::string& candidate,
                     const std::string& reference) {
  return rouge_all(tokenize_sentences(candidate), tokenize_sentences(reference))
      .average();
}

}  // namespace perturbkit
