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

#ifndef PERTURBKIT_SELECTOR_HPP_
#define PERTURBKIT_SELECTOR_HPP_

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "perturbkit/param_store.hpp"

namespace perturbkit {

// Boolean predicate over TensorRecord metadata, the "which parameters get
// noise" half of a perturbation request.
//
// Grammar (case-insensitive keywords, whitespace-insensitive between tokens):
//   expr   := term ('or' term)*
//   term   := factor ('and' factor)*
//   factor := 'not' factor | '(' expr ')' | atom
//   atom   := 'kind:'IDENT | 'name:'GLOB | 'zone:'IDENT
//           | 'layer:'INT'..'INT | 'all' | 'none'
//
// Glob patterns are anchored; '*' matches any run including '.', '?' matches
// a single character.
class SelectorExpr;
using SelectorPtr = std::shared_ptr<const SelectorExpr>;

class SelectorExpr {
 public:
  struct All {};
  struct None {};
  struct KindIs { TensorKind kind; };
  struct NameGlob { std::string pattern; };
  struct ZoneIs { ZoneComponent component; };
  struct LayerIn { std::int32_t lo; std::int32_t hi; };  // [lo, hi)
  struct And { SelectorPtr lhs, rhs; };
  struct Or { SelectorPtr lhs, rhs; };
  struct Not { SelectorPtr inner; };

  using Node =
      std::variant<All, None, KindIs, NameGlob, ZoneIs, LayerIn, And, Or, Not>;

  explicit SelectorExpr(Node node) : node_(std::move(node)) {}
  const Node& node() const { return node_; }

 private:
  Node node_;
};

SelectorPtr make_selector(SelectorExpr::Node node);

// Throws ParseError with a byte offset and an expected-token description.
SelectorPtr parse_selector(const std::string& text);

// Canonical textual form; parse(print(e)) evaluates identically to e.
std::string print_selector(const SelectorExpr& expr);

// Pure predicate over record metadata; never looks at the data values.
bool matches(const SelectorExpr& expr, const TensorRecord& rec);

// Named presets: all, bias, weights, add_norm, layer_zone_low,
// layer_zone_high, encoder, decoder. `total_layers` is consulted only by the
// layer-zone presets, which split [0, L) at L/2.
SelectorPtr preset(const std::string& name, std::int32_t total_layers = 0);

bool anchored_glob_match(const std::string& pattern, const std::string& text);

}  // namespace perturbkit

#endif  // PERTURBKIT_SELECTOR_HPP_
