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

#include "perturbkit/selector.hpp"

#include <algorithm>
#include <cctype>

#include "perturbkit/errors.hpp"

namespace perturbkit {

SelectorPtr make_selector(SelectorExpr::Node node) {
  return std::make_shared<const SelectorExpr>(std::move(node));
}

bool anchored_glob_match(const std::string& pattern, const std::string& text) {
  // Iterative star-backtracking; '*' crosses dot boundaries.
  std::size_t p = 0, t = 0;
  std::size_t star_p = std::string::npos, star_t = 0;
  while (t < text.size()) {
    if (p < pattern.size() &&
        (pattern[p] == '?' || pattern[p] == text[t])) {
      ++p, ++t;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star_p = p++;
      star_t = t;
    } else if (star_p != std::string::npos) {
      p = star_p + 1;
      t = ++star_t;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

namespace {

struct Token {
  enum Type { kIdent, kGlob, kInt, kColon, kDotDot, kLParen, kRParen, kEnd };
  Type type;
  std::string text;
  std::size_t offset;
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

class Parser {
 public:
  explicit Parser(const std::string& text) : text_(text) {}

  SelectorPtr parse() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError(pos_, "expression");
    auto e = parse_expr();
    skip_ws();
    if (pos_ < text_.size()) throw ParseError(pos_, "end of input");
    return e;
  }

 private:
  SelectorPtr parse_expr() {
    auto lhs = parse_term();
    while (peek_keyword("or")) {
      consume_keyword("or");
      auto rhs = parse_term();
      lhs = make_selector(SelectorExpr::Or{lhs, rhs});
    }
    return lhs;
  }

  SelectorPtr parse_term() {
    auto lhs = parse_factor();
    while (peek_keyword("and")) {
      consume_keyword("and");
      auto rhs = parse_factor();
      lhs = make_selector(SelectorExpr::And{lhs, rhs});
    }
    return lhs;
  }

  SelectorPtr parse_factor() {
    skip_ws();
    if (peek_keyword("not")) {
      consume_keyword("not");
      return make_selector(SelectorExpr::Not{parse_factor()});
    }
    if (pos_ < text_.size() && text_[pos_] == '(') {
      ++pos_;
      auto e = parse_expr();
      skip_ws();
      if (pos_ >= text_.size() || text_[pos_] != ')')
        throw ParseError(pos_, "')'");
      ++pos_;
      return e;
    }
    return parse_atom();
  }

  SelectorPtr parse_atom() {
    skip_ws();
    const std::size_t start = pos_;
    std::string word = read_word();
    std::string key = lower(word);
    if (key == "all") return make_selector(SelectorExpr::All{});
    if (key == "none") return make_selector(SelectorExpr::None{});
    if (key == "kind" || key == "name" || key == "zone" || key == "layer") {
      if (pos_ >= text_.size() || text_[pos_] != ':')
        throw ParseError(pos_, "':' after '" + key + "'");
      ++pos_;
      if (key == "kind") return parse_kind_atom();
      if (key == "zone") return parse_zone_atom();
      if (key == "name") return parse_glob_atom();
      return parse_layer_atom();
    }
    throw ParseError(start,
                     "atom ('kind:', 'name:', 'zone:', 'layer:', 'all', "
                     "'none', 'not', or '(')");
  }

  SelectorPtr parse_kind_atom() {
    const std::size_t start = pos_;
    std::string word = lower(read_word());
    if (word == "weight" || word == "weights")
      return make_selector(SelectorExpr::KindIs{TensorKind::kWeight});
    if (word == "bias")
      return make_selector(SelectorExpr::KindIs{TensorKind::kBias});
    if (word == "ln_gain")
      return make_selector(SelectorExpr::KindIs{TensorKind::kLayerNormGain});
    if (word == "ln_bias")
      return make_selector(SelectorExpr::KindIs{TensorKind::kLayerNormBias});
    if (word == "embedding")
      return make_selector(SelectorExpr::KindIs{TensorKind::kEmbedding});
    if (word == "other")
      return make_selector(SelectorExpr::KindIs{TensorKind::kOther});
    throw ParseError(start,
                     "tensor kind (weight, bias, ln_gain, ln_bias, "
                     "embedding, other)");
  }

  SelectorPtr parse_zone_atom() {
    const std::size_t start = pos_;
    std::string word = lower(read_word());
    if (word == "encoder")
      return make_selector(SelectorExpr::ZoneIs{ZoneComponent::kEncoder});
    if (word == "decoder")
      return make_selector(SelectorExpr::ZoneIs{ZoneComponent::kDecoder});
    if (word == "head")
      return make_selector(SelectorExpr::ZoneIs{ZoneComponent::kHead});
    if (word == "none")
      return make_selector(SelectorExpr::ZoneIs{ZoneComponent::kNone});
    throw ParseError(start, "zone (encoder, decoder, head, none)");
  }

  SelectorPtr parse_glob_atom() {
    // Glob runs until whitespace or a grouping character.
    const std::size_t start = pos_;
    std::string pat;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')')
        break;
      pat += c;
      ++pos_;
    }
    if (pat.empty()) throw ParseError(start, "glob pattern");
    return make_selector(SelectorExpr::NameGlob{std::move(pat)});
  }

  SelectorPtr parse_layer_atom() {
    std::int32_t lo = read_int();
    if (pos_ + 1 >= text_.size() || text_[pos_] != '.' ||
        text_[pos_ + 1] != '.')
      throw ParseError(pos_, "'..'");
    pos_ += 2;
    std::int32_t hi = read_int();
    if (lo < 0 || lo >= hi)
      throw ParseError(pos_, "layer range with lo < hi, lo >= 0");
    return make_selector(SelectorExpr::LayerIn{lo, hi});
  }

  std::string read_word() {
    const std::size_t start = pos_;
    std::string w;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
            text_[pos_] == '_')) {
      w += text_[pos_];
      ++pos_;
    }
    if (w.empty()) throw ParseError(start, "identifier");
    return w;
  }

  std::int32_t read_int() {
    const std::size_t start = pos_;
    std::string digits;
    while (pos_ < text_.size() &&
           std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      digits += text_[pos_];
      ++pos_;
    }
    if (digits.empty()) throw ParseError(start, "integer");
    return static_cast<std::int32_t>(std::stol(digits));
  }

  bool peek_keyword(const std::string& kw) {
    skip_ws();
    if (pos_ + kw.size() > text_.size()) return false;
    if (lower(text_.substr(pos_, kw.size())) != kw) return false;
    const std::size_t after = pos_ + kw.size();
    if (after < text_.size() &&
        (std::isalnum(static_cast<unsigned char>(text_[after])) ||
         text_[after] == '_' || text_[after] == ':'))
      return false;
    return true;
  }

  void consume_keyword(const std::string& kw) { pos_ += kw.size(); }

  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

std::string kind_keyword(TensorKind k) {
  switch (k) {
    case TensorKind::kWeight: return "weight";
    case TensorKind::kBias: return "bias";
    case TensorKind::kLayerNormGain: return "ln_gain";
    case TensorKind::kLayerNormBias: return "ln_bias";
    case TensorKind::kEmbedding: return "embedding";
    case TensorKind::kOther: return "other";
  }
  return "?";
}

}  // namespace

SelectorPtr parse_selector(const std::string& text) {
  if (text.empty()) throw ParseError(0, "non-empty selector");
  return Parser(text).parse();
}

std::string print_selector(const SelectorExpr& expr) {
  struct Printer {
    std::string operator()(const SelectorExpr::All&) const { return "all"; }
    std::string operator()(const SelectorExpr::None&) const { return "none"; }
    std::string operator()(const SelectorExpr::KindIs& k) const {
      return "kind:" + kind_keyword(k.kind);
    }
    std::string operator()(const SelectorExpr::NameGlob& g) const {
      return "name:" + g.pattern;
    }
    std::string operator()(const SelectorExpr::ZoneIs& z) const {
      return std::string("zone:") + zone_name(z.component);
    }
    std::string operator()(const SelectorExpr::LayerIn& l) const {
      return "layer:" + std::to_string(l.lo) + ".." + std::to_string(l.hi);
    }
    std::string operator()(const SelectorExpr::And& a) const {
      return "(" + print_selector(*a.lhs) + " and " + print_selector(*a.rhs) +
             ")";
    }
    std::string operator()(const SelectorExpr::Or& o) const {
      return "(" + print_selector(*o.lhs) + " or " + print_selector(*o.rhs) +
             ")";
    }
    std::string operator()(const SelectorExpr::Not& n) const {
      return "not " + print_selector(*n.inner);
    }
  };
  return std::visit(Printer{}, expr.node());
}

bool matches(const SelectorExpr& expr, const TensorRecord& rec) {
  struct Eval {
    const TensorRecord& rec;
    bool operator()(const SelectorExpr::All&) const { return true; }
    bool operator()(const SelectorExpr::None&) const { return false; }
    bool operator()(const SelectorExpr::KindIs& k) const {
      return rec.kind == k.kind;
    }
    bool operator()(const SelectorExpr::NameGlob& g) const {
      return anchored_glob_match(g.pattern, rec.name);
    }
    bool operator()(const SelectorExpr::ZoneIs& z) const {
      return rec.zone.component == z.component;
    }
    bool operator()(const SelectorExpr::LayerIn& l) const {
      return rec.zone.layer_index && *rec.zone.layer_index >= l.lo &&
             *rec.zone.layer_index < l.hi;
    }
    bool operator()(const SelectorExpr::And& a) const {
      return matches(*a.lhs, rec) && matches(*a.rhs, rec);
    }
    bool operator()(const SelectorExpr::Or& o) const {
      return matches(*o.lhs, rec) || matches(*o.rhs, rec);
    }
    bool operator()(const SelectorExpr::Not& n) const {
      return !matches(*n.inner, rec);
    }
  };
  return std::visit(Eval{rec}, expr.node());
}

SelectorPtr preset(const std::string& name, std::int32_t total_layers) {
  const std::string key = lower(name);
  if (key == "all") return make_selector(SelectorExpr::All{});
  if (key == "none") return make_selector(SelectorExpr::None{});
  if (key == "bias")
    return make_selector(SelectorExpr::KindIs{TensorKind::kBias});
  if (key == "weights")
    return make_selector(SelectorExpr::KindIs{TensorKind::kWeight});
  if (key == "add_norm")
    return make_selector(SelectorExpr::Or{
        make_selector(SelectorExpr::KindIs{TensorKind::kLayerNormGain}),
        make_selector(SelectorExpr::KindIs{TensorKind::kLayerNormBias})});
  if (key == "encoder")
    return make_selector(SelectorExpr::ZoneIs{ZoneComponent::kEncoder});
  if (key == "decoder")
    return make_selector(SelectorExpr::ZoneIs{ZoneComponent::kDecoder});
  if (key == "layer_zone_low" || key == "layer_zone_high") {
    if (total_layers < 1)
      throw UnknownPresetError(name + " (requires total layer count)");
    const std::int32_t mid = total_layers / 2;
    if (key == "layer_zone_low") {
      if (mid < 1) throw UnknownPresetError(name + " (empty low zone)");
      return make_selector(SelectorExpr::LayerIn{0, mid});
    }
    return make_selector(SelectorExpr::LayerIn{mid, total_layers});
  }
  throw UnknownPresetError(name);
}

}  // namespace perturbkit
