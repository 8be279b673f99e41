#pragma once

#include "sacl/data.hpp"

#include <string>
#include <unordered_map>
#include <vector>

namespace sacl {

inline constexpr int kDefaultPrefixTokens = 64;

struct LexiconMatch {
  std::string phrase;  // normalized: lowercased segment tokens joined by ' '
  Polarity polarity = Polarity::positive;

  bool operator==(const LexiconMatch&) const = default;
};

/// Compiled lexicon for repeated matching.
///
/// Matching is case-insensitive and happens on token boundaries (see
/// text::segment). Among all spans that equal a lexicon phrase, longer spans
/// are taken first (earlier start wins between equal lengths); a span that
/// overlaps an already-taken span is dropped. Results come back in text order.
class LexiconMatcher {
 public:
  explicit LexiconMatcher(const Lexicon& lexicon);

  std::vector<LexiconMatch> match(std::string_view text) const;
  bool empty() const { return phrases_.empty(); }

 private:
  std::unordered_map<std::string, Polarity> phrases_;
  std::size_t max_len_ = 0;
};

std::vector<LexiconMatch> match_lexicon(std::string_view text, const Lexicon& lexicon);

/// Matched phrases grouped by polarity: positive group first, then negative.
/// Phrases inside a group are unique and keep text order.
struct PrefixSpec {
  struct Group {
    Polarity polarity = Polarity::positive;
    std::vector<std::string> phrases;
  };
  std::vector<Group> groups;
  int max_prefix_tokens = kDefaultPrefixTokens;

  /// `positive: p1, p2 | negative: n1`; empty when there are no groups.
  std::string render() const;
};

/// Number of segment tokens in a rendered prefix.
int prefix_token_count(std::string_view rendered);

/// Drops phrases from the tail (last group first) until the rendered prefix
/// fits the budget. Groups left empty are removed.
PrefixSpec truncate_to_budget(PrefixSpec spec);

PrefixSpec build_prefix(const std::vector<LexiconMatch>& matches,
                        int max_prefix_tokens = kDefaultPrefixTokens);

/// Encoder input before special markers: one segment (text) or two
/// (prefix, text).
struct ComposedInput {
  std::vector<std::string> segments;

  bool has_prefix() const { return segments.size() == 2; }
  const std::string& text() const { return segments.back(); }
  bool operator==(const ComposedInput&) const = default;
};

ComposedInput compose_input(std::string_view rendered_prefix, std::string_view text);
ComposedInput compose_input(const PrefixSpec& prefix, std::string_view text);

/// Full prefix pipeline for one text; a null matcher means "no lexicon".
ComposedInput compose_with_lexicon(std::string_view text, const LexiconMatcher* matcher,
                                   int max_prefix_tokens = kDefaultPrefixTokens);

}  // namespace sacl
