#include "sacl/lexicon_prefix.hpp"

#include "sacl/text.hpp"

#include <algorithm>

namespace sacl {

LexiconMatcher::LexiconMatcher(const Lexicon& lexicon) {
  for (const auto& entry : lexicon.entries) {
    const auto tokens = text::segment(entry.phrase);
    if (tokens.empty()) continue;
    phrases_.emplace(text::join(tokens, " "), entry.polarity);
    max_len_ = std::max(max_len_, tokens.size());
  }
}

std::vector<LexiconMatch> LexiconMatcher::match(std::string_view input) const {
  if (phrases_.empty()) return {};
  const auto tokens = text::segment(input);
  const std::size_t n = tokens.size();
  std::vector<bool> covered(n, false);
  struct Hit {
    std::size_t start;
    LexiconMatch match;
  };
  std::vector<Hit> hits;
  for (std::size_t len = std::min(max_len_, n); len >= 1; --len) {
    for (std::size_t start = 0; start + len <= n; ++start) {
      if (std::any_of(covered.begin() + start, covered.begin() + start + len,
                      [](bool c) { return c; })) {
        continue;
      }
      std::string key = tokens[start];
      for (std::size_t j = start + 1; j < start + len; ++j) key += " " + tokens[j];
      const auto it = phrases_.find(key);
      if (it == phrases_.end()) continue;
      std::fill(covered.begin() + start, covered.begin() + start + len, true);
      hits.push_back({start, {std::move(key), it->second}});
    }
  }
  std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.start < b.start; });
  std::vector<LexiconMatch> out;
  out.reserve(hits.size());
  for (auto& h : hits) out.push_back(std::move(h.match));
  return out;
}

std::vector<LexiconMatch> match_lexicon(std::string_view text, const Lexicon& lexicon) {
  return LexiconMatcher(lexicon).match(text);
}

// ---------------------------------------------------------------------------
// Prefix rendering
// ---------------------------------------------------------------------------

std::string PrefixSpec::render() const {
  std::string out;
  for (const auto& g : groups) {
    if (g.phrases.empty()) continue;
    if (!out.empty()) out += " | ";
    out += std::string(to_string(g.polarity)) + ": " + text::join(g.phrases, ", ");
  }
  return out;
}

int prefix_token_count(std::string_view rendered) {
  return static_cast<int>(text::segment(rendered).size());
}

PrefixSpec truncate_to_budget(PrefixSpec spec) {
  auto drop_empty = [&] {
    std::erase_if(spec.groups, [](const PrefixSpec::Group& g) { return g.phrases.empty(); });
  };
  drop_empty();
  while (!spec.groups.empty() && prefix_token_count(spec.render()) > spec.max_prefix_tokens) {
    spec.groups.back().phrases.pop_back();
    drop_empty();
  }
  return spec;
}

PrefixSpec build_prefix(const std::vector<LexiconMatch>& matches, int max_prefix_tokens) {
  PrefixSpec spec;
  spec.max_prefix_tokens = max_prefix_tokens;
  for (auto pol : {Polarity::positive, Polarity::negative}) {
    PrefixSpec::Group group{pol, {}};
    for (const auto& m : matches) {
      if (m.polarity != pol) continue;
      if (std::find(group.phrases.begin(), group.phrases.end(), m.phrase) == group.phrases.end()) {
        group.phrases.push_back(m.phrase);
      }
    }
    if (!group.phrases.empty()) spec.groups.push_back(std::move(group));
  }
  return truncate_to_budget(std::move(spec));
}

ComposedInput compose_input(std::string_view rendered_prefix, std::string_view text) {
  if (rendered_prefix.empty()) return {{std::string(text)}};
  return {{std::string(rendered_prefix), std::string(text)}};
}

ComposedInput compose_input(const PrefixSpec& prefix, std::string_view text) {
  return compose_input(truncate_to_budget(prefix).render(), text);
}

ComposedInput compose_with_lexicon(std::string_view text, const LexiconMatcher* matcher,
                                   int max_prefix_tokens) {
  if (matcher == nullptr) return compose_input(std::string_view{}, text);
  return compose_input(build_prefix(matcher->match(text), max_prefix_tokens), text);
}

}  // namespace sacl
