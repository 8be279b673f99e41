#include "sacl/encoder.hpp"

#include "sacl/seed.hpp"
#include "sacl/text.hpp"

#include <algorithm>

namespace sacl {

TokenSequence pad_to(TokenSequence seq, int length) {
  while (seq.length() < length) {
    seq.ids.push_back(kPadId);
    seq.mask.push_back(0);
    seq.segment.push_back(seq.segment.empty() ? 0 : seq.segment.back());
  }
  return seq;
}

HashingTokenizer::HashingTokenizer(int vocab_size) : vocab_size_(vocab_size) {
  if (vocab_size <= kFirstWordId) throw Error("vocabulary size must exceed the special ids");
}

std::int32_t HashingTokenizer::word_id(std::string_view word) const {
  const auto buckets = static_cast<std::uint64_t>(vocab_size_ - kFirstWordId);
  return kFirstWordId + static_cast<std::int32_t>(fnv1a64(word) % buckets);
}

TokenSequence HashingTokenizer::tokenize(const ComposedInput& input, int max_len) const {
  if (max_len < 4) throw Error("tokenize: max_len must be >= 4");
  auto prefix_words = input.has_prefix() ? text::segment(input.segments.front()) : std::vector<std::string>{};
  auto text_words = text::segment(input.text());

  int budget = max_len - 3;
  if (static_cast<int>(prefix_words.size()) > budget) prefix_words.resize(budget);
  budget -= static_cast<int>(prefix_words.size());
  if (static_cast<int>(text_words.size()) > budget) text_words.resize(budget);

  TokenSequence seq;
  auto push = [&](std::int32_t id, std::uint8_t seg) {
    seq.ids.push_back(id);
    seq.mask.push_back(1);
    seq.segment.push_back(seg);
  };
  push(kBeginId, 0);
  for (const auto& w : prefix_words) push(word_id(w), 0);
  push(kSepId, 0);
  for (const auto& w : text_words) push(word_id(w), 1);
  push(kSepId, 1);
  return seq;
}

EncoderOutput Encoder::encode_from_embeddings(const Matrix& embeddings,
                                              std::span<const std::uint8_t> mask) const {
  return {forward(embeddings, mask, ForwardOptions{}).pooled};
}

EncoderOutput Encoder::encode(const TokenSequence& tokens) const {
  return encode_from_embeddings(embed(tokens), tokens.mask);
}

}  // namespace sacl
