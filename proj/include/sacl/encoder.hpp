#pragma once

#include "sacl/lexicon_prefix.hpp"
#include "sacl/parameters.hpp"

#include <json.hpp>

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sacl {

inline constexpr int kMaxTokens = 250;

// ---------------------------------------------------------------------------
// Token sequences
// ---------------------------------------------------------------------------

inline constexpr std::int32_t kPadId = 0;
inline constexpr std::int32_t kBeginId = 1;
inline constexpr std::int32_t kSepId = 2;
inline constexpr std::int32_t kFirstWordId = 3;

struct TokenSequence {
  std::vector<std::int32_t> ids;
  std::vector<std::uint8_t> mask;     // 1 on real tokens, 0 on padding
  std::vector<std::uint8_t> segment;  // 0 for begin/prefix/first separator, 1 for text

  int length() const { return static_cast<int>(ids.size()); }
  bool operator==(const TokenSequence&) const = default;
};

/// Appends padding positions (mask 0) up to `length`.
TokenSequence pad_to(TokenSequence seq, int length);

/// Deterministic hashing tokenizer: text::segment words, each mapped to
/// kFirstWordId + fnv1a64(word) % (vocab_size - kFirstWordId).
///
/// Layout: [begin] prefix [sep] text [sep]; without a prefix the first
/// segment is empty, so "ab cd" becomes [begin] [sep] ab cd [sep]. When over
/// `max_len` the text tail is cut first; markers are never dropped.
class HashingTokenizer {
 public:
  explicit HashingTokenizer(int vocab_size);

  TokenSequence tokenize(const ComposedInput& input, int max_len) const;
  std::int32_t word_id(std::string_view word) const;
  int vocab_size() const { return vocab_size_; }

 private:
  int vocab_size_;
};

// ---------------------------------------------------------------------------
// Encoder contract
// ---------------------------------------------------------------------------

struct EncoderOutput {
  Vector pooled;
};

struct ForwardOptions {
  bool train = false;
  double dropout = 0.0;
  std::uint64_t dropout_seed = 0;
};

/// Opaque per-sample activations kept for the backward pass.
class ForwardTrace {
 public:
  virtual ~ForwardTrace() = default;
};

struct ForwardResult {
  Vector pooled;
  std::unique_ptr<ForwardTrace> trace;
};

/// What the training loop needs from an encoder. Any pretrained model can be
/// attached by implementing this interface; the library ships CompactEncoder.
///
/// Contract: encode(t) == encode_from_embeddings(embed(t), t.mask) exactly.
/// Evaluation-mode calls are const and reentrant; backward and
/// accumulate_embedding_grad write into parameter gradients (single writer).
class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual std::string kind() const = 0;
  virtual nlohmann::json config_json() const = 0;
  virtual int hidden_size() const = 0;

  virtual TokenSequence tokenize(const ComposedInput& input, int max_len) const = 0;

  /// Token lookup only (positions are added inside the encoder). Throws on
  /// out-of-range ids.
  virtual Matrix embed(const TokenSequence& tokens) const = 0;

  virtual ForwardResult forward(const Matrix& embeddings, std::span<const std::uint8_t> mask,
                                const ForwardOptions& options) const = 0;

  /// Accumulates parameter gradients given dL/d(pooled) and returns dL/d(embeddings).
  virtual Matrix backward(const ForwardTrace& trace, const Vector& grad_pooled) = 0;

  /// Scatters dL/d(embeddings) into the embedding table gradient.
  virtual void accumulate_embedding_grad(const TokenSequence& tokens, const Matrix& grad_embeddings) = 0;

  virtual ParameterRefs parameters() = 0;

  virtual std::unique_ptr<Encoder> clone() const = 0;

  EncoderOutput encode_from_embeddings(const Matrix& embeddings,
                                       std::span<const std::uint8_t> mask) const;
  EncoderOutput encode(const TokenSequence& tokens) const;
};

// ---------------------------------------------------------------------------
// Compact reference encoder
// ---------------------------------------------------------------------------

struct CompactEncoderConfig {
  int vocab_size = 32768;
  int hidden_size = 64;
  int num_layers = 2;
  int num_heads = 4;
  int ffn_size = 128;
  int max_positions = 256;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static CompactEncoderConfig from_json(const nlohmann::json& j);
};

/// Small pre-LayerNorm transformer: token embedding + sinusoidal positions,
/// `num_layers` self-attention blocks (GELU feed-forward), final LayerNorm,
/// pooled output taken at the begin-marker position.
///
/// The last block only computes the begin-marker row for queries and the
/// feed-forward, since no other row reaches the pooled output.
class CompactEncoder final : public Encoder {
 public:
  explicit CompactEncoder(const CompactEncoderConfig& config);

  std::string kind() const override { return "compact"; }
  nlohmann::json config_json() const override { return config_.to_json(); }
  int hidden_size() const override { return config_.hidden_size; }
  const CompactEncoderConfig& config() const { return config_; }

  TokenSequence tokenize(const ComposedInput& input, int max_len) const override;
  Matrix embed(const TokenSequence& tokens) const override;
  ForwardResult forward(const Matrix& embeddings, std::span<const std::uint8_t> mask,
                        const ForwardOptions& options) const override;
  Matrix backward(const ForwardTrace& trace, const Vector& grad_pooled) override;
  void accumulate_embedding_grad(const TokenSequence& tokens, const Matrix& grad_embeddings) override;
  ParameterRefs parameters() override;
  std::unique_ptr<Encoder> clone() const override;

 private:
  struct Layer {
    Parameter ln1_gain, ln1_bias;
    Parameter wq, bq, wk, bk, wv, bv, wo, bo;
    Parameter ln2_gain, ln2_bias;
    Parameter w1, b1, w2, b2;
  };

  CompactEncoderConfig config_;
  HashingTokenizer tokenizer_;
  Matrix positions_;
  Parameter token_embedding_;
  std::vector<Layer> layers_;
  Parameter final_gain_, final_bias_;
};

/// Builds an encoder from its kind/config pair (checkpoint loading).
std::unique_ptr<Encoder> make_encoder(const std::string& kind, const nlohmann::json& config);

}  // namespace sacl
