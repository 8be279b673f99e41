#pragma once

#include "sacl/encoder.hpp"
#include "sacl/objective.hpp"

#include <filesystem>
#include <memory>
#include <vector>

namespace sacl {

/// Encoder plus sentiment head.
class SentimentModel {
 public:
  SentimentModel(std::unique_ptr<Encoder> encoder, std::uint64_t head_seed);
  SentimentModel(const SentimentModel& other);
  SentimentModel& operator=(const SentimentModel& other);
  SentimentModel(SentimentModel&&) noexcept = default;
  SentimentModel& operator=(SentimentModel&&) noexcept = default;

  Encoder& encoder() { return *encoder_; }
  const Encoder& encoder() const { return *encoder_; }
  ClassifierHead& head() { return head_; }
  const ClassifierHead& head() const { return head_; }

  ParameterRefs parameters();
  void zero_grad();

  /// Evaluation-mode pooled vectors, one row per sequence.
  Matrix pooled(std::span<const TokenSequence> batch) const;
  Matrix logits(std::span<const TokenSequence> batch) const;
  std::vector<Polarity> predict(std::span<const TokenSequence> batch) const;

  /// Parameter values in parameters() order.
  std::vector<Matrix> snapshot();
  void restore(const std::vector<Matrix>& values);

 private:
  std::unique_ptr<Encoder> encoder_;
  ClassifierHead head_;
};

// ---------------------------------------------------------------------------
// Checkpoints
//
// Layout: the line "SACL-CHECKPOINT 1\n", one line of JSON describing the
// encoder kind/config and every tensor (name, rows, cols) in storage order,
// then the tensors as little-endian float64, row-major.
// ---------------------------------------------------------------------------

inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(SentimentModel& model, const std::filesystem::path& path);
SentimentModel load_checkpoint(const std::filesystem::path& path);

}  // namespace sacl
