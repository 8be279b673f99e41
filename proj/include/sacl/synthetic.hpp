#pragma once

#include "sacl/data.hpp"

#include <string>
#include <vector>

namespace sacl {

/// Generator for desk-scale toy corpora: each language gets its own random
/// pseudo-word vocabulary of polar words, neutral-indicative words and noise
/// words. A sentence is a run of noise words with one or two words of its
/// class inserted. The lexicon lists (a fraction of) the language's polar words.
struct SyntheticOptions {
  std::vector<std::string> languages = {"syn_a", "syn_b", "syn_c"};
  int train_per_language = 2000;
  int test_per_language = 500;
  int polar_words_per_class = 12;
  int neutral_words = 12;
  int noise_words = 150;
  int min_noise = 3;
  int max_noise = 7;
  std::array<double, kNumPolarities> label_mix{0.4, 0.35, 0.25};
  double lexicon_coverage = 1.0;
  std::uint64_t seed = 1;
};

struct SyntheticLanguage {
  std::string code;
  Dataset train;
  Dataset test;
  Lexicon lexicon;
};

std::vector<SyntheticLanguage> make_synthetic_languages(const SyntheticOptions& options);

/// Uniform random labels over the three categories (random-guess baseline).
std::vector<Polarity> random_predictions(std::size_t n, std::uint64_t seed);

}  // namespace sacl
