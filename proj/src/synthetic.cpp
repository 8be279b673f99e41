#include "sacl/synthetic.hpp"

#include "sacl/seed.hpp"

#include <set>

namespace sacl {

namespace {

constexpr std::array<const char*, 14> kOnsets = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "w", "z"};
constexpr std::array<const char*, 5> kVowels = {"a", "e", "i", "o", "u"};

std::string pseudo_word(Rng& rng) {
  const auto syllables = 2 + uniform_index(rng, 2);
  std::string w;
  for (std::uint64_t s = 0; s < syllables; ++s) {
    w += kOnsets[uniform_index(rng, kOnsets.size())];
    w += kVowels[uniform_index(rng, kVowels.size())];
  }
  return w;
}

std::vector<std::string> fresh_words(int count, Rng& rng, std::set<std::string>& used) {
  std::vector<std::string> out;
  while (static_cast<int>(out.size()) < count) {
    auto w = pseudo_word(rng);
    if (used.insert(w).second) out.push_back(std::move(w));
  }
  return out;
}

Polarity draw_label(const std::array<double, kNumPolarities>& mix, Rng& rng) {
  const double total = mix[0] + mix[1] + mix[2];
  double u = uniform01(rng) * total;
  for (int c = 0; c < kNumPolarities; ++c) {
    if (u < mix[c]) return polarity_at(c);
    u -= mix[c];
  }
  return Polarity::neutral;
}

}  // namespace

std::vector<SyntheticLanguage> make_synthetic_languages(const SyntheticOptions& options) {
  Rng vocab_rng(derive_seed(options.seed, "synthetic-vocab"));
  std::set<std::string> used;
  std::vector<SyntheticLanguage> out;
  for (std::size_t li = 0; li < options.languages.size(); ++li) {
    const auto& code = options.languages[li];
    const auto pos_words = fresh_words(options.polar_words_per_class, vocab_rng, used);
    const auto neg_words = fresh_words(options.polar_words_per_class, vocab_rng, used);
    const auto neu_words = fresh_words(options.neutral_words, vocab_rng, used);
    const auto noise = fresh_words(options.noise_words, vocab_rng, used);

    SyntheticLanguage lang;
    lang.code = code;
    lang.lexicon.language = code;
    Rng lex_rng(derive_seed(options.seed, "synthetic-lexicon", {li}));
    for (const auto* words : {&pos_words, &neg_words}) {
      const auto pol = words == &pos_words ? Polarity::positive : Polarity::negative;
      for (const auto& w : *words) {
        if (uniform01(lex_rng) < options.lexicon_coverage) lang.lexicon.entries.push_back({w, pol});
      }
    }

    Rng rng(derive_seed(options.seed, "synthetic-text", {li}));
    auto make_split = [&](int count, const std::string& split) {
      Dataset ds;
      ds.languages.insert(code);
      for (int i = 0; i < count; ++i) {
        const auto label = draw_label(options.label_mix, rng);
        const auto& cls = label == Polarity::positive ? pos_words
                          : label == Polarity::negative ? neg_words
                                                        : neu_words;
        const auto n_noise = options.min_noise +
                             static_cast<int>(uniform_index(rng, options.max_noise - options.min_noise + 1));
        std::vector<std::string> words;
        for (int k = 0; k < n_noise; ++k) words.push_back(noise[uniform_index(rng, noise.size())]);
        const int n_class = cls.empty() ? 0 : 1 + static_cast<int>(uniform_index(rng, 2));
        for (int k = 0; k < n_class; ++k) {
          const auto at = uniform_index(rng, words.size() + 1);
          words.insert(words.begin() + static_cast<std::ptrdiff_t>(at), cls[uniform_index(rng, cls.size())]);
        }
        std::string text;
        for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
        ds.examples.push_back({code + "_" + split + "_" + std::to_string(i), text, label, code});
      }
      return ds;
    };
    lang.train = make_split(options.train_per_language, "train");
    lang.test = make_split(options.test_per_language, "test");
    out.push_back(std::move(lang));
  }
  return out;
}

std::vector<Polarity> random_predictions(std::size_t n, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "random-baseline"));
  std::vector<Polarity> out(n);
  for (auto& p : out) p = polarity_at(static_cast<int>(uniform_index(rng, kNumPolarities)));
  return out;
}

}  // namespace sacl
