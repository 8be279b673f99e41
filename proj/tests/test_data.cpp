#include "sacl/data.hpp"
#include "sacl/synthetic.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <filesystem>
#include <map>
#include <random>
#include <set>

using namespace sacl;

namespace {

Dataset make_counts(std::size_t pos, std::size_t neg, std::size_t neu, std::string lang = "hau") {
  Dataset ds;
  std::size_t n = 0;
  auto add = [&](Polarity p, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
      ds.examples.push_back({lang + "_" + std::to_string(n++), "tweet " + std::to_string(n), p, lang});
    }
  };
  add(Polarity::positive, pos);
  add(Polarity::negative, neg);
  add(Polarity::neutral, neu);
  ds.languages.insert(lang);
  return ds;
}

std::map<std::string, Polarity> label_of(const Dataset& ds) {
  std::map<std::string, Polarity> out;
  for (const auto& ex : ds.examples) out[ex.id] = ex.label;
  return out;
}

bool throws_containing(const std::function<void()>& fn, const std::string& needle) {
  try {
    fn();
  } catch (const std::exception& e) {
    return std::string(e.what()).find(needle) != std::string::npos;
  }
  return false;
}

}  // namespace

TEST_CASE("three-row fixture keeps file order") {
  const auto ds = parse_dataset("ID\ttweet\tlabel\na1\tgood day\tpositive\na2\tbad day\tnegative\na3\tok\tneutral\n",
                                "hau");
  REQUIRE(ds.size() == 3);
  CHECK(ds.examples[0].id == "a1");
  CHECK(ds.examples[0].label == Polarity::positive);
  CHECK(ds.examples[1].label == Polarity::negative);
  CHECK(ds.examples[2].label == Polarity::neutral);
  CHECK(ds.examples[2].language == "hau");
  CHECK(ds.languages == std::set<std::string>{"hau"});
}

TEST_CASE("CRLF line endings and column order from the header") {
  const auto ds = parse_dataset("label\tID\ttweet\r\npositive\tx\thello there\r\n", "ibo");
  REQUIRE(ds.size() == 1);
  CHECK(ds.examples[0].id == "x");
  CHECK(ds.examples[0].text == "hello there");
}

TEST_CASE("malformed rows name their line") {
  CHECK(throws_containing([] { parse_dataset("ID\ttweet\tlabel\na\tx\tpositive\nb\ty\tmixed\n", "h", {}, "f.tsv"); },
                          "f.tsv:3"));
  CHECK(throws_containing([] { parse_dataset("ID\ttweet\tlabel\na\tx\tpositive\nb\ty\tmixed\n", "h"); }, "mixed"));
  CHECK(throws_containing([] { parse_dataset("ID\ttweet\tlabel\na\tx\n", "h", {}, "g.tsv"); }, "g.tsv:2"));
  CHECK(throws_containing([] { parse_dataset("ID\ttweet\tlabel\na\tx\tpositive\na\ty\tnegative\n", "h"); },
                          "duplicate id"));
  CHECK(throws_containing([] { parse_dataset("ID\ttweet\tlabel\na\t   \tpositive\n", "h"); }, "empty text"));
  CHECK_THROWS_AS(parse_dataset("", "h"), Error);
}

TEST_CASE("missing file error names the path") {
  CHECK(throws_containing([] { load_dataset("/nonexistent/dir/train.tsv", "hau"); }, "/nonexistent/dir/train.tsv"));
}

TEST_CASE("serialize then load gives an equal dataset") {
  SyntheticOptions options;
  options.languages = {"hau"};
  options.train_per_language = 200;
  options.test_per_language = 10;
  const auto ds = make_synthetic_languages(options).front().train;

  const auto path = std::filesystem::temp_directory_path() / "sacl_test_roundtrip.tsv";
  save_dataset(ds, path);
  CHECK(load_dataset(path, "hau") == ds);
  CHECK(parse_dataset(serialize_dataset(ds), "hau") == ds);
  std::filesystem::remove(path);
}

TEST_CASE("lexicon loading") {
  auto lex = parse_lexicon("good\tpositive\nbad\tnegative\n", "hau");
  REQUIRE(lex.entries.size() == 2);
  CHECK(lex.entries[0] == LexiconEntry{"good", Polarity::positive});
  CHECK(lex.entries[1] == LexiconEntry{"bad", Polarity::negative});

  CHECK(parse_lexicon("good\tpositive\ngood\tpositive\n", "hau").entries.size() == 1);
  CHECK(parse_lexicon("Good\tpositive\ngOOD\tnegative\n", "hau").entries.size() == 1);
  CHECK_THROWS_AS(parse_lexicon("ok\tneutral\n", "hau"), Error);

  auto multi = parse_lexicon("not good\tnegative\n", "hau");
  REQUIRE(multi.entries.size() == 1);
  CHECK(multi.entries[0].phrase == "not good");
}

TEST_CASE("combine_multilingual") {
  const auto hau = make_counts(1, 1, 0, "hau");
  const auto ibo = make_counts(1, 1, 1, "ibo");
  const std::vector<Dataset> two{hau, ibo};
  const auto combined = combine_multilingual(two);
  CHECK(combined.size() == 5);
  CHECK(combined.languages == std::set<std::string>{"hau", "ibo"});
  CHECK(combined.examples[0].id == "hau:hau_0");
  CHECK(combined.examples[2].language == "ibo");

  const std::vector<Dataset> one{hau};
  CHECK(combine_multilingual(one) == hau);

  std::vector<Dataset> twelve;
  std::size_t total = 0;
  for (int i = 0; i < 12; ++i) {
    twelve.push_back(make_counts(2 + i, 1, 1, "l" + std::to_string(i)));
    total += twelve.back().size();
  }
  const auto all = combine_multilingual(twelve);
  CHECK(all.languages.size() == 12);
  CHECK(all.size() == total);

  Dataset clash = hau;
  clash.examples[1].id = "hau:hau_0";
  const std::vector<Dataset> colliding{clash, ibo};
  CHECK_THROWS_AS(combine_multilingual(colliding), Error);
}

TEST_CASE("stratified k-fold with exact divisibility") {
  const auto ds = make_counts(60, 40, 0);
  const auto folds = stratified_kfold(ds, 5, 3);
  REQUIRE(folds.size() == 5);
  const auto labels = label_of(ds);
  for (const auto& f : folds) {
    int pos = 0, neg = 0;
    for (const auto& id : f.val_ids) (labels.at(id) == Polarity::positive ? pos : neg)++;
    CHECK(pos == 12);
    CHECK(neg == 8);
  }
}

TEST_CASE("stratified k-fold 61/39 counts checked exhaustively") {
  const auto ds = make_counts(61, 39, 0);
  const auto labels = label_of(ds);
  const auto folds = stratified_kfold(ds, 5, 11);
  std::map<std::string, int> seen_as_val;
  for (const auto& f : folds) {
    std::map<Polarity, int> counts;
    for (const auto& id : f.val_ids) {
      counts[labels.at(id)]++;
      seen_as_val[id]++;
    }
    CHECK(std::abs(counts[Polarity::positive] - 12.2) < 1.0);
    CHECK(std::abs(counts[Polarity::negative] - 7.8) < 1.0);

    std::set<std::string> train(f.train_ids.begin(), f.train_ids.end());
    std::set<std::string> val(f.val_ids.begin(), f.val_ids.end());
    for (const auto& id : val) CHECK(train.count(id) == 0);
    CHECK(train.size() + val.size() == ds.size());
  }
  CHECK(seen_as_val.size() == ds.size());
  for (const auto& [id, n] : seen_as_val) CHECK(n == 1);
}

TEST_CASE("k-fold is deterministic and independent of file order") {
  const auto ds = make_counts(33, 21, 17);
  const auto a = stratified_kfold(ds, 5, 7);
  const auto b = stratified_kfold(ds, 5, 7);
  Dataset reversed = ds;
  std::reverse(reversed.examples.begin(), reversed.examples.end());
  const auto c = stratified_kfold(reversed, 5, 7);
  for (int f = 0; f < 5; ++f) {
    CHECK(a[f].val_ids == b[f].val_ids);
    CHECK(std::set<std::string>(a[f].val_ids.begin(), a[f].val_ids.end()) ==
          std::set<std::string>(c[f].val_ids.begin(), c[f].val_ids.end()));
  }
  const auto other_seed = stratified_kfold(ds, 5, 8);
  bool differs = false;
  for (int f = 0; f < 5; ++f) differs = differs || other_seed[f].val_ids != a[f].val_ids;
  CHECK(differs);
}

TEST_CASE("k-fold rejects categories smaller than k") {
  const auto ds = make_counts(10, 3, 10);
  CHECK(throws_containing([&] { stratified_kfold(ds, 5, 0); }, "negative"));
  CHECK_THROWS_AS(stratified_kfold(ds, 1, 0), Error);
}

TEST_CASE("stratification property over random datasets") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_int_distribution<std::size_t> size(5, 120);
    const auto ds = make_counts(size(rng), size(rng), size(rng));
    const auto labels = label_of(ds);
    const auto counts = label_counts(ds);
    for (const auto& f : stratified_kfold(ds, 5, rng())) {
      std::array<int, 3> val{};
      for (const auto& id : f.val_ids) val[index_of(labels.at(id))]++;
      for (int c = 0; c < 3; ++c) CHECK(std::abs(val[c] - static_cast<double>(counts[c]) / 5.0) < 1.0);
    }
  }
}

TEST_CASE("joint language and label stratification") {
  const std::vector<Dataset> parts{make_counts(20, 15, 10, "hau"), make_counts(12, 30, 8, "ibo")};
  const auto ds = combine_multilingual(parts);
  std::map<std::string, const Example*> by_id;
  for (const auto& ex : ds.examples) by_id[ex.id] = &ex;
  for (const auto& f : stratified_kfold(ds, 5, 1, StratifyBy::language_and_label)) {
    std::map<Polarity, int> per_label;
    for (const auto& id : f.val_ids) per_label[by_id[id]->label]++;
    CHECK(std::abs(per_label[Polarity::positive] - 32.0 / 5) < 1.0);
    CHECK(std::abs(per_label[Polarity::negative] - 45.0 / 5) < 1.0);
    CHECK(std::abs(per_label[Polarity::neutral] - 18.0 / 5) < 1.0);
  }
}

TEST_CASE("label weights") {
  auto w = compute_label_weights(make_counts(50, 30, 20));
  CHECK(w[Polarity::positive] == doctest::Approx(100.0 / 150.0).epsilon(1e-12));
  CHECK(w[Polarity::negative] == doctest::Approx(100.0 / 90.0).epsilon(1e-12));
  CHECK(w[Polarity::neutral] == doctest::Approx(100.0 / 60.0).epsilon(1e-12));
  CHECK(w[Polarity::positive] == doctest::Approx(0.6667).epsilon(1e-4));
  CHECK(w[Polarity::negative] == doctest::Approx(1.1111).epsilon(1e-4));
  CHECK(w[Polarity::neutral] == doctest::Approx(1.6667).epsilon(1e-4));

  auto balanced = compute_label_weights(make_counts(30, 30, 30));
  for (auto p : kAllPolarities) CHECK(balanced[p] == 1.0);

  auto skewed = compute_label_weights(make_counts(1, 1, 98));
  // N_total / (3 * N_c) recomputed by hand: 100/3 and 100/294.
  CHECK(skewed[Polarity::positive] == doctest::Approx(33.33).epsilon(1e-3));
  CHECK(skewed[Polarity::negative] == doctest::Approx(100.0 / 3.0).epsilon(1e-12));
  CHECK(skewed[Polarity::neutral] == doctest::Approx(0.3401).epsilon(1e-3));
  CHECK(skewed[Polarity::neutral] == doctest::Approx(100.0 / 294.0).epsilon(1e-12));

  CHECK(throws_containing([] { compute_label_weights(make_counts(4, 0, 3)); }, "negative"));
}

TEST_CASE("weights times counts sum to the dataset size") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> size(1, 500);
  for (int trial = 0; trial < 100; ++trial) {
    const auto ds = make_counts(size(rng), size(rng), size(rng));
    const auto w = compute_label_weights(ds);
    const auto counts = label_counts(ds);
    double sum = 0.0;
    for (auto p : kAllPolarities) {
      CHECK(w[p] > 0.0);
      sum += w[p] * static_cast<double>(counts[index_of(p)]);
    }
    CHECK(sum == doctest::Approx(static_cast<double>(ds.size())).epsilon(1e-12));
  }
}

TEST_CASE("subset keeps dataset order") {
  const auto ds = make_counts(3, 2, 1);
  const auto sub = subset(ds, {ds.examples[4].id, ds.examples[1].id});
  REQUIRE(sub.size() == 2);
  CHECK(sub.examples[0].id == ds.examples[1].id);
  CHECK(sub.examples[1].id == ds.examples[4].id);
}
