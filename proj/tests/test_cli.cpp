#include "sacl/config.hpp"
#include "sacl/run.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <sys/wait.h>

using namespace sacl;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

const fs::path& workdir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "sacl_test_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Result run(const std::string& args) {
  const auto out = workdir() / "stdout.txt";
  const auto err = workdir() / "stderr.txt";
  const std::string cmd = "cd '" + workdir().string() + "' && SACL_RUNS_DIR=runs '" + SACL_CLI_PATH + "' " + args +
                          " >'" + out.string() + "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_text_file(out), read_text_file(err)};
}

void ensure_corpus() {
  if (fs::exists(workdir() / "data" / "syn_a_train.tsv")) return;
  const auto r = run("synth --out data --seed 3 --languages syn_a,syn_b,syn_c --train-per-language 60 "
                     "--test-per-language 20");
  REQUIRE_MESSAGE(r.code == 0, r.err);
}

const std::string kTiny =
    " --epochs 2 --patience 1 --folds 2 --hidden-size 8 --num-layers 1 --num-heads 2 --ffn-size 16 "
    "--vocab-size 211 --batch-size 8 --max-len 32 --quiet";

const std::string kTrainInputs =
    " --train data/syn_a_train.tsv --train data/syn_b_train.tsv --lexicon data/syn_a_lexicon.tsv "
    "--lexicon data/syn_b_lexicon.tsv";

}  // namespace

TEST_CASE("synth writes train, test and lexicon files") {
  ensure_corpus();
  for (const char* lang : {"syn_a", "syn_b", "syn_c"}) {
    for (const char* kind : {"_train.tsv", "_test.tsv", "_lexicon.tsv"}) {
      CHECK(fs::exists(workdir() / "data" / (std::string(lang) + kind)));
    }
  }
}

TEST_CASE("splits are reproducible and validate their inputs") {
  ensure_corpus();
  REQUIRE(run("splits --train data/syn_a_train.tsv --k 5 --seed 7 --out s1.json").code == 0);
  REQUIRE(run("splits --train data/syn_a_train.tsv --k 5 --seed 7 --out s2.json").code == 0);
  CHECK(read_text_file(workdir() / "s1.json") == read_text_file(workdir() / "s2.json"));
  const auto j = nlohmann::json::parse(read_text_file(workdir() / "s1.json"));
  CHECK(j.at("folds").size() == 5);
  CHECK(j.at("input_digests").size() == 1);

  auto missing = run("splits --train data/absent.tsv --out s3.json");
  CHECK(missing.code != 0);
  CHECK(missing.err.find("absent.tsv") != std::string::npos);

  auto too_many = run("splits --train data/syn_a_train.tsv --k 500 --out s4.json");
  CHECK(too_many.code != 0);
  CHECK(too_many.err.find("fold") != std::string::npos);
}

TEST_CASE("train, zeroshot and report") {
  ensure_corpus();
  auto r = run("train" + kTrainInputs + kTiny + " --seed 5 --run-id base --test data/syn_a_test.tsv");
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto base = workdir() / "runs" / "base";
  CHECK(fs::exists(base / "summary.json"));
  CHECK(fs::exists(base / "fold1" / "checkpoint.bin"));
  CHECK(fs::exists(base / "fold2" / "log.txt"));
  CHECK(fs::exists(base / "test" / "syn_a" / "metrics.json"));
  const auto manifest = load_manifest(base);
  CHECK(manifest.seed == 5);
  CHECK(manifest.training_languages == std::set<std::string>{"syn_a", "syn_b"});

  r = run("zeroshot --run runs/base --target data/syn_c_test.tsv --lexicon data/syn_c_lexicon.tsv");
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto zs = base / "zeroshot" / "syn_c";
  const auto metrics = nlohmann::json::parse(read_text_file(zs / "metrics.json"));
  CHECK(metrics.at("subtask") == "zero-shot");
  CHECK(metrics.at("language") == "syn_c");
  std::istringstream preds(read_text_file(zs / "predictions.tsv"));
  std::string line;
  std::getline(preds, line);
  CHECK(line == "ID\tlabel");
  int rows = 0;
  while (std::getline(preds, line)) {
    ++rows;
    const auto tab = line.find('\t');
    REQUIRE(tab != std::string::npos);
    const auto label = line.substr(tab + 1);
    CHECK((label == "positive" || label == "negative" || label == "neutral"));
  }
  CHECK(rows == 20);

  r = run("zeroshot --run runs/base --target data/syn_a_test.tsv --out zs_warn");
  CHECK(r.code == 0);
  CHECK(r.err.find("syn_a") != std::string::npos);
  r = run("zeroshot --run runs/base --target data/syn_a_test.tsv --strict --out zs_strict");
  CHECK(r.code != 0);

  r = run("report runs/base");
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.find("syn_c") != std::string::npos);
  CHECK(r.out.find("syn_a") != std::string::npos);
  r = run("report runs/base --out merged");
  CHECK(r.code == 0);
  CHECK(fs::exists(workdir() / "merged" / "scores.json"));

  fs::create_directories(workdir() / "empty");
  CHECK(run("report empty").code != 0);
}

TEST_CASE("config overrides reach the stored config") {
  ensure_corpus();
  auto r = run("train" + kTrainInputs + kTiny +
               " --seed 2 --run-id plain --no-lexicon --lambda 0 --fgm-radius 0 --fgm-rate 0 --fold 1");
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto config = parse_key_values(read_text_file(workdir() / "runs" / "plain" / "config.txt"));
  std::map<std::string, std::string> kv(config.begin(), config.end());
  CHECK(kv.at("use_lexicon") == "false");
  CHECK(kv.at("trade_off_weight") == "0");
  CHECK(kv.at("perturbation_radius") == "0");
  CHECK(kv.at("perturbation_rate") == "0");
  CHECK(kv.at("number_of_epochs") == "2");
  CHECK(kv.at("seed") == "2");
  CHECK(fs::exists(workdir() / "runs" / "plain" / "fold1"));
  CHECK_FALSE(fs::exists(workdir() / "runs" / "plain" / "fold2"));

  write_text_file(workdir() / "cfg.txt", "number_of_epochs = 1\ndropout = 0.3\n");
  r = run("train" + kTrainInputs + kTiny + " --config cfg.txt --set dropout=0.4 --run-id layered --fold 1");
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto layered = parse_key_values(read_text_file(workdir() / "runs" / "layered" / "config.txt"));
  std::map<std::string, std::string> lk(layered.begin(), layered.end());
  CHECK(lk.at("dropout") == "0.4");
  CHECK(lk.at("number_of_epochs") == "2");

  r = run("train" + kTrainInputs + kTiny + " --set bogus_key=1 --run-id bad");
  CHECK(r.code != 0);
  CHECK(r.err.find("bogus_key") != std::string::npos);
}

TEST_CASE("ablate writes the four configurations") {
  ensure_corpus();
  auto r = run("ablate" + kTrainInputs + kTiny +
               " --fold 1 --run-id grid --eval data/syn_c_test.tsv --lexicon data/syn_c_lexicon.tsv");
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto root = workdir() / "runs" / "grid";
  std::set<std::string> hashes;
  for (const char* v : {"full", "no_lexicon", "no_sacl", "no_lexicon_no_sacl"}) {
    CHECK_MESSAGE(fs::exists(root / v / "eval" / "metrics.json"), v);
    const auto m = nlohmann::json::parse(read_text_file(root / v / "eval" / "metrics.json"));
    hashes.insert(m.at("config_hash").get<std::string>());
  }
  CHECK(hashes.size() == 4);
}
