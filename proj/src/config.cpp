#include "sacl/config.hpp"

#include "sacl/run.hpp"
#include "sacl/text.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace sacl {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + std::string(key) + "': expected a number, got '" + std::string(v) + "'");
  }
  return out;
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view v) {
  Int out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + std::string(key) + "': expected an integer, got '" + std::string(v) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + std::string(key) + "': expected true/false, got '" + std::string(v) + "'");
}

struct Field {
  std::function<void(TrainConfig&, std::string_view, std::string_view)> set;
  std::function<std::string(const TrainConfig&)> get;
};

template <typename Member>
Field double_field(Member member) {
  return {[member](TrainConfig& c, std::string_view k, std::string_view v) { member(c) = parse_double(k, v); },
          [member](const TrainConfig& c) { return format_double(member(c)); }};
}

template <typename Int, typename Member>
Field int_field(Member member) {
  return {[member](TrainConfig& c, std::string_view k, std::string_view v) { member(c) = parse_int<Int>(k, v); },
          [member](const TrainConfig& c) { return std::to_string(member(c)); }};
}

const std::map<std::string, Field, std::less<>>& fields() {
  static const std::map<std::string, Field, std::less<>> table = [] {
    std::map<std::string, Field, std::less<>> t;
    // Training hyperparameters.
    t["hidden_size"] = int_field<int>([](auto& c) -> auto& { return c.encoder.hidden_size; });
    t["perturbation_radius"] = double_field([](auto& c) -> auto& { return c.loss.radius; });
    t["perturbation_rate"] = double_field([](auto& c) -> auto& { return c.loss.rate; });
    t["trade_off_weight"] = double_field([](auto& c) -> auto& { return c.loss.lambda; });
    t["trade_off_weight_adv"] = double_field([](auto& c) -> auto& { return c.loss.lambda_adv; });
    t["temperature"] = double_field([](auto& c) -> auto& { return c.loss.temperature; });
    t["temperature_adv"] = double_field([](auto& c) -> auto& { return c.loss.temperature_adv; });
    t["number_of_epochs"] = int_field<int>([](auto& c) -> auto& { return c.epochs; });
    t["patience"] = int_field<int>([](auto& c) -> auto& { return c.patience; });
    t["batch_size"] = int_field<int>([](auto& c) -> auto& { return c.batch_size; });
    t["learning_rate"] = double_field([](auto& c) -> auto& { return c.learning_rate; });
    t["weight_decay"] = double_field([](auto& c) -> auto& { return c.weight_decay; });
    t["dropout"] = double_field([](auto& c) -> auto& { return c.dropout; });
    t["maximum_token_length"] = int_field<int>([](auto& c) -> auto& { return c.max_len; });
    // Everything else.
    t["seed"] = int_field<std::uint64_t>([](auto& c) -> auto& { return c.seed; });
    t["folds"] = int_field<int>([](auto& c) -> auto& { return c.folds; });
    t["max_prefix_tokens"] = int_field<int>([](auto& c) -> auto& { return c.max_prefix_tokens; });
    t["num_layers"] = int_field<int>([](auto& c) -> auto& { return c.encoder.num_layers; });
    t["num_heads"] = int_field<int>([](auto& c) -> auto& { return c.encoder.num_heads; });
    t["ffn_size"] = int_field<int>([](auto& c) -> auto& { return c.encoder.ffn_size; });
    t["vocab_size"] = int_field<int>([](auto& c) -> auto& { return c.encoder.vocab_size; });
    t["use_lexicon"] = {
        [](TrainConfig& c, std::string_view k, std::string_view v) { c.use_lexicon = parse_bool(k, v); },
        [](const TrainConfig& c) { return std::string(c.use_lexicon ? "true" : "false"); }};
    t["reduction"] = {[](TrainConfig& c, std::string_view k, std::string_view v) {
                        if (v == "sum") c.loss.reduction = Reduction::sum;
                        else if (v == "mean") c.loss.reduction = Reduction::mean;
                        else throw ConfigError("config key '" + std::string(k) + "': expected sum or mean");
                      },
                      [](const TrainConfig& c) {
                        return std::string(c.loss.reduction == Reduction::sum ? "sum" : "mean");
                      }};
    t["positives"] = {[](TrainConfig& c, std::string_view k, std::string_view v) {
                        if (v == "gold") c.loss.positives = PositiveSet::gold;
                        else if (v == "predicted") c.loss.positives = PositiveSet::predicted;
                        else throw ConfigError("config key '" + std::string(k) + "': expected gold or predicted");
                      },
                      [](const TrainConfig& c) {
                        return std::string(c.loss.positives == PositiveSet::gold ? "gold" : "predicted");
                      }};
    t["stratify"] = {[](TrainConfig& c, std::string_view k, std::string_view v) {
                       if (v == "label") c.stratify = StratifyBy::label;
                       else if (v == "language_label") c.stratify = StratifyBy::language_and_label;
                       else throw ConfigError("config key '" + std::string(k) + "': expected label or language_label");
                     },
                     [](const TrainConfig& c) {
                       return std::string(c.stratify == StratifyBy::label ? "label" : "language_label");
                     }};
    return t;
  }();
  return table;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, f] : fields()) k.push_back(name);
    return k;
  }();
  return keys;
}

std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view content,
                                                                  std::string_view source) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= content.size()) {
    auto end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    auto line = content.substr(start, end - start);
    ++line_no;
    start = end + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = text::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(source) + ":" + std::to_string(line_no) + ": expected key=value");
    }
    out.emplace_back(std::string(text::trim(line.substr(0, eq))), std::string(text::trim(line.substr(eq + 1))));
  }
  return out;
}

void apply_setting(TrainConfig& config, std::string_view key, std::string_view value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  it->second.set(config, key, value);
}

void apply_config_file(TrainConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  for (const auto& [k, v] : parse_key_values(ss.str(), path.string())) apply_setting(config, k, v);
}

std::map<std::string, std::string> config_to_map(const TrainConfig& config) {
  std::map<std::string, std::string> out;
  for (const auto& [name, f] : fields()) out[name] = f.get(config);
  return out;
}

std::string serialize_config(const TrainConfig& config) {
  std::string out;
  for (const auto& [k, v] : config_to_map(config)) out += k + "=" + v + "\n";
  return out;
}

std::string config_fingerprint(const TrainConfig& config) {
  auto copy = config;
  copy.seed = 0;
  return sha256_hex(serialize_config(copy)).substr(0, 16);
}

}  // namespace sacl
