#pragma once

#include "sacl/trainer.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace sacl {

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Flat `key = value` lines; '#' starts a comment. Keys keep file order.
std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view content,
                                                                  std::string_view source = "<memory>");

/// Sets one key. Key names are snake_case
/// (number_of_epochs, perturbation_radius, trade_off_weight, ...). Throws
/// ConfigError naming the key when it is unknown or its value is malformed.
void apply_setting(TrainConfig& config, std::string_view key, std::string_view value);

/// Applies a config file on top of `config`.
void apply_config_file(TrainConfig& config, const std::filesystem::path& path);

/// Every key with its canonical value, sorted by key.
std::map<std::string, std::string> config_to_map(const TrainConfig& config);

/// `key=value\n` lines sorted by key; parse_key_values + apply_setting restores it.
std::string serialize_config(const TrainConfig& config);

/// Short SHA-256 digest of the serialized config without the seed.
std::string config_fingerprint(const TrainConfig& config);

/// All recognized keys.
const std::vector<std::string>& config_keys();

/// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace sacl
