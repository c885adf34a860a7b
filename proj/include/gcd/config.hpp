#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gcd/error.hpp"
#include "gcd/trainer.hpp"

namespace gcd {

class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// Every tunable of a run. Serialized as `key=value` lines; `#` starts a
// comment line.
struct RunConfig {
  TrainSpec train;
  int neighbors = 5;  // key "m"
  double min_gain = 1e-7;
  std::string data;
  std::string run_dir;

  void validate() const;
};

// Keys in serialization order.
const std::vector<std::string>& config_keys();

void apply_setting(RunConfig& config, std::string_view key, std::string_view value);
std::string get_setting(const RunConfig& config, std::string_view key);

// Applies `text` on top of `base`. Unknown keys and malformed values throw
// ConfigError naming the line.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});
std::string to_text(const RunConfig& config);
void save_config(const RunConfig& config, const std::filesystem::path& path);

// Training-relevant keys only; echoed into checkpoints.
std::string train_spec_text(const TrainSpec& spec);

}  // namespace gcd
