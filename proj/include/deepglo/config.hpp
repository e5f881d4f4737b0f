#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "deepglo/data.hpp"
#include "deepglo/hybrid.hpp"
#include "deepglo/rolling.hpp"
#include "deepglo/tcn.hpp"
#include "deepglo/tcn_mf.hpp"

namespace deepglo {

/// Every tunable of a run. Text form is one `key = value` per line; `#`
/// starts a comment. Keys are listed by config_keys().
struct RunConfig {
  std::uint64_t seed = 0;
  bool seed_set = false;
  NormalizationMode normalize = NormalizationMode::none;

  TcnConfig local;  // tcn.*
  TrainConfig train;  // train.*
  TcnMfConfig global;  // mf.*
  Combiner combiner = Combiner::covariate;
  Index dln_window = 24;

  RollingProtocol protocol{0, 24, 7};  // eval.*; t0 = 0 trains on every column
  Index horizon = 24;  // predict.horizon

  CsvOptions csv;  // data.*
  std::string static_covariates;  // covariates.static (path, empty = none)
  std::string time_start;  // covariates.time_start (empty = no time features)
  long long time_step_seconds = 3600;  // covariates.time_step

  /// Cross-field checks; throws ConfigError naming the key.
  void validate() const;
};

struct ConfigKey {
  std::string name;
  std::string help;
};
const std::vector<ConfigKey>& config_keys();

/// Throws ConfigError for unknown keys or unparsable values.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const RunConfig& cfg, const std::string& key);

/// Applies every line of text on top of cfg; errors name the line.
void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& origin = "config");
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

/// Fully resolved config, one key per line, accepted back by apply_config_text.
std::string render_config(const RunConfig& cfg);

NormalizationMode parse_normalization(const std::string& name);
std::string to_string(NormalizationMode mode);

}  // namespace deepglo
