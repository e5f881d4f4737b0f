#include "deepglo/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace deepglo {

NormalizationMode parse_normalization(const std::string& name) {
  if (name == "none") return NormalizationMode::none;
  if (name == "per-series" || name == "per_series") return NormalizationMode::per_series_whiten;
  throw ConfigError("unknown normalization '" + name + "' (expected none or per-series)");
}

std::string to_string(NormalizationMode mode) {
  return mode == NormalizationMode::none ? "none" : "per-series";
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_integer(const std::string& key, const std::string& text) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
  }
  return v;
}

double parse_real(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

std::vector<Index> parse_list(const std::string& key, std::string text) {
  if (!text.empty() && text.front() == '[' && text.back() == ']') text = text.substr(1, text.size() - 2);
  std::vector<Index> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_integer<Index>(key, trim(item)));
  if (out.empty()) throw ConfigError(key + ": expected a comma-separated list");
  return out;
}

std::string render_list(const std::vector<Index>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string render_bool(bool b) { return b ? "true" : "false"; }

// Wraps enum parsers so their errors carry the key.
template <typename F>
auto keyed(const std::string& key, F&& parse) {
  try {
    return parse();
  } catch (const ConfigError& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

struct Entry {
  ConfigKey key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define INT_FIELD(NAME, FIELD, TYPE, HELP)                                                           \
  Entry {                                                                                            \
    {NAME, HELP}, [](RunConfig& c, const std::string& v) { c.FIELD = parse_integer<TYPE>(NAME, v); }, \
        [](const RunConfig& c) { return std::to_string(c.FIELD); }                                   \
  }
#define REAL_FIELD(NAME, FIELD, HELP)                                                       \
  Entry {                                                                                   \
    {NAME, HELP}, [](RunConfig& c, const std::string& v) { c.FIELD = parse_real(NAME, v); }, \
        [](const RunConfig& c) { return format_double(c.FIELD); }                           \
  }
#define BOOL_FIELD(NAME, FIELD, HELP)                                                       \
  Entry {                                                                                   \
    {NAME, HELP}, [](RunConfig& c, const std::string& v) { c.FIELD = parse_bool(NAME, v); }, \
        [](const RunConfig& c) { return render_bool(c.FIELD); }                             \
  }
#define ENUM_FIELD(NAME, FIELD, PARSE, HELP)                                                                \
  Entry {                                                                                                   \
    {NAME, HELP}, [](RunConfig& c, const std::string& v) { c.FIELD = keyed(NAME, [&] { return PARSE(v); }); }, \
        [](const RunConfig& c) { return to_string(c.FIELD); }                                               \
  }

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = {
      Entry{{"seed", "RNG seed for initialization and batch order"},
            [](RunConfig& c, const std::string& v) {
              c.seed = parse_integer<std::uint64_t>("seed", v);
              c.seed_set = true;
            },
            [](const RunConfig& c) { return std::to_string(c.seed); }},
      ENUM_FIELD("normalize", normalize, parse_normalization, "none | per-series"),

      INT_FIELD("tcn.kernel_size", local.kernel_size, Index, "filter size k of the local network"),
      Entry{{"tcn.channels", "output channels per layer, last entry must be 1"},
            [](RunConfig& c, const std::string& v) { c.local.channels = parse_list("tcn.channels", v); },
            [](const RunConfig& c) { return render_list(c.local.channels); }},
      BOOL_FIELD("tcn.residual", local.use_residual, "identity skip where channel counts match"),

      REAL_FIELD("train.learning_rate", train.learning_rate, "step size"),
      ENUM_FIELD("train.optimizer", train.optimizer, parse_optimizer, "sgd | adam"),
      ENUM_FIELD("train.loss", train.loss, parse_loss, "wape | squared"),
      INT_FIELD("train.max_epochs", train.max_epochs, int, "epoch budget"),
      INT_FIELD("train.patience", train.patience, int, "epochs without validation improvement before stopping"),
      INT_FIELD("train.batch_rows", train.batch_rows, Index, "series per mini-batch"),
      INT_FIELD("train.batch_cols", train.batch_cols, Index, "target columns per mini-batch"),
      REAL_FIELD("train.val_fraction", train.val_fraction, "held-out tail of the training range"),

      INT_FIELD("mf.rank", global.rank, Index, "number of basis series k"),
      REAL_FIELD("mf.lambda_t", global.lambda_t, "weight of the temporal regularizer"),
      INT_FIELD("mf.iters_init", global.iters_init, int, "factor epochs before the first alternation"),
      INT_FIELD("mf.iters_train", global.iters_train, int, "factor and T_X epochs per alternation"),
      INT_FIELD("mf.iters_alt", global.iters_alt, int, "alternations"),
      REAL_FIELD("mf.factor_lr", global.factor_lr, "step size for F and X"),
      ENUM_FIELD("mf.factor_optimizer", global.factor_optimizer, parse_optimizer, "sgd | adam"),
      INT_FIELD("mf.factor_batch_rows", global.factor_batch_rows, Index, "rows per factor tile"),
      INT_FIELD("mf.factor_batch_cols", global.factor_batch_cols, Index, "columns per factor tile"),
      REAL_FIELD("mf.alpha", global.alpha, "weight of the global term in the alpha_hybrid rolling objective"),
      ENUM_FIELD("mf.rolling_objective", global.rolling_objective, parse_rolling_objective,
                 "global_loss_argmin | alpha_hybrid"),
      INT_FIELD("mf.rolling_max_iters", global.rolling_max_iters, int, "iteration cap of the rolling update"),
      ENUM_FIELD("mf.reg_start", global.reg_start, parse_reg_start, "full_look_back | second_column"),
      INT_FIELD("mf.tx_kernel_size", global.tx.kernel_size, Index, "filter size of T_X"),
      Entry{{"mf.tx_channels", "output channels per layer of T_X, last entry must be 1"},
            [](RunConfig& c, const std::string& v) { c.global.tx.channels = parse_list("mf.tx_channels", v); },
            [](const RunConfig& c) { return render_list(c.global.tx.channels); }},
      ENUM_FIELD("mf.tx_loss", global.tx_loss, parse_loss, "loss used to train T_X on X"),

      ENUM_FIELD("deepglo.combiner", combiner, parse_combiner, "covariate | attention"),
      INT_FIELD("dln.window", dln_window, Index, "rolling-mean window of the leveling network"),

      INT_FIELD("eval.t0", protocol.t0, Index, "training length; 0 trains on every column"),
      INT_FIELD("eval.tau", protocol.tau, Index, "columns per rolling window"),
      INT_FIELD("eval.windows", protocol.n_windows, Index, "number of rolling windows"),
      INT_FIELD("predict.horizon", horizon, Index, "columns written by predict"),

      BOOL_FIELD("data.header", csv.header, "skip the first line of data files"),
      BOOL_FIELD("data.id_col", csv.id_column, "first column holds series identifiers"),
      Entry{{"covariates.static", "CSV of per-series features (one row per series)"},
            [](RunConfig& c, const std::string& v) { c.static_covariates = v; },
            [](const RunConfig& c) { return c.static_covariates; }},
      Entry{{"covariates.time_start", "timestamp of column 0; enables the seven time features"},
            [](RunConfig& c, const std::string& v) {
              if (!v.empty()) keyed("covariates.time_start", [&] { return parse_timestamp(v); });
              c.time_start = v;
            },
            [](const RunConfig& c) { return c.time_start; }},
      INT_FIELD("covariates.time_step", time_step_seconds, long long, "seconds between columns"),
  };
  return entries;
}

#undef INT_FIELD
#undef REAL_FIELD
#undef BOOL_FIELD
#undef ENUM_FIELD

const Entry& find_entry(const std::string& key) {
  for (const Entry& e : registry()) {
    if (e.key.name == key) return e;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const Entry& e : registry()) k.push_back(e.key);
    return k;
  }();
  return keys;
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  find_entry(key).set(cfg, trim(value));
}

std::string get_config_value(const RunConfig& cfg, const std::string& key) { return find_entry(key).get(cfg); }

void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(number) + ": expected 'key = value'");
    }
    try {
      set_config_value(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(cfg, ss.str(), path.string());
}

std::string render_config(const RunConfig& cfg) {
  std::string out;
  for (const Entry& e : registry()) out += e.key.name + " = " + e.get(cfg) + "\n";
  return out;
}

void RunConfig::validate() const {
  auto check = [](const std::string& key, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      throw ConfigError(key + ": " + e.what());
    }
  };
  check("tcn", [&] { local.validate(); });
  if (local.output_channels() != 1) throw ConfigError("tcn.channels: last layer must have 1 channel");
  check("train", [&] { train.validate(); });
  check("mf.tx", [&] { global.tx.validate(); });
  if (global.tx.output_channels() != 1) throw ConfigError("mf.tx_channels: last layer must have 1 channel");
  if (global.rank < 1) throw ConfigError("mf.rank must be >= 1");
  if (dln_window < 1) throw ConfigError("dln.window must be >= 1");
  if (horizon < 1) throw ConfigError("predict.horizon must be >= 1");
  if (time_step_seconds < 1) throw ConfigError("covariates.time_step must be >= 1");
  if (protocol.t0 < 0) throw ConfigError("eval.t0 must be >= 0");
  if (protocol.tau < 0 || protocol.n_windows < 0) throw ConfigError("eval.tau and eval.windows must be >= 0");
}

}  // namespace deepglo
