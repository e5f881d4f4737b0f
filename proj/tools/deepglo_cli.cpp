// Command-line front end over the deepglo C API.
#include <cstdio>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "deepglo/deepglo.h"

namespace {

int exit_code(deepglo_status st) {
  switch (st) {
    case DEEPGLO_OK: return 0;
    case DEEPGLO_ERR_CONFIG:
    case DEEPGLO_ERR_INVALID_ARGUMENT: return 1;
    case DEEPGLO_ERR_DATA:
    case DEEPGLO_ERR_IO: return 2;
    case DEEPGLO_ERR_DIVERGED: return 3;
    case DEEPGLO_ERR_INTERNAL: return 4;
  }
  return 4;
}

struct StatusError {
  deepglo_status status;
  std::string message;
};

void check(deepglo_status st) {
  if (st != DEEPGLO_OK) throw StatusError{st, deepglo_last_error()};
}

std::string exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

using ConfigPtr = std::unique_ptr<deepglo_config, decltype(&deepglo_config_destroy)>;

// Options shared by every command that reads data.
struct CommonOptions {
  std::string config_file;
  std::vector<std::string> overrides;
  std::optional<std::string> normalize;
  bool header = false;
  bool id_col = false;
  std::optional<long long> t0, tau, windows;
  std::string data;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_file, "key = value config file")->check(CLI::ExistingFile);
    cmd->add_option("--set", overrides, "override a config key (KEY=VALUE, repeatable)");
    cmd->add_option("--normalize", normalize, "none | per-series");
    cmd->add_flag("--header", header, "skip the first line of data files");
    cmd->add_flag("--id-col", id_col, "first column of data files holds series identifiers");
    cmd->add_option("--t0", t0, "training length / first rolling origin");
    cmd->add_option("--tau", tau, "columns per rolling window");
    cmd->add_option("--windows", windows, "number of rolling windows");
    cmd->add_option("--data", data, "series CSV, one series per row")->required();
  }
};

// Config precedence: defaults < --config < --set < dedicated flags.
ConfigPtr build_config(const CommonOptions& o, const std::map<std::string, std::string>& flags) {
  deepglo_config* raw = nullptr;
  check(deepglo_config_create(&raw));
  ConfigPtr cfg(raw, &deepglo_config_destroy);
  if (!o.config_file.empty()) check(deepglo_config_load(cfg.get(), o.config_file.c_str()));
  for (const std::string& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw StatusError{DEEPGLO_ERR_CONFIG, "--set expects KEY=VALUE, got '" + kv + "'"};
    }
    check(deepglo_config_set(cfg.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
  }
  auto set = [&](const char* key, const std::string& value) {
    check(deepglo_config_set(cfg.get(), key, value.c_str()));
  };
  if (o.normalize) set("normalize", *o.normalize);
  if (o.header) set("data.header", "true");
  if (o.id_col) set("data.id_col", "true");
  if (o.t0) set("eval.t0", std::to_string(*o.t0));
  if (o.tau) set("eval.tau", std::to_string(*o.tau));
  if (o.windows) set("eval.windows", std::to_string(*o.windows));
  for (const auto& [key, value] : flags) set(key.c_str(), value);
  check(deepglo_config_validate(cfg.get()));
  return cfg;
}

struct TrainCommand {
  CommonOptions common;
  std::string kind;
  unsigned long long seed = 0;
  std::string out;
  std::string trace;
  std::string resolved;
  std::optional<int> epochs;
  std::optional<double> learning_rate;
  std::optional<long long> rank;
  std::optional<std::string> combiner;
  std::optional<long long> dln_window;
};

void run_train(const TrainCommand& t) {
  std::map<std::string, std::string> flags{{"seed", std::to_string(t.seed)}};
  if (t.epochs) flags["train.max_epochs"] = std::to_string(*t.epochs);
  if (t.learning_rate) flags["train.learning_rate"] = exact(*t.learning_rate);
  if (t.rank) flags["mf.rank"] = std::to_string(*t.rank);
  if (t.combiner) flags["deepglo.combiner"] = *t.combiner;
  if (t.dln_window) flags["dln.window"] = std::to_string(*t.dln_window);
  const ConfigPtr cfg = build_config(t.common, flags);
  const std::string trace = t.trace.empty() ? t.out + ".trace.csv" : t.trace;
  const std::string resolved = t.resolved.empty() ? t.out + ".config" : t.resolved;
  check(deepglo_train(cfg.get(), t.kind.c_str(), t.common.data.c_str(), t.out.c_str(), trace.c_str(),
                      resolved.c_str()));
  std::cout << "checkpoint: " << t.out << "\ntrace: " << trace << "\nresolved config: " << resolved << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deepglo: global-local forecasting for high-dimensional time series"};
  app.require_subcommand(1);
  app.set_version_flag("--version", deepglo_version());

  std::vector<std::unique_ptr<TrainCommand>> trains;
  const std::vector<std::pair<std::string, std::string>> kinds{
      {"local", "train a LeveledInit local TCN"},
      {"global", "train the TCN-regularized matrix factorization"},
      {"deepglo", "train the global-local hybrid"},
      {"dln", "train the deep leveled network"}};
  for (const auto& [kind, help] : kinds) {
    auto t = std::make_unique<TrainCommand>();
    t->kind = kind;
    CLI::App* cmd = app.add_subcommand("train-" + kind, help);
    t->common.attach(cmd);
    cmd->add_option("--seed", t->seed, "RNG seed")->required();
    cmd->add_option("--out", t->out, "checkpoint path")->required();
    cmd->add_option("--trace", t->trace, "loss trace CSV (default <out>.trace.csv)");
    cmd->add_option("--resolved-config", t->resolved, "resolved config (default <out>.config)");
    cmd->add_option("--epochs", t->epochs, "train.max_epochs");
    cmd->add_option("--learning-rate", t->learning_rate, "train.learning_rate");
    if (kind == "global" || kind == "deepglo") cmd->add_option("--rank", t->rank, "mf.rank");
    if (kind == "deepglo") cmd->add_option("--combiner", t->combiner, "covariate | attention");
    if (kind == "dln") cmd->add_option("--window", t->dln_window, "dln.window");
    TrainCommand* raw = t.get();
    cmd->final_callback([raw] { run_train(*raw); });
    trains.push_back(std::move(t));
  }

  CommonOptions eval_opts;
  std::string eval_ckpt, report, plot_dir;
  CLI::App* eval = app.add_subcommand("evaluate-rolling", "rolling-origin evaluation with naive baselines");
  eval_opts.attach(eval);
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint path")->required();
  eval->add_option("--report", report, "metrics report (JSON)")->required();
  eval->add_option("--plot-dir", plot_dir, "directory for per-series plot CSVs");
  eval->final_callback([&] {
    const ConfigPtr cfg = build_config(eval_opts, {});
    check(deepglo_evaluate(cfg.get(), eval_ckpt.c_str(), eval_opts.data.c_str(), report.c_str(),
                           plot_dir.empty() ? nullptr : plot_dir.c_str()));
    std::cout << "report: " << report << "\n";
  });

  CommonOptions pred_opts;
  std::string pred_ckpt, pred_out;
  std::optional<long long> horizon;
  CLI::App* pred = app.add_subcommand("predict", "forecast the columns after the data");
  pred_opts.attach(pred);
  pred->add_option("--checkpoint", pred_ckpt, "checkpoint path")->required();
  pred->add_option("--output", pred_out, "forecast CSV")->required();
  pred->add_option("--horizon", horizon, "predict.horizon");
  pred->final_callback([&] {
    std::map<std::string, std::string> flags;
    if (horizon) flags["predict.horizon"] = std::to_string(*horizon);
    const ConfigPtr cfg = build_config(pred_opts, flags);
    check(deepglo_predict_file(cfg.get(), pred_ckpt.c_str(), pred_opts.data.c_str(), pred_out.c_str()));
  });

  std::string basis_ckpt, basis_out;
  CLI::App* basis = app.add_subcommand("emit-basis", "write the basis series X of a global or deepglo checkpoint");
  basis->add_option("--checkpoint", basis_ckpt, "checkpoint path")->required();
  basis->add_option("--output", basis_out, "basis CSV (k rows)")->required();
  basis->final_callback([&] { check(deepglo_emit_basis(basis_ckpt.c_str(), basis_out.c_str())); });

  CLI::App* keys = app.add_subcommand("config-keys", "list every config key");
  keys->final_callback([] {
    for (size_t i = 0; i < deepglo_config_key_count(); ++i) {
      std::cout << deepglo_config_key_name(i) << "\t" << deepglo_config_key_help(i) << "\n";
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const StatusError& e) {
    std::cerr << "error: " << deepglo_status_name(e.status) << ": " << e.message << "\n";
    return exit_code(e.status);
  }
  return 0;
}
