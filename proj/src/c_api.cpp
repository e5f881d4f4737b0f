#include "deepglo/deepglo.h"

#include <cstring>
#include <filesystem>
#include <new>

#include "deepglo/checkpoint.hpp"
#include "deepglo/config.hpp"
#include "deepglo/metrics.hpp"
#include "deepglo/pipeline.hpp"

struct deepglo_config {
  deepglo::RunConfig cfg;
};

struct deepglo_model {
  deepglo::Checkpoint checkpoint;
};

namespace {

thread_local std::string g_last_error;

deepglo_status fail(deepglo_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <typename F>
deepglo_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return DEEPGLO_OK;
  } catch (const deepglo::ConfigError& e) {
    return fail(DEEPGLO_ERR_CONFIG, e.what());
  } catch (const deepglo::DataError& e) {
    return fail(DEEPGLO_ERR_DATA, e.what());
  } catch (const deepglo::DivergenceError& e) {
    return fail(DEEPGLO_ERR_DIVERGED, e.what());
  } catch (const deepglo::ShapeError& e) {
    return fail(DEEPGLO_ERR_DATA, e.what());
  } catch (const deepglo::Error& e) {
    return fail(DEEPGLO_ERR_DATA, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(DEEPGLO_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(DEEPGLO_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(DEEPGLO_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(DEEPGLO_ERR_INTERNAL, "unknown error");
  }
}

deepglo_status copy_out(const std::string& s, char* buffer, size_t capacity, size_t* required) {
  if (required) *required = s.size() + 1;
  if (!buffer || capacity < s.size() + 1) {
    return fail(DEEPGLO_ERR_INVALID_ARGUMENT, "buffer too small: need " + std::to_string(s.size() + 1) + " bytes");
  }
  std::memcpy(buffer, s.c_str(), s.size() + 1);
  return DEEPGLO_OK;
}

std::filesystem::path optional_path(const char* p) { return p ? std::filesystem::path(p) : std::filesystem::path(); }

}  // namespace

#define DEEPGLO_REQUIRE(cond, what) \
  if (!(cond)) return fail(DEEPGLO_ERR_INVALID_ARGUMENT, what)

extern "C" {

const char* deepglo_version(void) { return "1.0.0"; }

const char* deepglo_status_name(deepglo_status status) {
  switch (status) {
    case DEEPGLO_OK: return "ok";
    case DEEPGLO_ERR_CONFIG: return "config error";
    case DEEPGLO_ERR_DATA: return "data error";
    case DEEPGLO_ERR_DIVERGED: return "training diverged";
    case DEEPGLO_ERR_INVALID_ARGUMENT: return "invalid argument";
    case DEEPGLO_ERR_IO: return "i/o error";
    case DEEPGLO_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* deepglo_last_error(void) { return g_last_error.c_str(); }

deepglo_status deepglo_config_create(deepglo_config** out) {
  DEEPGLO_REQUIRE(out, "out is NULL");
  return guarded([&] { *out = new deepglo_config(); });
}

void deepglo_config_destroy(deepglo_config* config) { delete config; }

deepglo_status deepglo_config_set(deepglo_config* config, const char* key, const char* value) {
  DEEPGLO_REQUIRE(config && key && value, "config, key and value must be non-NULL");
  return guarded([&] { deepglo::set_config_value(config->cfg, key, value); });
}

deepglo_status deepglo_config_apply_text(deepglo_config* config, const char* text) {
  DEEPGLO_REQUIRE(config && text, "config and text must be non-NULL");
  return guarded([&] { deepglo::apply_config_text(config->cfg, text); });
}

deepglo_status deepglo_config_load(deepglo_config* config, const char* path) {
  DEEPGLO_REQUIRE(config && path, "config and path must be non-NULL");
  return guarded([&] { deepglo::apply_config_file(config->cfg, path); });
}

deepglo_status deepglo_config_validate(const deepglo_config* config) {
  DEEPGLO_REQUIRE(config, "config is NULL");
  return guarded([&] { config->cfg.validate(); });
}

int deepglo_config_has_seed(const deepglo_config* config) { return config && config->cfg.seed_set ? 1 : 0; }

deepglo_status deepglo_config_get(const deepglo_config* config, const char* key, char* buffer, size_t capacity,
                                  size_t* required) {
  DEEPGLO_REQUIRE(config && key, "config and key must be non-NULL");
  std::string value;
  const deepglo_status st = guarded([&] { value = deepglo::get_config_value(config->cfg, key); });
  return st == DEEPGLO_OK ? copy_out(value, buffer, capacity, required) : st;
}

deepglo_status deepglo_config_render(const deepglo_config* config, char* buffer, size_t capacity,
                                     size_t* required) {
  DEEPGLO_REQUIRE(config, "config is NULL");
  return copy_out(deepglo::render_config(config->cfg), buffer, capacity, required);
}

size_t deepglo_config_key_count(void) { return deepglo::config_keys().size(); }

const char* deepglo_config_key_name(size_t index) {
  const auto& keys = deepglo::config_keys();
  return index < keys.size() ? keys[index].name.c_str() : nullptr;
}

const char* deepglo_config_key_help(size_t index) {
  const auto& keys = deepglo::config_keys();
  return index < keys.size() ? keys[index].help.c_str() : nullptr;
}

deepglo_status deepglo_train(const deepglo_config* config, const char* kind, const char* data_path,
                             const char* checkpoint_path, const char* trace_path, const char* resolved_config_path) {
  DEEPGLO_REQUIRE(config && kind && data_path && checkpoint_path,
                  "config, kind, data_path and checkpoint_path must be non-NULL");
  return guarded([&] {
    deepglo::run_train(deepglo::parse_model_kind(kind), config->cfg, data_path, checkpoint_path,
                       optional_path(trace_path), optional_path(resolved_config_path));
  });
}

deepglo_status deepglo_evaluate(const deepglo_config* config, const char* checkpoint_path, const char* data_path,
                                const char* report_path, const char* plot_dir) {
  DEEPGLO_REQUIRE(config && checkpoint_path && data_path && report_path,
                  "config, checkpoint_path, data_path and report_path must be non-NULL");
  return guarded([&] {
    deepglo::run_evaluate(config->cfg, checkpoint_path, data_path, report_path, optional_path(plot_dir));
  });
}

deepglo_status deepglo_predict_file(const deepglo_config* config, const char* checkpoint_path, const char* data_path,
                                    const char* output_path) {
  DEEPGLO_REQUIRE(config && checkpoint_path && data_path && output_path,
                  "config, checkpoint_path, data_path and output_path must be non-NULL");
  return guarded([&] { deepglo::run_predict(config->cfg, checkpoint_path, data_path, output_path); });
}

deepglo_status deepglo_emit_basis(const char* checkpoint_path, const char* output_path) {
  DEEPGLO_REQUIRE(checkpoint_path && output_path, "checkpoint_path and output_path must be non-NULL");
  return guarded([&] { deepglo::run_emit_basis(checkpoint_path, output_path); });
}

deepglo_status deepglo_model_load(const char* checkpoint_path, deepglo_model** out) {
  DEEPGLO_REQUIRE(checkpoint_path && out, "checkpoint_path and out must be non-NULL");
  return guarded([&] { *out = new deepglo_model{deepglo::load_checkpoint(checkpoint_path)}; });
}

void deepglo_model_destroy(deepglo_model* model) { delete model; }

const char* deepglo_model_kind(const deepglo_model* model) {
  if (!model) return "";
  switch (model->checkpoint.kind) {
    case deepglo::ModelKind::local: return "local";
    case deepglo::ModelKind::global: return "global";
    case deepglo::ModelKind::deepglo: return "deepglo";
    case deepglo::ModelKind::dln: return "dln";
    case deepglo::ModelKind::oracle: return "oracle";
  }
  return "";
}

deepglo_status deepglo_model_series(const deepglo_model* model, size_t* series) {
  DEEPGLO_REQUIRE(model && series, "model and series must be non-NULL");
  *series = static_cast<size_t>(model->checkpoint.normalization.means.size());
  return DEEPGLO_OK;
}

deepglo_status deepglo_model_predict(const deepglo_model* model, const double* history, size_t series, size_t length,
                                     size_t tau, double* output) {
  DEEPGLO_REQUIRE(model && history && output, "model, history and output must be non-NULL");
  DEEPGLO_REQUIRE(series > 0 && length > 0 && tau > 0, "series, length and tau must be positive");
  return guarded([&] {
    const auto n = static_cast<deepglo::Index>(series);
    const auto h = static_cast<deepglo::Index>(length);
    const deepglo::Matrix y = Eigen::Map<const deepglo::Matrix>(history, n, h);
    const deepglo::Matrix p = deepglo::predict_checkpoint(model->checkpoint, y, static_cast<deepglo::Index>(tau));
    std::memcpy(output, p.data(), sizeof(double) * static_cast<size_t>(p.size()));
  });
}

deepglo_status deepglo_compute_metrics(const double* observed, const double* predicted, size_t rows, size_t cols,
                                       deepglo_metrics* out) {
  DEEPGLO_REQUIRE(observed && predicted && out, "observed, predicted and out must be non-NULL");
  DEEPGLO_REQUIRE(rows > 0 && cols > 0, "rows and cols must be positive");
  return guarded([&] {
    const auto r = static_cast<deepglo::Index>(rows);
    const auto c = static_cast<deepglo::Index>(cols);
    const deepglo::MetricSet m = deepglo::compute_metrics(Eigen::Map<const deepglo::Matrix>(observed, r, c),
                                                          Eigen::Map<const deepglo::Matrix>(predicted, r, c));
    *out = {m.wape, m.mape, m.smape, m.mae, m.rmse};
  });
}

}  // extern "C"
