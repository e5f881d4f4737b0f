#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "deepglo/checkpoint.hpp"
#include "deepglo/config.hpp"
#include "deepglo/rolling.hpp"

namespace deepglo {

/// Series matrix read with the config's CSV options; train_len is eval.t0
/// when set, otherwise every column.
TimeSeriesMatrix load_series(const RunConfig& cfg, const std::filesystem::path& path);

struct TrainOutput {
  Checkpoint checkpoint;
  /// CSV with columns stage,cycle,epoch,train_loss,val_loss.
  std::string trace_csv;
};

/// Trains on the first train_len columns of data. The oracle kind stores the
/// data itself and is meant for pipeline checks.
TrainOutput train_model(ModelKind kind, const RunConfig& cfg, const TimeSeriesMatrix& data);

/// Forecaster for rolling evaluation holding data[:, 0:t0] in original scale.
std::unique_ptr<Forecaster> make_forecaster(const Checkpoint& checkpoint, const Matrix& data, Index t0);

/// Model plus both naive baselines, in that order. eval.t0 = 0 means the
/// checkpoint's training length.
std::vector<RollingResult> evaluate_checkpoint(const Checkpoint& checkpoint, const RunConfig& cfg,
                                               const Matrix& data, RollingProtocol* used = nullptr);

/// Forecast of tau columns following history (original scale).
Matrix predict_checkpoint(const Checkpoint& checkpoint, const Matrix& history, Index tau);

// File-level commands.
void run_train(ModelKind kind, const RunConfig& cfg, const std::filesystem::path& data,
               const std::filesystem::path& checkpoint, const std::filesystem::path& trace,
               const std::filesystem::path& resolved_config);
void run_evaluate(const RunConfig& cfg, const std::filesystem::path& checkpoint, const std::filesystem::path& data,
                  const std::filesystem::path& report, const std::filesystem::path& plot_dir = {});
void run_predict(const RunConfig& cfg, const std::filesystem::path& checkpoint, const std::filesystem::path& data,
                 const std::filesystem::path& output);
void run_emit_basis(const std::filesystem::path& checkpoint, const std::filesystem::path& output);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace deepglo
