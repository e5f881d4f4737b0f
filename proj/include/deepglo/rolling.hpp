#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "deepglo/common.hpp"
#include "deepglo/metrics.hpp"

namespace deepglo {

/// Rolling-origin schedule: windows end at t_i = t0 + i·tau for i = 1..n_windows.
struct RollingProtocol {
  Index t0 = 0;
  Index tau = 0;
  Index n_windows = 0;

  Index boundary(Index i) const { return t0 + i * tau; }
  Index horizon() const { return tau * n_windows; }
  /// Throws ConfigError unless 1 <= t0, tau, n_windows and t0 + n_windows·tau <= total_length.
  void validate(Index total_length) const;
};

/// Optional breakdown of the last predict() into global and local parts.
struct ComponentPredictions {
  std::optional<Matrix> global;
  std::optional<Matrix> local;
};

/// Anything that can forecast the next tau columns and absorb revealed truth.
class Forecaster {
 public:
  virtual ~Forecaster() = default;
  virtual std::string name() const = 0;
  virtual Matrix predict(Index tau) = 0;
  virtual void incorporate(const Matrix& block) = 0;
  virtual ComponentPredictions components() const { return {}; }
};

struct RollingResult {
  std::string model;
  Matrix predictions;  // [n × n_windows·tau]
  std::optional<Matrix> global_component;
  std::optional<Matrix> local_component;
  std::vector<MetricSet> windows;
  MetricSet overall;
};

/// The forecaster must already hold Y[:, 0:t0]. Overall metrics are computed
/// on the concatenated predictions, not averaged over windows.
RollingResult run_rolling(Forecaster& model, const Matrix& y, const RollingProtocol& protocol);

/// Repeats the most recent observed column.
class LastValueForecaster : public Forecaster {
 public:
  explicit LastValueForecaster(Matrix history) : last_(history.col(history.cols() - 1)) {}
  std::string name() const override { return "naive_last_value"; }
  Matrix predict(Index tau) override { return last_.replicate(1, tau); }
  void incorporate(const Matrix& block) override {
    if (block.cols() > 0) last_ = block.col(block.cols() - 1);
  }

 private:
  Vector last_;
};

/// Repeats each series' mean over the initial training range.
class TrainingMeanForecaster : public Forecaster {
 public:
  explicit TrainingMeanForecaster(const Matrix& training) : mean_(training.rowwise().mean()) {}
  std::string name() const override { return "naive_training_mean"; }
  Matrix predict(Index tau) override { return mean_.replicate(1, tau); }
  void incorporate(const Matrix&) override {}

 private:
  Vector mean_;
};

struct BaselineResults {
  RollingResult last_value;
  RollingResult training_mean;
};
BaselineResults naive_baselines(const Matrix& y, const RollingProtocol& protocol);

/// JSON report: per model, metrics per window and overall.
void write_metrics_report(const std::filesystem::path& path, const RollingProtocol& protocol,
                          const std::vector<RollingResult>& results);
/// One CSV per series (up to limit; negative = all) with columns
/// time,actual,predicted,component_global,component_local.
void write_plot_data(const std::filesystem::path& dir, const Matrix& y, const RollingProtocol& protocol,
                     const RollingResult& result, const std::vector<std::string>& ids, Index limit = -1);

}  // namespace deepglo
