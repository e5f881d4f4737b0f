#pragma once

#include <memory>
#include <optional>

#include "deepglo/data.hpp"
#include "deepglo/dln.hpp"
#include "deepglo/hybrid.hpp"
#include "deepglo/rolling.hpp"
#include "deepglo/tcn.hpp"
#include "deepglo/tcn_mf.hpp"

namespace deepglo {

/// Appends block to the right of history.
Matrix append_columns(const Matrix& history, const Matrix& block);

/// Local TCN; incorporate only extends the history. covariates (optional) are
/// indexed from history column 0 and must cover every column predicted.
class LocalTcnForecaster : public Forecaster {
 public:
  LocalTcnForecaster(TcnNetwork net, Matrix history, std::optional<CovariateTensor> covariates = std::nullopt);
  std::string name() const override { return "local_tcn"; }
  Matrix predict(Index tau) override;
  void incorporate(const Matrix& block) override;

 private:
  TcnNetwork net_;
  Matrix history_;
  std::optional<CovariateTensor> covariates_;
};

/// TCN-MF without retraining: new columns enter X through rolling_update.
class GlobalForecaster : public Forecaster {
 public:
  GlobalForecaster(FactorModel model, TcnMfConfig cfg);
  std::string name() const override { return "global_tcn_mf"; }
  Matrix predict(Index tau) override;
  void incorporate(const Matrix& block) override;
  ComponentPredictions components() const override { return {last_, std::nullopt}; }
  const FactorModel& model() const { return model_; }
  const std::vector<RollingUpdateReport>& reports() const { return reports_; }

 private:
  FactorModel model_;
  TcnMfConfig cfg_;
  std::optional<Matrix> last_;
  std::vector<RollingUpdateReport> reports_;
};

/// Reference for the rolling update: refits TCN-MF on the full history
/// before every prediction after the first.
class RefitGlobalForecaster : public Forecaster {
 public:
  RefitGlobalForecaster(FactorModel initial, Matrix history, TcnMfConfig cfg, TrainConfig train_cfg);
  std::string name() const override { return "global_tcn_mf_refit"; }
  Matrix predict(Index tau) override;
  void incorporate(const Matrix& block) override;

 private:
  FactorModel model_;
  Matrix history_;
  TcnMfConfig cfg_;
  TrainConfig train_cfg_;
  bool stale_ = false;
};

/// DeepGLO hybrid; the global part is updated with rolling_update.
/// covariates (optional) are the original Z from history column 0.
class DeepGloForecaster : public Forecaster {
 public:
  DeepGloForecaster(DeepGloModel model, TcnMfConfig cfg, Matrix history,
                    std::optional<CovariateTensor> covariates = std::nullopt);
  std::string name() const override { return "deepglo"; }
  Matrix predict(Index tau) override;
  void incorporate(const Matrix& block) override;
  ComponentPredictions components() const override { return last_; }

 private:
  DeepGloModel model_;
  TcnMfConfig cfg_;
  Matrix history_;
  std::optional<CovariateTensor> covariates_;
  ComponentPredictions last_;
};

class DlnForecaster : public Forecaster {
 public:
  DlnForecaster(DlnNetwork dln, Matrix history);
  std::string name() const override { return "dln"; }
  Matrix predict(Index tau) override;
  void incorporate(const Matrix& block) override;

 private:
  DlnNetwork dln_;
  Matrix history_;
};

/// Returns the stored truth for the next columns; for pipeline checks.
class OracleForecaster : public Forecaster {
 public:
  OracleForecaster(Matrix values, Index position);
  std::string name() const override { return "oracle"; }
  Matrix predict(Index tau) override;
  void incorporate(const Matrix& block) override;

 private:
  Matrix values_;
  Index position_;
};

/// Runs an inner forecaster in normalized space and reports original-scale
/// predictions; revealed blocks are normalized before they are passed on.
class NormalizedForecaster : public Forecaster {
 public:
  NormalizedForecaster(std::unique_ptr<Forecaster> inner, NormalizationState state);
  std::string name() const override { return inner_->name(); }
  Matrix predict(Index tau) override;
  void incorporate(const Matrix& block) override;
  ComponentPredictions components() const override;

 private:
  std::unique_ptr<Forecaster> inner_;
  NormalizationState state_;
};

}  // namespace deepglo
