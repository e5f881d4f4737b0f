#include "deepglo/forecasters.hpp"

namespace deepglo {

Matrix append_columns(const Matrix& history, const Matrix& block) {
  if (history.size() > 0 && block.rows() != history.rows()) {
    throw ShapeError("block has " + std::to_string(block.rows()) + " rows, history has " +
                     std::to_string(history.rows()));
  }
  Matrix out(block.rows(), history.cols() + block.cols());
  out << history, block;
  return out;
}

namespace {

const CovariateTensor* usable(const std::optional<CovariateTensor>& z) {
  return z && !z->empty() ? &*z : nullptr;
}

}  // namespace

LocalTcnForecaster::LocalTcnForecaster(TcnNetwork net, Matrix history, std::optional<CovariateTensor> covariates)
    : net_(std::move(net)), history_(std::move(history)), covariates_(std::move(covariates)) {}

Matrix LocalTcnForecaster::predict(Index tau) {
  const Index H = history_.cols();
  const Index keep = std::min(H, net_.look_back());
  const Matrix tail = history_.rightCols(keep);
  if (const CovariateTensor* z = usable(covariates_)) {
    if (z->length() < H + tau) {
      throw ShapeError("covariates end at column " + std::to_string(z->length()) + ", forecast needs " +
                       std::to_string(H + tau));
    }
    const CovariateTensor window = z->time_slice(H - keep, H + tau);
    return rollout(net_, tail, &window, tau);
  }
  return rollout(net_, tail, nullptr, tau);
}

void LocalTcnForecaster::incorporate(const Matrix& block) { history_ = append_columns(history_, block); }

GlobalForecaster::GlobalForecaster(FactorModel model, TcnMfConfig cfg)
    : model_(std::move(model)), cfg_(std::move(cfg)) {}

Matrix GlobalForecaster::predict(Index tau) {
  last_ = predict_global(model_, tau);
  return *last_;
}

void GlobalForecaster::incorporate(const Matrix& block) { reports_.push_back(rolling_update(model_, block, cfg_)); }

RefitGlobalForecaster::RefitGlobalForecaster(FactorModel initial, Matrix history, TcnMfConfig cfg,
                                             TrainConfig train_cfg)
    : model_(std::move(initial)), history_(std::move(history)), cfg_(std::move(cfg)),
      train_cfg_(std::move(train_cfg)) {}

Matrix RefitGlobalForecaster::predict(Index tau) {
  if (stale_) {
    model_ = fit_tcn_mf(history_, cfg_, train_cfg_).model;
    stale_ = false;
  }
  return predict_global(model_, tau);
}

void RefitGlobalForecaster::incorporate(const Matrix& block) {
  history_ = append_columns(history_, block);
  stale_ = true;
}

DeepGloForecaster::DeepGloForecaster(DeepGloModel model, TcnMfConfig cfg, Matrix history,
                                     std::optional<CovariateTensor> covariates)
    : model_(std::move(model)), cfg_(std::move(cfg)), history_(std::move(history)),
      covariates_(std::move(covariates)) {
  // Columns revealed after training enter X before the first forecast.
  const Index covered = model_.global.x.cols();
  if (history_.cols() < covered) {
    throw ShapeError("history has " + std::to_string(history_.cols()) + " columns, the model was trained on " +
                     std::to_string(covered));
  }
  if (history_.cols() > covered) {
    rolling_update(model_.global, history_.rightCols(history_.cols() - covered), cfg_);
  }
}

Matrix DeepGloForecaster::predict(Index tau) {
  DeepGloPrediction p = predict_deepglo(model_, history_, usable(covariates_), tau);
  last_.global = std::move(p.global);
  last_.local = std::move(p.local);
  return p.combined;
}

void DeepGloForecaster::incorporate(const Matrix& block) {
  rolling_update(model_.global, block, cfg_);
  history_ = append_columns(history_, block);
}

DlnForecaster::DlnForecaster(DlnNetwork dln, Matrix history) : dln_(std::move(dln)), history_(std::move(history)) {}

Matrix DlnForecaster::predict(Index tau) {
  return dln_rollout(dln_, history_.rightCols(std::min(history_.cols(), dln_.look_back())), tau);
}

void DlnForecaster::incorporate(const Matrix& block) { history_ = append_columns(history_, block); }

OracleForecaster::OracleForecaster(Matrix values, Index position) : values_(std::move(values)), position_(position) {}

Matrix OracleForecaster::predict(Index tau) {
  if (position_ + tau > values_.cols()) {
    throw ShapeError("oracle holds " + std::to_string(values_.cols()) + " columns, asked for column " +
                     std::to_string(position_ + tau - 1));
  }
  return values_.middleCols(position_, tau);
}

void OracleForecaster::incorporate(const Matrix& block) { position_ += block.cols(); }

NormalizedForecaster::NormalizedForecaster(std::unique_ptr<Forecaster> inner, NormalizationState state)
    : inner_(std::move(inner)), state_(std::move(state)) {}

Matrix NormalizedForecaster::predict(Index tau) { return denormalize(inner_->predict(tau), state_); }

void NormalizedForecaster::incorporate(const Matrix& block) { inner_->incorporate(normalize_values(block, state_)); }

ComponentPredictions NormalizedForecaster::components() const {
  ComponentPredictions c = inner_->components();
  if (c.global) c.global = denormalize(*c.global, state_);
  if (c.local) c.local = denormalize(*c.local, state_);
  return c;
}

}  // namespace deepglo
