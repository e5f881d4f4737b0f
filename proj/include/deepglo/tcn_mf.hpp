#pragma once

#include <random>
#include <string>
#include <vector>

#include "deepglo/common.hpp"
#include "deepglo/tcn.hpp"

namespace deepglo {

enum class RollingObjective { global_loss_argmin, alpha_hybrid };
RollingObjective parse_rolling_objective(const std::string& name);
std::string to_string(RollingObjective objective);

/// First target column of the temporal regularizer. full_look_back starts at
/// column l' so the regularizer network always sees a complete window;
/// second_column starts at column 1 with zero-padded context.
enum class RegStart { full_look_back, second_column };
RegStart parse_reg_start(const std::string& name);
std::string to_string(RegStart start);

struct TcnMfConfig {
  Index rank = 64;
  double lambda_t = 0.2;
  int iters_init = 10;
  int iters_train = 10;
  int iters_alt = 5;
  double factor_lr = 0.01;
  OptimizerKind factor_optimizer = OptimizerKind::adam;
  Index factor_batch_rows = 128;
  Index factor_batch_cols = 256;
  double alpha = 0.2;
  RollingObjective rolling_objective = RollingObjective::global_loss_argmin;
  int rolling_max_iters = 200;
  RegStart reg_start = RegStart::full_look_back;
  /// Regularizer network; input/series channels are forced to 1.
  TcnConfig tx;
  LossKind tx_loss = LossKind::squared;

  /// n is the series count; rank may not exceed it.
  void validate(Index n) const;
};

/// Y ≈ F·X with a single-channel network regularizing every row of X.
struct FactorModel {
  Matrix f;  // [n × k]
  Matrix x;  // [k × t_current]
  TcnNetwork tx;
  double lambda_t = 0.2;
  RegStart reg_start = RegStart::full_look_back;

  Index rank() const { return f.cols(); }
  Index regularizer_start() const;
};

/// (1/|J|)·MSE(X[:,J], T_X one-step predictions) with J = [first, last).
/// Adds dR/dX into grad_x (context columns included) when given.
double temporal_term(const Matrix& x, const TcnNetwork& tx, Index first, Index last, Matrix* grad_x = nullptr);
/// temporal_term over every column from start on; needs >= 2 columns.
double temporal_reg(const Matrix& x, const TcnNetwork& tx, Index start);

/// MSE(Y, F·X) + λ_T·temporal_reg(X).
double global_loss(const Matrix& y, const Matrix& f, const Matrix& x, const TcnNetwork& tx, double lambda_t,
                   Index start);
double global_loss(const Matrix& y, const FactorModel& model);

struct GlobalLossGradient {
  double loss = 0.0;
  Matrix f;
  Matrix x;
};
GlobalLossGradient global_loss_gradient(const Matrix& y, const FactorModel& model);

/// Per-entry moment buffers and step counts for factor updates. Tiles touch
/// disjoint subsets, so each entry keeps its own bias-correction count.
struct FactorOptimizer {
  Matrix mf, vf, nf;
  Matrix mx, vx, nx;
  void resize(const FactorModel& model);
};

/// One pass over shuffled (rows × columns) tiles of the training range:
/// per tile, X[:,J] is stepped on the tile loss, then F[I,:] with the new X.
void factor_epoch(FactorModel& model, const Matrix& y, const TcnMfConfig& cfg, double learning_rate,
                  std::mt19937_64& rng, FactorOptimizer& optimizer);

struct FactorTraceEntry {
  int cycle = 0;  // 0 = initialization, then one per alternation
  int epoch = 0;  // 0 = loss at the start of the cycle
  double loss = 0.0;
  double learning_rate = 0.0;
};

struct TcnMfFit {
  FactorModel model;
  std::vector<FactorTraceEntry> trace;
  std::vector<TrainResult> tx_traces;
};

/// LeveledInit T_X, random F/X scaled to Y, iters_init factor epochs, then
/// iters_alt cycles of (iters_train factor epochs, T_X training on X).
/// A factor epoch that raises L_G is retried at half the step size and
/// reverted if it still does not help.
TcnMfFit fit_tcn_mf(const Matrix& y, const TcnMfConfig& cfg, const TrainConfig& tx_train);

/// F·X̂ with X̂ the autoregressive T_X rollout of every basis row.
Matrix predict_global(const FactorModel& model, Index tau);

struct RollingUpdateReport {
  int iterations = 0;
  bool converged = true;
  double objective = 0.0;
};

/// Rolling objective for a candidate block M given the new observations.
double rolling_objective_value(const FactorModel& model, const Matrix& y_new, const Matrix& m,
                               const TcnMfConfig& cfg);

/// Extends X by y_new.cols() columns fitted to y_new; F and T_X stay untouched.
/// Non-convergence keeps the best iterate and clears report.converged.
RollingUpdateReport rolling_update(FactorModel& model, const Matrix& y_new, const TcnMfConfig& cfg);

}  // namespace deepglo
