#pragma once

#include "deepglo/tcn.hpp"

namespace deepglo {

/// Twin networks: a leveling component predicting the mean of the next
/// `window` values and a residual component; the forecast is their sum.
struct DlnNetwork {
  TcnNetwork mean_net;
  TcnNetwork residual_net;
  Index window = 24;

  Index look_back() const { return mean_net.look_back(); }
};

/// LeveledInit mean net; residual net random with a zero output layer so the
/// initial forecast equals the leveled mean.
DlnNetwork make_dln(const TcnConfig& config, Index window, std::uint64_t seed);

/// Elementwise sum of both networks' outputs.
Tensor3 dln_forward(const DlnNetwork& dln, const Tensor3& input);

/// M[r, c] = mean of y[r, c .. c+w-1] for c in [0, T-w]; shape [n × (T-w+1)].
Matrix rolling_mean_targets(const Matrix& y, Index window);

struct DlnTrainResult {
  std::vector<EpochRecord> mean_trace;   // loss of the mean net on rolling-mean targets
  std::vector<EpochRecord> total_trace;  // loss of mean + residual on the series
  int best_epoch = 0;
  bool early_stopped = false;
};

/// Per batch: step Θ_m on the rolling-mean loss, then step Θ_r on the loss of
/// (pre-step mean output + residual output) against the series. Early stopping
/// watches the validation loss of the combined forecast.
DlnTrainResult dln_train(DlnNetwork& dln, const Matrix& y, const TrainConfig& cfg);

struct DlnOptimizer {
  OptimizerState mean;
  OptimizerState residual;
};

/// Mean-net half of a batch step: forward on input, loss against the
/// rolling-mean targets (columns below mean_limit), one update of Θ_m.
/// Returns the loss; mean_out receives the pre-update mean output.
double dln_mean_step(DlnNetwork& dln, const Tensor3& input, const WindowBatch& batch, const Matrix& mean_targets,
                     Index mean_limit, const TrainConfig& cfg, DlnOptimizer& opt, Tensor3& mean_out);
/// Residual half: loss of mean_out + residual output against y (columns below
/// limit), one update of Θ_r. Θ_m is not touched.
double dln_residual_step(DlnNetwork& dln, const Tensor3& input, const WindowBatch& batch, const Tensor3& mean_out,
                         const Matrix& y, Index limit, const TrainConfig& cfg, DlnOptimizer& opt);

Matrix dln_rollout(const DlnNetwork& dln, const Matrix& history, Index steps);

}  // namespace deepglo
