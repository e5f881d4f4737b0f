#pragma once

#include <optional>
#include <string>

#include "deepglo/data.hpp"
#include "deepglo/tcn.hpp"
#include "deepglo/tcn_mf.hpp"

namespace deepglo {

enum class Combiner { covariate, attention };
Combiner parse_combiner(const std::string& name);
std::string to_string(Combiner combiner);

struct DeepGloConfig {
  TcnMfConfig global;
  /// Local network; input channels are set from the covariates at fit time.
  TcnConfig local;
  Combiner combiner = Combiner::covariate;
};

/// Local network T_Y reads [series, global prediction, covariates...].
/// In attention mode T_A reads the series and emits (A_g, A_l); the forecast
/// is Ŷg·A_g + Ŷl·A_l with Ŷl the output of T_Y.
struct DeepGloModel {
  FactorModel global;
  TcnNetwork hybrid;
  Combiner combiner = Combiner::covariate;
  std::optional<TcnNetwork> attention;
};

/// [n × (1 + r) × length]: channel 0 is F·X over columns [0, length), the rest
/// are the columns [0, length) of z (if any).
CovariateTensor build_hybrid_covariates(const FactorModel& global, const CovariateTensor* z, Index length);

/// Global prediction channel covering history plus horizon: F·X for the
/// columns X already spans, then predict_global for the remaining steps.
Matrix global_channel(const FactorModel& global, Index length);

/// T_A layout: same hidden layers as the local network, one series input,
/// two outputs; output layer weights 0 and biases 0.5 so the initial blend is
/// the plain average of both components.
TcnNetwork make_attention_net(const TcnConfig& local, std::uint64_t seed);

struct DeepGloFit {
  DeepGloModel model;
  TcnMfFit global_fit;
  TrainResult local_trace;
  std::optional<TrainResult> attention_trace;
};

/// Fits the global model, builds the hybrid covariates, trains a LeveledInit
/// T_Y on them, and in attention mode trains T_A on top.
DeepGloFit fit_deepglo(const Matrix& y, const CovariateTensor* z, const DeepGloConfig& cfg,
                       const TrainConfig& train_cfg);

/// Trains T_A only; global factors, Θ_X and Θ_Y stay as they are.
TrainResult fit_attention(DeepGloModel& model, const Matrix& y, const CovariateTensor* z, const TrainConfig& cfg);

struct DeepGloPrediction {
  Matrix combined;
  Matrix global;
  std::optional<Matrix> local;
};

/// history is Y[:, 0:H] with H equal to the number of columns X covers; z (if
/// any) covers H + tau columns from the same origin.
DeepGloPrediction predict_deepglo(const DeepGloModel& model, const Matrix& history, const CovariateTensor* z,
                                  Index tau);

/// Attention-mode forward for one input window. Channels: [series, global,
/// covariates..., next-step global]; output channel 0 is the blend.
Tensor3 attention_forward(const DeepGloModel& model, const Tensor3& input);

}  // namespace deepglo
