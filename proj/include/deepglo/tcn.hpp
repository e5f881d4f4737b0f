#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "deepglo/common.hpp"
#include "deepglo/data.hpp"

namespace deepglo {

/// Dense [batch × channels × length] buffer, length fastest.
struct Tensor3 {
  Index batch = 0;
  Index channels = 0;
  Index length = 0;
  std::vector<double> data;

  Tensor3() = default;
  Tensor3(Index b, Index c, Index l)
      : batch(b), channels(c), length(l), data(static_cast<std::size_t>(b * c * l), 0.0) {}

  double& operator()(Index b, Index c, Index t) { return data[offset(b, c) + static_cast<std::size_t>(t)]; }
  double operator()(Index b, Index c, Index t) const {
    return data[offset(b, c) + static_cast<std::size_t>(t)];
  }
  double* row(Index b, Index c) { return data.data() + offset(b, c); }
  const double* row(Index b, Index c) const { return data.data() + offset(b, c); }

 private:
  std::size_t offset(Index b, Index c) const { return static_cast<std::size_t>((b * channels + c) * length); }
};

struct TcnConfig {
  Index kernel_size = 7;
  /// Output channels per layer; the last entry is the network output width.
  std::vector<Index> channels{32, 32, 32, 32, 32, 1};
  Index input_channels = 1;
  /// Leading input channels carrying the series itself; the rest are covariates.
  Index series_channels = 1;
  bool use_residual = false;

  Index depth() const { return static_cast<Index>(channels.size()); }
  Index output_channels() const { return channels.back(); }
  /// Layer i (0-based) uses dilation 2^i.
  static Index dilation(Index layer) { return Index{1} << layer; }
  Index padding(Index layer) const { return (kernel_size - 1) * dilation(layer); }
  /// l' = 1 + 2(k-1)2^(d-1)
  Index look_back() const { return 1 + 2 * (kernel_size - 1) * (Index{1} << (depth() - 1)); }
  /// Exact number of inputs feeding one output: 1 + (k-1)(2^d - 1).
  Index receptive_field() const { return 1 + (kernel_size - 1) * ((Index{1} << depth()) - 1); }
  Index layer_inputs(Index layer) const { return layer == 0 ? input_channels : channels[static_cast<std::size_t>(layer - 1)]; }

  void validate() const;
};

/// Per-layer activations recorded by forward() for a subsequent backward().
struct ForwardCache {
  std::vector<Tensor3> inputs;           // input to layer i
  std::vector<Tensor3> pre_activations;  // conv (+ residual) before the activation
};

/// Dilated causal convolution stack. Hidden layers use ReLU, the output layer
/// is linear. Output position j is the one-step prediction for position j+1.
class TcnNetwork {
 public:
  TcnNetwork() = default;
  /// All parameters zero.
  explicit TcnNetwork(TcnConfig config);

  /// Weights 1/(k·c_in) on series-derived channels, 0 on covariate channels, biases 0.
  static TcnNetwork leveled(TcnConfig config);
  /// Weights uniform on [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases 0.
  static TcnNetwork random(TcnConfig config, std::uint64_t seed);

  const TcnConfig& config() const { return config_; }
  Index look_back() const { return config_.look_back(); }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  std::span<double> gradients() { return grads_; }
  std::span<const double> gradients() const { return grads_; }
  Index parameter_count() const { return static_cast<Index>(params_.size()); }
  void zero_grad();

  double& weight(Index layer, Index out, Index in, Index tap);
  double weight(Index layer, Index out, Index in, Index tap) const;
  double& bias(Index layer, Index out);
  double bias(Index layer, Index out) const;
  /// Flat parameter range [begin, end) owned by a layer.
  std::pair<Index, Index> layer_span(Index layer) const;

  std::uint64_t seed() const { return seed_; }
  void set_seed(std::uint64_t seed) { seed_ = seed; }

  Tensor3 forward(const Tensor3& input) const;
  Tensor3 forward(const Tensor3& input, ForwardCache& cache) const;

  /// Backpropagates upstream (same shape as the forward output). Adds
  /// parameter gradients into param_grads when it is non-empty and returns
  /// the gradient with respect to the input.
  Tensor3 backward(const ForwardCache& cache, const Tensor3& upstream,
                   std::span<double> param_grads) const;
  /// backward() accumulating into this network's gradient buffer.
  Tensor3 accumulate_gradients(const ForwardCache& cache, const Tensor3& upstream);

 private:
  Tensor3 run(const Tensor3& input, ForwardCache* cache) const;

  TcnConfig config_;
  std::vector<Index> weight_offset_;
  std::vector<Index> bias_offset_;
  std::vector<double> params_;
  std::vector<double> grads_;
  std::uint64_t seed_ = 0;
};

enum class LossKind { wape, squared };
enum class OptimizerKind { sgd, adam };

LossKind parse_loss(const std::string& name);
std::string to_string(LossKind kind);
OptimizerKind parse_optimizer(const std::string& name);
std::string to_string(OptimizerKind kind);

/// Loss between predictions and targets; writes dL/dpred into grad when non-empty.
/// WAPE uses subgradient 0 where pred == target, and falls back to the mean
/// absolute error when every target is zero.
double loss_and_gradient(LossKind kind, std::span<const double> pred, std::span<const double> target,
                         std::span<double> grad);

struct TrainConfig {
  double learning_rate = 1e-3;
  Index batch_rows = 128;
  Index batch_cols = 256;
  int max_epochs = 300;
  int patience = 7;
  LossKind loss = LossKind::wape;
  std::uint64_t seed = 0;
  double val_fraction = 0.1;
  OptimizerKind optimizer = OptimizerKind::sgd;

  void validate() const;
};

/// Moment buffers for the adaptive optimizer; unused by plain SGD.
struct OptimizerState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
};

/// One optimizer step on params from grads (SGD or Adam per cfg).
void apply_update(std::span<double> params, std::span<const double> grads, double learning_rate,
                  OptimizerKind kind, OptimizerState& state);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> trace;
  int best_epoch = 0;
  bool early_stopped = false;
};

/// One mini-batch: a set of rows and a contiguous block of target columns.
struct WindowBatch {
  std::vector<Index> rows;
  Index first_target = 0;
  Index target_count = 0;
};

/// Everything the mini-batch loop needs to know about a training problem.
/// Input windows cover columns [first_target - look_back, first_target + count - 1).
class WindowObjective {
 public:
  virtual ~WindowObjective() = default;
  virtual Index series() const = 0;
  /// Columns usable for targets; the loop holds out the tail for validation.
  virtual Index length() const = 0;
  virtual Tensor3 input(const WindowBatch& batch, Index look_back) const = 0;
  /// Loss over the last target_count output positions; grad has the output's shape.
  virtual double loss(const WindowBatch& batch, const Tensor3& output, Tensor3* grad) const = 0;
};

/// Series-forecasting objective: input channels [series, covariates...],
/// target = next value of the series.
class SeriesObjective : public WindowObjective {
 public:
  SeriesObjective(const Matrix& y, const CovariateTensor* covariates, LossKind loss);
  Index series() const override { return y_.rows(); }
  Index length() const override { return y_.cols(); }
  Tensor3 input(const WindowBatch& batch, Index look_back) const override;
  double loss(const WindowBatch& batch, const Tensor3& output, Tensor3* grad) const override;

 private:
  const Matrix& y_;
  const CovariateTensor* covariates_;
  LossKind loss_;
};

/// Copies series row and covariates into an input tensor for columns [begin, end).
Tensor3 assemble_input(const Matrix& y, const CovariateTensor* covariates,
                       const std::vector<Index>& rows, Index begin, Index end);

/// Tiles target columns [first, last) into row/column batches; order shuffled by rng.
template <typename Rng>
std::vector<WindowBatch> plan_batches(Index n_rows, Index first, Index last, Index batch_rows,
                                      Index batch_cols, Rng& rng);

/// Mini-batch SGD (or Adam) with early stopping on a held-out column tail.
/// Restores the parameters of the best validation epoch.
TrainResult train(TcnNetwork& net, const WindowObjective& objective, const TrainConfig& cfg);
/// Training on Y (training columns only) with optional covariates.
TrainResult train(TcnNetwork& net, const Matrix& y, const CovariateTensor* covariates,
                  const TrainConfig& cfg);

/// Loss of one-step predictions over target columns [first, last) of objective.
double evaluate_loss(const TcnNetwork& net, const WindowObjective& objective, Index first, Index last,
                     Index batch_rows);

/// Forward function of one network (or a composite) used by autoregressive rollout.
using ForwardFn = std::function<Tensor3(const Tensor3&)>;

/// Autoregressive forecast of `steps` values per row. history is [n × H], H >= look_back;
/// covariates (if any) are indexed from history column 0 and cover H + steps columns.
/// Each prediction is appended to the series channel before the next step.
Matrix rollout(const TcnNetwork& net, const Matrix& history, const CovariateTensor* covariates,
               Index steps);
Matrix rollout(const ForwardFn& forward, Index look_back, const Matrix& history,
               const CovariateTensor* covariates, Index steps);

/// One-step predictions for every column j in [first, last) from the true history.
Matrix one_step_predictions(const TcnNetwork& net, const Matrix& y, const CovariateTensor* covariates,
                            Index first, Index last);

/// Worker count from DEEPGLO_NUM_THREADS (default 1).
int configured_threads();

}  // namespace deepglo

#include "deepglo/tcn_batches.ipp"
