#include "deepglo/tcn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

namespace deepglo {

void TcnConfig::validate() const {
  if (kernel_size < 1) throw ConfigError("kernel size must be >= 1");
  if (channels.empty()) throw ConfigError("network needs at least one layer");
  if (depth() > 30) throw ConfigError("network depth above 30 is not supported");
  for (Index c : channels) {
    if (c < 1) throw ConfigError("layer channel counts must be >= 1");
  }
  if (input_channels < 1) throw ConfigError("input_channels must be >= 1");
  if (series_channels < 1 || series_channels > input_channels) {
    throw ConfigError("series_channels must lie in [1, input_channels]");
  }
}

TcnNetwork::TcnNetwork(TcnConfig config) : config_(std::move(config)) {
  config_.validate();
  Index offset = 0;
  for (Index i = 0; i < config_.depth(); ++i) {
    const Index c_out = config_.channels[static_cast<std::size_t>(i)];
    const Index c_in = config_.layer_inputs(i);
    weight_offset_.push_back(offset);
    offset += c_out * c_in * config_.kernel_size;
    bias_offset_.push_back(offset);
    offset += c_out;
  }
  params_.assign(static_cast<std::size_t>(offset), 0.0);
  grads_.assign(static_cast<std::size_t>(offset), 0.0);
}

TcnNetwork TcnNetwork::leveled(TcnConfig config) {
  TcnNetwork net(std::move(config));
  const TcnConfig& cfg = net.config_;
  const Index k = cfg.kernel_size;
  for (Index i = 0; i < cfg.depth(); ++i) {
    const Index c_in = cfg.layer_inputs(i);
    const Index series_in = i == 0 ? cfg.series_channels : c_in;
    const double w = 1.0 / static_cast<double>(k * series_in);
    for (Index o = 0; o < cfg.channels[static_cast<std::size_t>(i)]; ++o) {
      for (Index c = 0; c < series_in; ++c) {
        for (Index m = 0; m < k; ++m) net.weight(i, o, c, m) = w;
      }
    }
  }
  return net;
}

TcnNetwork TcnNetwork::random(TcnConfig config, std::uint64_t seed) {
  TcnNetwork net(std::move(config));
  net.seed_ = seed;
  std::mt19937_64 rng(seed);
  const TcnConfig& cfg = net.config_;
  for (Index i = 0; i < cfg.depth(); ++i) {
    const Index c_in = cfg.layer_inputs(i);
    const double bound = 1.0 / std::sqrt(static_cast<double>(c_in * cfg.kernel_size));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Index o = 0; o < cfg.channels[static_cast<std::size_t>(i)]; ++o) {
      for (Index c = 0; c < c_in; ++c) {
        for (Index m = 0; m < cfg.kernel_size; ++m) net.weight(i, o, c, m) = dist(rng);
      }
    }
  }
  return net;
}

void TcnNetwork::zero_grad() { std::fill(grads_.begin(), grads_.end(), 0.0); }

double& TcnNetwork::weight(Index layer, Index out, Index in, Index tap) {
  const Index c_in = config_.layer_inputs(layer);
  return params_[static_cast<std::size_t>(weight_offset_[static_cast<std::size_t>(layer)] +
                                          (out * c_in + in) * config_.kernel_size + tap)];
}

double TcnNetwork::weight(Index layer, Index out, Index in, Index tap) const {
  return const_cast<TcnNetwork*>(this)->weight(layer, out, in, tap);
}

double& TcnNetwork::bias(Index layer, Index out) {
  return params_[static_cast<std::size_t>(bias_offset_[static_cast<std::size_t>(layer)] + out)];
}

double TcnNetwork::bias(Index layer, Index out) const {
  return const_cast<TcnNetwork*>(this)->bias(layer, out);
}

std::pair<Index, Index> TcnNetwork::layer_span(Index layer) const {
  const auto l = static_cast<std::size_t>(layer);
  return {weight_offset_[l], bias_offset_[l] + config_.channels[l]};
}

Tensor3 TcnNetwork::forward(const Tensor3& input) const { return run(input, nullptr); }

Tensor3 TcnNetwork::forward(const Tensor3& input, ForwardCache& cache) const {
  return run(input, &cache);
}

Tensor3 TcnNetwork::run(const Tensor3& input, ForwardCache* cache) const {
  if (input.channels != config_.input_channels) {
    throw ShapeError("network expects " + std::to_string(config_.input_channels) +
                     " input channels, got " + std::to_string(input.channels));
  }
  if (input.length < 1) throw ShapeError("empty input window");
  if (cache) {
    cache->inputs.clear();
    cache->pre_activations.clear();
  }
  const Index B = input.batch;
  const Index L = input.length;
  const Index k = config_.kernel_size;
  Tensor3 x = input;
  for (Index i = 0; i < config_.depth(); ++i) {
    const Index c_in = config_.layer_inputs(i);
    const Index c_out = config_.channels[static_cast<std::size_t>(i)];
    const Index dil = TcnConfig::dilation(i);
    Tensor3 z(B, c_out, L);
    for (Index b = 0; b < B; ++b) {
      for (Index o = 0; o < c_out; ++o) {
        double* zr = z.row(b, o);
        std::fill(zr, zr + L, bias(i, o));
        for (Index c = 0; c < c_in; ++c) {
          const double* xr = x.row(b, c);
          for (Index m = 0; m < k; ++m) {
            const Index shift = (k - 1 - m) * dil;
            if (shift >= L) continue;
            const double w = weight(i, o, c, m);
            for (Index t = shift; t < L; ++t) zr[t] += w * xr[t - shift];
          }
        }
      }
    }
    if (config_.use_residual && c_in == c_out) {
      for (std::size_t q = 0; q < z.data.size(); ++q) z.data[q] += x.data[q];
    }
    Tensor3 a = z;
    if (i + 1 < config_.depth()) {
      for (double& v : a.data) v = v > 0.0 ? v : 0.0;
    }
    if (cache) {
      cache->inputs.push_back(std::move(x));
      cache->pre_activations.push_back(std::move(z));
    }
    x = std::move(a);
  }
  return x;
}

Tensor3 TcnNetwork::backward(const ForwardCache& cache, const Tensor3& upstream,
                             std::span<double> param_grads) const {
  if (static_cast<Index>(cache.inputs.size()) != config_.depth()) {
    throw ShapeError("backward called without a matching forward cache");
  }
  const Tensor3& last = cache.pre_activations.back();
  if (upstream.batch != last.batch || upstream.channels != last.channels || upstream.length != last.length) {
    throw ShapeError("upstream gradient shape does not match the forward output");
  }
  if (!param_grads.empty() && static_cast<Index>(param_grads.size()) != parameter_count()) {
    throw ShapeError("parameter gradient buffer has the wrong size");
  }
  const Index k = config_.kernel_size;
  Tensor3 g = upstream;
  for (Index i = config_.depth() - 1; i >= 0; --i) {
    const Tensor3& x = cache.inputs[static_cast<std::size_t>(i)];
    const Tensor3& z = cache.pre_activations[static_cast<std::size_t>(i)];
    const Index B = x.batch;
    const Index L = x.length;
    const Index c_in = x.channels;
    const Index c_out = z.channels;
    const Index dil = TcnConfig::dilation(i);
    Tensor3 dz = std::move(g);
    if (i + 1 < config_.depth()) {
      for (std::size_t q = 0; q < dz.data.size(); ++q) {
        if (z.data[q] <= 0.0) dz.data[q] = 0.0;
      }
    }
    Tensor3 dx(B, c_in, L);
    const std::size_t w0 = static_cast<std::size_t>(weight_offset_[static_cast<std::size_t>(i)]);
    const std::size_t b0 = static_cast<std::size_t>(bias_offset_[static_cast<std::size_t>(i)]);
    for (Index b = 0; b < B; ++b) {
      for (Index o = 0; o < c_out; ++o) {
        const double* dzr = dz.row(b, o);
        if (!param_grads.empty()) {
          double s = 0.0;
          for (Index t = 0; t < L; ++t) s += dzr[t];
          param_grads[b0 + static_cast<std::size_t>(o)] += s;
        }
        for (Index c = 0; c < c_in; ++c) {
          const double* xr = x.row(b, c);
          double* dxr = dx.row(b, c);
          for (Index m = 0; m < k; ++m) {
            const Index shift = (k - 1 - m) * dil;
            if (shift >= L) continue;
            const double w = weight(i, o, c, m);
            double gw = 0.0;
            for (Index t = shift; t < L; ++t) {
              gw += dzr[t] * xr[t - shift];
              dxr[t - shift] += w * dzr[t];
            }
            if (!param_grads.empty()) {
              param_grads[w0 + static_cast<std::size_t>((o * c_in + c) * k + m)] += gw;
            }
          }
        }
      }
    }
    if (config_.use_residual && c_in == c_out) {
      for (std::size_t q = 0; q < dx.data.size(); ++q) dx.data[q] += dz.data[q];
    }
    g = std::move(dx);
  }
  return g;
}

Tensor3 TcnNetwork::accumulate_gradients(const ForwardCache& cache, const Tensor3& upstream) {
  return backward(cache, upstream, grads_);
}

LossKind parse_loss(const std::string& name) {
  if (name == "wape") return LossKind::wape;
  if (name == "squared" || name == "l2") return LossKind::squared;
  throw ConfigError("unknown loss '" + name + "' (expected wape or squared)");
}

std::string to_string(LossKind kind) { return kind == LossKind::wape ? "wape" : "squared"; }

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + name + "' (expected sgd or adam)");
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::sgd ? "sgd" : "adam"; }

double loss_and_gradient(LossKind kind, std::span<const double> pred, std::span<const double> target,
                         std::span<double> grad) {
  if (pred.size() != target.size() || (!grad.empty() && grad.size() != pred.size())) {
    throw ShapeError("loss operands differ in size");
  }
  const std::size_t n = pred.size();
  if (n == 0) return 0.0;
  if (kind == LossKind::squared) {
    double s = 0.0;
    for (std::size_t q = 0; q < n; ++q) {
      const double d = pred[q] - target[q];
      s += d * d;
      if (!grad.empty()) grad[q] = 2.0 * d / static_cast<double>(n);
    }
    return s / static_cast<double>(n);
  }
  double denom = 0.0;
  for (double v : target) denom += std::abs(v);
  if (denom == 0.0) denom = static_cast<double>(n);
  double s = 0.0;
  for (std::size_t q = 0; q < n; ++q) {
    const double d = pred[q] - target[q];
    s += std::abs(d);
    if (!grad.empty()) grad[q] = d > 0.0 ? 1.0 / denom : (d < 0.0 ? -1.0 / denom : 0.0);
  }
  return s / denom;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be a finite value >= 0");
  }
  if (batch_rows < 1 || batch_cols < 1) throw ConfigError("batch sizes must be >= 1");
  if (max_epochs < 0) throw ConfigError("max_epochs must be >= 0");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw ConfigError("val_fraction must lie in (0, 1)");
  }
}

Tensor3 assemble_input(const Matrix& y, const CovariateTensor* covariates,
                       const std::vector<Index>& rows, Index begin, Index end) {
  const Index extra = covariates ? covariates->channels() : 0;
  const Index L = end - begin;
  Tensor3 in(static_cast<Index>(rows.size()), 1 + extra, L);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Index b = static_cast<Index>(r);
    const Index row = rows[r];
    double* s = in.row(b, 0);
    for (Index t = 0; t < L; ++t) {
      const Index col = begin + t;
      s[t] = col >= 0 ? y(row, col) : 0.0;
    }
    for (Index c = 0; c < extra; ++c) {
      double* zr = in.row(b, 1 + c);
      for (Index t = 0; t < L; ++t) {
        const Index col = begin + t;
        zr[t] = col >= 0 ? covariates->at(row, c, col) : 0.0;
      }
    }
  }
  return in;
}

SeriesObjective::SeriesObjective(const Matrix& y, const CovariateTensor* covariates, LossKind loss)
    : y_(y), covariates_(covariates && !covariates->empty() ? covariates : nullptr), loss_(loss) {
  if (covariates_ && (covariates_->length() < y.cols() ||
                      (covariates_->series() != y.rows() && covariates_->series() != 1))) {
    throw ShapeError("covariates do not cover the training matrix");
  }
}

Tensor3 SeriesObjective::input(const WindowBatch& batch, Index look_back) const {
  return assemble_input(y_, covariates_, batch.rows, batch.first_target - look_back,
                        batch.first_target + batch.target_count - 1);
}

double SeriesObjective::loss(const WindowBatch& batch, const Tensor3& output, Tensor3* grad) const {
  const Index count = batch.target_count;
  const Index offset = output.length - count;
  std::vector<double> pred;
  std::vector<double> target;
  pred.reserve(static_cast<std::size_t>(count) * batch.rows.size());
  target.reserve(pred.capacity());
  for (std::size_t r = 0; r < batch.rows.size(); ++r) {
    for (Index q = 0; q < count; ++q) {
      pred.push_back(output(static_cast<Index>(r), 0, offset + q));
      target.push_back(y_(batch.rows[r], batch.first_target + q));
    }
  }
  std::vector<double> g(grad ? pred.size() : 0);
  const double value = loss_and_gradient(loss_, pred, target, g);
  if (grad) {
    *grad = Tensor3(output.batch, output.channels, output.length);
    std::size_t q = 0;
    for (std::size_t r = 0; r < batch.rows.size(); ++r) {
      for (Index p = 0; p < count; ++p) (*grad)(static_cast<Index>(r), 0, offset + p) = g[q++];
    }
  }
  return value;
}

double evaluate_loss(const TcnNetwork& net, const WindowObjective& objective, Index first, Index last,
                     Index batch_rows) {
  const Index n = objective.series();
  const Index L = net.look_back();
  double weighted = 0.0;
  double weight = 0.0;
  // Row-weighted mean of chunk losses keeps memory bounded on wide data.
  for (Index r = 0; r < n; r += batch_rows) {
    WindowBatch b;
    for (Index i = r; i < std::min(n, r + batch_rows); ++i) b.rows.push_back(i);
    b.first_target = first;
    b.target_count = last - first;
    const Tensor3 out = net.forward(objective.input(b, L));
    const double rows = static_cast<double>(b.rows.size());
    weighted += rows * objective.loss(b, out, nullptr);
    weight += rows;
  }
  return weight > 0.0 ? weighted / weight : 0.0;
}

void apply_update(std::span<double> params, std::span<const double> grads, double learning_rate,
                  OptimizerKind kind, OptimizerState& state) {
  if (kind == OptimizerKind::sgd) {
    for (std::size_t q = 0; q < params.size(); ++q) params[q] -= learning_rate * grads[q];
    return;
  }
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (std::size_t q = 0; q < params.size(); ++q) {
    state.m[q] = beta1 * state.m[q] + (1.0 - beta1) * grads[q];
    state.v[q] = beta2 * state.v[q] + (1.0 - beta2) * grads[q] * grads[q];
    params[q] -= learning_rate * (state.m[q] / c1) / (std::sqrt(state.v[q] / c2) + eps);
  }
}

TrainResult train(TcnNetwork& net, const WindowObjective& objective, const TrainConfig& cfg) {
  cfg.validate();
  const Index t = objective.length();
  const Index L = net.look_back();
  const Index val_count = static_cast<Index>(std::ceil(cfg.val_fraction * static_cast<double>(t)));
  const Index t_fit = t - val_count;
  if (t_fit <= L || val_count < 1) {
    throw ShapeError("training range of " + std::to_string(t) + " columns is too short for look-back " +
                     std::to_string(L) + " plus a validation tail");
  }
  std::mt19937_64 rng(cfg.seed);
  OptimizerState adam;
  TrainResult result;

  auto check = [](double v, int epoch, const char* what) {
    if (!std::isfinite(v)) {
      throw DivergenceError(std::string(what) + " loss became non-finite at epoch " + std::to_string(epoch));
    }
  };

  const double init_train = evaluate_loss(net, objective, L, t_fit, cfg.batch_rows);
  const double init_val = evaluate_loss(net, objective, t_fit, t, cfg.batch_rows);
  check(init_train, 0, "training");
  check(init_val, 0, "validation");
  result.trace.push_back({0, init_train, init_val});
  double best = init_val;
  std::vector<double> best_params(net.parameters().begin(), net.parameters().end());
  int wait = 0;

  ForwardCache cache;
  Tensor3 grad;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto batches = plan_batches(objective.series(), L, t_fit, cfg.batch_rows, cfg.batch_cols, rng);
    double sum = 0.0;
    for (const auto& batch : batches) {
      const Tensor3 out = net.forward(objective.input(batch, L), cache);
      const double l = objective.loss(batch, out, &grad);
      check(l, epoch, "training");
      net.zero_grad();
      net.accumulate_gradients(cache, grad);
      apply_update(net.parameters(), net.gradients(), cfg.learning_rate, cfg.optimizer, adam);
      sum += l;
    }
    const double val = evaluate_loss(net, objective, t_fit, t, cfg.batch_rows);
    check(val, epoch, "validation");
    result.trace.push_back({epoch, sum / static_cast<double>(batches.size()), val});
    if (val < best) {
      best = val;
      best_params.assign(net.parameters().begin(), net.parameters().end());
      result.best_epoch = epoch;
      wait = 0;
    } else if (++wait >= cfg.patience) {
      result.early_stopped = true;
      break;
    }
  }
  std::copy(best_params.begin(), best_params.end(), net.parameters().begin());
  net.zero_grad();
  return result;
}

TrainResult train(TcnNetwork& net, const Matrix& y, const CovariateTensor* covariates,
                  const TrainConfig& cfg) {
  const Index extra = covariates ? covariates->channels() : 0;
  if (net.config().input_channels != 1 + extra) {
    throw ShapeError("network has " + std::to_string(net.config().input_channels) +
                     " inputs but data supplies " + std::to_string(1 + extra));
  }
  SeriesObjective objective(y, covariates, cfg.loss);
  return train(net, objective, cfg);
}

int configured_threads() {
  if (const char* env = std::getenv("DEEPGLO_NUM_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

namespace {

void rollout_rows(const ForwardFn& forward, Index look_back, const Matrix& history,
                  const CovariateTensor* covariates, Index steps, Index row_begin, Index row_end,
                  Matrix& out) {
  const Index H = history.cols();
  const Index extra = covariates ? covariates->channels() : 0;
  const Index L = look_back;
  const Index rows = row_end - row_begin;
  // series buffer: last L history values followed by the predictions
  Matrix series(rows, L + steps);
  series.leftCols(L) = history.block(row_begin, H - L, rows, L);
  for (Index s = 0; s < steps; ++s) {
    Tensor3 in(rows, 1 + extra, L);
    for (Index b = 0; b < rows; ++b) {
      double* sr = in.row(b, 0);
      for (Index p = 0; p < L; ++p) sr[p] = series(b, s + p);
      for (Index c = 0; c < extra; ++c) {
        double* zr = in.row(b, 1 + c);
        for (Index p = 0; p < L; ++p) zr[p] = covariates->at(row_begin + b, c, H - L + s + p);
      }
    }
    const Tensor3 y = forward(in);
    for (Index b = 0; b < rows; ++b) {
      const double v = y(b, 0, L - 1);
      series(b, L + s) = v;
      out(row_begin + b, s) = v;
    }
  }
}

}  // namespace

Matrix rollout(const ForwardFn& forward, Index look_back, const Matrix& history,
               const CovariateTensor* covariates, Index steps) {
  if (steps < 0) throw ShapeError("negative rollout length");
  if (history.cols() < look_back) {
    throw ShapeError("rollout needs " + std::to_string(look_back) + " history columns, got " +
                     std::to_string(history.cols()));
  }
  if (covariates && covariates->empty()) covariates = nullptr;
  if (covariates && covariates->length() < history.cols() + steps) {
    throw ShapeError("covariates do not cover the forecast range");
  }
  const Index n = history.rows();
  Matrix out(n, steps);
  if (steps == 0 || n == 0) return out;
  const Index threads = std::min<Index>(configured_threads(), n);
  if (threads <= 1) {
    rollout_rows(forward, look_back, history, covariates, steps, 0, n, out);
    return out;
  }
  std::vector<std::thread> workers;
  const Index chunk = (n + threads - 1) / threads;
  for (Index r = 0; r < n; r += chunk) {
    workers.emplace_back(rollout_rows, std::cref(forward), look_back, std::cref(history), covariates,
                         steps, r, std::min(n, r + chunk), std::ref(out));
  }
  for (auto& w : workers) w.join();
  return out;
}

Matrix rollout(const TcnNetwork& net, const Matrix& history, const CovariateTensor* covariates,
               Index steps) {
  const Index extra = covariates && !covariates->empty() ? covariates->channels() : 0;
  if (net.config().input_channels != 1 + extra) {
    throw ShapeError("network has " + std::to_string(net.config().input_channels) +
                     " inputs but rollout supplies " + std::to_string(1 + extra));
  }
  ForwardFn fn = [&net](const Tensor3& in) { return net.forward(in); };
  return rollout(fn, net.look_back(), history, covariates, steps);
}

Matrix one_step_predictions(const TcnNetwork& net, const Matrix& y, const CovariateTensor* covariates,
                            Index first, Index last) {
  if (first < 1 || last > y.cols() || first > last) {
    throw ShapeError("one-step prediction range out of bounds");
  }
  if (covariates && covariates->empty()) covariates = nullptr;
  const Index n = y.rows();
  const Index L = net.look_back();
  Matrix out(n, last - first);
  constexpr Index kChunk = 256;
  for (Index r = 0; r < n; r += kChunk) {
    std::vector<Index> rows;
    for (Index i = r; i < std::min(n, r + kChunk); ++i) rows.push_back(i);
    const Tensor3 in = assemble_input(y, covariates, rows, first - L, last - 1);
    const Tensor3 o = net.forward(in);
    const Index offset = o.length - (last - first);
    for (std::size_t b = 0; b < rows.size(); ++b) {
      for (Index q = 0; q < last - first; ++q) out(rows[b], q) = o(static_cast<Index>(b), 0, offset + q);
    }
  }
  return out;
}

}  // namespace deepglo
