#include "deepglo/dln.hpp"

#include <cmath>
#include <random>

namespace deepglo {

DlnNetwork make_dln(const TcnConfig& config, Index window, std::uint64_t seed) {
  if (window < 1) throw ConfigError("dln.window must be >= 1");
  TcnConfig c = config;
  c.input_channels = 1;
  c.series_channels = 1;
  if (c.output_channels() != 1) throw ConfigError("DLN networks must have a single output channel");
  DlnNetwork dln;
  dln.mean_net = TcnNetwork::leveled(c);
  dln.mean_net.set_seed(seed);
  dln.residual_net = TcnNetwork::random(c, seed);
  const auto [begin, end] = dln.residual_net.layer_span(c.depth() - 1);
  auto p = dln.residual_net.parameters();
  std::fill(p.begin() + begin, p.begin() + end, 0.0);
  dln.window = window;
  return dln;
}

Tensor3 dln_forward(const DlnNetwork& dln, const Tensor3& input) {
  if (dln.mean_net.look_back() != dln.residual_net.look_back()) {
    throw ShapeError("DLN sub-networks differ in look-back");
  }
  Tensor3 out = dln.mean_net.forward(input);
  const Tensor3 r = dln.residual_net.forward(input);
  for (std::size_t q = 0; q < out.data.size(); ++q) out.data[q] += r.data[q];
  return out;
}

Matrix rolling_mean_targets(const Matrix& y, Index window) {
  if (window < 1) throw ConfigError("rolling-mean window must be >= 1");
  const Index cols = y.cols() - window + 1;
  if (cols < 1) return Matrix(y.rows(), 0);
  Matrix m(y.rows(), cols);
  for (Index i = 0; i < y.rows(); ++i) {
    for (Index c = 0; c < cols; ++c) {
      double s = 0.0;
      for (Index q = 0; q < window; ++q) s += y(i, c + q);
      m(i, c) = s / static_cast<double>(window);
    }
  }
  return m;
}

namespace {

// Targets for column c come from column c of `targets`; the loss covers the
// batch positions whose target column lies below `limit`.
double batch_loss(LossKind kind, const WindowBatch& batch, const Tensor3& output, const Matrix& targets, Index limit,
                  Tensor3* grad) {
  const Index count = std::min(batch.target_count, limit - batch.first_target);
  const Index offset = output.length - batch.target_count;
  std::vector<double> pred;
  std::vector<double> target;
  for (std::size_t r = 0; r < batch.rows.size(); ++r) {
    for (Index q = 0; q < count; ++q) {
      pred.push_back(output(static_cast<Index>(r), 0, offset + q));
      target.push_back(targets(batch.rows[r], batch.first_target + q));
    }
  }
  std::vector<double> g(grad ? pred.size() : 0);
  const double value = loss_and_gradient(kind, pred, target, g);
  if (grad) {
    *grad = Tensor3(output.batch, output.channels, output.length);
    std::size_t q = 0;
    for (std::size_t r = 0; r < batch.rows.size(); ++r) {
      for (Index p = 0; p < count; ++p) (*grad)(static_cast<Index>(r), 0, offset + p) = g[q++];
    }
  }
  return value;
}

double combined_loss(const DlnNetwork& dln, const Matrix& y, LossKind kind, Index first, Index last,
                     Index batch_rows) {
  double weighted = 0.0;
  double weight = 0.0;
  const Index L = dln.look_back();
  for (Index r = 0; r < y.rows(); r += batch_rows) {
    WindowBatch b;
    for (Index i = r; i < std::min(y.rows(), r + batch_rows); ++i) b.rows.push_back(i);
    b.first_target = first;
    b.target_count = last - first;
    const Tensor3 out = dln_forward(dln, assemble_input(y, nullptr, b.rows, first - L, last - 1));
    const double rows = static_cast<double>(b.rows.size());
    weighted += rows * batch_loss(kind, b, out, y, last, nullptr);
    weight += rows;
  }
  return weight > 0.0 ? weighted / weight : 0.0;
}

double mean_loss(const DlnNetwork& dln, const Matrix& y, const Matrix& m, LossKind kind, Index first, Index last,
                 Index batch_rows) {
  if (first >= last) return 0.0;
  double weighted = 0.0;
  double weight = 0.0;
  const Index L = dln.look_back();
  for (Index r = 0; r < y.rows(); r += batch_rows) {
    WindowBatch b;
    for (Index i = r; i < std::min(y.rows(), r + batch_rows); ++i) b.rows.push_back(i);
    b.first_target = first;
    b.target_count = last - first;
    const Tensor3 out = dln.mean_net.forward(assemble_input(y, nullptr, b.rows, first - L, last - 1));
    const double rows = static_cast<double>(b.rows.size());
    weighted += rows * batch_loss(kind, b, out, m, last, nullptr);
    weight += rows;
  }
  return weight > 0.0 ? weighted / weight : 0.0;
}

}  // namespace

double dln_mean_step(DlnNetwork& dln, const Tensor3& input, const WindowBatch& batch, const Matrix& mean_targets,
                     Index mean_limit, const TrainConfig& cfg, DlnOptimizer& opt, Tensor3& mean_out) {
  ForwardCache cache;
  mean_out = dln.mean_net.forward(input, cache);
  if (batch.first_target >= mean_limit) return std::nan("");
  Tensor3 grad;
  const double loss = batch_loss(cfg.loss, batch, mean_out, mean_targets, mean_limit, &grad);
  if (!std::isfinite(loss)) return loss;
  dln.mean_net.zero_grad();
  dln.mean_net.accumulate_gradients(cache, grad);
  apply_update(dln.mean_net.parameters(), dln.mean_net.gradients(), cfg.learning_rate, cfg.optimizer, opt.mean);
  return loss;
}

double dln_residual_step(DlnNetwork& dln, const Tensor3& input, const WindowBatch& batch, const Tensor3& mean_out,
                         const Matrix& y, Index limit, const TrainConfig& cfg, DlnOptimizer& opt) {
  ForwardCache cache;
  Tensor3 total = dln.residual_net.forward(input, cache);
  for (std::size_t q = 0; q < total.data.size(); ++q) total.data[q] += mean_out.data[q];
  Tensor3 grad;
  const double loss = batch_loss(cfg.loss, batch, total, y, limit, &grad);
  if (!std::isfinite(loss)) return loss;
  dln.residual_net.zero_grad();
  dln.residual_net.accumulate_gradients(cache, grad);
  apply_update(dln.residual_net.parameters(), dln.residual_net.gradients(), cfg.learning_rate, cfg.optimizer,
               opt.residual);
  return loss;
}

DlnTrainResult dln_train(DlnNetwork& dln, const Matrix& y, const TrainConfig& cfg) {
  cfg.validate();
  const Index t = y.cols();
  const Index L = dln.look_back();
  const Index val_count = static_cast<Index>(std::ceil(cfg.val_fraction * static_cast<double>(t)));
  const Index t_fit = t - val_count;
  if (t_fit <= L || val_count < 1) {
    throw ShapeError("training range of " + std::to_string(t) + " columns is too short for look-back " +
                     std::to_string(L) + " plus a validation tail");
  }
  // Mean targets may only use columns inside the fitting range.
  const Matrix m = rolling_mean_targets(y.leftCols(t_fit), dln.window);
  const Index mean_limit = std::max(L, m.cols());

  auto check = [](double v, int epoch) {
    if (!std::isfinite(v)) throw DivergenceError("DLN loss became non-finite at epoch " + std::to_string(epoch));
  };

  DlnTrainResult result;
  const double m0 = mean_loss(dln, y, m, cfg.loss, L, mean_limit, cfg.batch_rows);
  const double tr0 = combined_loss(dln, y, cfg.loss, L, t_fit, cfg.batch_rows);
  const double v0 = combined_loss(dln, y, cfg.loss, t_fit, t, cfg.batch_rows);
  check(m0, 0);
  check(tr0, 0);
  check(v0, 0);
  result.mean_trace.push_back({0, m0, 0.0});
  result.total_trace.push_back({0, tr0, v0});

  std::mt19937_64 rng(cfg.seed);
  DlnOptimizer opt;
  double best = v0;
  std::vector<double> best_m(dln.mean_net.parameters().begin(), dln.mean_net.parameters().end());
  std::vector<double> best_r(dln.residual_net.parameters().begin(), dln.residual_net.parameters().end());
  int wait = 0;
  Tensor3 mean_out;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto batches = plan_batches(y.rows(), L, t_fit, cfg.batch_rows, cfg.batch_cols, rng);
    double mean_sum = 0.0;
    double total_sum = 0.0;
    Index mean_batches = 0;
    for (const auto& batch : batches) {
      const Tensor3 in = assemble_input(y, nullptr, batch.rows, batch.first_target - L,
                                        batch.first_target + batch.target_count - 1);
      const double lm = dln_mean_step(dln, in, batch, m, mean_limit, cfg, opt, mean_out);
      if (batch.first_target < mean_limit) {
        check(lm, epoch);
        mean_sum += lm;
        ++mean_batches;
      }
      const double lt = dln_residual_step(dln, in, batch, mean_out, y, t_fit, cfg, opt);
      check(lt, epoch);
      total_sum += lt;
    }
    const double val = combined_loss(dln, y, cfg.loss, t_fit, t, cfg.batch_rows);
    check(val, epoch);
    result.mean_trace.push_back(
        {epoch, mean_batches > 0 ? mean_sum / static_cast<double>(mean_batches) : 0.0, 0.0});
    result.total_trace.push_back({epoch, total_sum / static_cast<double>(batches.size()), val});
    if (val < best) {
      best = val;
      best_m.assign(dln.mean_net.parameters().begin(), dln.mean_net.parameters().end());
      best_r.assign(dln.residual_net.parameters().begin(), dln.residual_net.parameters().end());
      result.best_epoch = epoch;
      wait = 0;
    } else if (++wait >= cfg.patience) {
      result.early_stopped = true;
      break;
    }
  }
  std::copy(best_m.begin(), best_m.end(), dln.mean_net.parameters().begin());
  std::copy(best_r.begin(), best_r.end(), dln.residual_net.parameters().begin());
  dln.mean_net.zero_grad();
  dln.residual_net.zero_grad();
  return result;
}

Matrix dln_rollout(const DlnNetwork& dln, const Matrix& history, Index steps) {
  ForwardFn fn = [&dln](const Tensor3& in) { return dln_forward(dln, in); };
  return rollout(fn, dln.look_back(), history, nullptr, steps);
}

}  // namespace deepglo
