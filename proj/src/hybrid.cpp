#include "deepglo/hybrid.hpp"

namespace deepglo {

Combiner parse_combiner(const std::string& name) {
  if (name == "covariate") return Combiner::covariate;
  if (name == "attention") return Combiner::attention;
  throw ConfigError("unknown combiner '" + name + "' (expected covariate or attention)");
}

std::string to_string(Combiner combiner) { return combiner == Combiner::covariate ? "covariate" : "attention"; }

namespace {

void require_fitted(const FactorModel& global) {
  if (global.f.size() == 0 || global.x.size() == 0) throw Error("global model is not fitted");
}

// Copies the listed channels of input into a new tensor.
Tensor3 select_channels(const Tensor3& input, Index first, Index count) {
  Tensor3 out(input.batch, count, input.length);
  for (Index b = 0; b < input.batch; ++b) {
    for (Index c = 0; c < count; ++c) {
      std::copy_n(input.row(b, first + c), input.length, out.row(b, c));
    }
  }
  return out;
}

// Training objective of T_A: blend fixed component predictions.
class AttentionObjective : public WindowObjective {
 public:
  AttentionObjective(const Matrix& y, Matrix global, Matrix local, LossKind loss)
      : y_(y), global_(std::move(global)), local_(std::move(local)), loss_(loss) {}
  Index series() const override { return y_.rows(); }
  Index length() const override { return y_.cols(); }
  Tensor3 input(const WindowBatch& batch, Index look_back) const override {
    return assemble_input(y_, nullptr, batch.rows, batch.first_target - look_back,
                          batch.first_target + batch.target_count - 1);
  }
  double loss(const WindowBatch& batch, const Tensor3& output, Tensor3* grad) const override {
    const Index count = batch.target_count;
    const Index offset = output.length - count;
    std::vector<double> pred;
    std::vector<double> target;
    for (std::size_t r = 0; r < batch.rows.size(); ++r) {
      const Index row = batch.rows[r];
      for (Index q = 0; q < count; ++q) {
        const Index col = batch.first_target + q;
        const Index b = static_cast<Index>(r);
        pred.push_back(global_(row, col) * output(b, 0, offset + q) + local_(row, col) * output(b, 1, offset + q));
        target.push_back(y_(row, col));
      }
    }
    std::vector<double> g(grad ? pred.size() : 0);
    const double value = loss_and_gradient(loss_, pred, target, g);
    if (grad) {
      *grad = Tensor3(output.batch, output.channels, output.length);
      std::size_t q = 0;
      for (std::size_t r = 0; r < batch.rows.size(); ++r) {
        const Index row = batch.rows[r];
        const Index b = static_cast<Index>(r);
        for (Index p = 0; p < count; ++p, ++q) {
          const Index col = batch.first_target + p;
          (*grad)(b, 0, offset + p) = g[q] * global_(row, col);
          (*grad)(b, 1, offset + p) = g[q] * local_(row, col);
        }
      }
    }
    return value;
  }

 private:
  const Matrix& y_;
  Matrix global_;
  Matrix local_;
  LossKind loss_;
};

}  // namespace

Matrix global_channel(const FactorModel& global, Index length) {
  require_fitted(global);
  const Index covered = global.x.cols();
  if (length <= covered) return global.f * global.x.leftCols(length);
  Matrix out(global.f.rows(), length);
  out.leftCols(covered) = global.f * global.x;
  out.rightCols(length - covered) = predict_global(global, length - covered);
  return out;
}

CovariateTensor build_hybrid_covariates(const FactorModel& global, const CovariateTensor* z, Index length) {
  require_fitted(global);
  if (z && z->empty()) z = nullptr;
  if (z && z->length() < length) {
    throw ShapeError("covariates cover " + std::to_string(z->length()) + " columns, need " + std::to_string(length));
  }
  CovariateTensor out(global.f.rows(), length);
  out.add_channel(global_channel(global, length));
  if (z) out.append(z->time_slice(0, length));
  return out;
}

TcnNetwork make_attention_net(const TcnConfig& local, std::uint64_t seed) {
  TcnConfig c = local;
  c.input_channels = 1;
  c.series_channels = 1;
  c.channels.back() = 2;
  TcnNetwork net = TcnNetwork::random(c, seed);
  const Index last = c.depth() - 1;
  for (Index o = 0; o < 2; ++o) {
    for (Index i = 0; i < c.layer_inputs(last); ++i) {
      for (Index m = 0; m < c.kernel_size; ++m) net.weight(last, o, i, m) = 0.0;
    }
    net.bias(last, o) = 0.5;
  }
  return net;
}

DeepGloFit fit_deepglo(const Matrix& y, const CovariateTensor* z, const DeepGloConfig& cfg,
                       const TrainConfig& train_cfg) {
  if (z && z->empty()) z = nullptr;
  if (cfg.local.output_channels() != 1) throw ConfigError("local network must have one output channel");
  DeepGloFit result;
  result.global_fit = fit_tcn_mf(y, cfg.global, train_cfg);
  DeepGloModel& model = result.model;
  model.global = result.global_fit.model;
  model.combiner = cfg.combiner;

  const CovariateTensor hybrid_cov = build_hybrid_covariates(model.global, z, y.cols());
  TcnConfig local = cfg.local;
  local.input_channels = 1 + hybrid_cov.channels();
  local.series_channels = 1;
  model.hybrid = TcnNetwork::leveled(local);
  model.hybrid.set_seed(train_cfg.seed);
  result.local_trace = train(model.hybrid, y, &hybrid_cov, train_cfg);

  if (cfg.combiner == Combiner::attention) {
    model.attention = make_attention_net(cfg.local, train_cfg.seed);
    result.attention_trace = fit_attention(model, y, z, train_cfg);
  }
  return result;
}

TrainResult fit_attention(DeepGloModel& model, const Matrix& y, const CovariateTensor* z, const TrainConfig& cfg) {
  if (!model.attention) throw Error("model has no attention network");
  const CovariateTensor hybrid_cov = build_hybrid_covariates(model.global, z, y.cols());
  Matrix local(y.rows(), y.cols());
  local.col(0) = y.col(0);
  local.rightCols(y.cols() - 1) = one_step_predictions(model.hybrid, y, &hybrid_cov, 1, y.cols());
  AttentionObjective objective(y, hybrid_cov.channel(0), std::move(local), cfg.loss);
  return train(*model.attention, objective, cfg);
}

Tensor3 attention_forward(const DeepGloModel& model, const Tensor3& input) {
  if (!model.attention) throw Error("model has no attention network");
  const Index local_channels = model.hybrid.config().input_channels;
  if (input.channels != local_channels + 1) {
    throw ShapeError("attention input needs " + std::to_string(local_channels + 1) + " channels");
  }
  const Tensor3 local = model.hybrid.forward(select_channels(input, 0, local_channels));
  const Tensor3 weights = model.attention->forward(select_channels(input, 0, 1));
  Tensor3 out(input.batch, 1, input.length);
  for (Index b = 0; b < input.batch; ++b) {
    const double* next_global = input.row(b, local_channels);
    for (Index p = 0; p < input.length; ++p) {
      out(b, 0, p) = next_global[p] * weights(b, 0, p) + local(b, 0, p) * weights(b, 1, p);
    }
  }
  return out;
}

DeepGloPrediction predict_deepglo(const DeepGloModel& model, const Matrix& history, const CovariateTensor* z,
                                  Index tau) {
  require_fitted(model.global);
  if (z && z->empty()) z = nullptr;
  const Index H = history.cols();
  if (H != model.global.x.cols()) {
    throw ShapeError("history has " + std::to_string(H) + " columns but the global model covers " +
                     std::to_string(model.global.x.cols()));
  }
  const Index L = model.hybrid.look_back();
  if (H < L) {
    throw ShapeError("prediction needs " + std::to_string(L) + " history columns, got " + std::to_string(H));
  }
  DeepGloPrediction pred;
  const CovariateTensor full = build_hybrid_covariates(model.global, z, H + tau);
  pred.global = full.channel(0).rightCols(tau);
  const Matrix tail = history.rightCols(L);
  const CovariateTensor cov = full.time_slice(H - L, H + tau);

  if (model.combiner == Combiner::covariate) {
    pred.combined = rollout(model.hybrid, tail, &cov, tau);
    return pred;
  }

  const Matrix& g = full.channel(0);
  Matrix next(g.rows(), L + tau);
  for (Index p = 0; p < L + tau; ++p) next.col(p) = g.col(std::min(H - L + p + 1, H + tau - 1));
  CovariateTensor att_cov = cov;
  att_cov.add_channel(std::move(next));
  ForwardFn fn = [&model](const Tensor3& in) { return attention_forward(model, in); };
  pred.combined = rollout(fn, L, tail, &att_cov, tau);

  // Local component along the blended path, recomputed from the same inputs.
  Matrix path(tail.rows(), L + tau);
  path << tail, pred.combined;
  pred.local = one_step_predictions(model.hybrid, path, &cov, L, L + tau);
  return pred;
}

}  // namespace deepglo
