#include "deepglo/tcn_mf.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace deepglo {

RollingObjective parse_rolling_objective(const std::string& name) {
  if (name == "global_loss_argmin") return RollingObjective::global_loss_argmin;
  if (name == "alpha_hybrid") return RollingObjective::alpha_hybrid;
  throw ConfigError("unknown rolling objective '" + name + "' (expected global_loss_argmin or alpha_hybrid)");
}

std::string to_string(RollingObjective objective) {
  return objective == RollingObjective::global_loss_argmin ? "global_loss_argmin" : "alpha_hybrid";
}

RegStart parse_reg_start(const std::string& name) {
  if (name == "full_look_back") return RegStart::full_look_back;
  if (name == "second_column") return RegStart::second_column;
  throw ConfigError("unknown regularizer start '" + name + "' (expected full_look_back or second_column)");
}

std::string to_string(RegStart start) {
  return start == RegStart::full_look_back ? "full_look_back" : "second_column";
}

void TcnMfConfig::validate(Index n) const {
  if (rank < 1) throw ConfigError("mf.rank must be >= 1");
  if (rank > n) {
    throw ConfigError("mf.rank = " + std::to_string(rank) + " exceeds the series count " +
                      std::to_string(n));
  }
  if (!(lambda_t >= 0.0) || !std::isfinite(lambda_t)) throw ConfigError("mf.lambda_t must be >= 0");
  if (iters_init < 0 || iters_train < 0 || iters_alt < 0) {
    throw ConfigError("mf.iters_init, mf.iters_train and mf.iters_alt must be >= 0");
  }
  if (!(factor_lr >= 0.0) || !std::isfinite(factor_lr)) throw ConfigError("mf.factor_lr must be >= 0");
  if (factor_batch_rows < 1 || factor_batch_cols < 1) {
    throw ConfigError("mf.factor_batch_rows and mf.factor_batch_cols must be >= 1");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("mf.alpha must lie in (0, 1)");
  if (rolling_max_iters < 1) throw ConfigError("mf.rolling_max_iters must be >= 1");
  tx.validate();
}

Index FactorModel::regularizer_start() const {
  return reg_start == RegStart::full_look_back ? tx.look_back() : 1;
}

double temporal_term(const Matrix& x, const TcnNetwork& tx, Index first, Index last, Matrix* grad_x) {
  first = std::max<Index>(first, 1);
  last = std::min(last, x.cols());
  if (first >= last) return 0.0;
  const Index k = x.rows();
  const Index L = tx.look_back();
  const Index count = last - first;
  std::vector<Index> rows(static_cast<std::size_t>(k));
  std::iota(rows.begin(), rows.end(), Index{0});
  const Index begin = first - L;
  const Tensor3 in = assemble_input(x, nullptr, rows, begin, last - 1);
  ForwardCache cache;
  const Tensor3 out = grad_x ? tx.forward(in, cache) : tx.forward(in);
  const Index offset = out.length - count;
  const double scale = 1.0 / (static_cast<double>(k * count) * static_cast<double>(count));

  double sum = 0.0;
  Tensor3 upstream(grad_x ? out.batch : 0, out.channels, out.length);
  for (Index i = 0; i < k; ++i) {
    for (Index q = 0; q < count; ++q) {
      const double r = x(i, first + q) - out(i, 0, offset + q);
      sum += r * r;
      if (grad_x) {
        (*grad_x)(i, first + q) += 2.0 * r * scale;
        upstream(i, 0, offset + q) = -2.0 * r * scale;
      }
    }
  }
  if (grad_x) {
    const Tensor3 din = tx.backward(cache, upstream, {});
    for (Index i = 0; i < k; ++i) {
      for (Index p = 0; p < din.length; ++p) {
        const Index col = begin + p;
        if (col >= 0) (*grad_x)(i, col) += din(i, 0, p);
      }
    }
  }
  return sum * scale;
}

double temporal_reg(const Matrix& x, const TcnNetwork& tx, Index start) {
  if (x.cols() < 2) throw ShapeError("temporal regularizer needs at least 2 columns");
  return temporal_term(x, tx, start, x.cols());
}

double global_loss(const Matrix& y, const Matrix& f, const Matrix& x, const TcnNetwork& tx, double lambda_t,
                   Index start) {
  if (f.rows() != y.rows() || x.cols() != y.cols() || f.cols() != x.rows()) {
    throw ShapeError("factor shapes do not match Y: F [" + std::to_string(f.rows()) + " x " +
                     std::to_string(f.cols()) + "], X [" + std::to_string(x.rows()) + " x " +
                     std::to_string(x.cols()) + "], Y [" + std::to_string(y.rows()) + " x " +
                     std::to_string(y.cols()) + "]");
  }
  const double recon = (f * x - y).squaredNorm() / static_cast<double>(y.size());
  if (lambda_t == 0.0 || x.cols() < 2) return recon;
  return recon + lambda_t * temporal_reg(x, tx, start);
}

double global_loss(const Matrix& y, const FactorModel& model) {
  return global_loss(y, model.f, model.x, model.tx, model.lambda_t, model.regularizer_start());
}

GlobalLossGradient global_loss_gradient(const Matrix& y, const FactorModel& model) {
  const double loss = global_loss(y, model);
  const Matrix r = model.f * model.x - y;
  const double s = 2.0 / static_cast<double>(y.size());
  GlobalLossGradient g;
  g.loss = loss;
  g.f = s * r * model.x.transpose();
  g.x = s * model.f.transpose() * r;
  if (model.lambda_t != 0.0 && model.x.cols() >= 2) {
    Matrix gt = Matrix::Zero(model.x.rows(), model.x.cols());
    temporal_term(model.x, model.tx, model.regularizer_start(), model.x.cols(), &gt);
    g.x += model.lambda_t * gt;
  }
  return g;
}

void FactorOptimizer::resize(const FactorModel& model) {
  mf = vf = nf = Matrix::Zero(model.f.rows(), model.f.cols());
  mx = vx = nx = Matrix::Zero(model.x.rows(), model.x.cols());
}

namespace {

// One entry update, SGD or Adam with a per-entry step count.
inline void step_entry(double& p, double g, double lr, OptimizerKind kind, double& m, double& v, double& n) {
  if (kind == OptimizerKind::sgd) {
    p -= lr * g;
    return;
  }
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;
  n += 1.0;
  m = beta1 * m + (1.0 - beta1) * g;
  v = beta2 * v + (1.0 - beta2) * g * g;
  const double mhat = m / (1.0 - std::pow(beta1, n));
  const double vhat = v / (1.0 - std::pow(beta2, n));
  p -= lr * mhat / (std::sqrt(vhat) + eps);
}

}  // namespace

void factor_epoch(FactorModel& model, const Matrix& y, const TcnMfConfig& cfg, double learning_rate,
                  std::mt19937_64& rng, FactorOptimizer& opt) {
  const Index n = y.rows();
  const Index t = y.cols();
  const Index k = model.rank();
  if (model.f.rows() != n || model.x.cols() != t) throw ShapeError("factor epoch: shapes do not match Y");
  if (opt.mx.rows() != k || opt.mx.cols() != t || opt.mf.rows() != n) opt.resize(model);
  const Index start = model.regularizer_start();
  const bool temporal = model.lambda_t != 0.0 && t >= 2;
  Matrix gt;
  if (temporal) gt = Matrix::Zero(k, t);

  const auto tiles = plan_batches(n, 0, t, cfg.factor_batch_rows, cfg.factor_batch_cols, rng);
  for (const auto& tile : tiles) {
    const Index c0 = tile.first_target;
    const Index cn = tile.target_count;
    const Index rn = static_cast<Index>(tile.rows.size());
    Matrix fi(rn, k);
    Matrix yi(rn, cn);
    for (Index r = 0; r < rn; ++r) {
      fi.row(r) = model.f.row(tile.rows[static_cast<std::size_t>(r)]);
      yi.row(r) = y.block(tile.rows[static_cast<std::size_t>(r)], c0, 1, cn);
    }
    const double s = 2.0 / static_cast<double>(rn * cn);

    // X[:, J] on reconstruction + temporal terms of this tile
    Matrix gx = s * fi.transpose() * (fi * model.x.middleCols(c0, cn) - yi);
    if (temporal && std::max(c0, start) < c0 + cn) {
      const Index lo = std::max<Index>(0, c0 - model.tx.look_back());
      gt.middleCols(lo, c0 + cn - lo).setZero();
      temporal_term(model.x, model.tx, std::max(c0, start), c0 + cn, &gt);
      gx += model.lambda_t * gt.middleCols(c0, cn);
    }
    for (Index i = 0; i < k; ++i) {
      for (Index q = 0; q < cn; ++q) {
        const Index c = c0 + q;
        step_entry(model.x(i, c), gx(i, q), learning_rate, cfg.factor_optimizer, opt.mx(i, c), opt.vx(i, c),
                   opt.nx(i, c));
      }
    }

    // F[I, :] against the updated X
    const Matrix xj = model.x.middleCols(c0, cn);
    const Matrix gf = s * (fi * xj - yi) * xj.transpose();
    for (Index r = 0; r < rn; ++r) {
      const Index row = tile.rows[static_cast<std::size_t>(r)];
      for (Index j = 0; j < k; ++j) {
        step_entry(model.f(row, j), gf(r, j), learning_rate, cfg.factor_optimizer, opt.mf(row, j),
                   opt.vf(row, j), opt.nf(row, j));
      }
    }
  }
}

TcnMfFit fit_tcn_mf(const Matrix& y, const TcnMfConfig& cfg, const TrainConfig& tx_train) {
  const Index n = y.rows();
  const Index t = y.cols();
  cfg.validate(n);
  tx_train.validate();
  if (!y.allFinite()) throw DataError("global model input contains non-finite values");

  TcnConfig txc = cfg.tx;
  txc.input_channels = 1;
  txc.series_channels = 1;
  TcnMfFit result;
  FactorModel& model = result.model;
  model.tx = TcnNetwork::leveled(txc);
  model.tx.set_seed(tx_train.seed);
  model.lambda_t = cfg.lambda_t;
  model.reg_start = cfg.reg_start;
  if (t < 2 || (cfg.iters_alt > 0 && t - static_cast<Index>(std::ceil(tx_train.val_fraction * t)) <= model.tx.look_back())) {
    throw ShapeError("training range of " + std::to_string(t) + " columns is too short for the regularizer look-back " +
                     std::to_string(model.tx.look_back()));
  }

  const Index k = cfg.rank;
  std::mt19937_64 rng(tx_train.seed);
  std::uniform_real_distribution<double> init(0.0, 1.0 / std::sqrt(static_cast<double>(k)));
  model.f.resize(n, k);
  model.x.resize(k, t);
  for (Index q = 0; q < model.f.size(); ++q) model.f.data()[q] = init(rng);
  for (Index q = 0; q < model.x.size(); ++q) model.x.data()[q] = init(rng);
  const double target = y.cwiseAbs().mean();
  const double current = (model.f * model.x).cwiseAbs().mean();
  if (target > 0.0 && current > 0.0) {
    const double scale = std::sqrt(target / current);
    model.f *= scale;
    model.x *= scale;
  }

  FactorOptimizer opt;
  opt.resize(model);
  double lr = cfg.factor_lr;

  auto run_cycle = [&](int cycle, int epochs) {
    double current_loss = global_loss(y, model);
    if (!std::isfinite(current_loss)) {
      throw DivergenceError("global loss is non-finite at the start of cycle " + std::to_string(cycle));
    }
    result.trace.push_back({cycle, 0, current_loss, lr});
    for (int e = 1; e <= epochs; ++e) {
      const Matrix f0 = model.f;
      const Matrix x0 = model.x;
      const FactorOptimizer opt0 = opt;
      factor_epoch(model, y, cfg, lr, rng, opt);
      double next = global_loss(y, model);
      if (!(next <= current_loss)) {
        const bool diverged = !std::isfinite(next);
        model.f = f0;
        model.x = x0;
        opt = opt0;
        lr *= 0.5;
        factor_epoch(model, y, cfg, lr, rng, opt);
        next = global_loss(y, model);
        if (!(next <= current_loss)) {
          if (diverged && !std::isfinite(next)) {
            throw DivergenceError("global loss became non-finite in cycle " + std::to_string(cycle) +
                                  ", epoch " + std::to_string(e));
          }
          model.f = f0;
          model.x = x0;
          opt = opt0;
          next = current_loss;
        }
      }
      current_loss = next;
      result.trace.push_back({cycle, e, current_loss, lr});
    }
  };

  run_cycle(0, cfg.iters_init);
  for (int a = 1; a <= cfg.iters_alt; ++a) {
    run_cycle(a, cfg.iters_train);
    TrainConfig tc = tx_train;
    tc.max_epochs = cfg.iters_train;
    tc.loss = cfg.tx_loss;
    result.tx_traces.push_back(train(model.tx, model.x, nullptr, tc));
  }
  return result;
}

Matrix predict_global(const FactorModel& model, Index tau) {
  if (tau < 0) throw ShapeError("negative forecast horizon");
  if (tau == 0) return Matrix(model.f.rows(), 0);
  return model.f * rollout(model.tx, model.x, nullptr, tau);
}

namespace {

Matrix extend(const Matrix& x, const Matrix& m) {
  Matrix out(x.rows(), x.cols() + m.cols());
  out.leftCols(x.cols()) = x;
  out.rightCols(m.cols()) = m;
  return out;
}

double wape_loss(const Matrix& pred, const Matrix& target) {
  return loss_and_gradient(LossKind::wape, std::span<const double>(pred.data(), static_cast<std::size_t>(pred.size())),
                           std::span<const double>(target.data(), static_cast<std::size_t>(target.size())), {});
}

void check_update_shapes(const FactorModel& model, const Matrix& y_new) {
  if (y_new.rows() != model.f.rows()) {
    throw ShapeError("rolling update block has " + std::to_string(y_new.rows()) + " rows, model has " +
                     std::to_string(model.f.rows()));
  }
  if (y_new.cols() < 1) throw ShapeError("rolling update needs at least one new column");
  if (!y_new.allFinite()) throw DataError("rolling update block contains non-finite values");
}

// Objective (a) and its gradient with respect to the new block.
double argmin_objective(const FactorModel& model, const Matrix& y_new, const Matrix& m, Matrix* grad) {
  const Index t = model.x.cols();
  const Index d = m.cols();
  const Matrix r = model.f * m - y_new;
  double value = r.squaredNorm() / static_cast<double>(y_new.size());
  if (grad) *grad = (2.0 / static_cast<double>(y_new.size())) * model.f.transpose() * r;
  if (model.lambda_t != 0.0) {
    const Matrix ext = extend(model.x, m);
    const Index first = std::max(t, model.regularizer_start());
    if (grad) {
      Matrix gt = Matrix::Zero(ext.rows(), ext.cols());
      value += model.lambda_t * temporal_term(ext, model.tx, first, t + d, &gt);
      *grad += model.lambda_t * gt.rightCols(d);
    } else {
      value += model.lambda_t * temporal_term(ext, model.tx, first, t + d);
    }
  }
  return value;
}

RollingUpdateReport solve_argmin(const FactorModel& model, const Matrix& y_new, Matrix& m, int max_iters) {
  const Index k = model.rank();
  const Index d = m.cols();
  // Curvature of the reconstruction term plus the direct part of the temporal term.
  Matrix h = (2.0 / static_cast<double>(y_new.size())) * model.f.transpose() * model.f;
  const double direct = model.lambda_t * 2.0 / (static_cast<double>(k * d) * static_cast<double>(d));
  const double ridge = 1e-10 * (h.trace() / static_cast<double>(k) + direct + 1e-300);
  h.diagonal().array() += direct + ridge;
  const Eigen::LDLT<Eigen::MatrixXd> solver{Eigen::MatrixXd(h)};

  RollingUpdateReport report;
  Matrix g;
  double value = argmin_objective(model, y_new, m, &g);
  report.converged = false;
  for (int it = 0; it < max_iters; ++it) {
    report.iterations = it + 1;
    if (g.squaredNorm() == 0.0) {
      report.converged = true;
      break;
    }
    const Matrix dir = -Matrix(solver.solve(Eigen::MatrixXd(g)));
    const double slope = (g.array() * dir.array()).sum();
    if (!(slope < 0.0)) {
      report.converged = true;
      break;
    }
    double step = 1.0;
    bool accepted = false;
    double next = value;
    Matrix candidate;
    for (int b = 0; b < 60; ++b) {
      candidate = m + step * dir;
      next = argmin_objective(model, y_new, candidate, nullptr);
      if (next <= value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No representable descent left along the preconditioned direction.
      report.converged = true;
      break;
    }
    const double gain = value - next;
    m = candidate;
    value = argmin_objective(model, y_new, m, &g);
    if (gain <= 1e-13 * std::max(value, 1e-300) || value == 0.0) {
      report.converged = true;
      break;
    }
  }
  report.objective = value;
  return report;
}

// Objective (b), separable over columns: each column is an L1 regression
// solved by iteratively reweighted least squares started at the rollout.
RollingUpdateReport solve_hybrid(const FactorModel& model, const Matrix& y_new, const Matrix& rolled, double alpha,
                                 int max_iters, Matrix& m) {
  const Index n = y_new.rows();
  const Index k = model.rank();
  const Index d = y_new.cols();
  double sy = y_new.cwiseAbs().sum();
  if (sy == 0.0) sy = static_cast<double>(n * d);
  double sm = rolled.cwiseAbs().sum();
  if (sm == 0.0) sm = static_cast<double>(k * d);
  const double a1 = (1.0 - alpha) / sy;
  const double a2 = alpha / sm;
  const double scale = std::max({y_new.cwiseAbs().maxCoeff(), rolled.cwiseAbs().maxCoeff(), 1e-300});
  const double eps = 1e-12 * scale;

  RollingUpdateReport report;
  m = rolled;
  for (Index j = 0; j < d; ++j) {
    const Vector yj = y_new.col(j);
    const Vector hat = rolled.col(j);
    auto objective = [&](const Vector& v) {
      return a1 * (model.f * v - yj).cwiseAbs().sum() + a2 * (v - hat).cwiseAbs().sum();
    };
    Vector best = hat;
    double best_value = objective(best);
    Vector cur = best;
    bool done = a1 == 0.0 || best_value == 0.0;
    int it = 0;
    for (; it < max_iters && !done; ++it) {
      const Vector r1 = model.f * cur - yj;
      const Vector r2 = cur - hat;
      const Vector w1 = (a1 / r1.cwiseAbs().array().max(eps)).matrix();
      const Vector w2 = (a2 / r2.cwiseAbs().array().max(eps)).matrix();
      Eigen::MatrixXd lhs = model.f.transpose() * w1.asDiagonal() * model.f;
      lhs.diagonal() += w2;
      const Vector rhs = model.f.transpose() * (w1.asDiagonal() * yj) + w2.asDiagonal() * hat;
      const Vector next = Eigen::LDLT<Eigen::MatrixXd>(lhs).solve(rhs);
      if (!next.allFinite()) break;
      const double value = objective(next);
      const double previous = objective(cur);
      cur = next;
      if (value < best_value) {
        best_value = value;
        best = next;
      }
      if (std::abs(previous - value) <= 1e-12 * std::max(previous, 1e-300)) done = true;
    }
    report.iterations = std::max(report.iterations, it);
    if (!done) report.converged = false;
    m.col(j) = best;
  }
  return report;
}

}  // namespace

double rolling_objective_value(const FactorModel& model, const Matrix& y_new, const Matrix& m,
                               const TcnMfConfig& cfg) {
  check_update_shapes(model, y_new);
  if (m.rows() != model.rank() || m.cols() != y_new.cols()) throw ShapeError("candidate block has the wrong shape");
  if (cfg.rolling_objective == RollingObjective::global_loss_argmin) {
    return argmin_objective(model, y_new, m, nullptr);
  }
  const Matrix rolled = rollout(model.tx, model.x, nullptr, y_new.cols());
  return (1.0 - cfg.alpha) * wape_loss(model.f * m, y_new) + cfg.alpha * wape_loss(m, rolled);
}

RollingUpdateReport rolling_update(FactorModel& model, const Matrix& y_new, const TcnMfConfig& cfg) {
  check_update_shapes(model, y_new);
  const Matrix rolled = rollout(model.tx, model.x, nullptr, y_new.cols());
  Matrix m = rolled;
  RollingUpdateReport report;
  if (cfg.rolling_objective == RollingObjective::global_loss_argmin) {
    report = solve_argmin(model, y_new, m, cfg.rolling_max_iters);
  } else {
    report = solve_hybrid(model, y_new, rolled, cfg.alpha, cfg.rolling_max_iters, m);
    report.objective = (1.0 - cfg.alpha) * wape_loss(model.f * m, y_new) + cfg.alpha * wape_loss(m, rolled);
  }
  model.x = extend(model.x, m);
  return report;
}

}  // namespace deepglo
