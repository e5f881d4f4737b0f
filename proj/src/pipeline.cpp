#include "deepglo/pipeline.hpp"

#include <fstream>
#include <sstream>

#include "deepglo/forecasters.hpp"

namespace deepglo {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

TimeSeriesMatrix load_series(const RunConfig& cfg, const std::filesystem::path& path) {
  TimeSeriesMatrix y = load_csv(path, cfg.csv);
  if (y.series() == 0 || y.length() == 0) throw DataError("data file " + path.string() + " holds no values");
  if (cfg.protocol.t0 > 0) {
    if (cfg.protocol.t0 > y.length()) {
      throw ConfigError("eval.t0 = " + std::to_string(cfg.protocol.t0) + " exceeds the " +
                        std::to_string(y.length()) + " columns of " + path.string());
    }
    y.set_train_len(cfg.protocol.t0);
  }
  return y;
}

namespace {

class TraceWriter {
 public:
  TraceWriter() { out_ << "stage,cycle,epoch,train_loss,val_loss\n"; }
  void add(const std::string& stage, int cycle, int epoch, double train, std::optional<double> val) {
    out_ << stage << ',' << cycle << ',' << epoch << ',' << format_double(train) << ','
         << (val ? format_double(*val) : "") << '\n';
  }
  void add(const std::string& stage, int cycle, const TrainResult& r) {
    for (const EpochRecord& e : r.trace) add(stage, cycle, e.epoch, e.train_loss, e.val_loss);
  }
  void add(const TcnMfFit& fit) {
    for (const FactorTraceEntry& e : fit.trace) add("factor", e.cycle, e.epoch, e.loss, std::nullopt);
    for (std::size_t c = 0; c < fit.tx_traces.size(); ++c) add("tx", static_cast<int>(c) + 1, fit.tx_traces[c]);
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

CovariateSpec covariate_spec(const RunConfig& cfg, Index n) {
  CovariateSpec spec;
  spec.time_start = cfg.time_start;
  spec.time_step_seconds = cfg.time_step_seconds;
  if (!cfg.static_covariates.empty()) {
    spec.static_features = load_static_covariates(cfg.static_covariates, cfg.csv);
    if (spec.static_features.rows() != n) {
      throw DataError("static covariates in " + cfg.static_covariates + " have " +
                      std::to_string(spec.static_features.rows()) + " rows for " + std::to_string(n) + " series");
    }
  }
  return spec;
}

TrainConfig seeded(const RunConfig& cfg) {
  TrainConfig t = cfg.train;
  t.seed = cfg.seed;
  return t;
}

// Brings X up to date with columns observed after training.
void extend_factors(FactorModel& model, const Matrix& normalized, Index t0, const TcnMfConfig& mf) {
  const Index covered = model.x.cols();
  if (t0 < covered) {
    throw ConfigError("eval.t0 = " + std::to_string(t0) + " is shorter than the " + std::to_string(covered) +
                      " columns the model was trained on");
  }
  if (t0 > covered) rolling_update(model, normalized.middleCols(covered, t0 - covered), mf);
}

}  // namespace

TrainOutput train_model(ModelKind kind, const RunConfig& cfg, const TimeSeriesMatrix& data) {
  cfg.validate();
  TrainOutput out;
  Checkpoint& cp = out.checkpoint;
  cp.kind = kind;
  cp.seed = cfg.seed;
  cp.train_len = data.train_len();
  cp.mf = cfg.global;
  const Index n = data.series();

  if (kind == ModelKind::oracle) {
    cp.normalization = normalize(data, NormalizationMode::none).second;
    cp.oracle = data.values();
    out.trace_csv = TraceWriter().str();
    return out;
  }

  auto [normalized, state] = normalize(data, cfg.normalize);
  cp.normalization = std::move(state);
  const Matrix y = normalized.training();
  const TrainConfig train_cfg = seeded(cfg);
  TraceWriter trace;

  switch (kind) {
    case ModelKind::local: {
      cp.covariates = covariate_spec(cfg, n);
      const CovariateTensor z = build_covariates(cp.covariates, n, y.cols());
      TcnConfig c = cfg.local;
      c.input_channels = 1 + z.channels();
      c.series_channels = 1;
      TcnNetwork net = TcnNetwork::leveled(c);
      net.set_seed(cfg.seed);
      trace.add("local", 0, train(net, y, z.empty() ? nullptr : &z, train_cfg));
      cp.local = std::move(net);
      break;
    }
    case ModelKind::global: {
      TcnMfFit fit = fit_tcn_mf(y, cfg.global, train_cfg);
      trace.add(fit);
      cp.global = std::move(fit.model);
      break;
    }
    case ModelKind::deepglo: {
      cp.covariates = covariate_spec(cfg, n);
      const CovariateTensor z = build_covariates(cp.covariates, n, y.cols());
      DeepGloConfig dc;
      dc.global = cfg.global;
      dc.local = cfg.local;
      dc.combiner = cfg.combiner;
      DeepGloFit fit = fit_deepglo(y, z.empty() ? nullptr : &z, dc, train_cfg);
      trace.add(fit.global_fit);
      trace.add("local", 0, fit.local_trace);
      if (fit.attention_trace) trace.add("attention", 0, *fit.attention_trace);
      cp.deepglo = std::move(fit.model);
      break;
    }
    case ModelKind::dln: {
      DlnNetwork dln = make_dln(cfg.local, cfg.dln_window, cfg.seed);
      const DlnTrainResult r = dln_train(dln, y, train_cfg);
      for (const EpochRecord& e : r.mean_trace) trace.add("mean", 0, e.epoch, e.train_loss, std::nullopt);
      for (const EpochRecord& e : r.total_trace) trace.add("total", 0, e.epoch, e.train_loss, e.val_loss);
      cp.dln = std::move(dln);
      break;
    }
    case ModelKind::oracle: break;
  }
  out.trace_csv = trace.str();
  return out;
}

std::unique_ptr<Forecaster> make_forecaster(const Checkpoint& cp, const Matrix& data, Index t0) {
  if (cp.normalization.means.size() != data.rows()) {
    throw DataError("checkpoint was trained on " + std::to_string(cp.normalization.means.size()) +
                    " series, data has " + std::to_string(data.rows()));
  }
  if (t0 < 1 || t0 > data.cols()) throw ConfigError("eval.t0 out of range");
  const Matrix normalized = normalize_values(data.leftCols(t0), cp.normalization);
  const Index n = data.rows();
  std::unique_ptr<Forecaster> inner;
  switch (cp.kind) {
    case ModelKind::local: {
      std::optional<CovariateTensor> z;
      if (!cp.covariates.empty()) z = build_covariates(cp.covariates, n, data.cols());
      inner = std::make_unique<LocalTcnForecaster>(*cp.local, normalized, std::move(z));
      break;
    }
    case ModelKind::global: {
      FactorModel model = *cp.global;
      extend_factors(model, normalized, t0, cp.mf);
      inner = std::make_unique<GlobalForecaster>(std::move(model), cp.mf);
      break;
    }
    case ModelKind::deepglo: {
      std::optional<CovariateTensor> z;
      if (!cp.covariates.empty()) z = build_covariates(cp.covariates, n, data.cols());
      if (t0 < cp.deepglo->global.x.cols()) {
        throw ConfigError("eval.t0 = " + std::to_string(t0) + " is shorter than the " +
                          std::to_string(cp.deepglo->global.x.cols()) + " columns the model was trained on");
      }
      inner = std::make_unique<DeepGloForecaster>(*cp.deepglo, cp.mf, normalized, std::move(z));
      break;
    }
    case ModelKind::dln: inner = std::make_unique<DlnForecaster>(*cp.dln, normalized); break;
    case ModelKind::oracle: inner = std::make_unique<OracleForecaster>(*cp.oracle, t0); break;
  }
  return std::make_unique<NormalizedForecaster>(std::move(inner), cp.normalization);
}

std::vector<RollingResult> evaluate_checkpoint(const Checkpoint& cp, const RunConfig& cfg, const Matrix& data,
                                               RollingProtocol* used) {
  RollingProtocol protocol = cfg.protocol;
  if (protocol.t0 == 0) protocol.t0 = cp.train_len;
  protocol.validate(data.cols());
  if (used) *used = protocol;
  auto model = make_forecaster(cp, data, protocol.t0);
  std::vector<RollingResult> results;
  results.push_back(run_rolling(*model, data, protocol));
  BaselineResults naive = naive_baselines(data, protocol);
  results.push_back(std::move(naive.last_value));
  results.push_back(std::move(naive.training_mean));
  return results;
}

Matrix predict_checkpoint(const Checkpoint& cp, const Matrix& history, Index tau) {
  if (tau < 1) throw ConfigError("predict.horizon must be >= 1");
  const Index H = history.cols();
  if (cp.kind == ModelKind::oracle) {
    if (H + tau > cp.oracle->cols()) throw DataError("oracle checkpoint does not cover the requested horizon");
    return cp.oracle->middleCols(H, tau);
  }
  // Covariates must reach H + tau, so the forecaster sees an extended matrix.
  Matrix padded(history.rows(), H + tau);
  padded << history, Matrix::Zero(history.rows(), tau);
  auto model = make_forecaster(cp, padded, H);
  return model->predict(tau);
}

void run_train(ModelKind kind, const RunConfig& cfg, const std::filesystem::path& data,
               const std::filesystem::path& checkpoint, const std::filesystem::path& trace,
               const std::filesystem::path& resolved_config) {
  cfg.validate();
  const TimeSeriesMatrix y = load_series(cfg, data);
  const TrainOutput out = train_model(kind, cfg, y);
  save_checkpoint(checkpoint, out.checkpoint);
  if (!trace.empty()) write_text(trace, out.trace_csv);
  if (!resolved_config.empty()) write_text(resolved_config, render_config(cfg));
}

void run_evaluate(const RunConfig& cfg, const std::filesystem::path& checkpoint, const std::filesystem::path& data,
                  const std::filesystem::path& report, const std::filesystem::path& plot_dir) {
  cfg.validate();
  const Checkpoint cp = load_checkpoint(checkpoint);
  RunConfig data_cfg = cfg;
  data_cfg.protocol.t0 = 0;
  const TimeSeriesMatrix y = load_series(data_cfg, data);
  RollingProtocol protocol;
  const auto results = evaluate_checkpoint(cp, cfg, y.values(), &protocol);
  write_metrics_report(report, protocol, results);
  if (!plot_dir.empty()) {
    std::filesystem::create_directories(plot_dir);
    write_plot_data(plot_dir, y.values(), protocol, results.front(), y.ids());
  }
}

void run_predict(const RunConfig& cfg, const std::filesystem::path& checkpoint, const std::filesystem::path& data,
                 const std::filesystem::path& output) {
  cfg.validate();
  const Checkpoint cp = load_checkpoint(checkpoint);
  RunConfig data_cfg = cfg;
  data_cfg.protocol.t0 = 0;
  const TimeSeriesMatrix y = load_series(data_cfg, data);
  save_csv(output, predict_checkpoint(cp, y.values(), cfg.horizon), y.ids());
}

void run_emit_basis(const std::filesystem::path& checkpoint, const std::filesystem::path& output) {
  const Checkpoint cp = load_checkpoint(checkpoint);
  save_csv(output, cp.basis());
}

}  // namespace deepglo
