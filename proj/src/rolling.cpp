#include "deepglo/rolling.hpp"

#include <cmath>
#include <fstream>
#include "json.hpp"

#include "deepglo/data.hpp"

namespace deepglo {

void RollingProtocol::validate(Index total_length) const {
  if (t0 < 1 || tau < 1 || n_windows < 1) {
    throw ConfigError("rolling protocol needs t0, tau and windows >= 1 (got t0=" + std::to_string(t0) +
                      ", tau=" + std::to_string(tau) + ", windows=" + std::to_string(n_windows) + ")");
  }
  if (t0 + n_windows * tau > total_length) {
    throw ConfigError("rolling protocol t0 + windows*tau = " + std::to_string(t0 + n_windows * tau) +
                      " exceeds the " + std::to_string(total_length) + " available columns");
  }
}

RollingResult run_rolling(Forecaster& model, const Matrix& y, const RollingProtocol& protocol) {
  protocol.validate(y.cols());
  const Index n = y.rows();
  RollingResult result;
  result.model = model.name();
  result.predictions.resize(n, protocol.horizon());
  for (Index i = 1; i <= protocol.n_windows; ++i) {
    const Index begin = protocol.boundary(i - 1);
    const Matrix pred = model.predict(protocol.tau);
    if (pred.rows() != n || pred.cols() != protocol.tau) {
      throw ShapeError(model.name() + " returned a [" + std::to_string(pred.rows()) + " x " +
                       std::to_string(pred.cols()) + "] forecast for window " + std::to_string(i));
    }
    const Index out_col = (i - 1) * protocol.tau;
    result.predictions.middleCols(out_col, protocol.tau) = pred;
    const ComponentPredictions parts = model.components();
    auto store = [&](std::optional<Matrix>& acc, const std::optional<Matrix>& part) {
      if (!part) return;
      if (!acc) acc = Matrix::Constant(n, protocol.horizon(), std::nan(""));
      acc->middleCols(out_col, protocol.tau) = *part;
    };
    store(result.global_component, parts.global);
    store(result.local_component, parts.local);

    const Matrix truth = y.middleCols(begin, protocol.tau);
    result.windows.push_back(compute_metrics(truth, pred));
    if (i < protocol.n_windows) {
      try {
        model.incorporate(truth);
      } catch (const std::exception& e) {
        throw Error("incorporate failed after window " + std::to_string(i) + ": " + e.what());
      }
    }
  }
  result.overall = compute_metrics(y.middleCols(protocol.t0, protocol.horizon()), result.predictions);
  return result;
}

BaselineResults naive_baselines(const Matrix& y, const RollingProtocol& protocol) {
  protocol.validate(y.cols());
  const Matrix history = y.leftCols(protocol.t0);
  LastValueForecaster last(history);
  TrainingMeanForecaster mean(history);
  return {run_rolling(last, y, protocol), run_rolling(mean, y, protocol)};
}

namespace {

nlohmann::json metric_json(const MetricSet& m) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  return {{"wape", num(m.wape)}, {"mape", num(m.mape)}, {"smape", num(m.smape)},
          {"mae", num(m.mae)},   {"rmse", num(m.rmse)}};
}

}  // namespace

void write_metrics_report(const std::filesystem::path& path, const RollingProtocol& protocol,
                          const std::vector<RollingResult>& results) {
  nlohmann::json report;
  report["protocol"] = {{"t0", protocol.t0}, {"tau", protocol.tau}, {"windows", protocol.n_windows}};
  nlohmann::json models = nlohmann::json::array();
  for (const auto& r : results) {
    nlohmann::json windows = nlohmann::json::array();
    for (std::size_t i = 0; i < r.windows.size(); ++i) {
      nlohmann::json w = metric_json(r.windows[i]);
      w["window"] = i + 1;
      windows.push_back(std::move(w));
    }
    models.push_back({{"model", r.model}, {"overall", metric_json(r.overall)}, {"windows", windows}});
  }
  report["models"] = std::move(models);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write metrics report " + path.string());
  out << report.dump(2) << '\n';
}

void write_plot_data(const std::filesystem::path& dir, const Matrix& y, const RollingProtocol& protocol,
                     const RollingResult& result, const std::vector<std::string>& ids, Index limit) {
  std::filesystem::create_directories(dir);
  const Index n = limit < 0 ? y.rows() : std::min(limit, y.rows());
  auto cell = [](const std::optional<Matrix>& m, Index i, Index q) {
    if (!m || std::isnan((*m)(i, q))) return std::string();
    return format_double((*m)(i, q));
  };
  for (Index i = 0; i < n; ++i) {
    const std::string stem = ids.empty() ? "series_" + std::to_string(i) : ids[static_cast<std::size_t>(i)];
    std::ofstream out(dir / (stem + ".csv"));
    if (!out) throw DataError("cannot write plot data in " + dir.string());
    out << "time,actual,predicted,component_global,component_local\n";
    for (Index q = 0; q < protocol.horizon(); ++q) {
      const Index t = protocol.t0 + q;
      out << t << ',' << format_double(y(i, t)) << ',' << format_double(result.predictions(i, q)) << ','
          << cell(result.global_component, i, q) << ',' << cell(result.local_component, i, q) << '\n';
    }
  }
}

}  // namespace deepglo
