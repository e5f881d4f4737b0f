#include "deepglo/metrics.hpp"

#include <cmath>
#include <limits>

namespace deepglo {

namespace {

void check_shapes(const Matrix& obs, const Matrix& pred) {
  if (obs.rows() != pred.rows() || obs.cols() != pred.cols()) {
    throw ShapeError("metric operands differ in shape: [" + std::to_string(obs.rows()) + " x " +
                     std::to_string(obs.cols()) + "] vs [" + std::to_string(pred.rows()) + " x " +
                     std::to_string(pred.cols()) + "]");
  }
}

}  // namespace

double wape(const Matrix& obs, const Matrix& pred) {
  check_shapes(obs, pred);
  double num = 0.0;
  double den = 0.0;
  for (Index q = 0; q < obs.size(); ++q) {
    num += std::abs(obs.data()[q] - pred.data()[q]);
    den += std::abs(obs.data()[q]);
  }
  if (den == 0.0) throw Error("WAPE is undefined when every observation is zero");
  return num / den;
}

double mape(const Matrix& obs, const Matrix& pred) {
  check_shapes(obs, pred);
  double sum = 0.0;
  Index count = 0;
  for (Index q = 0; q < obs.size(); ++q) {
    const double o = obs.data()[q];
    if (std::abs(o) > 0.0) {
      sum += std::abs(o - pred.data()[q]) / std::abs(o);
      ++count;
    }
  }
  if (count == 0) throw Error("MAPE is undefined without nonzero observations");
  return sum / static_cast<double>(count);
}

double smape(const Matrix& obs, const Matrix& pred) {
  check_shapes(obs, pred);
  double sum = 0.0;
  Index count = 0;
  for (Index q = 0; q < obs.size(); ++q) {
    const double o = obs.data()[q];
    const double p = pred.data()[q];
    if (std::abs(o) > 0.0 && o + p != 0.0) {
      sum += 2.0 * std::abs(o - p) / std::abs(o + p);
      ++count;
    }
  }
  if (count == 0) throw Error("SMAPE is undefined without nonzero observations");
  return sum / static_cast<double>(count);
}

MaeRmse mae_rmse(const Matrix& obs, const Matrix& pred) {
  check_shapes(obs, pred);
  if (obs.size() == 0) throw Error("MAE/RMSE of an empty matrix");
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  for (Index q = 0; q < obs.size(); ++q) {
    const double d = obs.data()[q] - pred.data()[q];
    abs_sum += std::abs(d);
    sq_sum += d * d;
  }
  const double n = static_cast<double>(obs.size());
  return {abs_sum / n, std::sqrt(sq_sum / n)};
}

MetricSet compute_metrics(const Matrix& obs, const Matrix& pred) {
  check_shapes(obs, pred);
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  auto guarded = [&](double (*fn)(const Matrix&, const Matrix&)) {
    try {
      return fn(obs, pred);
    } catch (const ShapeError&) {
      throw;
    } catch (const Error&) {
      return nan;
    }
  };
  MetricSet m;
  m.wape = guarded(&wape);
  m.mape = guarded(&mape);
  m.smape = guarded(&smape);
  if (obs.size() > 0) {
    const MaeRmse e = mae_rmse(obs, pred);
    m.mae = e.mae;
    m.rmse = e.rmse;
  } else {
    m.mae = m.rmse = nan;
  }
  return m;
}

}  // namespace deepglo
