#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "deepglo/rolling.hpp"
#include "json.hpp"
#include "test_support.hpp"

namespace deepglo {
namespace {

Matrix row(std::initializer_list<double> v) {
  Matrix m(1, static_cast<Index>(v.size()));
  Index j = 0;
  for (double x : v) m(0, j++) = x;
  return m;
}

TEST(Wape, Examples) {
  Matrix obs(2, 2);
  obs << 1, 2, 3, 4;
  Matrix pred(2, 2);
  pred << 2, 2, 3, 4;
  EXPECT_EQ(wape(obs, obs), 0.0);
  EXPECT_NEAR(wape(obs, pred), 0.1, 1e-12);
  EXPECT_EQ(wape(obs, Matrix::Zero(2, 2)), 1.0);
}

TEST(Wape, AllZeroObservationsRejected) {
  EXPECT_THROW(wape(Matrix::Zero(2, 2), Matrix::Ones(2, 2)), Error);
}

TEST(Wape, ShapeMismatch) { EXPECT_THROW(wape(Matrix::Ones(2, 2), Matrix::Ones(2, 3)), ShapeError); }

TEST(Mape, Examples) {
  EXPECT_EQ(mape(row({1, 2}), row({1, 2})), 0.0);
  EXPECT_NEAR(mape(row({1, 0, 2}), row({2, 5, 2})), 0.5, 1e-12);
  EXPECT_NEAR(mape(row({4}), row({2})), 0.5, 1e-12);
  EXPECT_THROW(mape(row({0, 0}), row({1, 1})), Error);
}

TEST(Smape, Examples) {
  EXPECT_EQ(smape(row({3, 5}), row({3, 5})), 0.0);
  EXPECT_NEAR(smape(row({2}), row({1})), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(smape(row({1, 0}), row({1, 9})), 0.0, 1e-12);
}

TEST(Smape, OppositeSignCellIsDropped) {
  // obs + pred = 0 in the first cell; only the second contributes.
  EXPECT_NEAR(smape(row({1, 2}), row({-1, 1})), 2.0 / 3.0, 1e-12);
}

TEST(MaeRmse, Examples) {
  const MaeRmse zero = mae_rmse(row({1, 2}), row({1, 2}));
  EXPECT_EQ(zero.mae, 0.0);
  EXPECT_EQ(zero.rmse, 0.0);
  const MaeRmse e = mae_rmse(row({0, 0}), row({3, -4}));
  EXPECT_NEAR(e.mae, 3.5, 1e-12);
  EXPECT_NEAR(e.rmse, std::sqrt(12.5), 1e-12);
  const MaeRmse c = mae_rmse(row({1, 5, -2}), row({-1.5, 2.5, -4.5}));
  EXPECT_NEAR(c.mae, 2.5, 1e-12);
  EXPECT_NEAR(c.rmse, 2.5, 1e-12);
}

TEST(Metrics, ScaleInvariance) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix y(3, 5);
    Matrix p(3, 5);
    for (Index q = 0; q < y.size(); ++q) {
      y.data()[q] = u(rng);
      p.data()[q] = u(rng);
    }
    double alpha = u(rng);
    if (std::abs(alpha) < 0.1) alpha = 0.7;
    const MetricSet a = compute_metrics(y, p);
    const MetricSet b = compute_metrics(alpha * y, alpha * p);
    EXPECT_NEAR(a.wape, b.wape, 1e-12 * std::max(1.0, a.wape));
    EXPECT_NEAR(a.mape, b.mape, 1e-12 * std::max(1.0, a.mape));
    EXPECT_NEAR(a.smape, b.smape, 1e-12 * std::max(1.0, a.smape));
    EXPECT_NEAR(std::abs(alpha) * a.mae, b.mae, 1e-12 * std::max(1.0, b.mae));
    EXPECT_NEAR(std::abs(alpha) * a.rmse, b.rmse, 1e-12 * std::max(1.0, b.rmse));
  }
}

TEST(Metrics, ComputeMetricsReportsUndefinedAsNan) {
  const MetricSet m = compute_metrics(Matrix::Zero(1, 2), row({1, 1}));
  EXPECT_TRUE(std::isnan(m.wape));
  EXPECT_TRUE(std::isnan(m.mape));
  EXPECT_EQ(m.mae, 1.0);
}

// Returns the truth: every window is forecast perfectly.
class OracleForecaster : public Forecaster {
 public:
  OracleForecaster(const Matrix& y, Index t0) : y_(y), pos_(t0) {}
  std::string name() const override { return "oracle"; }
  Matrix predict(Index tau) override { return y_.middleCols(pos_, tau); }
  void incorporate(const Matrix& block) override { pos_ += block.cols(); }

 private:
  const Matrix& y_;
  Index pos_;
};

class FailingForecaster : public Forecaster {
 public:
  std::string name() const override { return "failing"; }
  Matrix predict(Index tau) override { return Matrix::Zero(1, tau); }
  void incorporate(const Matrix&) override { throw DataError("boom"); }
};

TEST(RollingProtocol, Validation) {
  RollingProtocol p{25968, 24, 7};
  EXPECT_NO_THROW(p.validate(25968 + 24 * 7));
  EXPECT_THROW(p.validate(25968 + 24 * 7 - 1), ConfigError);
  EXPECT_THROW((RollingProtocol{0, 24, 7}).validate(1000), ConfigError);
  EXPECT_THROW((RollingProtocol{10, 0, 7}).validate(1000), ConfigError);
  EXPECT_THROW((RollingProtocol{10, 2, 0}).validate(1000), ConfigError);
  EXPECT_EQ(p.boundary(2), 25968 + 48);
}

TEST(RunRolling, OracleHasZeroError) {
  Matrix y = Matrix::Random(3, 40).cwiseAbs() + Matrix::Ones(3, 40);
  OracleForecaster oracle(y, 10);
  const RollingResult r = run_rolling(oracle, y, {10, 5, 6});
  EXPECT_EQ(r.overall.wape, 0.0);
  EXPECT_EQ(r.windows.size(), 6u);
  EXPECT_EQ(r.predictions.cols(), 30);
}

TEST(RunRolling, SingleWindowIsOneForecast) {
  Matrix y(1, 6);
  y << 1, 2, 3, 4, 5, 6;
  LastValueForecaster lv(y.leftCols(3));
  const RollingResult r = run_rolling(lv, y, {3, 3, 1});
  EXPECT_EQ(r.predictions, Matrix::Constant(1, 3, 3.0));
  EXPECT_NEAR(r.overall.wape, (1.0 + 2.0 + 3.0) / 15.0, 1e-15);
}

TEST(RunRolling, OverallIsConcatenatedNotAveraged) {
  // window 1 misses everything (WAPE 1), window 2 is exact (WAPE 0)
  Matrix y(1, 5);
  y << 0, 1, 100, 100, 100;
  LastValueForecaster lv(y.leftCols(1));
  const RollingResult r = run_rolling(lv, y, {1, 2, 2});
  EXPECT_EQ(r.windows[0].wape, 1.0);
  EXPECT_EQ(r.windows[1].wape, 0.0);
  EXPECT_NEAR(r.overall.wape, 101.0 / 301.0, 1e-15);
  EXPECT_GT(std::abs(r.overall.wape - 0.5), 0.1);
}

TEST(RunRolling, IncorporateFailureNamesWindow) {
  Matrix y = Matrix::Ones(1, 10);
  FailingForecaster f;
  try {
    run_rolling(f, y, {2, 2, 3});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("window 1"), std::string::npos);
  }
}

TEST(NaiveBaselines, ConstantSeriesIsExact) {
  const Matrix y = Matrix::Constant(4, 30, 7.5);
  const BaselineResults b = naive_baselines(y, {10, 5, 4});
  EXPECT_EQ(b.last_value.overall.wape, 0.0);
  EXPECT_EQ(b.training_mean.overall.wape, 0.0);
}

TEST(NaiveBaselines, IncreasingSeriesFavoursLastValue) {
  Matrix y(1, 20);
  for (Index j = 0; j < 20; ++j) y(0, j) = 1.0 + static_cast<double>(j);
  const BaselineResults b = naive_baselines(y, {10, 2, 5});
  EXPECT_LT(b.last_value.overall.wape, b.training_mean.overall.wape);
}

TEST(NaiveBaselines, RandomWalkOneStepFormula) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix y(2, 60);
  for (Index i = 0; i < 2; ++i) {
    y(i, 0) = 50.0;
    for (Index j = 1; j < 60; ++j) y(i, j) = y(i, j - 1) + g(rng);
  }
  const Index t0 = 20;
  const BaselineResults b = naive_baselines(y, {t0, 1, 40});
  double steps = 0.0;
  double values = 0.0;
  for (Index i = 0; i < 2; ++i) {
    for (Index j = t0; j < 60; ++j) {
      steps += std::abs(y(i, j) - y(i, j - 1));
      values += std::abs(y(i, j));
    }
  }
  EXPECT_NEAR(b.last_value.overall.wape, steps / values, 1e-12);
}

TEST(Report, JsonAndPlotFiles) {
  test::TempDir dir;
  Matrix y = Matrix::Constant(2, 12, 3.0);
  y(1, 11) = 4.0;
  const BaselineResults b = naive_baselines(y, {6, 3, 2});
  write_metrics_report(dir.path() / "metrics.json", {6, 3, 2}, {b.last_value, b.training_mean});
  const auto j = nlohmann::json::parse(test::read_file(dir.path() / "metrics.json"));
  ASSERT_EQ(j["models"].size(), 2u);
  EXPECT_EQ(j["models"][0]["model"], "naive_last_value");
  EXPECT_EQ(j["models"][0]["windows"].size(), 2u);
  EXPECT_TRUE(j["models"][0]["overall"].contains("smape"));

  write_plot_data(dir.path() / "plots", y, {6, 3, 2}, b.last_value, {"a", "b"});
  const std::string csv = test::read_file(dir.path() / "plots" / "b.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "time,actual,predicted,component_global,component_local");
  EXPECT_NE(csv.find("11,4,3,,"), std::string::npos);
}

}  // namespace
}  // namespace deepglo
