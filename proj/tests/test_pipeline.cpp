#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "deepglo/forecasters.hpp"
#include "deepglo/pipeline.hpp"
#include "json.hpp"
#include "test_support.hpp"

namespace deepglo {
namespace {

Matrix seasonal(Index n, Index t, double level_scale = 10.0) {
  Matrix y(n, t);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < t; ++j) {
      y(i, j) = level_scale * static_cast<double>(i + 1) +
                3.0 * std::sin(2.0 * M_PI * static_cast<double>(j) / 12.0 + static_cast<double>(i));
    }
  }
  return y;
}

RunConfig tiny() {
  RunConfig c;
  c.seed = 5;
  c.seed_set = true;
  c.local.kernel_size = 2;
  c.local.channels = {4, 4, 1};
  c.train.max_epochs = 3;
  c.train.batch_cols = 64;
  c.global.rank = 2;
  c.global.tx.kernel_size = 2;
  c.global.tx.channels = {4, 1};
  c.global.iters_init = 5;
  c.global.iters_train = 2;
  c.global.iters_alt = 1;
  c.global.rolling_max_iters = 20;
  c.dln_window = 4;
  return c;
}

TimeSeriesMatrix series(const Matrix& y, Index train_len) { return TimeSeriesMatrix(y, train_len); }

TEST(Pipeline, OracleCheckpointScoresZero) {
  const Matrix y = seasonal(3, 80);
  RunConfig c = tiny();
  c.protocol = {60, 5, 4};
  const Checkpoint cp = train_model(ModelKind::oracle, c, series(y, 60)).checkpoint;
  const auto results = evaluate_checkpoint(cp, c, y);
  ASSERT_EQ(results.size(), 3u);
  EXPECT_EQ(results[0].model, "oracle");
  EXPECT_EQ(results[0].overall.wape, 0.0);
  EXPECT_EQ(results[1].model, "naive_last_value");
  EXPECT_EQ(results[2].model, "naive_training_mean");
  EXPECT_GT(results[1].overall.wape, 0.0);
}

TEST(Pipeline, TrafficProtocolAccepted) {
  const Matrix y = seasonal(2, 10392 + 24 * 7);
  RunConfig c = tiny();
  set_config_value(c, "eval.t0", "10392");
  set_config_value(c, "eval.tau", "24");
  set_config_value(c, "eval.windows", "7");
  const Checkpoint cp = train_model(ModelKind::oracle, c, series(y, 10392)).checkpoint;
  RollingProtocol used;
  const auto results = evaluate_checkpoint(cp, c, y, &used);
  EXPECT_EQ(used.t0, 10392);
  EXPECT_EQ(results[0].predictions.cols(), 168);
  c.protocol.n_windows = 8;
  EXPECT_THROW(evaluate_checkpoint(cp, c, y), ConfigError);
}

TEST(Pipeline, EveryKindTrainsDeterministically) {
  const Matrix y = seasonal(4, 120);
  for (ModelKind kind : {ModelKind::local, ModelKind::global, ModelKind::deepglo, ModelKind::dln}) {
    const TrainOutput a = train_model(kind, tiny(), series(y, 100));
    const TrainOutput b = train_model(kind, tiny(), series(y, 100));
    EXPECT_EQ(serialize_checkpoint(a.checkpoint), serialize_checkpoint(b.checkpoint)) << to_string(kind);
    EXPECT_EQ(a.trace_csv, b.trace_csv);
    EXPECT_EQ(a.trace_csv.rfind("stage,cycle,epoch,train_loss,val_loss\n", 0), 0u);
    EXPECT_EQ(a.checkpoint.train_len, 100);
  }
}

TEST(Pipeline, SeedChangesTheModel) {
  const Matrix y = seasonal(4, 120);
  RunConfig other = tiny();
  other.seed = 6;
  EXPECT_NE(serialize_checkpoint(train_model(ModelKind::global, tiny(), series(y, 100)).checkpoint),
            serialize_checkpoint(train_model(ModelKind::global, other, series(y, 100)).checkpoint));
}

TEST(Pipeline, EvaluatesEveryKind) {
  const Matrix y = seasonal(4, 130);
  RunConfig c = tiny();
  c.protocol = {100, 10, 3};
  for (ModelKind kind : {ModelKind::local, ModelKind::global, ModelKind::deepglo, ModelKind::dln}) {
    const Checkpoint cp = train_model(kind, c, series(y, 100)).checkpoint;
    const auto r = evaluate_checkpoint(cp, c, y);
    EXPECT_EQ(r[0].predictions.cols(), 30) << to_string(kind);
    EXPECT_TRUE(r[0].predictions.allFinite()) << to_string(kind);
    EXPECT_EQ(r[0].global_component.has_value(), kind == ModelKind::global || kind == ModelKind::deepglo);
  }
}

TEST(Pipeline, LaterOriginExtendsFactors) {
  // Columns between the training length and t0 enter X before forecasting.
  const Matrix y = seasonal(4, 130);
  RunConfig c = tiny();
  const Checkpoint cp = train_model(ModelKind::global, c, series(y, 90)).checkpoint;
  c.protocol = {100, 10, 3};
  EXPECT_NO_THROW(evaluate_checkpoint(cp, c, y));
  c.protocol = {80, 10, 3};
  EXPECT_THROW(evaluate_checkpoint(cp, c, y), ConfigError);
}

TEST(Pipeline, NormalizationIsUndoneInReports) {
  const Matrix y = seasonal(3, 90, 1000.0);
  RunConfig c = tiny();
  c.normalize = NormalizationMode::per_series_whiten;
  c.protocol = {70, 5, 4};
  const Checkpoint cp = train_model(ModelKind::local, c, series(y, 70)).checkpoint;
  EXPECT_EQ(cp.normalization.mode, NormalizationMode::per_series_whiten);
  const Matrix training = y.leftCols(70);
  for (Index i = 0; i < 3; ++i) EXPECT_NEAR(cp.normalization.means(i), training.row(i).mean(), 1e-9);
  // A fresh LeveledInit-like forecast in normalized space stays near the series level.
  const auto r = evaluate_checkpoint(cp, c, y);
  for (Index i = 0; i < 3; ++i) EXPECT_NEAR(r[0].predictions.row(i).mean(), training.row(i).mean(), 50.0);
}

TEST(Pipeline, NormalizedWrapperMapsBothWays) {
  const Matrix y = seasonal(3, 40, 100.0);
  const auto [normalized, state] = normalize(TimeSeriesMatrix(y, 30), NormalizationMode::per_series_whiten);
  NormalizedForecaster f(std::make_unique<OracleForecaster>(normalized.values(), 30), state);
  EXPECT_LT((f.predict(5) - y.middleCols(30, 5)).cwiseAbs().maxCoeff(), 1e-10);
  f.incorporate(y.middleCols(30, 5));
  EXPECT_LT((f.predict(5) - y.middleCols(35, 5)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Pipeline, PredictMatchesGlobalForecast) {
  const Matrix y = seasonal(4, 100);
  const Checkpoint cp = train_model(ModelKind::global, tiny(), series(y, 100)).checkpoint;
  const Matrix p = predict_checkpoint(cp, y, 7);
  EXPECT_LT((p - predict_global(*cp.global, 7)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Pipeline, TimeCovariatesWidenTheLocalNetwork) {
  const Matrix y = seasonal(3, 100);
  RunConfig c = tiny();
  c.time_start = "2014-01-01 00:00";
  const Checkpoint cp = train_model(ModelKind::local, c, series(y, 80)).checkpoint;
  EXPECT_EQ(cp.local->config().input_channels, 1 + kTimeFeatureCount);
  c.protocol = {80, 5, 4};
  EXPECT_TRUE(evaluate_checkpoint(cp, c, y)[0].predictions.allFinite());
  EXPECT_EQ(predict_checkpoint(cp, y, 6).cols(), 6);
}

TEST(Pipeline, DivergenceSurfaces) {
  Matrix y(2, 60);
  for (Index j = 0; j < 60; ++j) {
    y(0, j) = (j % 2 ? 1.0 : -1.0) * 1e100;
    y(1, j) = (j % 3 ? 1.0 : -1.0) * 1e100;
  }
  RunConfig c = tiny();
  c.train.loss = LossKind::squared;
  c.train.learning_rate = 1e30;
  EXPECT_THROW(train_model(ModelKind::local, c, series(y, 60)), DivergenceError);
}

TEST(PipelineFiles, TrainEvaluatePredictEmit) {
  test::TempDir dir;
  const Matrix y = seasonal(4, 120);
  save_csv(dir.path() / "y.csv", y, {"a", "b", "c", "d"});
  RunConfig c = tiny();
  c.csv.id_column = true;
  c.protocol = {100, 5, 4};
  run_train(ModelKind::global, c, dir.path() / "y.csv", dir.path() / "m.json", dir.path() / "trace.csv",
            dir.path() / "resolved.cfg");

  RunConfig echoed;
  apply_config_file(echoed, dir.path() / "resolved.cfg");
  EXPECT_EQ(render_config(echoed), render_config(c));

  run_evaluate(c, dir.path() / "m.json", dir.path() / "y.csv", dir.path() / "report.json", dir.path() / "plots");
  const auto report = nlohmann::json::parse(test::read_file(dir.path() / "report.json"));
  ASSERT_EQ(report["models"].size(), 3u);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "plots"));

  run_predict(c, dir.path() / "m.json", dir.path() / "y.csv", dir.path() / "pred.csv");
  CsvOptions ids;
  ids.id_column = true;
  const TimeSeriesMatrix pred = load_csv(dir.path() / "pred.csv", ids);
  EXPECT_EQ(pred.length(), c.horizon);
  EXPECT_EQ(pred.ids(), (std::vector<std::string>{"a", "b", "c", "d"}));

  run_emit_basis(dir.path() / "m.json", dir.path() / "basis.csv");
  const Matrix basis = load_csv(dir.path() / "basis.csv").values();
  const Matrix x = load_checkpoint(dir.path() / "m.json").global->x;
  ASSERT_EQ(basis.rows(), 2);
  ASSERT_EQ(basis.cols(), 100);
  EXPECT_EQ(std::memcmp(basis.data(), x.data(), sizeof(double) * static_cast<std::size_t>(x.size())), 0);

  run_train(ModelKind::local, c, dir.path() / "y.csv", dir.path() / "local.json", {}, {});
  EXPECT_THROW(run_emit_basis(dir.path() / "local.json", dir.path() / "b2.csv"), ConfigError);
  EXPECT_THROW(run_train(ModelKind::local, c, dir.path() / "absent.csv", dir.path() / "x.json", {}, {}), DataError);
}

}  // namespace
}  // namespace deepglo
