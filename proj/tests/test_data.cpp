#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "deepglo/data.hpp"
#include "test_support.hpp"

namespace deepglo {
namespace {

TEST(LoadCsv, ParsesRowsInFileOrder) {
  test::TempDir dir;
  const auto path = dir.write("a.csv", "1,2,3\n4,5,6\n");
  const TimeSeriesMatrix y = load_csv(path);
  ASSERT_EQ(y.series(), 2);
  ASSERT_EQ(y.length(), 3);
  Matrix expected(2, 3);
  expected << 1, 2, 3, 4, 5, 6;
  EXPECT_EQ(y.values(), expected);
  EXPECT_EQ(y.train_len(), 3);
}

TEST(LoadCsv, EmptyFileReportsNoRows) {
  test::TempDir dir;
  const auto path = dir.write("empty.csv", "");
  try {
    load_csv(path);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("no rows"), std::string::npos);
  }
}

TEST(LoadCsv, RaggedRowNamesTheRow) {
  test::TempDir dir;
  const auto path = dir.write("ragged.csv", "1,2,3\n4,5\n");
  try {
    load_csv(path);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
  }
}

TEST(LoadCsv, NonNumericCellNamesRowAndColumn) {
  test::TempDir dir;
  const auto path = dir.write("bad.csv", "1,2,3\n4,x,6\n");
  try {
    load_csv(path);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("column 2"), std::string::npos) << msg;
  }
}

TEST(LoadCsv, MissingValueIsRejected) {
  test::TempDir dir;
  EXPECT_THROW(load_csv(dir.write("gap.csv", "1,,3\n")), DataError);
  EXPECT_THROW(load_csv(dir.write("nan.csv", "1,nan,3\n")), DataError);
}

TEST(LoadCsv, MissingFileIsDataError) {
  EXPECT_THROW(load_csv("/nonexistent/nowhere.csv"), DataError);
}

TEST(LoadCsv, HeaderAndIdColumn) {
  test::TempDir dir;
  const auto path = dir.write("ids.csv", "id,t1,t2\nmt_1,1.5,2\nmt_2,3,4e2\n");
  const TimeSeriesMatrix y = load_csv(path, {',', true, true});
  ASSERT_EQ(y.series(), 2);
  ASSERT_EQ(y.length(), 2);
  EXPECT_EQ(y.ids(), (std::vector<std::string>{"mt_1", "mt_2"}));
  EXPECT_EQ(y.values()(1, 1), 400.0);
}

TEST(LoadCsv, RoundTripIsBitExact) {
  test::TempDir dir;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> dist(0.0, 1e3);
  Matrix m(5, 9);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng) / 3.0;
  const auto path = dir.path() / "rt.csv";
  save_csv(path, m);
  const TimeSeriesMatrix y = load_csv(path);
  for (Index i = 0; i < m.size(); ++i) {
    EXPECT_EQ(y.values().data()[i], m.data()[i]);
  }
}

TEST(TimeSeriesMatrix, SliceHasRequestedShape) {
  Matrix m = Matrix::Random(4, 10);
  TimeSeriesMatrix y(m, 8, 2);
  const Matrix s = y.slice({0, 2, 3}, {1, 5});
  EXPECT_EQ(s.rows(), 3);
  EXPECT_EQ(s.cols(), 2);
  EXPECT_EQ(s(1, 1), m(2, 5));
  EXPECT_THROW(y.set_train_len(11), ShapeError);
  EXPECT_THROW(y.set_train_len(0), ShapeError);
}

TEST(Normalize, ConstantSeriesUsesStdFloor) {
  Matrix m(1, 4);
  m << 2, 2, 2, 2;
  auto [z, state] = normalize(TimeSeriesMatrix(m), NormalizationMode::per_series_whiten);
  EXPECT_EQ(state.stds(0), kStdFloor);
  for (Index j = 0; j < 4; ++j) EXPECT_EQ(z.values()(0, j), 0.0);
}

TEST(Normalize, TwoPointSeries) {
  Matrix m(1, 2);
  m << 0, 2;
  auto [z, state] = normalize(TimeSeriesMatrix(m), NormalizationMode::per_series_whiten);
  EXPECT_DOUBLE_EQ(state.means(0), 1.0);
  EXPECT_DOUBLE_EQ(state.stds(0), 1.0);
  EXPECT_DOUBLE_EQ(z.values()(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(z.values()(0, 1), 1.0);

  Matrix yhat(1, 2);
  yhat << -1, 1;
  const Matrix back = denormalize(yhat, state);
  EXPECT_DOUBLE_EQ(back(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(back(0, 1), 2.0);
}

TEST(Normalize, NoneIsIdentity) {
  Matrix m = Matrix::Random(3, 5);
  auto [z, state] = normalize(TimeSeriesMatrix(m), NormalizationMode::none);
  EXPECT_EQ(z.values(), m);
  EXPECT_EQ(state.means, Vector::Zero(3));
  EXPECT_EQ(state.stds, Vector::Ones(3));
  EXPECT_EQ(denormalize(m, state), m);
}

TEST(Normalize, ZeroMapsToMean) {
  NormalizationState state{NormalizationMode::per_series_whiten, Vector::Constant(1, 10.0),
                           Vector::Constant(1, 2.0)};
  Matrix yhat = Matrix::Zero(1, 1);
  EXPECT_EQ(denormalize(yhat, state)(0, 0), 10.0);
  EXPECT_THROW(denormalize(Matrix::Zero(2, 1), state), ShapeError);
}

TEST(Normalize, StatisticsUseTrainingColumnsOnly) {
  Matrix m(1, 4);
  m << 1, 3, 100, -50;
  auto [z, state] = normalize(TimeSeriesMatrix(m, 2), NormalizationMode::per_series_whiten);
  EXPECT_DOUBLE_EQ(state.means(0), 2.0);
  EXPECT_DOUBLE_EQ(state.stds(0), 1.0);
  EXPECT_DOUBLE_EQ(z.values()(0, 2), 98.0);
}

TEST(Normalize, RoundTripProperty) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> scale(-3.0, 6.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix m(4, 30);
    for (Index i = 0; i < 4; ++i) {
      const double level = std::pow(10.0, scale(rng));
      for (Index j = 0; j < 30; ++j) m(i, j) = level * (1.0 + 0.3 * noise(rng));
    }
    TimeSeriesMatrix y(m, 20);
    auto [z, state] = normalize(y, NormalizationMode::per_series_whiten);
    for (Index i = 0; i < 4; ++i) {
      auto row = z.values().row(i).head(20);
      EXPECT_LT(std::abs(row.mean()), 1e-9);
      const double sd = std::sqrt((row.array() - row.mean()).square().mean());
      EXPECT_NEAR(sd, 1.0, 1e-9);
    }
    const Matrix back = denormalize(z.values(), state);
    for (Index q = 0; q < m.size(); ++q) {
      EXPECT_LE(std::abs(back.data()[q] - m.data()[q]), 1e-10 * std::abs(m.data()[q]));
    }
    const Matrix again = normalize_values(denormalize(z.values(), state), state);
    EXPECT_TRUE(again.isApprox(z.values(), 1e-10));
  }
}

TEST(TimeCovariates, HourOfDayEndpoints) {
  const auto start = parse_timestamp("2014-01-01 00:00:00");
  const CovariateTensor z = make_time_covariates(24, start, std::chrono::hours(1));
  ASSERT_EQ(z.channels(), 7);
  EXPECT_DOUBLE_EQ(z.at(0, 1, 0), -0.5);
  EXPECT_DOUBLE_EQ(z.at(0, 1, 23), 0.5);
}

TEST(TimeCovariates, WednesdayIsMidRange) {
  // 2014-01-01 is a Wednesday: index 3 of 0..6 with Sunday = 0.
  const auto start = parse_timestamp("2014-01-01T05:00");
  const CovariateTensor z = make_time_covariates(3, start, std::chrono::hours(1));
  EXPECT_DOUBLE_EQ(z.at(0, 2, 0), 3.0 / 6.0 - 0.5);
  EXPECT_DOUBLE_EQ(z.at(0, 2, 0), 0.0);
}

TEST(TimeCovariates, ChannelsStayInRangeAndArePeriodic) {
  const auto start = parse_timestamp("2011-12-25T13:30:00");
  const CovariateTensor z = make_time_covariates(24 * 400, start, std::chrono::hours(1));
  for (Index c = 0; c < 7; ++c) {
    for (Index j = 0; j < z.length(); ++j) {
      EXPECT_GE(z.at(0, c, j), -0.5);
      EXPECT_LE(z.at(0, c, j), 0.5);
    }
  }
  for (Index j = 0; j + 24 < z.length(); ++j) {
    EXPECT_EQ(z.at(0, 1, j), z.at(0, 1, j + 24));
    EXPECT_EQ(z.at(0, 0, j), z.at(0, 0, j + 24));
  }
  for (Index j = 0; j + 168 < z.length(); ++j) {
    EXPECT_EQ(z.at(0, 2, j), z.at(0, 2, j + 168));
  }
}

TEST(TimeCovariates, CalendarChannels) {
  const auto t = parse_timestamp("2016-12-31T23:59:00");  // leap year, Saturday
  const CovariateTensor z = make_time_covariates(1, t, std::chrono::minutes(1));
  EXPECT_DOUBLE_EQ(z.at(0, 0, 0), 0.5);                    // minute 59
  EXPECT_DOUBLE_EQ(z.at(0, 2, 0), 0.5);                    // Saturday = 6
  EXPECT_DOUBLE_EQ(z.at(0, 3, 0), 0.5);                    // day 31
  EXPECT_DOUBLE_EQ(z.at(0, 4, 0), 0.5);                    // day 366
  EXPECT_DOUBLE_EQ(z.at(0, 5, 0), 0.5);                    // December
  EXPECT_DOUBLE_EQ(z.at(0, 6, 0), 51.0 / 52.0 - 0.5);      // ISO week 52
}

TEST(TimeCovariates, IsoWeekEdges) {
  using namespace std::chrono;
  EXPECT_EQ(iso_week(2021y / January / 1), 53);   // Friday belongs to 2020-W53
  EXPECT_EQ(iso_week(2018y / December / 31), 1);  // Monday of 2019-W01
  EXPECT_EQ(iso_week(2015y / December / 31), 53);
  EXPECT_EQ(iso_week(2014y / June / 15), 24);
}

TEST(TimeCovariates, RejectsBadArguments) {
  const auto t = parse_timestamp("2014-01-01");
  EXPECT_THROW(make_time_covariates(0, t, std::chrono::hours(1)), ShapeError);
  EXPECT_THROW(make_time_covariates(5, t, std::chrono::seconds(0)), ShapeError);
  EXPECT_THROW(parse_timestamp("yesterday"), ConfigError);
}

TEST(CovariateTensor, SharedChannelsBroadcast) {
  CovariateTensor z(3, 4);
  z.add_channel(Matrix::Constant(1, 4, 0.25));
  Matrix per_series(3, 4);
  per_series.setRandom();
  z.add_channel(per_series);
  EXPECT_EQ(z.at(2, 0, 3), 0.25);
  EXPECT_EQ(z.at(2, 1, 3), per_series(2, 3));
  EXPECT_THROW(z.add_channel(Matrix::Zero(2, 4)), ShapeError);
  const CovariateTensor d = z.dense();
  EXPECT_EQ(d.channel(0).rows(), 3);
  const CovariateTensor s = z.time_slice(1, 3);
  EXPECT_EQ(s.length(), 2);
  EXPECT_EQ(s.at(1, 1, 0), per_series(1, 1));
}

TEST(CovariateTensor, StaticFeaturesReplicate) {
  Matrix f(2, 1);
  f << 3, -4;
  const CovariateTensor z = replicate_static(f, 5);
  EXPECT_EQ(z.channels(), 1);
  EXPECT_EQ(z.at(1, 0, 4), -4.0);
}

}  // namespace
}  // namespace deepglo
