#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "deepglo/common.hpp"

namespace deepglo {

/// Raw series matrix, one series per row, with the train/test split.
class TimeSeriesMatrix {
 public:
  TimeSeriesMatrix() = default;
  /// train_len defaults to every column.
  explicit TimeSeriesMatrix(Matrix values, Index train_len = -1, Index horizon = 0);

  const Matrix& values() const { return values_; }
  Index series() const { return values_.rows(); }
  Index length() const { return values_.cols(); }
  Index train_len() const { return train_len_; }
  Index horizon() const { return horizon_; }

  const std::vector<std::string>& ids() const { return ids_; }
  void set_ids(std::vector<std::string> ids);
  void set_train_len(Index train_len);

  /// Y[:, 0:train_len]
  Matrix training() const { return values_.leftCols(train_len_); }
  /// Y[rows, cols]
  Matrix slice(const std::vector<Index>& rows, const std::vector<Index>& cols) const;

 private:
  Matrix values_;
  Index train_len_ = 0;
  Index horizon_ = 0;
  std::vector<std::string> ids_;
};

/// Covariates Z indexed (series, channel, time). A channel stores either one
/// row per series or a single row shared by every series.
class CovariateTensor {
 public:
  CovariateTensor() = default;
  CovariateTensor(Index series, Index length) : series_(series), length_(length) {}

  Index series() const { return series_; }
  Index channels() const { return static_cast<Index>(channels_.size()); }
  Index length() const { return length_; }
  bool empty() const { return channels_.empty(); }

  double at(Index series, Index channel, Index time) const {
    const Matrix& m = channels_[static_cast<std::size_t>(channel)];
    return m(m.rows() == 1 ? 0 : series, time);
  }
  const Matrix& channel(Index c) const { return channels_[static_cast<std::size_t>(c)]; }

  /// values must have 1 or series() rows and length() columns.
  void add_channel(Matrix values);
  /// Appends all channels of other (same series/length).
  void append(const CovariateTensor& other);
  /// Time columns [begin, end).
  CovariateTensor time_slice(Index begin, Index end) const;
  /// Broadcast shared channels to dense [series × length].
  CovariateTensor dense() const;

 private:
  Index series_ = 0;
  Index length_ = 0;
  std::vector<Matrix> channels_;
};

enum class NormalizationMode { none, per_series_whiten };

struct NormalizationState {
  NormalizationMode mode = NormalizationMode::none;
  Vector means;
  Vector stds;
};

inline constexpr double kStdFloor = 1e-6;

/// Whitening statistics use the training columns only.
std::pair<TimeSeriesMatrix, NormalizationState> normalize(const TimeSeriesMatrix& y,
                                                          NormalizationMode mode);
Matrix normalize_values(const Matrix& values, const NormalizationState& state);
Matrix denormalize(const Matrix& yhat, const NormalizationState& state);

struct CsvOptions {
  char delimiter = ',';
  bool header = false;
  bool id_column = false;
};

TimeSeriesMatrix load_csv(const std::filesystem::path& path, const CsvOptions& options = {});
/// Per-series static covariates: one row per series, one column per feature.
Matrix load_static_covariates(const std::filesystem::path& path, const CsvOptions& options = {});
/// Values written with 17 significant digits so that a reload is exact.
void save_csv(const std::filesystem::path& path, const Matrix& values,
              const std::vector<std::string>& ids = {}, char delimiter = ',');
std::string format_double(double value);

/// Static features replicated across length columns.
CovariateTensor replicate_static(const Matrix& features, Index length);

using TimePoint = std::chrono::sys_seconds;

/// Parses "YYYY-MM-DD", "YYYY-MM-DD HH:MM[:SS]" or "YYYY-MM-DDTHH:MM[:SS]" (UTC).
TimePoint parse_timestamp(const std::string& text);
std::string format_timestamp(TimePoint t);

inline constexpr int kTimeFeatureCount = 7;

/// Seven shared channels in [-0.5, 0.5]: minute of hour, hour of day, day of
/// week (Sunday = 0), day of month, day of year, month of year, ISO week.
CovariateTensor make_time_covariates(Index total_length, TimePoint start,
                                     std::chrono::seconds step);

/// ISO-8601 week number (1..53).
int iso_week(std::chrono::year_month_day date);

}  // namespace deepglo
