#include "deepglo/data.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace deepglo {

namespace {

std::vector<std::string_view> split_line(std::string_view line, char delimiter) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delimiter, start);
    if (pos == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

struct ParsedCsv {
  std::vector<std::vector<double>> rows;
  std::vector<std::string> ids;
};

ParsedCsv parse_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open data file: " + path.string());
  }
  ParsedCsv out;
  std::string line;
  std::size_t line_no = 0;
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (options.header && line_no == 1) continue;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    auto cells = split_line(view, options.delimiter);
    const std::size_t row_no = out.rows.size() + 1;
    std::size_t first = 0;
    if (options.id_column) {
      out.ids.emplace_back(trim(cells.front()));
      first = 1;
    }
    const std::size_t width = cells.size() - first;
    if (out.rows.empty()) {
      expected = width;
      if (expected == 0) {
        throw DataError("row 1 has no data columns in " + path.string());
      }
    } else if (width != expected) {
      throw DataError("ragged rows: row " + std::to_string(row_no) + " has " +
                      std::to_string(width) + " columns, expected " + std::to_string(expected) +
                      " (" + path.string() + ")");
    }
    std::vector<double> row(width);
    for (std::size_t c = 0; c < width; ++c) {
      std::string_view cell = trim(cells[first + c]);
      double v = 0.0;
      const auto* begin = cell.data();
      const auto* end = cell.data() + cell.size();
      if (!cell.empty() && *begin == '+') ++begin;
      auto [ptr, ec] = std::from_chars(begin, end, v);
      if (cell.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
        throw DataError("non-numeric or missing value at row " + std::to_string(row_no) +
                        ", column " + std::to_string(c + 1) + ": '" + std::string(cell) + "' (" +
                        path.string() + ")");
      }
      row[c] = v;
    }
    out.rows.push_back(std::move(row));
  }
  if (out.rows.empty()) {
    throw DataError("no rows in " + path.string());
  }
  return out;
}

Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
    }
  }
  return m;
}

}  // namespace

TimeSeriesMatrix::TimeSeriesMatrix(Matrix values, Index train_len, Index horizon)
    : values_(std::move(values)), horizon_(horizon) {
  if (!values_.allFinite()) {
    throw DataError("time series matrix contains non-finite values");
  }
  set_train_len(train_len < 0 ? values_.cols() : train_len);
}

void TimeSeriesMatrix::set_ids(std::vector<std::string> ids) {
  if (!ids.empty() && static_cast<Index>(ids.size()) != series()) {
    throw ShapeError("id count does not match series count");
  }
  ids_ = std::move(ids);
}

void TimeSeriesMatrix::set_train_len(Index train_len) {
  if (values_.cols() > 0 && (train_len < 1 || train_len > values_.cols())) {
    throw ShapeError("train_len " + std::to_string(train_len) + " outside [1, " +
                     std::to_string(values_.cols()) + "]");
  }
  train_len_ = train_len;
}

Matrix TimeSeriesMatrix::slice(const std::vector<Index>& rows, const std::vector<Index>& cols) const {
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      out(static_cast<Index>(r), static_cast<Index>(c)) = values_(rows[r], cols[c]);
    }
  }
  return out;
}

void CovariateTensor::add_channel(Matrix values) {
  if ((values.rows() != 1 && values.rows() != series_) || values.cols() != length_) {
    throw ShapeError("covariate channel shape [" + std::to_string(values.rows()) + " x " +
                     std::to_string(values.cols()) + "] does not fit tensor [" +
                     std::to_string(series_) + " x " + std::to_string(length_) + "]");
  }
  channels_.push_back(std::move(values));
}

void CovariateTensor::append(const CovariateTensor& other) {
  if (other.empty()) return;
  for (const auto& c : other.channels_) add_channel(c);
}

CovariateTensor CovariateTensor::time_slice(Index begin, Index end) const {
  if (begin < 0 || end > length_ || begin > end) {
    throw ShapeError("covariate time slice out of range");
  }
  CovariateTensor out(series_, end - begin);
  for (const auto& c : channels_) out.add_channel(c.middleCols(begin, end - begin));
  return out;
}

CovariateTensor CovariateTensor::dense() const {
  CovariateTensor out(series_, length_);
  for (const auto& c : channels_) {
    if (c.rows() == series_) {
      out.add_channel(c);
    } else {
      out.add_channel(c.replicate(series_, 1));
    }
  }
  return out;
}

std::pair<TimeSeriesMatrix, NormalizationState> normalize(const TimeSeriesMatrix& y,
                                                          NormalizationMode mode) {
  NormalizationState state;
  state.mode = mode;
  const Index n = y.series();
  if (mode == NormalizationMode::none) {
    state.means = Vector::Zero(n);
    state.stds = Vector::Ones(n);
    return {y, state};
  }
  const Index t = y.train_len();
  if (t < 2) {
    throw ShapeError("per-series whitening needs train_len >= 2");
  }
  state.means.resize(n);
  state.stds.resize(n);
  for (Index i = 0; i < n; ++i) {
    auto row = y.values().row(i).head(t);
    const double mean = row.mean();
    const double var = (row.array() - mean).square().mean();
    state.means(i) = mean;
    state.stds(i) = std::max(std::sqrt(var), kStdFloor);
  }
  TimeSeriesMatrix out(normalize_values(y.values(), state), y.train_len(), y.horizon());
  out.set_ids(y.ids());
  return {std::move(out), state};
}

Matrix normalize_values(const Matrix& values, const NormalizationState& state) {
  if (state.means.size() != values.rows() || state.stds.size() != values.rows()) {
    throw ShapeError("normalization state has " + std::to_string(state.means.size()) +
                     " series, matrix has " + std::to_string(values.rows()));
  }
  if (state.mode == NormalizationMode::none) return values;
  Matrix out(values.rows(), values.cols());
  for (Index i = 0; i < values.rows(); ++i) {
    out.row(i) = (values.row(i).array() - state.means(i)) / state.stds(i);
  }
  return out;
}

Matrix denormalize(const Matrix& yhat, const NormalizationState& state) {
  if (state.means.size() != yhat.rows() || state.stds.size() != yhat.rows()) {
    throw ShapeError("normalization state has " + std::to_string(state.means.size()) +
                     " series, prediction has " + std::to_string(yhat.rows()));
  }
  if (state.mode == NormalizationMode::none) return yhat;
  Matrix out(yhat.rows(), yhat.cols());
  for (Index i = 0; i < yhat.rows(); ++i) {
    out.row(i) = yhat.row(i).array() * state.stds(i) + state.means(i);
  }
  return out;
}

TimeSeriesMatrix load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  ParsedCsv parsed = parse_csv(path, options);
  TimeSeriesMatrix y(to_matrix(parsed.rows));
  if (options.id_column) y.set_ids(std::move(parsed.ids));
  return y;
}

Matrix load_static_covariates(const std::filesystem::path& path, const CsvOptions& options) {
  return to_matrix(parse_csv(path, options).rows);
}

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void save_csv(const std::filesystem::path& path, const Matrix& values,
              const std::vector<std::string>& ids, char delimiter) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  for (Index i = 0; i < values.rows(); ++i) {
    if (!ids.empty()) out << ids[static_cast<std::size_t>(i)] << delimiter;
    for (Index j = 0; j < values.cols(); ++j) {
      if (j > 0) out << delimiter;
      out << format_double(values(i, j));
    }
    out << '\n';
  }
  if (!out) {
    throw DataError("write failed: " + path.string());
  }
}

CovariateTensor replicate_static(const Matrix& features, Index length) {
  CovariateTensor out(features.rows(), length);
  for (Index c = 0; c < features.cols(); ++c) {
    out.add_channel(features.col(c).replicate(1, length));
  }
  return out;
}

TimePoint parse_timestamp(const std::string& text) {
  int y = 0;
  unsigned mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char sep = 0;
  const int got = std::sscanf(text.c_str(), "%d-%u-%u%c%u:%u:%u", &y, &mo, &d, &sep, &h, &mi, &s);
  if (got != 3 && !(got >= 6 && (sep == 'T' || sep == ' '))) {
    throw ConfigError("cannot parse timestamp '" + text + "'");
  }
  using namespace std::chrono;
  const year_month_day date{year{y}, month{mo}, day{d}};
  if (!date.ok() || h > 23 || mi > 59 || s > 59) {
    throw ConfigError("invalid timestamp '" + text + "'");
  }
  return sys_days{date} + hours{h} + minutes{mi} + seconds{s};
}

std::string format_timestamp(TimePoint t) {
  using namespace std::chrono;
  const auto day_start = floor<days>(t);
  const year_month_day date{day_start};
  const hh_mm_ss tod{t - day_start};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()),
                static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                static_cast<int>(tod.seconds().count()));
  return buf;
}

int iso_week(std::chrono::year_month_day date) {
  using namespace std::chrono;
  const sys_days sd{date};
  // Thursday of the same ISO week decides the ISO year.
  const unsigned iso_dow = weekday{sd}.iso_encoding();  // Mon=1..Sun=7
  const sys_days thursday = sd + days{4 - static_cast<int>(iso_dow)};
  const year iso_year = year_month_day{thursday}.year();
  const sys_days jan1{iso_year / January / 1};
  return static_cast<int>((thursday - jan1).count() / 7) + 1;
}

CovariateTensor make_time_covariates(Index total_length, TimePoint start, std::chrono::seconds step) {
  if (total_length < 1 || step.count() <= 0) {
    throw ShapeError("time covariates need total_length >= 1 and a positive step");
  }
  using namespace std::chrono;
  Matrix features(kTimeFeatureCount, total_length);
  auto scale = [](double raw, double range) { return raw / (range - 1.0) - 0.5; };
  for (Index j = 0; j < total_length; ++j) {
    const TimePoint t = start + step * j;
    const sys_days day_point = floor<days>(t);
    const year_month_day date{day_point};
    const hh_mm_ss tod{t - day_point};
    const sys_days jan1{date.year() / January / 1};
    const auto day_of_year = (day_point - jan1).count();  // 0-based
    features(0, j) = scale(static_cast<double>(tod.minutes().count()), 60);
    features(1, j) = scale(static_cast<double>(tod.hours().count()), 24);
    features(2, j) = scale(static_cast<double>(weekday{day_point}.c_encoding()), 7);
    features(3, j) = scale(static_cast<double>(static_cast<unsigned>(date.day()) - 1), 31);
    features(4, j) = scale(static_cast<double>(day_of_year), 366);
    features(5, j) = scale(static_cast<double>(static_cast<unsigned>(date.month()) - 1), 12);
    features(6, j) = scale(static_cast<double>(iso_week(date) - 1), 53);
  }
  CovariateTensor out(1, total_length);
  for (Index c = 0; c < kTimeFeatureCount; ++c) out.add_channel(features.row(c));
  return out;
}

}  // namespace deepglo
