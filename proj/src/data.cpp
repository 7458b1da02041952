#include "jarcast/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "jarcast/rng.hpp"

namespace jarcast {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string_view field(std::string_view line, std::size_t column) {
  for (std::size_t c = 0; c < column; ++c) {
    const auto comma = line.find(',');
    if (comma == std::string_view::npos) return {};
    line.remove_prefix(comma + 1);
  }
  return trim(line.substr(0, line.find(',')));
}

std::optional<double> parse_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

// Reads non-blank lines with their 1-based line numbers; skips a UTF-8 BOM.
std::vector<std::pair<std::size_t, std::string>> read_lines(std::istream& in) {
  std::vector<std::pair<std::size_t, std::string>> lines;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (number == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    lines.emplace_back(number, std::move(line));
  }
  return lines;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

std::string stem_of(const std::string& path) {
  const auto slash = path.find_last_of('/');
  std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
  const auto dot = name.find_last_of('.');
  return dot == std::string::npos || dot == 0 ? name : name.substr(0, dot);
}

}  // namespace

TimeSeries ingest_events(std::istream& in, const EventLogOptions& opts) {
  if (opts.interval_minutes < 1) throw DataError("interval must be at least one minute");
  const auto lines = read_lines(in);
  std::vector<double> stamps;
  stamps.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& [number, text] = lines[i];
    const auto value = parse_number(field(text, opts.column));
    if (!value) {
      if (i == 0) continue;  // header
      throw DataError("line " + std::to_string(number) + ": unparseable timestamp '" +
                      std::string(field(text, opts.column)) + "'");
    }
    stamps.push_back(*value);
  }
  if (stamps.empty()) throw DataError("event log has no events");
  std::sort(stamps.begin(), stamps.end());

  const double width = 60.0 * opts.interval_minutes;
  const double origin = stamps.front();
  const auto last = static_cast<std::size_t>(std::floor((stamps.back() - origin) / width));
  TimeSeries series;
  series.values.assign(last + 1, 0.0);
  for (double t : stamps) {
    const auto bucket = static_cast<std::size_t>(std::floor((t - origin) / width));
    series.values[bucket] += 1.0;
  }
  series.interval_minutes = opts.interval_minutes;
  series.origin_timestamp = static_cast<std::int64_t>(std::floor(origin));
  series.label = (opts.workload.empty() ? std::string("events") : opts.workload) + "-" +
                 std::to_string(opts.interval_minutes) + "m";
  return series;
}

TimeSeries ingest_events_file(const std::string& path, const EventLogOptions& opts) {
  auto in = open_or_throw(path);
  EventLogOptions o = opts;
  if (o.workload.empty()) o.workload = stem_of(path);
  return ingest_events(in, o);
}

TimeSeries ingest_values(std::istream& in, const std::string& label, int interval_minutes) {
  if (interval_minutes < 1) throw DataError("interval must be at least one minute");
  const auto lines = read_lines(in);
  TimeSeries series;
  series.label = label;
  series.interval_minutes = interval_minutes;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& [number, text] = lines[i];
    const auto value = parse_number(field(text, 0));
    if (!value) {
      if (i == 0) continue;  // header
      throw DataError("line " + std::to_string(number) + ": not a number '" + std::string(field(text, 0)) + "'");
    }
    if (*value < 0.0) throw DataError("line " + std::to_string(number) + ": negative count");
    series.values.push_back(*value);
  }
  if (series.values.empty()) throw DataError("value series is empty");
  return series;
}

TimeSeries ingest_values_file(const std::string& path, const std::string& label, int interval_minutes) {
  auto in = open_or_throw(path);
  return ingest_values(in, label.empty() ? stem_of(path) : label, interval_minutes);
}

void write_values(std::ostream& out, const TimeSeries& series) {
  out << "count\n";
  char buf[64];
  for (double v : series.values) {
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.write(buf, ptr - buf);
    out << '\n';
  }
}

SplitBounds split_60_20_20(std::size_t length, std::size_t window_len) {
  if (window_len < 1) throw DataError("window length must be positive");
  if (length < 5 * window_len) {
    throw DataError("series of length " + std::to_string(length) + " is too short for windows of length " +
                    std::to_string(window_len) + " (need at least " + std::to_string(5 * window_len) + ")");
  }
  // Integer arithmetic keeps floor(0.6 L) exact.
  return SplitBounds{length * 6 / 10, length * 8 / 10, length};
}

MinMaxScaler fit_scaler(std::span<const double> train_segment) {
  if (train_segment.empty()) throw DataError("cannot fit a scaler on an empty segment");
  const auto [lo, hi] = std::minmax_element(train_segment.begin(), train_segment.end());
  return MinMaxScaler{*lo, *hi};
}

Matrix make_windows(std::span<const double> segment, std::size_t history_len, std::size_t tau) {
  const std::size_t s = history_len + tau;
  if (history_len < 1 || tau < 1) throw DataError("history length and tau must be positive");
  if (segment.size() < s) {
    throw DataError("segment of length " + std::to_string(segment.size()) + " cannot hold a window of length " +
                    std::to_string(s));
  }
  const std::size_t n = segment.size() - s + 1;
  Matrix windows(static_cast<Index>(n), static_cast<Index>(s));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      windows(static_cast<Index>(i), static_cast<Index>(j)) = static_cast<float>(segment[i + j]);
    }
  }
  return windows;
}

WindowedDataset make_dataset(const TimeSeries& series, std::size_t history_len, std::size_t tau) {
  WindowedDataset ds;
  ds.label = series.label;
  ds.interval_minutes = series.interval_minutes;
  ds.series_length = series.size();
  ds.history_len = history_len;
  ds.tau = tau;
  ds.split = split_60_20_20(series.size(), history_len + tau);
  const std::span<const double> all(series.values);
  ds.scaler = fit_scaler(all.first(ds.split.train_end));

  std::vector<double> scaled(series.size());
  std::transform(series.values.begin(), series.values.end(), scaled.begin(),
                 [&](double v) { return ds.scaler.normalize(v); });
  const std::span<const double> s(scaled);
  ds.train = make_windows(s.subspan(0, ds.split.train_size()), history_len, tau);
  ds.val = make_windows(s.subspan(ds.split.train_end, ds.split.val_size()), history_len, tau);
  ds.test = make_windows(s.subspan(ds.split.val_end, ds.split.test_size()), history_len, tau);
  return ds;
}

std::string dataset_manifest(const WindowedDataset& ds) {
  std::ostringstream out;
  out.precision(17);
  out << "label: " << ds.label << '\n'
      << "interval_minutes: " << ds.interval_minutes << '\n'
      << "length: " << ds.series_length << '\n'
      << "train: [0, " << ds.split.train_end << ")\n"
      << "val: [" << ds.split.train_end << ", " << ds.split.val_end << ")\n"
      << "test: [" << ds.split.val_end << ", " << ds.split.length << ")\n"
      << "normalization: " << (ds.scaler.degenerate() ? "minmax (degenerate, constant 0.5)" : "minmax") << '\n'
      << "scaler_min: " << ds.scaler.min << '\n'
      << "scaler_max: " << ds.scaler.max << '\n'
      << "history_len: " << ds.history_len << '\n'
      << "tau: " << ds.tau << '\n'
      << "windows: " << ds.train.rows() << " / " << ds.val.rows() << " / " << ds.test.rows() << '\n';
  return out.str();
}

TimeSeries synthetic_sine(std::size_t length, double period, double noise, std::uint64_t seed, double base,
                          double amplitude) {
  Rng rng(seed);
  TimeSeries series;
  series.label = "sine";
  series.values.reserve(length);
  for (std::size_t t = 0; t < length; ++t) {
    const double clean = base + amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period);
    const double v = clean * (1.0 + rng.uniform(-noise, noise));
    series.values.push_back(std::max(0.0, std::round(v * 1000.0) / 1000.0));
  }
  return series;
}

}  // namespace jarcast
