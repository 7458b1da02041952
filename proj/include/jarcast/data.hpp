#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jarcast/types.hpp"

namespace jarcast {

// Job arrival counts per fixed interval.
struct TimeSeries {
  std::vector<double> values;
  int interval_minutes = 1;
  std::optional<std::int64_t> origin_timestamp;  // epoch seconds of bucket 0
  std::string label;

  std::size_t size() const { return values.size(); }
};

struct EventLogOptions {
  int interval_minutes = 5;
  std::size_t column = 0;  // timestamp column, 0-based
  std::string workload;    // label becomes "<workload>-<interval>m"
};

// Counts events per half-open bucket [k*dt, (k+1)*dt) measured from the
// earliest timestamp. Interior empty buckets are zero. A non-numeric first
// line is treated as a header.
TimeSeries ingest_events(std::istream& in, const EventLogOptions& opts);
TimeSeries ingest_events_file(const std::string& path, const EventLogOptions& opts);

// One nonnegative number per line (first CSV field); optional header.
TimeSeries ingest_values(std::istream& in, const std::string& label = "series", int interval_minutes = 1);
TimeSeries ingest_values_file(const std::string& path, const std::string& label = "", int interval_minutes = 1);

void write_values(std::ostream& out, const TimeSeries& series);

// [0, train_end) train, [train_end, val_end) validation, [val_end, length) test.
struct SplitBounds {
  std::size_t train_end = 0;
  std::size_t val_end = 0;
  std::size_t length = 0;

  std::size_t train_size() const { return train_end; }
  std::size_t val_size() const { return val_end - train_end; }
  std::size_t test_size() const { return length - val_end; }
};

// Boundaries at floor(0.6 L) and floor(0.8 L). Requires L >= 5 * window_len so
// every part holds at least one window.
SplitBounds split_60_20_20(std::size_t length, std::size_t window_len);

// Min-max scaling to [0,1] with no clamping outside the fitted range.
struct MinMaxScaler {
  double min = 0.0;
  double max = 1.0;

  // A constant segment is degenerate: everything maps to 0.5.
  bool degenerate() const { return !(max > min); }
  double normalize(double v) const { return degenerate() ? 0.5 : (v - min) / (max - min); }
  double denormalize(double v) const { return degenerate() ? min : min + v * (max - min); }
};

MinMaxScaler fit_scaler(std::span<const double> train_segment);

// Stride-1 windows of length n + tau over segment; row i = segment[i, i+S).
Matrix make_windows(std::span<const double> segment, std::size_t history_len, std::size_t tau);

struct WindowedDataset {
  std::string label;
  int interval_minutes = 1;
  std::size_t series_length = 0;
  std::size_t history_len = 0;  // t0 = n
  std::size_t tau = 1;
  SplitBounds split;
  MinMaxScaler scaler;
  // Normalized windows, one per row, S = history_len + tau columns.
  Matrix train;
  Matrix val;
  Matrix test;

  std::size_t window_len() const { return history_len + tau; }
};

// split -> fit scaler on train -> normalize -> window each part.
WindowedDataset make_dataset(const TimeSeries& series, std::size_t history_len, std::size_t tau = 1);

// Audit record of a dataset, as "key: value" lines.
std::string dataset_manifest(const WindowedDataset& ds);

// Periodic trace with multiplicative uniform noise:
//   x_t = (base + amplitude * sin(2 pi t / period)) * (1 + U(-noise, noise))
TimeSeries synthetic_sine(std::size_t length, double period, double noise, std::uint64_t seed, double base = 100.0,
                          double amplitude = 50.0);

}  // namespace jarcast
