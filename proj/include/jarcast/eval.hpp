#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "jarcast/data.hpp"
#include "jarcast/model.hpp"

namespace jarcast {

struct MapeResult {
  double percent = 0.0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;  // points with a zero actual
};

// 100 * mean |pred - actual| / |actual| over points with actual != 0.
// Throws DataError when lengths differ, are empty, or every actual is zero.
MapeResult mape(std::span<const double> pred, std::span<const double> actual);

// Persistence: repeat the last observed value.
double naive_forecast(std::span<const double> cond);

struct EvalReport {
  std::string label;
  std::size_t total_windows = 0;
  std::size_t evaluated = 0;
  std::size_t skipped_zero_actuals = 0;
  double mape = 0.0;
  double baseline_mape = 0.0;
  double latency_mean_ms = 0.0;
  double latency_median_ms = 0.0;
  double latency_p99_ms = 0.0;
  std::vector<double> actual;     // denormalized, one per window
  std::vector<double> predicted;  // denormalized, one per window
};

// Runs the generator once per window (batch 1) after one untimed warm-up
// call and times each forward pass with a monotonic clock. Predictions and
// actuals are denormalized before scoring; the persistence baseline is scored
// on the same windows.
EvalReport evaluate(const Generator& gen, const Matrix& windows, const MinMaxScaler& scaler, std::size_t tau,
                    const std::string& label);

// Batched prediction, denormalized MAPE on a window matrix. Used for
// validation during training.
double windows_mape(const Generator& gen, const Matrix& windows, const MinMaxScaler& scaler, std::size_t tau);

void write_report(std::ostream& out, const EvalReport& r);
void write_report_csv_header(std::ostream& out);
void write_report_csv_row(std::ostream& out, const EvalReport& r);
void write_pairs_csv(std::ostream& out, const EvalReport& r);

}  // namespace jarcast
