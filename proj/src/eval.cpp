#include "jarcast/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace jarcast {

MapeResult mape(std::span<const double> pred, std::span<const double> actual) {
  if (pred.size() != actual.size()) throw DataError("mape: prediction and actual lengths differ");
  if (pred.empty()) throw DataError("mape: no points");
  MapeResult r;
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (actual[i] == 0.0) {
      ++r.skipped;
      continue;
    }
    total += std::abs((pred[i] - actual[i]) / actual[i]);
    ++r.evaluated;
  }
  if (r.evaluated == 0) throw DataError("mape: undefined, every actual value is zero");
  r.percent = 100.0 * total / static_cast<double>(r.evaluated);
  return r;
}

double naive_forecast(std::span<const double> cond) {
  if (cond.empty()) throw DataError("naive_forecast: empty conditioning range");
  return cond.back();
}

namespace {

// Nearest-rank percentile of sorted data.
double percentile(const std::vector<double>& sorted, double q) {
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
  return sorted[std::min(sorted.size(), std::max<std::size_t>(rank, 1)) - 1];
}

}  // namespace

EvalReport evaluate(const Generator& gen, const Matrix& windows, const MinMaxScaler& scaler, std::size_t tau,
                    const std::string& label) {
  if (windows.rows() == 0) throw DataError("evaluate: no test windows");
  const Index t0 = windows.cols() - static_cast<Index>(tau);
  if (t0 < 1) throw DataError("evaluate: window shorter than tau");

  EvalReport r;
  r.label = label;
  r.total_windows = static_cast<std::size_t>(windows.rows());

  (void)gen.predict(windows.topRows(1).leftCols(t0));  // warm-up

  std::vector<double> latencies;
  std::vector<double> baseline;
  latencies.reserve(r.total_windows);
  for (Index i = 0; i < windows.rows(); ++i) {
    const Matrix cond = windows.row(i).leftCols(t0);
    const auto start = std::chrono::steady_clock::now();
    const Matrix out = gen.predict(cond);
    const auto stop = std::chrono::steady_clock::now();
    latencies.push_back(std::chrono::duration<double, std::milli>(stop - start).count());

    r.predicted.push_back(scaler.denormalize(out(0, 0)));
    r.actual.push_back(scaler.denormalize(windows(i, t0)));
    baseline.push_back(scaler.denormalize(windows(i, t0 - 1)));
  }

  const MapeResult model = mape(r.predicted, r.actual);
  const MapeResult naive = mape(baseline, r.actual);
  r.mape = model.percent;
  r.evaluated = model.evaluated;
  r.skipped_zero_actuals = model.skipped;
  r.baseline_mape = naive.percent;

  double sum = 0.0;
  for (double v : latencies) sum += v;
  r.latency_mean_ms = sum / static_cast<double>(latencies.size());
  std::sort(latencies.begin(), latencies.end());
  r.latency_median_ms = percentile(latencies, 0.5);
  r.latency_p99_ms = percentile(latencies, 0.99);
  return r;
}

double windows_mape(const Generator& gen, const Matrix& windows, const MinMaxScaler& scaler, std::size_t tau) {
  const Index t0 = windows.cols() - static_cast<Index>(tau);
  const Matrix pred = gen.predict(windows.leftCols(t0));
  std::vector<double> p(static_cast<std::size_t>(windows.rows()));
  std::vector<double> a(p.size());
  for (Index i = 0; i < windows.rows(); ++i) {
    p[static_cast<std::size_t>(i)] = scaler.denormalize(pred(i, 0));
    a[static_cast<std::size_t>(i)] = scaler.denormalize(windows(i, t0));
  }
  return mape(p, a).percent;
}

void write_report(std::ostream& out, const EvalReport& r) {
  out << "workload: " << r.label << '\n'
      << "windows: " << r.total_windows << '\n'
      << "evaluated: " << r.evaluated << '\n'
      << "skipped_zero_actuals: " << r.skipped_zero_actuals << '\n'
      << "mape_percent: " << r.mape << '\n'
      << "baseline_mape_percent: " << r.baseline_mape << '\n'
      << "latency_mean_ms: " << r.latency_mean_ms << '\n'
      << "latency_median_ms: " << r.latency_median_ms << '\n'
      << "latency_p99_ms: " << r.latency_p99_ms << '\n';
}

void write_report_csv_header(std::ostream& out) {
  out << "workload,windows,evaluated,skipped_zero_actuals,mape_percent,baseline_mape_percent,"
         "latency_mean_ms,latency_median_ms,latency_p99_ms\n";
}

void write_report_csv_row(std::ostream& out, const EvalReport& r) {
  out << r.label << ',' << r.total_windows << ',' << r.evaluated << ',' << r.skipped_zero_actuals << ',' << r.mape
      << ',' << r.baseline_mape << ',' << r.latency_mean_ms << ',' << r.latency_median_ms << ','
      << r.latency_p99_ms << '\n';
}

void write_pairs_csv(std::ostream& out, const EvalReport& r) {
  out << "window,actual,predicted\n";
  for (std::size_t i = 0; i < r.actual.size(); ++i) {
    out << i << ',' << r.actual[i] << ',' << r.predicted[i] << '\n';
  }
}

}  // namespace jarcast
