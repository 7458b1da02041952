#include "jarcast/autoscale.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <string_view>

#include "jarcast/types.hpp"

namespace jarcast {

std::int64_t plan_provisioning(double forecast) {
  if (!std::isfinite(forecast)) throw DataError("plan_provisioning: non-finite forecast");
  const double vms = std::ceil(forecast);
  return vms <= 0.0 ? 0 : static_cast<std::int64_t>(vms);
}

ScalingTrace simulate(std::span<const std::int64_t> provisioned, std::span<const std::int64_t> actual) {
  if (provisioned.size() != actual.size()) {
    throw DataError("simulate: " + std::to_string(provisioned.size()) + " provisioning entries vs " +
                    std::to_string(actual.size()) + " actual entries");
  }
  if (provisioned.empty()) throw DataError("simulate: no intervals");
  ScalingTrace t;
  t.provisioned.assign(provisioned.begin(), provisioned.end());
  t.actual.assign(actual.begin(), actual.end());
  for (std::size_t i = 0; i < provisioned.size(); ++i) {
    const std::int64_t p = provisioned[i];
    const std::int64_t a = actual[i];
    if (p < 0 || a < 0) throw DataError("simulate: negative count at interval " + std::to_string(i));
    if (a > p) {
      ++t.under_count;
      t.shortfall_vm_intervals += a - p;
    } else if (a < p) {
      ++t.over_count;
      t.idle_vm_intervals += p - a;
    } else {
      ++t.exact_count;
    }
  }
  const double n = static_cast<double>(provisioned.size());
  t.under_rate = 100.0 * static_cast<double>(t.under_count) / n;
  t.over_rate = 100.0 * static_cast<double>(t.over_count) / n;
  t.exact_rate = 100.0 * static_cast<double>(t.exact_count) / n;
  return t;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
std::optional<T> parse(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

IntervalSeries read_interval_csv(std::istream& in) {
  IntervalSeries out;
  std::string line;
  std::size_t number = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    const std::string_view sv(line);
    const auto comma = sv.find(',');
    const auto id = comma == std::string_view::npos ? std::nullopt : parse<std::int64_t>(sv.substr(0, comma));
    const auto rest = comma == std::string_view::npos ? std::string_view{} : sv.substr(comma + 1);
    const auto value = parse<double>(rest.substr(0, rest.find(',')));
    if (!id || !value) {
      if (first) {
        first = false;
        continue;
      }
      throw DataError("line " + std::to_string(number) + ": expected 'interval,value'");
    }
    first = false;
    out.interval.push_back(*id);
    out.value.push_back(*value);
  }
  if (out.interval.empty()) throw DataError("interval CSV has no rows");
  return out;
}

ScalingTrace simulate_from_csv(std::istream& forecast, std::istream& actual) {
  const IntervalSeries f = read_interval_csv(forecast);
  const IntervalSeries a = read_interval_csv(actual);
  std::map<std::int64_t, double> forecast_by_id;
  for (std::size_t i = 0; i < f.interval.size(); ++i) forecast_by_id[f.interval[i]] = f.value[i];
  if (forecast_by_id.size() != a.interval.size()) {
    throw DataError("forecast lists " + std::to_string(forecast_by_id.size()) + " intervals, actual lists " +
                    std::to_string(a.interval.size()));
  }
  std::vector<std::int64_t> p;
  std::vector<std::int64_t> t;
  for (std::size_t i = 0; i < a.interval.size(); ++i) {
    const auto it = forecast_by_id.find(a.interval[i]);
    if (it == forecast_by_id.end()) {
      throw DataError("no forecast for interval " + std::to_string(a.interval[i]));
    }
    p.push_back(plan_provisioning(it->second));
    if (a.value[i] < 0.0 || a.value[i] != std::floor(a.value[i])) {
      throw DataError("actual count at interval " + std::to_string(a.interval[i]) + " is not a nonnegative integer");
    }
    t.push_back(static_cast<std::int64_t>(a.value[i]));
  }
  return simulate(p, t);
}

void write_scaling_report(std::ostream& out, const ScalingTrace& t, const std::string& label) {
  out << "rate_definition: count-based (share of intervals)\n"
      << "workload: " << label << '\n'
      << "intervals: " << t.intervals() << '\n'
      << "under_count: " << t.under_count << '\n'
      << "over_count: " << t.over_count << '\n'
      << "exact_count: " << t.exact_count << '\n'
      << "under_rate_percent: " << t.under_rate << '\n'
      << "over_rate_percent: " << t.over_rate << '\n'
      << "exact_rate_percent: " << t.exact_rate << '\n'
      << "shortfall_vm_intervals: " << t.shortfall_vm_intervals << '\n'
      << "idle_vm_intervals: " << t.idle_vm_intervals << '\n';
}

void write_scaling_csv_header(std::ostream& out) {
  out << "workload,intervals,under_count,over_count,exact_count,under_rate_percent,over_rate_percent,"
         "exact_rate_percent,shortfall_vm_intervals,idle_vm_intervals\n";
}

void write_scaling_csv_row(std::ostream& out, const ScalingTrace& t, const std::string& label) {
  out << label << ',' << t.intervals() << ',' << t.under_count << ',' << t.over_count << ',' << t.exact_count << ','
      << t.under_rate << ',' << t.over_rate << ',' << t.exact_rate << ',' << t.shortfall_vm_intervals << ','
      << t.idle_vm_intervals << '\n';
}

}  // namespace jarcast
