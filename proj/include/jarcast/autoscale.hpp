#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace jarcast {

// VMs to start ahead of an interval for a forecast job count: one VM per
// job, fractional demand rounded up, never negative.
std::int64_t plan_provisioning(double forecast);

// Per-interval provisioning outcome. An interval is under-provisioned when
// actual > provisioned, over-provisioned when actual < provisioned.
struct ScalingTrace {
  std::vector<std::int64_t> provisioned;
  std::vector<std::int64_t> actual;
  std::size_t under_count = 0;
  std::size_t over_count = 0;
  std::size_t exact_count = 0;
  double under_rate = 0.0;  // percent of intervals
  double over_rate = 0.0;
  double exact_rate = 0.0;
  std::int64_t shortfall_vm_intervals = 0;  // sum max(0, T - P)
  std::int64_t idle_vm_intervals = 0;       // sum max(0, P - T)

  std::size_t intervals() const { return provisioned.size(); }
};

ScalingTrace simulate(std::span<const std::int64_t> provisioned, std::span<const std::int64_t> actual);

// Two-column CSV "interval,value" with an optional header.
struct IntervalSeries {
  std::vector<std::int64_t> interval;
  std::vector<double> value;
};
IntervalSeries read_interval_csv(std::istream& in);

// Pairs rows by interval id; both files must list the same intervals.
ScalingTrace simulate_from_csv(std::istream& forecast, std::istream& actual);

void write_scaling_report(std::ostream& out, const ScalingTrace& t, const std::string& label);
void write_scaling_csv_header(std::ostream& out);
void write_scaling_csv_row(std::ostream& out, const ScalingTrace& t, const std::string& label);

}  // namespace jarcast
