#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "jarcast/autoscale.hpp"
#include "jarcast/rng.hpp"
#include "jarcast/types.hpp"

using namespace jarcast;
using Counts = std::vector<std::int64_t>;

TEST(Provisioning, CeilingWithFloorAtZero) {
  EXPECT_EQ(plan_provisioning(2.3), 3);
  EXPECT_EQ(plan_provisioning(-0.4), 0);
  EXPECT_EQ(plan_provisioning(5.0), 5);
  EXPECT_EQ(plan_provisioning(0.0), 0);
  EXPECT_THROW(plan_provisioning(std::nan("")), DataError);
}

TEST(Simulate, OneOfEachClass) {
  const ScalingTrace t = simulate(Counts{3, 5, 2}, Counts{4, 5, 1});
  EXPECT_EQ(t.under_count, 1u);
  EXPECT_EQ(t.over_count, 1u);
  EXPECT_EQ(t.exact_count, 1u);
  EXPECT_DOUBLE_EQ(t.under_rate, 100.0 / 3.0);
  EXPECT_DOUBLE_EQ(t.over_rate, 100.0 / 3.0);
  EXPECT_DOUBLE_EQ(t.exact_rate, 100.0 / 3.0);
  EXPECT_EQ(t.shortfall_vm_intervals, 1);
  EXPECT_EQ(t.idle_vm_intervals, 1);
}

TEST(Simulate, PerfectForecast) {
  const ScalingTrace t = simulate(Counts{1, 7, 0}, Counts{1, 7, 0});
  EXPECT_EQ(t.under_rate, 0.0);
  EXPECT_EQ(t.over_rate, 0.0);
  EXPECT_EQ(t.exact_rate, 100.0);
}

TEST(Simulate, NothingProvisioned) {
  const ScalingTrace t = simulate(Counts{0, 0}, Counts{1, 2});
  EXPECT_EQ(t.under_rate, 100.0);
  EXPECT_EQ(t.shortfall_vm_intervals, 3);
}

TEST(Simulate, Errors) {
  EXPECT_THROW(simulate(Counts{1, 2}, Counts{1}), DataError);
  EXPECT_THROW(simulate(Counts{}, Counts{}), DataError);
  EXPECT_THROW(simulate(Counts{-1}, Counts{1}), DataError);
}

namespace {

std::pair<Counts, Counts> random_trace(Rng& rng, std::size_t n) {
  Counts p(n), t(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = static_cast<std::int64_t>(rng.below(10));
    t[i] = static_cast<std::int64_t>(rng.below(10));
  }
  return {p, t};
}

}  // namespace

TEST(SimulateProperties, CountsPartitionTheIntervals) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto [p, t] = random_trace(rng, 1 + rng.below(40));
    const ScalingTrace s = simulate(p, t);
    EXPECT_EQ(s.under_count + s.over_count + s.exact_count, p.size());
    EXPECT_NEAR(s.under_rate + s.over_rate + s.exact_rate, 100.0, 1e-9);
  }
}

TEST(SimulateProperties, AddingCapacityIsMonotone) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    auto [p, t] = random_trace(rng, 1 + rng.below(40));
    const ScalingTrace before = simulate(p, t);
    const auto k = static_cast<std::int64_t>(1 + rng.below(5));
    for (auto& v : p) v += k;
    const ScalingTrace after = simulate(p, t);
    EXPECT_LE(after.under_rate, before.under_rate);
    EXPECT_GE(after.idle_vm_intervals, before.idle_vm_intervals);
  }
}

TEST(SimulateProperties, PermutationEquivariant) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    auto [p, t] = random_trace(rng, 1 + rng.below(40));
    std::vector<std::size_t> order(p.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle(order, rng);
    Counts pp, tp;
    for (std::size_t i : order) {
      pp.push_back(p[i]);
      tp.push_back(t[i]);
    }
    const ScalingTrace a = simulate(p, t);
    const ScalingTrace b = simulate(pp, tp);
    EXPECT_EQ(a.under_rate, b.under_rate);
    EXPECT_EQ(a.over_rate, b.over_rate);
    EXPECT_EQ(a.exact_rate, b.exact_rate);
    EXPECT_EQ(a.shortfall_vm_intervals, b.shortfall_vm_intervals);
    EXPECT_EQ(a.idle_vm_intervals, b.idle_vm_intervals);
  }
}

TEST(SimulateCsv, JoinsByIntervalId) {
  std::istringstream forecast("interval,predicted\n2,1.2\n0,2.3\n1,4.9\n");
  std::istringstream actual("interval,count\n0,4\n1,5\n2,1\n");
  const ScalingTrace t = simulate_from_csv(forecast, actual);
  EXPECT_EQ(t.provisioned, (Counts{3, 5, 2}));
  EXPECT_EQ(t.actual, (Counts{4, 5, 1}));
  EXPECT_EQ(t.under_count, 1u);
}

TEST(SimulateCsv, Mismatches) {
  {
    std::istringstream f("0,1\n1,1\n");
    std::istringstream a("0,1\n");
    EXPECT_THROW(simulate_from_csv(f, a), DataError);
  }
  {
    std::istringstream f("0,1\n1,1\n");
    std::istringstream a("0,1\n5,1\n");
    EXPECT_THROW(simulate_from_csv(f, a), DataError);
  }
  {
    std::istringstream f("0,1\n");
    std::istringstream a("0,1.5\n");
    EXPECT_THROW(simulate_from_csv(f, a), DataError);
  }
  {
    std::istringstream f("0,1\nbad row\n");
    std::istringstream a("0,1\n");
    EXPECT_THROW(simulate_from_csv(f, a), DataError);
  }
}

TEST(ScalingReport, FlagsTheRateDefinition) {
  std::ostringstream out;
  write_scaling_report(out, simulate(Counts{1}, Counts{1}), "w");
  EXPECT_EQ(out.str().rfind("rate_definition: count-based", 0), 0u);
}
