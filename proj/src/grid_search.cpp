#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <thread>

#include "jarcast/train.hpp"

namespace jarcast {
namespace {

struct WorkloadRange {
  int history_lo, history_hi;
  int batch_lo, batch_hi;
};

// History-length and batch-size intervals of the generator search space.
const std::map<std::string, WorkloadRange>& workload_ranges() {
  static const std::map<std::string, WorkloadRange> ranges = {
      {"Facebook", {3, 46, 16, 256}},        {"Alibaba-2018", {20, 324, 16, 1024}},
      {"Google", {28, 676, 16, 1024}},       {"Wiki", {12, 274, 16, 1024}},
      {"Azure-VM-2017", {14, 682, 16, 1024}}, {"Azure-VM-2019", {14, 230, 16, 1024}},
      {"Azure-Func-2019", {7, 108, 16, 512}},
  };
  return ranges;
}

bool better(const GridRow& a, const GridRow& b) {
  if (a.val_mape != b.val_mape) return a.val_mape < b.val_mape;
  if (a.point.d_model != b.point.d_model) return a.point.d_model < b.point.d_model;
  if (a.point.history_len != b.point.history_len) return a.point.history_len < b.point.history_len;
  return a.index < b.index;
}

}  // namespace

std::vector<int> evenly_spaced(int lo, int hi, int points) {
  if (points < 1 || hi < lo) throw ConfigError("evenly_spaced: bad range");
  if (points == 1 || lo == hi) return {lo};
  std::vector<int> out;
  for (int i = 0; i < points; ++i) {
    const double v = lo + (static_cast<double>(hi - lo) * i) / (points - 1);
    const int r = static_cast<int>(std::lround(v));
    if (out.empty() || out.back() != r) out.push_back(r);
  }
  return out;
}

std::vector<std::string> known_workloads() {
  std::vector<std::string> names;
  for (const auto& [name, range] : workload_ranges()) names.push_back(name);
  return names;
}

HyperGrid default_grid(const std::string& workload, int points) {
  const auto& ranges = workload_ranges();
  const auto it = ranges.find(workload);
  if (it == ranges.end()) throw ConfigError("no default search space for workload '" + workload + "'");
  const WorkloadRange& r = it->second;
  HyperGrid g;
  g.history_lens = evenly_spaced(r.history_lo, r.history_hi, points);
  g.batch_sizes = evenly_spaced(r.batch_lo, r.batch_hi, points);
  g.d_models = {8, 16, 32, 64, 128, 512};
  g.n_heads = {4, 8};
  return g;
}

GridResult grid_search(const TimeSeries& series, const HyperGrid& grid, const GeneratorConfig& base,
                       const TrainConfig& cfg, int jobs, const PointTrainer& trainer) {
  if (grid.size() == 0) throw ConfigError("grid search over an empty space");
  const PointTrainer run = trainer ? trainer : PointTrainer([](const WindowedDataset& d, const GeneratorConfig& g,
                                                                const TrainConfig& c) { return train(d, g, c); });

  struct Task {
    GridRow row;
    const WindowedDataset* data;
  };
  GridResult result;
  std::map<int, WindowedDataset> datasets;
  std::vector<Task> tasks;
  std::size_t index = 0;
  for (int n : grid.history_lens) {
    for (int m : grid.batch_sizes) {
      for (int d : grid.d_models) {
        for (int h : grid.n_heads) {
          GridRow row;
          row.point = GridPoint{n, m, d, h};
          row.index = index;
          row.seed = cfg.seed ^ static_cast<std::uint64_t>(index);
          ++index;
          const std::string tag = "n=" + std::to_string(n) + " m=" + std::to_string(m) +
                                  " d_model=" + std::to_string(d) + " n_head=" + std::to_string(h);
          if (h < 1 || d % h != 0) {
            result.warnings.push_back("skipped " + tag + ": d_model not divisible by n_head");
            continue;
          }
          auto ds = datasets.find(n);
          if (ds == datasets.end()) {
            try {
              ds = datasets.emplace(n, make_dataset(series, static_cast<std::size_t>(n))).first;
            } catch (const DataError& e) {
              result.warnings.push_back("skipped " + tag + ": " + e.what());
              continue;
            }
          }
          if (m > ds->second.train.rows()) {
            result.warnings.push_back("skipped " + tag + ": batch larger than the training set");
            continue;
          }
          tasks.push_back(Task{row, &ds->second});
        }
      }
    }
  }
  if (tasks.empty()) throw ConfigError("grid search: every point was skipped");

  std::vector<std::optional<TrainResult>> models(tasks.size());
  std::vector<std::string> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      Task& t = tasks[i];
      GeneratorConfig g = base;
      g.history_len = t.row.point.history_len;
      g.d_model = t.row.point.d_model;
      g.n_head = t.row.point.n_head;
      TrainConfig c = cfg;
      c.batch_size = t.row.point.batch_size;
      c.seed = t.row.seed;
      try {
        models[i] = run(*t.data, g, c);
        t.row.val_mape = models[i]->best_val_mape;
        t.row.best_epoch = models[i]->best_epoch;
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (!errors[i].empty()) {
      result.warnings.push_back("point " + std::to_string(tasks[i].row.index) + " failed: " + errors[i]);
      continue;
    }
    result.rows.push_back(tasks[i].row);
    if (!best || better(tasks[i].row, tasks[*best].row)) best = i;
  }
  if (!best) throw TrainingError("grid search: no point trained successfully");
  result.best = tasks[*best].row;
  result.best_model = std::move(models[*best]);
  return result;
}

void write_grid_csv(std::ostream& out, const GridResult& result) {
  out << "index,history_len,batch_size,d_model,n_head,seed,best_epoch,val_mape\n";
  out.precision(9);
  for (const GridRow& r : result.rows) {
    out << r.index << ',' << r.point.history_len << ',' << r.point.batch_size << ',' << r.point.d_model << ','
        << r.point.n_head << ',' << r.seed << ',' << r.best_epoch << ',' << r.val_mape << '\n';
  }
}

}  // namespace jarcast
