#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "jarcast/data.hpp"
#include "jarcast/losses.hpp"
#include "jarcast/model.hpp"
#include "jarcast/optim.hpp"

namespace jarcast {

enum class OptimizerKind { kMadgrad, kAdam };

const char* optimizer_name(OptimizerKind kind);
OptimizerKind parse_optimizer(const std::string& name);

struct TrainConfig {
  int n_critic = 5;
  double lambda = 10.0;
  double lr = 1e-3;
  double momentum = 0.9;
  double weight_decay = 0.0;
  double optimizer_eps = 1e-6;
  int epochs = 1000;
  int batch_size = 32;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::kMadgrad;
  // Used when optimizer == kAdam.
  double adam_lr = 1e-4;
  double adam_beta1 = 0.0;
  double adam_beta2 = 0.9;
  double adam_eps = 1e-8;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double generator_loss = 0.0;  // mean L_G over the epoch's generator steps
  double critic_loss = 0.0;     // mean L_C over the epoch's critic steps
  double val_mape = 0.0;
};

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history);

// Owns one generator/critic pair and their optimizers for a training run.
//
// Batch scheduling: each epoch shuffles the training windows and marches
// generator batches through them in order (a trailing partial batch is
// dropped); every generator step is preceded by n_critic critic steps, each
// on a batch drawn uniformly with replacement.
class Trainer {
 public:
  Trainer(const WindowedDataset& dataset, const GeneratorConfig& gen_cfg, const TrainConfig& cfg);
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  // One critic update on a freshly sampled batch; returns L_C.
  double critic_step();
  // One critic update on the given batch of full windows.
  double critic_step(const Matrix& real);
  // One generator update on the given batch of full windows; returns L_G.
  double generator_step(const Matrix& batch);
  EpochRecord run_epoch();

  double validation_mape() const;
  Matrix sample_batch();

  Generator& generator() { return generator_; }
  Critic& critic() { return critic_; }
  const Generator& generator() const { return generator_; }
  const Critic& critic() const { return critic_; }
  std::int64_t critic_steps() const { return critic_opt_->steps(); }
  std::int64_t generator_steps() const { return generator_opt_->steps(); }
  int epochs_run() const { return epoch_; }
  Rng& rng() { return sample_rng_; }

 private:
  Matrix gather(const std::vector<std::size_t>& rows) const;

  const WindowedDataset& data_;
  GeneratorConfig gen_cfg_;
  TrainConfig cfg_;
  Rng init_rng_;
  Rng sample_rng_;
  Generator generator_;
  Critic critic_;
  std::unique_ptr<Optimizer> generator_opt_;
  std::unique_ptr<Optimizer> critic_opt_;
  int epoch_ = 0;
};

struct TrainResult {
  TrainResult(Generator g, Critic c) : generator(std::move(g)), critic(std::move(c)) {}

  Generator generator;
  Critic critic;
  int best_epoch = 0;
  double best_val_mape = 0.0;
  int epochs_trained = 0;
  std::int64_t critic_steps = 0;
  std::int64_t generator_steps = 0;
  std::vector<EpochRecord> history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Runs cfg.epochs epochs and returns the parameters of the epoch with the
// lowest validation MAPE (earliest on ties). A non-finite loss aborts with a
// TrainingError naming the epoch, batch and loss values.
TrainResult train(const WindowedDataset& dataset, const GeneratorConfig& gen_cfg, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

struct HyperGrid {
  std::vector<int> history_lens;
  std::vector<int> batch_sizes;
  std::vector<int> d_models;
  std::vector<int> n_heads;

  std::size_t size() const {
    return history_lens.size() * batch_sizes.size() * d_models.size() * n_heads.size();
  }
};

// The generator search space for a named workload (Facebook, Alibaba-2018,
// Google, Wiki, Azure-VM-2017, Azure-VM-2019, Azure-Func-2019). History length
// and batch size ranges are sampled at `points` evenly spaced values.
HyperGrid default_grid(const std::string& workload, int points = 4);
std::vector<std::string> known_workloads();
std::vector<int> evenly_spaced(int lo, int hi, int points);

struct GridPoint {
  int history_len = 0;
  int batch_size = 0;
  int d_model = 0;
  int n_head = 0;
};

struct GridRow {
  GridPoint point;
  std::size_t index = 0;  // position in enumeration order
  std::uint64_t seed = 0;
  double val_mape = 0.0;
  int best_epoch = 0;
};

struct GridResult {
  std::vector<GridRow> rows;  // trained points, enumeration order
  GridRow best;
  std::optional<TrainResult> best_model;
  std::vector<std::string> warnings;
};

using PointTrainer =
    std::function<TrainResult(const WindowedDataset&, const GeneratorConfig&, const TrainConfig&)>;

// Trains one model per grid point with seed base_seed ^ index, then picks the
// lowest validation MAPE, breaking ties by smaller d_model, then smaller
// history length. Points with d_model % n_head != 0, or that do not fit the
// series, are skipped with a warning. `jobs` > 1 trains points concurrently
// without changing any individual result.
GridResult grid_search(const TimeSeries& series, const HyperGrid& grid, const GeneratorConfig& base,
                       const TrainConfig& cfg, int jobs = 1, const PointTrainer& trainer = {});

void write_grid_csv(std::ostream& out, const GridResult& result);

}  // namespace jarcast
