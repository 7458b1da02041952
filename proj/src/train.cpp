#include "jarcast/train.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "jarcast/eval.hpp"

namespace jarcast {
namespace {

constexpr std::uint64_t kSamplingStream = 0x9E3779B97F4A7C15ULL;

std::unique_ptr<Optimizer> make_optimizer(std::vector<Parameter*> params, const TrainConfig& cfg) {
  if (cfg.optimizer == OptimizerKind::kAdam) {
    AdamOptions<float> o;
    o.lr = static_cast<float>(cfg.adam_lr);
    o.beta1 = static_cast<float>(cfg.adam_beta1);
    o.beta2 = static_cast<float>(cfg.adam_beta2);
    o.eps = static_cast<float>(cfg.adam_eps);
    return std::make_unique<Adam>(std::move(params), o);
  }
  MadgradOptions<float> o;
  o.lr = static_cast<float>(cfg.lr);
  o.momentum = static_cast<float>(cfg.momentum);
  o.weight_decay = static_cast<float>(cfg.weight_decay);
  o.eps = static_cast<float>(cfg.optimizer_eps);
  return std::make_unique<Madgrad>(std::move(params), o);
}

CriticConfig critic_config_for(const WindowedDataset& ds, const GeneratorConfig& gen_cfg) {
  CriticConfig c;
  c.seq_len = static_cast<int>(ds.window_len());
  c.width = gen_cfg.d_model;
  return c;
}

GeneratorConfig align(GeneratorConfig gen_cfg, const WindowedDataset& ds) {
  gen_cfg.history_len = static_cast<int>(ds.history_len);
  gen_cfg.tau = static_cast<int>(ds.tau);
  return gen_cfg;
}

}  // namespace

const char* optimizer_name(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "madgrad";
}

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "madgrad") return OptimizerKind::kMadgrad;
  if (name == "adam") return OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer '" + name + "' (expected madgrad or adam)");
}

void TrainConfig::validate() const {
  if (n_critic < 1) throw ConfigError("n_critic must be >= 1");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0,1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (!(optimizer_eps >= 0.0)) throw ConfigError("optimizer eps must be >= 0");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(adam_lr > 0.0)) throw ConfigError("adam_lr must be > 0");
}

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history) {
  out << "epoch,L_G,L_C,val_MAPE\n";
  out.precision(9);
  for (const EpochRecord& r : history) {
    out << r.epoch << ',' << r.generator_loss << ',' << r.critic_loss << ',' << r.val_mape << '\n';
  }
}

Trainer::Trainer(const WindowedDataset& dataset, const GeneratorConfig& gen_cfg, const TrainConfig& cfg)
    : data_(dataset),
      gen_cfg_(align(gen_cfg, dataset)),
      cfg_(cfg),
      init_rng_(cfg.seed),
      sample_rng_(Rng::derive(cfg.seed, kSamplingStream)),
      generator_(gen_cfg_, init_rng_),
      critic_(critic_config_for(dataset, gen_cfg_), init_rng_) {
  cfg_.validate();
  if (data_.train.rows() == 0) throw TrainingError("empty training set");
  if (cfg_.batch_size > data_.train.rows()) {
    throw TrainingError("batch size " + std::to_string(cfg_.batch_size) + " exceeds the " +
                        std::to_string(data_.train.rows()) + " training windows");
  }
  generator_opt_ = make_optimizer(generator_.parameters(), cfg_);
  critic_opt_ = make_optimizer(critic_.parameters(), cfg_);
}

Matrix Trainer::gather(const std::vector<std::size_t>& rows) const {
  Matrix batch(static_cast<Index>(rows.size()), data_.train.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) batch.row(static_cast<Index>(i)) = data_.train.row(static_cast<Index>(rows[i]));
  return batch;
}

Matrix Trainer::sample_batch() {
  std::vector<std::size_t> rows(static_cast<std::size_t>(cfg_.batch_size));
  for (auto& r : rows) r = static_cast<std::size_t>(sample_rng_.below(static_cast<std::uint64_t>(data_.train.rows())));
  return gather(rows);
}

double Trainer::critic_step() { return critic_step(sample_batch()); }

double Trainer::critic_step(const Matrix& real) {
  Tape tape;
  const CriticLossTerms terms = critic_loss(tape, real, generator_, critic_, cfg_.lambda, sample_rng_);
  const double loss = terms.loss.item();
  if (!std::isfinite(loss)) {
    throw NonFiniteError("critic loss " + std::to_string(loss));
  }
  tape.backward(terms.loss);
  critic_opt_->step();
  return loss;
}

double Trainer::generator_step(const Matrix& batch) {
  const Index t0 = static_cast<Index>(data_.history_len);
  const Matrix cond = batch.leftCols(t0);
  const Matrix target = batch.rightCols(batch.cols() - t0);
  Tape tape;
  Rng* drop = gen_cfg_.dropout > 0.0f ? &sample_rng_ : nullptr;
  Tensor loss = generator_loss(tape, cond, target, generator_, critic_, drop);
  const double value = loss.item();
  if (!std::isfinite(value)) throw NonFiniteError("generator loss " + std::to_string(value));
  tape.backward(loss);
  generator_opt_->step();
  return value;
}

EpochRecord Trainer::run_epoch() {
  ++epoch_;
  const auto n = static_cast<std::size_t>(data_.train.rows());
  const auto m = static_cast<std::size_t>(cfg_.batch_size);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(order, sample_rng_);

  const std::size_t steps = n / m;
  double gen_total = 0.0;
  double critic_total = 0.0;
  double last_gen = 0.0;
  double last_critic = 0.0;
  for (std::size_t s = 0; s < steps; ++s) {
    try {
      for (int c = 0; c < cfg_.n_critic; ++c) {
        last_critic = critic_step();
        critic_total += last_critic;
      }
      const std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(s * m),
                                          order.begin() + static_cast<std::ptrdiff_t>((s + 1) * m));
      last_gen = generator_step(gather(rows));
      gen_total += last_gen;
    } catch (const NonFiniteError& e) {
      std::ostringstream msg;
      msg << "non-finite training state at epoch " << epoch_ << ", batch " << s << " (" << e.what()
          << "; last L_G=" << last_gen << ", last L_C=" << last_critic << ")";
      throw TrainingError(msg.str());
    }
  }

  EpochRecord r;
  r.epoch = epoch_;
  r.generator_loss = gen_total / static_cast<double>(steps);
  r.critic_loss = critic_total / static_cast<double>(steps * static_cast<std::size_t>(cfg_.n_critic));
  r.val_mape = validation_mape();
  return r;
}

double Trainer::validation_mape() const {
  return windows_mape(generator_, data_.val, data_.scaler, data_.tau);
}

TrainResult train(const WindowedDataset& dataset, const GeneratorConfig& gen_cfg, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  Trainer trainer(dataset, gen_cfg, cfg);
  TrainResult result(trainer.generator(), trainer.critic());
  result.best_val_mape = trainer.validation_mape();
  for (int e = 0; e < cfg.epochs; ++e) {
    const EpochRecord r = trainer.run_epoch();
    result.history.push_back(r);
    if (on_epoch) on_epoch(r);
    if (r.val_mape < result.best_val_mape || result.best_epoch == 0) {
      result.best_val_mape = r.val_mape;
      result.best_epoch = r.epoch;
      result.generator = trainer.generator();
      result.critic = trainer.critic();
    }
  }
  result.epochs_trained = trainer.epochs_run();
  result.critic_steps = trainer.critic_steps();
  result.generator_steps = trainer.generator_steps();
  return result;
}

}  // namespace jarcast
