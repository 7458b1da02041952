#include "jarcast/cli.hpp"

#include <CLI11.hpp>

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "jarcast/autoscale.hpp"
#include "jarcast/checkpoint.hpp"
#include "jarcast/config.hpp"
#include "jarcast/data.hpp"
#include "jarcast/eval.hpp"
#include "jarcast/train.hpp"

namespace jarcast {
namespace {

// Flags every command accepts.
struct Shared {
  std::string config;
  std::uint64_t seed = 0;
  int interval_minutes = 0;
  int history_len = 0;
  std::string out;
  int jobs = 1;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* interval_opt = nullptr;
  CLI::Option* history_opt = nullptr;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config, "INI run configuration")->check(CLI::ExistingFile);
    seed_opt = cmd->add_option("--seed", seed, "Random seed");
    interval_opt = cmd->add_option("--interval-minutes", interval_minutes, "Bucket width in minutes")
                       ->check(CLI::PositiveNumber);
    history_opt = cmd->add_option("--history-len", history_len, "Conditioning length n")->check(CLI::PositiveNumber);
    cmd->add_option("--out", out, "Output path");
    cmd->add_option("--jobs", jobs, "Parallel workers (grid search)")->check(CLI::PositiveNumber);
  }

  RunConfig resolve() const {
    RunConfig cfg = config.empty() ? RunConfig{} : load_config(config);
    if (seed_opt->count() > 0) cfg.train.seed = seed;
    if (interval_opt->count() > 0) cfg.data.interval_minutes = interval_minutes;
    if (history_opt->count() > 0) cfg.data.history_len = history_len;
    cfg.model.history_len = cfg.data.history_len;
    cfg.model.tau = cfg.data.tau;
    return cfg;
  }
};

void header(std::ostream& out, const std::string& command, const RunConfig& cfg) {
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016" PRIx64, config_hash(cfg));
  out << "# jarcast " << kVersion << " command=" << command << " seed=" << cfg.train.seed << " config_hash=" << hash
      << '\n';
}

TimeSeries load_series(const RunConfig& cfg, const std::string& path_flag) {
  const std::string path = path_flag.empty() ? cfg.data.path : path_flag;
  if (path.empty()) throw DataError("no input series (pass --data or set [data] path)");
  if (!std::filesystem::exists(path)) throw DataError("data file not found: " + path);
  if (cfg.data.format == "events") {
    EventLogOptions o;
    o.interval_minutes = cfg.data.interval_minutes;
    o.column = cfg.data.column;
    o.workload = cfg.data.workload;
    return ingest_events_file(path, o);
  }
  return ingest_values_file(path, "", cfg.data.interval_minutes);
}

void write_file(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write " + path);
    f << content;
    f.close();
    if (!f) {
      std::filesystem::remove(tmp);
      throw DataError("failed writing " + path);
    }
  }
  std::filesystem::rename(tmp, path);
}

// Writes to a file when a path is given, otherwise to out.
void emit(std::ostream& out, const std::string& path, const std::string& content) {
  if (path.empty()) out << content;
  else write_file(path, content);
}

std::vector<double> normalized(const TimeSeries& s, const MinMaxScaler& scaler) {
  std::vector<double> v(s.values.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = scaler.normalize(s.values[i]);
  return v;
}

WindowedDataset checked_dataset(const Checkpoint& ck, const TimeSeries& series, std::ostream& err) {
  WindowedDataset ds = make_dataset(series, ck.history_len, ck.tau);
  const std::string why = manifest_mismatch(ck, ds);
  if (!why.empty()) {
    err << "checkpoint manifest:\n" << checkpoint_manifest(ck) << "dataset manifest:\n" << dataset_manifest(ds);
    throw ManifestMismatch("checkpoint does not match the dataset (" + why + ")");
  }
  return ds;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"One-step-ahead job arrival forecasting with a WGAN-gp transformer", "jarcast"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  // ingest
  Shared ingest_sh;
  std::string ingest_input, ingest_format, ingest_workload;
  std::size_t ingest_column = 0;
  CLI::App* ingest = app.add_subcommand("ingest", "Bucket an event log or load a value series; write counts CSV");
  ingest_sh.attach(ingest);
  ingest->add_option("--input", ingest_input, "Event log or value series")->required();
  auto* ingest_format_opt = ingest->add_option("--format", ingest_format, "events | values")
                                ->check(CLI::IsMember({"events", "values"}));
  auto* ingest_column_opt = ingest->add_option("--column", ingest_column, "Timestamp column (0-based)");
  auto* ingest_workload_opt = ingest->add_option("--workload", ingest_workload, "Label prefix");

  // train
  Shared train_sh;
  std::string train_data, train_optimizer;
  int train_epochs = 0, train_d_model = 0, train_n_head = 0, train_batch = 0;
  bool train_verbose = false;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a generator/critic pair and save a checkpoint");
  train_sh.attach(train_cmd);
  train_cmd->add_option("--data", train_data, "Value series CSV");
  auto* epochs_opt = train_cmd->add_option("--epochs", train_epochs, "Epochs")->check(CLI::NonNegativeNumber);
  auto* optimizer_opt =
      train_cmd->add_option("--optimizer", train_optimizer, "madgrad | adam")->check(CLI::IsMember({"madgrad", "adam"}));
  auto* d_model_opt = train_cmd->add_option("--d-model", train_d_model, "Model width")->check(CLI::PositiveNumber);
  auto* n_head_opt = train_cmd->add_option("--n-head", train_n_head, "Attention heads")->check(CLI::PositiveNumber);
  auto* batch_opt = train_cmd->add_option("--batch-size", train_batch, "Batch size m")->check(CLI::PositiveNumber);
  train_cmd->add_flag("--verbose", train_verbose, "Print every epoch");

  // predict
  Shared predict_sh;
  std::string predict_ckpt, predict_data;
  int horizon = 1;
  bool recursive = false;
  CLI::App* predict = app.add_subcommand("predict", "One-step-ahead forecast for every stride-1 window");
  predict_sh.attach(predict);
  predict->add_option("--checkpoint", predict_ckpt, "Checkpoint")->required();
  predict->add_option("--data", predict_data, "Value series CSV");
  predict->add_option("--horizon", horizon, "Steps ahead")->check(CLI::PositiveNumber);
  predict->add_flag("--recursive", recursive, "Feed predictions back for horizon > 1");

  // evaluate
  Shared eval_sh;
  std::string eval_ckpt, eval_data, eval_pairs;
  bool eval_csv = false;
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "Test-split MAPE, persistence baseline and latency");
  eval_sh.attach(eval_cmd);
  eval_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint")->required();
  eval_cmd->add_option("--data", eval_data, "Value series CSV");
  eval_cmd->add_option("--pairs", eval_pairs, "Write per-window actual/predicted CSV here");
  eval_cmd->add_flag("--csv", eval_csv, "Also print the report as a CSV row");

  // simulate
  Shared sim_sh;
  std::string sim_forecast, sim_actual, sim_ckpt, sim_data, sim_label = "workload";
  bool sim_csv = false;
  CLI::App* sim = app.add_subcommand("simulate", "Score VM provisioning from forecasts against arrivals");
  sim_sh.attach(sim);
  auto* forecast_opt = sim->add_option("--forecast", sim_forecast, "CSV interval,predicted");
  auto* actual_opt = sim->add_option("--actual", sim_actual, "CSV interval,count");
  auto* sim_ckpt_opt = sim->add_option("--checkpoint", sim_ckpt, "Forecast the test split with this checkpoint");
  sim->add_option("--data", sim_data, "Value series CSV (with --checkpoint)");
  auto* sim_label_opt = sim->add_option("--label", sim_label, "Workload label for the report");
  sim->add_flag("--csv", sim_csv, "Also print the report as a CSV row");
  forecast_opt->needs(actual_opt);
  actual_opt->needs(forecast_opt);
  sim_ckpt_opt->excludes(forecast_opt);

  // grid-search
  Shared grid_sh;
  std::string grid_data, grid_workload, grid_ckpt;
  int grid_points = 4, grid_epochs = 0;
  CLI::App* grid_cmd = app.add_subcommand("grid-search", "Train one model per grid point, keep the best");
  grid_sh.attach(grid_cmd);
  grid_cmd->add_option("--data", grid_data, "Value series CSV");
  auto* grid_workload_opt = grid_cmd->add_option("--workload", grid_workload, "Use this workload's search space");
  auto* grid_points_opt = grid_cmd->add_option("--points", grid_points, "Samples per range")->check(CLI::PositiveNumber);
  auto* grid_epochs_opt = grid_cmd->add_option("--epochs", grid_epochs, "Epochs per point")->check(CLI::NonNegativeNumber);
  grid_cmd->add_option("--checkpoint", grid_ckpt, "Save the best model here");

  std::vector<const char*> argv{"jarcast"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (ingest->parsed()) {
      RunConfig cfg = ingest_sh.resolve();
      if (ingest_format_opt->count() > 0) cfg.data.format = ingest_format;
      if (ingest_column_opt->count() > 0) cfg.data.column = ingest_column;
      if (ingest_workload_opt->count() > 0) cfg.data.workload = ingest_workload;
      cfg.data.path = ingest_input;
      header(out, "ingest", cfg);
      const TimeSeries series = load_series(cfg, ingest_input);
      std::ostringstream csv;
      write_values(csv, series);
      if (ingest_sh.out.empty()) {
        out << csv.str();
      } else {
        write_file(ingest_sh.out, csv.str());
        double total = 0.0;
        for (double v : series.values) total += v;
        out << "label: " << series.label << "\nintervals: " << series.size()
            << "\ninterval_minutes: " << series.interval_minutes << "\ntotal: " << total
            << "\nwritten: " << ingest_sh.out << '\n';
      }
      return 0;
    }

    if (train_cmd->parsed()) {
      RunConfig cfg = train_sh.resolve();
      if (epochs_opt->count() > 0) cfg.train.epochs = train_epochs;
      if (optimizer_opt->count() > 0) cfg.train.optimizer = parse_optimizer(train_optimizer);
      if (d_model_opt->count() > 0) cfg.model.d_model = train_d_model;
      if (n_head_opt->count() > 0) cfg.model.n_head = train_n_head;
      if (batch_opt->count() > 0) cfg.train.batch_size = train_batch;
      if (!train_data.empty()) cfg.data.path = train_data;
      header(out, "train", cfg);
      const std::string ckpt_path = train_sh.out.empty() ? "model.ckpt" : train_sh.out;
      const TimeSeries series = load_series(cfg, train_data);
      const WindowedDataset ds = make_dataset(series, static_cast<std::size_t>(cfg.data.history_len),
                                              static_cast<std::size_t>(cfg.data.tau));
      out << "dataset: " << ds.label << " length=" << ds.series_length << " windows=" << ds.train.rows() << "/"
          << ds.val.rows() << "/" << ds.test.rows() << '\n';
      if (ds.scaler.degenerate()) err << "warning: training segment is constant; every value normalizes to 0.5\n";
      EpochCallback log;
      if (train_verbose) {
        log = [&out](const EpochRecord& r) {
          out << "epoch " << r.epoch << " L_G=" << r.generator_loss << " L_C=" << r.critic_loss
              << " val_mape=" << r.val_mape << '\n';
        };
      }
      const TrainResult result = train(ds, cfg.model, cfg.train, log);
      save_checkpoint(ckpt_path, make_checkpoint(result, ds, cfg.train));
      std::ostringstream history;
      write_history_csv(history, result.history);
      write_file(ckpt_path + ".history.csv", history.str());
      write_file(ckpt_path + ".manifest", dataset_manifest(ds));
      out.precision(9);
      out << "checkpoint: " << ckpt_path << "\nbest_epoch: " << result.best_epoch
          << "\nepochs_trained: " << result.epochs_trained << "\nval_mape: " << result.best_val_mape << '\n';
      return 0;
    }

    if (predict->parsed()) {
      RunConfig cfg = predict_sh.resolve();
      header(out, "predict", cfg);
      if (horizon > 1 && !recursive) {
        throw ConfigError("horizon " + std::to_string(horizon) +
                          " needs --recursive (the model forecasts one step; recursion feeds predictions back)");
      }
      const Checkpoint ck = load_checkpoint(predict_ckpt);
      if (predict_sh.history_opt->count() > 0 && static_cast<std::size_t>(predict_sh.history_len) != ck.history_len) {
        throw ConfigError("--history-len " + std::to_string(predict_sh.history_len) + " does not match the checkpoint's " +
                          std::to_string(ck.history_len));
      }
      const TimeSeries series = load_series(cfg, predict_data);
      const std::size_t n = ck.history_len;
      if (series.size() < n) {
        throw DataError("series of length " + std::to_string(series.size()) + " is shorter than the checkpoint's n = " +
                        std::to_string(n));
      }
      const std::vector<double> x = normalized(series, ck.scaler);
      const std::size_t windows = series.size() - n + 1 - (ck.tau - 1);
      Matrix cond(static_cast<Index>(windows), static_cast<Index>(n));
      for (std::size_t i = 0; i < windows; ++i) {
        for (std::size_t j = 0; j < n; ++j) cond(static_cast<Index>(i), static_cast<Index>(j)) = static_cast<float>(x[i + j]);
      }
      std::ostringstream csv;
      csv.precision(9);
      csv << "window,step,predicted\n";
      std::vector<Matrix> steps;
      for (int h = 0; h < horizon; ++h) {
        Matrix p = ck.generator.predict(cond);
        if (h + 1 < horizon) {
          Matrix next(cond.rows(), cond.cols());
          next << cond.rightCols(cond.cols() - 1), p.col(0);
          cond = std::move(next);
        }
        steps.push_back(std::move(p));
      }
      for (std::size_t i = 0; i < windows; ++i) {
        for (int h = 0; h < horizon; ++h) {
          csv << i << ',' << h + 1 << ','
              << ck.scaler.denormalize(steps[static_cast<std::size_t>(h)](static_cast<Index>(i), 0)) << '\n';
        }
      }
      emit(out, predict_sh.out, csv.str());
      return 0;
    }

    if (eval_cmd->parsed()) {
      RunConfig cfg = eval_sh.resolve();
      header(out, "evaluate", cfg);
      const Checkpoint ck = load_checkpoint(eval_ckpt);
      const TimeSeries series = load_series(cfg, eval_data);
      const WindowedDataset ds = checked_dataset(ck, series, err);
      const EvalReport report = evaluate(ck.generator, ds.test, ds.scaler, ds.tau, ds.label);
      std::ostringstream text;
      text.precision(9);
      write_report(text, report);
      if (eval_csv) {
        write_report_csv_header(text);
        write_report_csv_row(text, report);
      }
      emit(out, eval_sh.out, text.str());
      if (!eval_pairs.empty()) {
        std::ostringstream pairs;
        pairs.precision(9);
        write_pairs_csv(pairs, report);
        write_file(eval_pairs, pairs.str());
      }
      return 0;
    }

    if (sim->parsed()) {
      RunConfig cfg = sim_sh.resolve();
      header(out, "simulate", cfg);
      ScalingTrace trace;
      std::string label = sim_label;
      if (sim_ckpt_opt->count() > 0) {
        const Checkpoint ck = load_checkpoint(sim_ckpt);
        const TimeSeries series = load_series(cfg, sim_data);
        const WindowedDataset ds = checked_dataset(ck, series, err);
        const Index n = static_cast<Index>(ds.history_len);
        const Matrix pred = ck.generator.predict(ds.test.leftCols(n));
        std::vector<std::int64_t> p(static_cast<std::size_t>(pred.rows()));
        std::vector<std::int64_t> t(p.size());
        for (Index i = 0; i < pred.rows(); ++i) {
          p[static_cast<std::size_t>(i)] = plan_provisioning(ds.scaler.denormalize(pred(i, 0)));
          t[static_cast<std::size_t>(i)] = std::llround(ds.scaler.denormalize(ds.test(i, n)));
        }
        trace = simulate(p, t);
        if (sim_label_opt->count() == 0) label = ds.label;
      } else {
        if (forecast_opt->count() == 0) throw ConfigError("simulate needs --forecast/--actual or --checkpoint");
        std::ifstream f(sim_forecast), a(sim_actual);
        if (!f) throw DataError("cannot open " + sim_forecast);
        if (!a) throw DataError("cannot open " + sim_actual);
        trace = simulate_from_csv(f, a);
      }
      std::ostringstream text;
      text.precision(9);
      write_scaling_report(text, trace, label);
      if (sim_csv) {
        write_scaling_csv_header(text);
        write_scaling_csv_row(text, trace, label);
      }
      emit(out, sim_sh.out, text.str());
      return 0;
    }

    if (grid_cmd->parsed()) {
      RunConfig cfg = grid_sh.resolve();
      if (grid_workload_opt->count() > 0) cfg.grid.workload = grid_workload;
      if (grid_points_opt->count() > 0) cfg.grid.points = grid_points;
      if (grid_epochs_opt->count() > 0) cfg.train.epochs = grid_epochs;
      if (!grid_data.empty()) cfg.data.path = grid_data;
      header(out, "grid-search", cfg);
      const TimeSeries series = load_series(cfg, grid_data);
      const HyperGrid grid = cfg.hyper_grid();
      GridResult result = grid_search(series, grid, cfg.model, cfg.train, grid_sh.jobs);
      for (const std::string& w : result.warnings) out << "# warning: " << w << '\n';
      std::ostringstream table;
      write_grid_csv(table, result);
      emit(out, grid_sh.out, table.str());
      out.precision(9);
      out << "best: index=" << result.best.index << " history_len=" << result.best.point.history_len
          << " batch_size=" << result.best.point.batch_size << " d_model=" << result.best.point.d_model
          << " n_head=" << result.best.point.n_head << " val_mape=" << result.best.val_mape << '\n';
      if (!grid_ckpt.empty()) {
        const WindowedDataset ds = make_dataset(series, static_cast<std::size_t>(result.best.point.history_len),
                                                static_cast<std::size_t>(cfg.data.tau));
        TrainConfig tc = cfg.train;
        tc.batch_size = result.best.point.batch_size;
        tc.seed = result.best.seed;
        save_checkpoint(grid_ckpt, make_checkpoint(*result.best_model, ds, tc));
        out << "checkpoint: " << grid_ckpt << '\n';
      }
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace jarcast
