#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "jarcast/model.hpp"
#include "jarcast/train.hpp"

namespace jarcast {

struct DataConfig {
  std::string path;
  std::string format = "values";  // values | events
  std::size_t column = 0;         // timestamp column for event logs
  std::string workload;           // label prefix for event logs
  int interval_minutes = 5;
  int history_len = 24;
  int tau = 1;
};

struct GridConfig {
  std::string workload;  // when set, the default space for that workload
  int points = 4;
  // Explicit comma lists override the workload default per axis.
  std::string history_lens;
  std::string batch_sizes;
  std::string d_models;
  std::string n_heads;
};

// Sections [data], [model], [train], [grid] of an INI file. Every key is
// optional; defaults are the published training settings (n_critic 5, lambda 10,
// lr 1e-3, momentum 0.9, weight decay 0, eps 1e-6, 1000 epochs, tau 1).
struct RunConfig {
  DataConfig data;
  GeneratorConfig model;
  TrainConfig train;
  GridConfig grid;

  HyperGrid hyper_grid() const;
};

RunConfig read_config(std::istream& in);
RunConfig load_config(const std::string& path);
// Every resolved field, in a fixed order; read_config accepts it back.
void write_config(std::ostream& out, const RunConfig& cfg);

std::uint64_t fnv1a(const std::string& bytes);
std::uint64_t config_hash(const RunConfig& cfg);

}  // namespace jarcast
