#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "jarcast/data.hpp"
#include "jarcast/model.hpp"
#include "jarcast/train.hpp"

namespace jarcast {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  Checkpoint(Generator g, Critic c) : generator(std::move(g)), critic(std::move(c)) {}

  std::string label;
  int interval_minutes = 1;
  std::size_t history_len = 0;
  std::size_t tau = 1;
  MinMaxScaler scaler;
  TrainConfig train;
  // Provenance of the stored weights.
  int best_epoch = 0;
  int epochs_trained = 0;
  double best_val_mape = 0.0;
  std::int64_t critic_steps = 0;
  std::int64_t generator_steps = 0;

  Generator generator;
  Critic critic;
};

Checkpoint make_checkpoint(const TrainResult& result, const WindowedDataset& data, const TrainConfig& cfg);

// Layout: "jarcast-checkpoint <version>", then "key value" lines, then one
// "tensor <name> <rows> <cols>" line per array, then "end", then the arrays
// as raw little-endian float32 in the order listed. Doubles are written in
// shortest round-trip form, so load followed by save reproduces the bytes.
void write_checkpoint(std::ostream& out, const Checkpoint& ck);
Checkpoint read_checkpoint(std::istream& in);

// Writes to "<path>.tmp" and renames over path; nothing is left behind on
// failure.
void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

// The fields a dataset must agree on before a checkpoint may score it, in the
// dataset_manifest "key: value" form.
std::string checkpoint_manifest(const Checkpoint& ck);
// Empty when compatible, otherwise a description of the first disagreement.
std::string manifest_mismatch(const Checkpoint& ck, const WindowedDataset& data);

}  // namespace jarcast
