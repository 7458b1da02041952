#include "jarcast/checkpoint.hpp"

#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace jarcast {
namespace {

constexpr const char* kMagic = "jarcast-checkpoint";

template <typename T>
std::string num(T v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

template <typename T>
T parse(const std::map<std::string, std::string>& fields, const std::string& key) {
  const auto it = fields.find(key);
  if (it == fields.end()) throw CheckpointError("checkpoint header lacks '" + key + "'");
  T v{};
  const std::string& s = it->second;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw CheckpointError("checkpoint field '" + key + "' has bad value '" + s + "'");
  }
  return v;
}

std::string text(const std::map<std::string, std::string>& fields, const std::string& key) {
  const auto it = fields.find(key);
  if (it == fields.end()) throw CheckpointError("checkpoint header lacks '" + key + "'");
  return it->second;
}

void write_floats(std::ostream& out, const Matrix& m) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(float)));
  } else {
    for (Index i = 0; i < m.size(); ++i) {
      const auto bits = __builtin_bswap32(std::bit_cast<std::uint32_t>(m.data()[i]));
      out.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
    }
  }
}

void read_floats(std::istream& in, Matrix& m, const std::string& name) {
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(m.size() * sizeof(float))) {
    throw CheckpointError("checkpoint truncated inside tensor " + name);
  }
  if constexpr (std::endian::native != std::endian::little) {
    for (Index i = 0; i < m.size(); ++i) {
      m.data()[i] = std::bit_cast<float>(__builtin_bswap32(std::bit_cast<std::uint32_t>(m.data()[i])));
    }
  }
  if (!m.allFinite()) throw CheckpointError("checkpoint tensor " + name + " holds non-finite values");
}

std::vector<const Parameter*> all_parameters(const Checkpoint& ck) {
  std::vector<const Parameter*> out = ck.generator.parameters();
  for (const Parameter* p : ck.critic.parameters()) out.push_back(p);
  return out;
}

}  // namespace

Checkpoint make_checkpoint(const TrainResult& result, const WindowedDataset& data, const TrainConfig& cfg) {
  Checkpoint ck(result.generator, result.critic);
  ck.label = data.label;
  ck.interval_minutes = data.interval_minutes;
  ck.history_len = data.history_len;
  ck.tau = data.tau;
  ck.scaler = data.scaler;
  ck.train = cfg;
  ck.best_epoch = result.best_epoch;
  ck.epochs_trained = result.epochs_trained;
  ck.best_val_mape = result.best_val_mape;
  ck.critic_steps = result.critic_steps;
  ck.generator_steps = result.generator_steps;
  return ck;
}

void write_checkpoint(std::ostream& out, const Checkpoint& ck) {
  const GeneratorConfig& g = ck.generator.config();
  const CriticConfig& c = ck.critic.config();
  const TrainConfig& t = ck.train;
  if (ck.label.find('\n') != std::string::npos) throw CheckpointError("label may not contain a newline");

  std::ostringstream h;
  h << kMagic << ' ' << kCheckpointVersion << '\n'
    << "label " << ck.label << '\n'
    << "interval_minutes " << ck.interval_minutes << '\n'
    << "history_len " << ck.history_len << '\n'
    << "tau " << ck.tau << '\n'
    << "scaler_min " << num(ck.scaler.min) << '\n'
    << "scaler_max " << num(ck.scaler.max) << '\n'
    << "seed " << t.seed << '\n'
    << "best_epoch " << ck.best_epoch << '\n'
    << "epochs_trained " << ck.epochs_trained << '\n'
    << "best_val_mape " << num(ck.best_val_mape) << '\n'
    << "critic_steps " << ck.critic_steps << '\n'
    << "generator_steps " << ck.generator_steps << '\n'
    << "generator.d_model " << g.d_model << '\n'
    << "generator.n_head " << g.n_head << '\n'
    << "generator.d_ff " << g.ff_width() << '\n'
    << "generator.dropout " << num(g.dropout) << '\n'
    << "generator.positional_encoding " << (g.positional_encoding ? 1 : 0) << '\n'
    << "critic.width " << c.width << '\n'
    << "critic.depth " << c.depth << '\n'
    << "critic.slope " << num(c.slope) << '\n'
    << "train.n_critic " << t.n_critic << '\n'
    << "train.lambda " << num(t.lambda) << '\n'
    << "train.lr " << num(t.lr) << '\n'
    << "train.momentum " << num(t.momentum) << '\n'
    << "train.weight_decay " << num(t.weight_decay) << '\n'
    << "train.eps " << num(t.optimizer_eps) << '\n'
    << "train.epochs " << t.epochs << '\n'
    << "train.batch_size " << t.batch_size << '\n'
    << "train.optimizer " << optimizer_name(t.optimizer) << '\n'
    << "train.adam_lr " << num(t.adam_lr) << '\n'
    << "train.adam_beta1 " << num(t.adam_beta1) << '\n'
    << "train.adam_beta2 " << num(t.adam_beta2) << '\n'
    << "train.adam_eps " << num(t.adam_eps) << '\n';
  const auto params = all_parameters(ck);
  for (const Parameter* p : params) {
    h << "tensor " << p->name << ' ' << p->value.rows() << ' ' << p->value.cols() << '\n';
  }
  h << "end\n";
  out << h.str();
  for (const Parameter* p : params) write_floats(out, p->value);
  if (!out) throw CheckpointError("failed writing checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw CheckpointError("empty checkpoint");
  {
    std::istringstream first(line);
    std::string magic;
    int version = 0;
    first >> magic >> version;
    if (magic != kMagic) throw CheckpointError("not a jarcast checkpoint");
    if (version != kCheckpointVersion) {
      throw CheckpointError("checkpoint format version " + std::to_string(version) + " is not supported (expected " +
                            std::to_string(kCheckpointVersion) + ")");
    }
  }

  std::map<std::string, std::string> fields;
  struct Entry {
    std::string name;
    Index rows, cols;
  };
  std::vector<Entry> tensors;
  bool ended = false;
  while (std::getline(in, line)) {
    if (line == "end") {
      ended = true;
      break;
    }
    const auto space = line.find(' ');
    if (space == std::string::npos) throw CheckpointError("malformed checkpoint header line '" + line + "'");
    const std::string key = line.substr(0, space);
    const std::string value = line.substr(space + 1);
    if (key == "tensor") {
      std::istringstream ts(value);
      Entry e{};
      if (!(ts >> e.name >> e.rows >> e.cols)) throw CheckpointError("malformed tensor line '" + line + "'");
      tensors.push_back(e);
    } else {
      if (!fields.emplace(key, value).second) throw CheckpointError("duplicate checkpoint field '" + key + "'");
    }
  }
  if (!ended) throw CheckpointError("checkpoint header is not terminated");

  GeneratorConfig g;
  g.history_len = parse<int>(fields, "history_len");
  g.tau = parse<int>(fields, "tau");
  g.d_model = parse<int>(fields, "generator.d_model");
  g.n_head = parse<int>(fields, "generator.n_head");
  g.d_ff = parse<int>(fields, "generator.d_ff");
  g.dropout = parse<float>(fields, "generator.dropout");
  g.positional_encoding = parse<int>(fields, "generator.positional_encoding") != 0;
  CriticConfig c;
  c.seq_len = g.history_len + g.tau;
  c.width = parse<int>(fields, "critic.width");
  c.depth = parse<int>(fields, "critic.depth");
  c.slope = parse<float>(fields, "critic.slope");

  Rng unused(0);
  Checkpoint ck = [&] {
    try {
      Generator gen(g, unused);
      Critic critic(c, unused);
      return Checkpoint(std::move(gen), std::move(critic));
    } catch (const DimensionError& e) {
      throw CheckpointError(std::string("checkpoint describes an invalid model: ") + e.what());
    }
  }();
  ck.label = text(fields, "label");
  ck.interval_minutes = parse<int>(fields, "interval_minutes");
  ck.history_len = static_cast<std::size_t>(g.history_len);
  ck.tau = static_cast<std::size_t>(g.tau);
  ck.scaler.min = parse<double>(fields, "scaler_min");
  ck.scaler.max = parse<double>(fields, "scaler_max");
  ck.best_epoch = parse<int>(fields, "best_epoch");
  ck.epochs_trained = parse<int>(fields, "epochs_trained");
  ck.best_val_mape = parse<double>(fields, "best_val_mape");
  ck.critic_steps = parse<std::int64_t>(fields, "critic_steps");
  ck.generator_steps = parse<std::int64_t>(fields, "generator_steps");
  TrainConfig& t = ck.train;
  t.seed = parse<std::uint64_t>(fields, "seed");
  t.n_critic = parse<int>(fields, "train.n_critic");
  t.lambda = parse<double>(fields, "train.lambda");
  t.lr = parse<double>(fields, "train.lr");
  t.momentum = parse<double>(fields, "train.momentum");
  t.weight_decay = parse<double>(fields, "train.weight_decay");
  t.optimizer_eps = parse<double>(fields, "train.eps");
  t.epochs = parse<int>(fields, "train.epochs");
  t.batch_size = parse<int>(fields, "train.batch_size");
  try {
    t.optimizer = parse_optimizer(text(fields, "train.optimizer"));
  } catch (const ConfigError& e) {
    throw CheckpointError(e.what());
  }
  t.adam_lr = parse<double>(fields, "train.adam_lr");
  t.adam_beta1 = parse<double>(fields, "train.adam_beta1");
  t.adam_beta2 = parse<double>(fields, "train.adam_beta2");
  t.adam_eps = parse<double>(fields, "train.adam_eps");

  std::vector<Parameter*> params = ck.generator.parameters();
  for (Parameter* p : ck.critic.parameters()) params.push_back(p);
  if (params.size() != tensors.size()) {
    throw CheckpointError("checkpoint lists " + std::to_string(tensors.size()) + " tensors, the model has " +
                          std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Entry& e = tensors[i];
    Parameter& p = *params[i];
    if (e.name != p.name || e.rows != p.value.rows() || e.cols != p.value.cols()) {
      throw CheckpointError("checkpoint tensor " + e.name + " " + shape_string(e.rows, e.cols) + " does not match " +
                            p.name + " " + shape_string(p.value.rows(), p.value.cols()));
    }
    read_floats(in, p.value, e.name);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw CheckpointError("trailing bytes after the last tensor");
  return ck;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  const std::string tmp = path + ".tmp";
  try {
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw CheckpointError("cannot write " + tmp);
      write_checkpoint(out, ck);
      out.close();
      if (!out) throw CheckpointError("failed writing " + tmp);
    }
    std::filesystem::rename(tmp, path);
  } catch (...) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw;
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  return read_checkpoint(in);
}

std::string checkpoint_manifest(const Checkpoint& ck) {
  std::ostringstream out;
  out.precision(17);
  out << "normalization: minmax\n"
      << "scaler_min: " << ck.scaler.min << '\n'
      << "scaler_max: " << ck.scaler.max << '\n'
      << "history_len: " << ck.history_len << '\n'
      << "tau: " << ck.tau << '\n';
  return out.str();
}

std::string manifest_mismatch(const Checkpoint& ck, const WindowedDataset& data) {
  if (ck.history_len != data.history_len) {
    return "history_len " + std::to_string(ck.history_len) + " vs " + std::to_string(data.history_len);
  }
  if (ck.tau != data.tau) return "tau " + std::to_string(ck.tau) + " vs " + std::to_string(data.tau);
  if (ck.scaler.min != data.scaler.min || ck.scaler.max != data.scaler.max) {
    return "scaler [" + num(ck.scaler.min) + ", " + num(ck.scaler.max) + "] vs [" + num(data.scaler.min) + ", " +
           num(data.scaler.max) + "]";
  }
  return {};
}

}  // namespace jarcast
