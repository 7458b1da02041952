#include "jarcast/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace jarcast {
namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"data", {"path", "format", "column", "workload", "interval_minutes", "history_len", "tau"}},
      {"model", {"d_model", "n_head", "d_ff", "dropout", "positional_encoding"}},
      {"train",
       {"n_critic", "lambda", "lr", "momentum", "weight_decay", "eps", "epochs", "batch_size", "seed", "optimizer",
        "adam_lr", "adam_beta1", "adam_beta2", "adam_eps"}},
      {"grid", {"workload", "points", "history_lens", "batch_sizes", "d_models", "n_heads"}},
  };
  return keys;
}

template <typename T>
T get(const pt::ptree& tree, const std::string& key, T fallback) {
  const auto node = tree.get_optional<std::string>(key);
  if (!node) return fallback;
  std::string s = *node;
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
  if constexpr (std::is_same_v<T, std::string>) {
    return s;
  } else if constexpr (std::is_same_v<T, bool>) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError("config key '" + key + "' expects true/false, got '" + s + "'");
  } else {
    T v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw ConfigError("config key '" + key + "' has bad value '" + s + "'");
    }
    return v;
  }
}

template <typename T>
std::string num(T v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::vector<int> parse_list(const std::string& key, const std::string& s) {
  std::vector<int> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ConfigError("grid." + key + ": empty list entry");
    const std::string t = item.substr(b, e - b + 1);
    int v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || v < 1) {
      throw ConfigError("grid." + key + ": bad entry '" + t + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("grid." + key + " is empty");
  return out;
}

}  // namespace

HyperGrid RunConfig::hyper_grid() const {
  HyperGrid g;
  if (!grid.workload.empty()) g = default_grid(grid.workload, grid.points);
  if (!grid.history_lens.empty()) g.history_lens = parse_list("history_lens", grid.history_lens);
  if (!grid.batch_sizes.empty()) g.batch_sizes = parse_list("batch_sizes", grid.batch_sizes);
  if (!grid.d_models.empty()) g.d_models = parse_list("d_models", grid.d_models);
  if (!grid.n_heads.empty()) g.n_heads = parse_list("n_heads", grid.n_heads);
  // Axes left unset fall back to the single value of the base config.
  if (g.history_lens.empty()) g.history_lens = {data.history_len};
  if (g.batch_sizes.empty()) g.batch_sizes = {train.batch_size};
  if (g.d_models.empty()) g.d_models = {model.d_model};
  if (g.n_heads.empty()) g.n_heads = {model.n_head};
  return g;
}

RunConfig read_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    const auto sec = known_keys().find(section);
    if (sec == known_keys().end()) throw ConfigError("config: unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      if (!sec->second.contains(key)) throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
    }
  }

  RunConfig c;
  DataConfig& d = c.data;
  d.path = get(tree, "data.path", d.path);
  d.format = get(tree, "data.format", d.format);
  if (d.format != "values" && d.format != "events") {
    throw ConfigError("data.format must be 'values' or 'events', got '" + d.format + "'");
  }
  d.column = get(tree, "data.column", d.column);
  d.workload = get(tree, "data.workload", d.workload);
  d.interval_minutes = get(tree, "data.interval_minutes", d.interval_minutes);
  d.history_len = get(tree, "data.history_len", d.history_len);
  d.tau = get(tree, "data.tau", d.tau);

  GeneratorConfig& m = c.model;
  m.d_model = get(tree, "model.d_model", m.d_model);
  m.n_head = get(tree, "model.n_head", m.n_head);
  m.d_ff = get(tree, "model.d_ff", m.d_ff);
  m.dropout = get(tree, "model.dropout", m.dropout);
  m.positional_encoding = get(tree, "model.positional_encoding", m.positional_encoding);
  m.history_len = d.history_len;
  m.tau = d.tau;

  TrainConfig& t = c.train;
  t.n_critic = get(tree, "train.n_critic", t.n_critic);
  t.lambda = get(tree, "train.lambda", t.lambda);
  t.lr = get(tree, "train.lr", t.lr);
  t.momentum = get(tree, "train.momentum", t.momentum);
  t.weight_decay = get(tree, "train.weight_decay", t.weight_decay);
  t.optimizer_eps = get(tree, "train.eps", t.optimizer_eps);
  t.epochs = get(tree, "train.epochs", t.epochs);
  t.batch_size = get(tree, "train.batch_size", t.batch_size);
  t.seed = get(tree, "train.seed", t.seed);
  t.optimizer = parse_optimizer(get<std::string>(tree, "train.optimizer", optimizer_name(t.optimizer)));
  t.adam_lr = get(tree, "train.adam_lr", t.adam_lr);
  t.adam_beta1 = get(tree, "train.adam_beta1", t.adam_beta1);
  t.adam_beta2 = get(tree, "train.adam_beta2", t.adam_beta2);
  t.adam_eps = get(tree, "train.adam_eps", t.adam_eps);
  t.validate();

  GridConfig& g = c.grid;
  g.workload = get(tree, "grid.workload", g.workload);
  g.points = get(tree, "grid.points", g.points);
  g.history_lens = get(tree, "grid.history_lens", g.history_lens);
  g.batch_sizes = get(tree, "grid.batch_sizes", g.batch_sizes);
  g.d_models = get(tree, "grid.d_models", g.d_models);
  g.n_heads = get(tree, "grid.n_heads", g.n_heads);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  return read_config(in);
}

void write_config(std::ostream& out, const RunConfig& c) {
  const DataConfig& d = c.data;
  const GeneratorConfig& m = c.model;
  const TrainConfig& t = c.train;
  const GridConfig& g = c.grid;
  out << "[data]\n"
      << "path = " << d.path << '\n'
      << "format = " << d.format << '\n'
      << "column = " << d.column << '\n'
      << "workload = " << d.workload << '\n'
      << "interval_minutes = " << d.interval_minutes << '\n'
      << "history_len = " << d.history_len << '\n'
      << "tau = " << d.tau << '\n'
      << "\n[model]\n"
      << "d_model = " << m.d_model << '\n'
      << "n_head = " << m.n_head << '\n'
      << "d_ff = " << m.d_ff << '\n'
      << "dropout = " << num(m.dropout) << '\n'
      << "positional_encoding = " << (m.positional_encoding ? "true" : "false") << '\n'
      << "\n[train]\n"
      << "n_critic = " << t.n_critic << '\n'
      << "lambda = " << num(t.lambda) << '\n'
      << "lr = " << num(t.lr) << '\n'
      << "momentum = " << num(t.momentum) << '\n'
      << "weight_decay = " << num(t.weight_decay) << '\n'
      << "eps = " << num(t.optimizer_eps) << '\n'
      << "epochs = " << t.epochs << '\n'
      << "batch_size = " << t.batch_size << '\n'
      << "seed = " << t.seed << '\n'
      << "optimizer = " << optimizer_name(t.optimizer) << '\n'
      << "adam_lr = " << num(t.adam_lr) << '\n'
      << "adam_beta1 = " << num(t.adam_beta1) << '\n'
      << "adam_beta2 = " << num(t.adam_beta2) << '\n'
      << "adam_eps = " << num(t.adam_eps) << '\n'
      << "\n[grid]\n"
      << "workload = " << g.workload << '\n'
      << "points = " << g.points << '\n'
      << "history_lens = " << g.history_lens << '\n'
      << "batch_sizes = " << g.batch_sizes << '\n'
      << "d_models = " << g.d_models << '\n'
      << "n_heads = " << g.n_heads << '\n';
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t config_hash(const RunConfig& cfg) {
  std::ostringstream s;
  write_config(s, cfg);
  return fnv1a(s.str());
}

}  // namespace jarcast
