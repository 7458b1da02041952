#include "jarcast/model.hpp"

#include <cmath>
#include <string>

#include "jarcast/ops.hpp"

namespace jarcast {
namespace {

Matrix uniform_matrix(Index rows, Index cols, double bound, Rng& rng) {
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(rng.uniform(-bound, bound));
  return m;
}

NormParams make_norm(const std::string& name, Index width) {
  return NormParams{Parameter(name + ".gamma", Matrix::Ones(1, width)),
                    Parameter(name + ".beta", Matrix::Zero(1, width))};
}

AttentionParams make_attention(const std::string& name, Index d_model, Rng& rng) {
  AttentionParams p;
  p.query = make_affine(name + ".query", d_model, d_model, rng);
  p.key = make_affine(name + ".key", d_model, d_model, rng);
  p.value = make_affine(name + ".value", d_model, d_model, rng);
  p.output = make_affine(name + ".output", d_model, d_model, rng);
  return p;
}

void collect(std::vector<Parameter*>& out, Affine& a) {
  out.push_back(&a.weight);
  out.push_back(&a.bias);
}

void collect(std::vector<Parameter*>& out, NormParams& n) {
  out.push_back(&n.gamma);
  out.push_back(&n.beta);
}

void collect(std::vector<Parameter*>& out, AttentionParams& a) {
  collect(out, a.query);
  collect(out, a.key);
  collect(out, a.value);
  collect(out, a.output);
}

template <typename Layer>
Tensor apply_impl(const Binder& bind, Layer& layer, const Tensor& x) {
  return add_bias(matmul(x, bind(layer.weight)), bind(layer.bias));
}

template <typename Norm>
Tensor norm(const Binder& bind, Norm& n, const Tensor& x) {
  return layer_norm(x, bind(n.gamma), bind(n.beta));
}

template <typename Attn>
Tensor attention_impl(const Binder& bind, const Tensor& query, const Tensor& memory, Index batch, Attn& p,
                      int n_head) {
  const Index d_model = query.cols();
  if (n_head < 1 || d_model % n_head != 0) {
    throw DimensionError("multi_head_attention: d_model " + std::to_string(d_model) +
                         " is not divisible by n_head " + std::to_string(n_head));
  }
  if (memory.cols() != d_model) {
    throw DimensionError("multi_head_attention: memory width " + std::to_string(memory.cols()) +
                         " differs from query width " + std::to_string(d_model));
  }
  if (batch < 1 || query.rows() % batch != 0 || memory.rows() % batch != 0) {
    throw DimensionError("multi_head_attention: rows not divisible into " + std::to_string(batch) + " blocks");
  }
  const Index q_len = query.rows() / batch;
  const Index k_len = memory.rows() / batch;
  const Index head_dim = d_model / n_head;
  const float inv_scale = 1.0f / std::sqrt(static_cast<float>(head_dim));

  Tensor q = scale(apply_impl(bind, p.query, query), inv_scale);
  Tensor k_t = transpose(apply_impl(bind, p.key, memory));
  Tensor v = apply_impl(bind, p.value, memory);

  std::vector<Tensor> blocks;
  blocks.reserve(static_cast<std::size_t>(batch));
  std::vector<Tensor> heads(static_cast<std::size_t>(n_head));
  for (Index b = 0; b < batch; ++b) {
    for (int h = 0; h < n_head; ++h) {
      const Index col = h * head_dim;
      Tensor qh = slice(q, b * q_len, q_len, col, head_dim);
      Tensor kh = slice(k_t, col, head_dim, b * k_len, k_len);
      Tensor vh = slice(v, b * k_len, k_len, col, head_dim);
      Tensor weights = softmax(matmul(qh, kh), 1);
      heads[static_cast<std::size_t>(h)] = matmul(weights, vh);
    }
    blocks.push_back(n_head == 1 ? heads.front() : concat(heads, 1));
  }
  Tensor merged = batch == 1 ? blocks.front() : concat(blocks, 0);
  return apply_impl(bind, p.output, merged);
}

Tensor dropout(const Tensor& x, float rate, Rng* rng) {
  if (rng == nullptr || rate <= 0.0f) return x;
  const float keep = 1.0f / (1.0f - rate);
  Matrix mask(x.rows(), x.cols());
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng->uniform() < rate ? 0.0f : keep;
  return mul(x, x.tape().constant(std::move(mask)));
}

}  // namespace

Affine make_affine(const std::string& name, Index in, Index out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  return Affine{Parameter(name + ".weight", uniform_matrix(in, out, bound, rng)),
                Parameter(name + ".bias", Matrix::Zero(1, out))};
}

Tensor apply(const Binder& bind, Affine& layer, const Tensor& x) { return apply_impl(bind, layer, x); }
Tensor apply(const Binder& bind, const Affine& layer, const Tensor& x) { return apply_impl(bind, layer, x); }

Matrix positional_encoding(Index length, Index d_model) {
  Matrix pe(length, d_model);
  for (Index pos = 0; pos < length; ++pos) {
    for (Index i = 0; i < d_model; i += 2) {
      const double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(d_model));
      const double angle = static_cast<double>(pos) * freq;
      pe(pos, i) = static_cast<float>(std::sin(angle));
      if (i + 1 < d_model) pe(pos, i + 1) = static_cast<float>(std::cos(angle));
    }
  }
  return pe;
}

Tensor multi_head_attention(const Binder& bind, const Tensor& query, const Tensor& memory, Index batch,
                            AttentionParams& params, int n_head) {
  return attention_impl(bind, query, memory, batch, params, n_head);
}

Tensor multi_head_attention(const Binder& bind, const Tensor& query, const Tensor& memory, Index batch,
                            const AttentionParams& params, int n_head) {
  return attention_impl(bind, query, memory, batch, params, n_head);
}

void GeneratorConfig::validate() const {
  if (history_len < 1) throw DimensionError("generator: history length must be >= 1");
  if (d_model < 2 || d_model % 2 != 0) throw DimensionError("generator: d_model must be even and >= 2");
  if (n_head < 1 || d_model % n_head != 0) {
    throw DimensionError("generator: d_model " + std::to_string(d_model) + " is not divisible by n_head " +
                         std::to_string(n_head));
  }
  if (tau != 1) throw DimensionError("generator: only one-step-ahead decoding (tau = 1) is supported");
  if (!(dropout >= 0.0f && dropout < 1.0f)) throw DimensionError("generator: dropout must lie in [0,1)");
  if (d_ff < 0) throw DimensionError("generator: d_ff must be >= 0");
}

Generator::Generator(const GeneratorConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  const Index d = config_.d_model;
  const Index ff = config_.ff_width();
  embed = make_affine("gen.embed", 1, d, rng);

  encoder.self_attention = make_attention("gen.encoder.self_attention", d, rng);
  encoder.ff_in = make_affine("gen.encoder.ff_in", d, ff, rng);
  encoder.ff_out = make_affine("gen.encoder.ff_out", ff, d, rng);
  encoder.norm1 = make_norm("gen.encoder.norm1", d);
  encoder.norm2 = make_norm("gen.encoder.norm2", d);

  decoder.self_attention = make_attention("gen.decoder.self_attention", d, rng);
  decoder.cross_attention = make_attention("gen.decoder.cross_attention", d, rng);
  decoder.ff_in = make_affine("gen.decoder.ff_in", d, ff, rng);
  decoder.ff_out = make_affine("gen.decoder.ff_out", ff, d, rng);
  decoder.norm1 = make_norm("gen.decoder.norm1", d);
  decoder.norm2 = make_norm("gen.decoder.norm2", d);
  decoder.norm3 = make_norm("gen.decoder.norm3", d);

  head = make_affine("gen.head", d, config_.tau, rng);

  pe_ = config_.positional_encoding ? positional_encoding(config_.history_len + 1, d)
                                    : Matrix::Zero(config_.history_len + 1, d);
}

std::vector<Parameter*> Generator::parameters() {
  std::vector<Parameter*> out;
  collect(out, embed);
  collect(out, encoder.self_attention);
  collect(out, encoder.ff_in);
  collect(out, encoder.ff_out);
  collect(out, encoder.norm1);
  collect(out, encoder.norm2);
  collect(out, decoder.self_attention);
  collect(out, decoder.cross_attention);
  collect(out, decoder.ff_in);
  collect(out, decoder.ff_out);
  collect(out, decoder.norm1);
  collect(out, decoder.norm2);
  collect(out, decoder.norm3);
  collect(out, head);
  return out;
}

std::vector<const Parameter*> Generator::parameters() const {
  auto mutable_params = const_cast<Generator*>(this)->parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

template <typename Self>
Tensor Generator::forward_impl(Self& self, const Binder& bind, const Matrix& cond, Rng* dropout_rng) {
  Tape& tape = bind.tape();
  const Index batch = cond.rows();
  const Index t0 = cond.cols();
  if (batch < 1 || t0 < 1) throw DimensionError("generator: empty conditioning range " + shape_string(batch, t0));
  if (t0 + 1 > self.pe_.rows()) {
    throw DimensionError("generator: conditioning length " + std::to_string(t0) + " exceeds configured " +
                         std::to_string(self.pe_.rows() - 1));
  }
  const int heads = self.config_.n_head;
  const float rate = self.config_.dropout;

  // Encoder: one token per conditioning step, batch blocks stacked on rows.
  Matrix steps = Eigen::Map<const Matrix>(cond.data(), batch * t0, 1);
  Tensor x = apply_impl(bind, self.embed, tape.constant(std::move(steps)));
  x = add(x, tape.constant(self.pe_.topRows(t0).replicate(batch, 1)));
  x = dropout(x, rate, dropout_rng);

  Tensor attn = multi_head_attention(bind, x, x, batch, self.encoder.self_attention, heads);
  Tensor h = norm(bind, self.encoder.norm1, add(x, dropout(attn, rate, dropout_rng)));
  Tensor ff = apply_impl(bind, self.encoder.ff_out, relu(apply_impl(bind, self.encoder.ff_in, h)));
  Tensor memory = norm(bind, self.encoder.norm2, add(h, dropout(ff, rate, dropout_rng)));

  // Decoder: a single token, the last observed value at position t0.
  Tensor y = apply_impl(bind, self.embed, tape.constant(cond.col(t0 - 1)));
  y = add(y, tape.constant(self.pe_.row(t0).replicate(batch, 1)));
  y = dropout(y, rate, dropout_rng);
  Tensor self_attn = multi_head_attention(bind, y, y, batch, self.decoder.self_attention, heads);
  y = norm(bind, self.decoder.norm1, add(y, dropout(self_attn, rate, dropout_rng)));
  Tensor cross = multi_head_attention(bind, y, memory, batch, self.decoder.cross_attention, heads);
  y = norm(bind, self.decoder.norm2, add(y, dropout(cross, rate, dropout_rng)));
  Tensor dff = apply_impl(bind, self.decoder.ff_out, relu(apply_impl(bind, self.decoder.ff_in, y)));
  y = norm(bind, self.decoder.norm3, add(y, dropout(dff, rate, dropout_rng)));
  return apply_impl(bind, self.head, y);
}

Tensor Generator::forward(Tape& tape, const Matrix& cond, bool track, Rng* dropout_rng) {
  return forward_impl(*this, Binder(tape, track), cond, dropout_rng);
}

Tensor Generator::forward(Tape& tape, const Matrix& cond) const {
  return forward_impl(*this, Binder(tape, false), cond, nullptr);
}

Matrix Generator::predict(const Matrix& cond) const {
  Tape tape(Tape::Mode::kInference);
  return forward(tape, cond).value();
}

void CriticConfig::validate() const {
  if (seq_len < 1) throw DimensionError("critic: sequence length must be >= 1");
  if (width < 1) throw DimensionError("critic: width must be >= 1");
  if (depth < 1) throw DimensionError("critic: depth must be >= 1");
  if (!(slope > 0.0f && slope < 1.0f)) throw DimensionError("critic: LeakyReLU slope must lie in (0,1)");
}

Critic::Critic(const CriticConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  Index in = config_.seq_len;
  for (int l = 0; l < config_.depth; ++l) {
    const Index out = l + 1 == config_.depth ? 1 : config_.width;
    layers.push_back(make_affine("critic.layer" + std::to_string(l + 1), in, out, rng));
    in = out;
  }
}

std::vector<Parameter*> Critic::parameters() {
  std::vector<Parameter*> out;
  for (Affine& a : layers) collect(out, a);
  return out;
}

std::vector<const Parameter*> Critic::parameters() const {
  auto mutable_params = const_cast<Critic*>(this)->parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

template <typename Self>
Tensor Critic::forward_impl(Self& self, const Binder& bind, const Tensor& seq) {
  if (seq.cols() != self.config_.seq_len) {
    throw DimensionError("critic: sequence length " + std::to_string(seq.cols()) + " does not match " +
                         std::to_string(self.config_.seq_len));
  }
  Tensor x = seq;
  const std::size_t n = self.layers.size();
  for (std::size_t l = 0; l < n; ++l) {
    x = apply_impl(bind, self.layers[l], x);
    if (l + 1 < n) x = leaky_relu(x, self.config_.slope);
  }
  return x;
}

template <typename Self>
Tensor Critic::input_gradient_impl(Self& self, const Binder& bind, const Tensor& seq) {
  if (seq.cols() != self.config_.seq_len) {
    throw DimensionError("critic: sequence length " + std::to_string(seq.cols()) + " does not match " +
                         std::to_string(self.config_.seq_len));
  }
  Tape& tape = bind.tape();
  const Index batch = seq.rows();
  const std::size_t n = self.layers.size();
  const float slope = self.config_.slope;

  // Slope masks of every hidden pre-activation, evaluated on plain values.
  std::vector<Matrix> masks;
  masks.reserve(n - 1);
  Matrix act = seq.value();
  for (std::size_t l = 0; l + 1 < n; ++l) {
    Matrix pre = act * self.layers[l].weight.value;
    pre.rowwise() += self.layers[l].bias.value.row(0);
    masks.push_back(pre.unaryExpr([slope](float v) { return v >= 0.0f ? 1.0f : slope; }));
    act = pre.unaryExpr([slope](float v) { return v >= 0.0f ? v : slope * v; });
  }

  Tensor g = matmul(tape.constant(Matrix::Ones(batch, 1)), transpose(bind(self.layers[n - 1].weight)));
  for (std::size_t l = n - 1; l-- > 0;) {
    g = mul(g, tape.constant(std::move(masks[l])));
    g = matmul(g, transpose(bind(self.layers[l].weight)));
  }
  return g;
}

Tensor Critic::forward(const Binder& bind, const Tensor& seq) { return forward_impl(*this, bind, seq); }
Tensor Critic::forward(const Binder& bind, const Tensor& seq) const { return forward_impl(*this, bind, seq); }

Tensor Critic::input_gradient(const Binder& bind, const Tensor& seq) {
  return input_gradient_impl(*this, bind, seq);
}
Tensor Critic::input_gradient(const Binder& bind, const Tensor& seq) const {
  return input_gradient_impl(*this, bind, seq);
}

Matrix Critic::score(const Matrix& seq) const {
  Tape tape(Tape::Mode::kInference);
  Binder bind(tape, false);
  return forward(bind, tape.constant_ref(seq)).value();
}

}  // namespace jarcast
