#pragma once

#include <vector>

#include "jarcast/autodiff.hpp"
#include "jarcast/rng.hpp"

namespace jarcast {

// Decides how a parameter enters a tape: as a gradient-tracked leaf or as a
// constant view. Const parameters always bind as constants.
class Binder {
 public:
  Binder(Tape& tape, bool track) : tape_(&tape), track_(track) {}

  Tensor operator()(Parameter& p) const {
    return track_ ? tape_->parameter(p) : tape_->constant_ref(p.value);
  }
  Tensor operator()(const Parameter& p) const { return tape_->constant_ref(p.value); }

  Tape& tape() const { return *tape_; }

 private:
  Tape* tape_;
  bool track_;
};

// y = x W + b with W stored (in x out) and b (1 x out).
struct Affine {
  Parameter weight;
  Parameter bias;
};

struct AttentionParams {
  Affine query;
  Affine key;
  Affine value;
  Affine output;
};

struct NormParams {
  Parameter gamma;
  Parameter beta;
};

struct EncoderLayerParams {
  AttentionParams self_attention;
  Affine ff_in;
  Affine ff_out;
  NormParams norm1;
  NormParams norm2;
};

struct DecoderLayerParams {
  AttentionParams self_attention;
  AttentionParams cross_attention;
  Affine ff_in;
  Affine ff_out;
  NormParams norm1;
  NormParams norm2;
  NormParams norm3;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero bias.
Affine make_affine(const std::string& name, Index in, Index out, Rng& rng);

Tensor apply(const Binder& bind, Affine& layer, const Tensor& x);
Tensor apply(const Binder& bind, const Affine& layer, const Tensor& x);

// Sinusoidal table: row pos, column 2i -> sin(pos / 10000^(2i/d)), 2i+1 -> cos.
Matrix positional_encoding(Index length, Index d_model);

// Scaled dot-product attention with n_head heads and no mask.
// `query` stacks `batch` blocks of equal length along rows, likewise `memory`;
// block b of the query attends only to block b of the memory.
Tensor multi_head_attention(const Binder& bind, const Tensor& query, const Tensor& memory, Index batch,
                            AttentionParams& params, int n_head);
Tensor multi_head_attention(const Binder& bind, const Tensor& query, const Tensor& memory, Index batch,
                            const AttentionParams& params, int n_head);

struct GeneratorConfig {
  int history_len = 24;  // t0
  int d_model = 16;
  int n_head = 4;
  int d_ff = 0;          // 0 selects 4 * d_model
  int tau = 1;
  float dropout = 0.0f;
  bool positional_encoding = true;

  int ff_width() const { return d_ff > 0 ? d_ff : 4 * d_model; }
  // Throws DimensionError on an unusable combination.
  void validate() const;
};

// One-layer encoder / one-layer decoder transformer with post-norm residual
// sublayers. The encoder reads the embedded conditioning range; the decoder
// reads the embedded last observed value at absolute position t0 and
// cross-attends to the encoder output.
class Generator {
 public:
  Generator(const GeneratorConfig& config, Rng& rng);

  // cond is (batch x t0), already normalized. Returns (batch x tau).
  // With track = true, gradients flow into the parameters. A non-null
  // dropout_rng enables dropout (only meaningful when config.dropout > 0).
  Tensor forward(Tape& tape, const Matrix& cond, bool track, Rng* dropout_rng = nullptr);
  Tensor forward(Tape& tape, const Matrix& cond) const;

  // Inference without gradient bookkeeping.
  Matrix predict(const Matrix& cond) const;

  const GeneratorConfig& config() const { return config_; }
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

  // For checks that need the encoder to see no position information.
  void set_positional_table(Matrix table) { pe_ = std::move(table); }
  const Matrix& positional_table() const { return pe_; }

  Affine embed;
  EncoderLayerParams encoder;
  DecoderLayerParams decoder;
  Affine head;

 private:
  template <typename Self>
  static Tensor forward_impl(Self& self, const Binder& bind, const Matrix& cond, Rng* dropout_rng);

  GeneratorConfig config_;
  Matrix pe_;  // (t0 + 1) x d_model
};

struct CriticConfig {
  int seq_len = 25;  // S = t0 + tau
  int width = 16;    // hidden width, equal to the generator's d_model
  int depth = 3;     // number of affine layers
  float slope = 0.2f;

  void validate() const;
};

// Fully connected critic S -> width -> ... -> 1 with LeakyReLU between
// layers and a linear output.
class Critic {
 public:
  Critic(const CriticConfig& config, Rng& rng);

  // seq is (batch x S); returns (batch x 1).
  Tensor forward(const Binder& bind, const Tensor& seq);
  Tensor forward(const Binder& bind, const Tensor& seq) const;

  // d D / d seq for every row, built from recorded primitives:
  //   G = 1 w_L^T, then for hidden layers l = L-1..1:  G = (G .* phi'(a_l)) W_l^T
  // The activation-slope masks phi' enter as constants, so one backward pass
  // through G yields the gradient-penalty derivative wrt the weights.
  Tensor input_gradient(const Binder& bind, const Tensor& seq);
  Tensor input_gradient(const Binder& bind, const Tensor& seq) const;

  Matrix score(const Matrix& seq) const;

  const CriticConfig& config() const { return config_; }
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

  std::vector<Affine> layers;

 private:
  template <typename Self>
  static Tensor forward_impl(Self& self, const Binder& bind, const Tensor& seq);
  template <typename Self>
  static Tensor input_gradient_impl(Self& self, const Binder& bind, const Tensor& seq);

  CriticConfig config_;
};

}  // namespace jarcast
