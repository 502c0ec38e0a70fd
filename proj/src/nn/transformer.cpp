#include "staykit/nn/transformer.hpp"

#include <cmath>

namespace staykit::nn {

void EncoderConfig::validate() const {
  if (d_model == 0 || num_layers == 0 || num_heads == 0 || d_ff == 0 || input_dim == 0)
    throw input_error("encoder config: all dimensions must be positive");
  if (d_model % num_heads != 0)
    throw input_error("encoder config: d_model must be divisible by num_heads");
  if (dropout < 0.0 || dropout >= 1.0)
    throw input_error("encoder config: dropout must lie in [0,1)");
}

EncoderConfig EncoderConfig::base() { return EncoderConfig{}; }

EncoderConfig EncoderConfig::small() {
  EncoderConfig c;
  c.d_model = 64;
  c.num_layers = 2;
  c.num_heads = 4;
  c.d_ff = 256;
  return c;
}

Var ParamStore::create_or_get(const std::string& name, std::size_t rows, std::size_t cols,
                              Init init, Rng& rng) {
  auto it = params_.find(name);
  if (it != params_.end()) {
    if (it->second->rows != rows || it->second->cols != cols)
      throw input_error("param store: shape mismatch for '" + name + "'");
    return it->second;
  }
  Var t = make_tensor(rows, cols, true);
  switch (init) {
    case Init::zeros:
      break;
    case Init::ones:
      std::fill(t->v.begin(), t->v.end(), 1.0);
      break;
    case Init::xavier: {
      const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
      for (double& x : t->v) x = rng.uniform(-limit, limit);
      break;
    }
  }
  params_.emplace(name, t);
  return t;
}

Var ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw input_error("param store: unknown parameter '" + name + "'");
  return it->second;
}

void ParamStore::insert(const std::string& name, Var tensor) {
  tensor->requires_grad = true;
  if (tensor->g.size() != tensor->size()) tensor->g.assign(tensor->size(), 0.0);
  params_[name] = std::move(tensor);
}

void ParamStore::zero_grads() {
  for (auto& [name, t] : params_) t->zero_grad();
}

std::size_t ParamStore::total_size() const {
  std::size_t total = 0;
  for (const auto& [name, t] : params_) total += t->size();
  return total;
}

ParamStore ParamStore::clone() const {
  ParamStore out;
  for (const auto& [name, t] : params_) {
    Var copy = make_tensor(t->rows, t->cols, true);
    copy->v = t->v;
    out.params_.emplace(name, std::move(copy));
  }
  return out;
}

void ParamStore::copy_values_from(const ParamStore& other) {
  for (auto& [name, t] : params_) {
    auto it = other.params_.find(name);
    if (it == other.params_.end())
      throw input_error("param store: missing parameter '" + name + "' in source");
    if (it->second->size() != t->size())
      throw input_error("param store: size mismatch for '" + name + "'");
    t->v = it->second->v;
  }
}

std::vector<double> sinusoidal_encoding(std::size_t n, std::size_t d_model) {
  std::vector<double> pe(n * d_model, 0.0);
  for (std::size_t pos = 0; pos < n; ++pos) {
    for (std::size_t i = 0; i < d_model; i += 2) {
      const double angle =
          static_cast<double>(pos) /
          std::pow(10000.0, static_cast<double>(i) / static_cast<double>(d_model));
      pe[pos * d_model + i] = std::sin(angle);
      if (i + 1 < d_model) pe[pos * d_model + i + 1] = std::cos(angle);
    }
  }
  return pe;
}

TransformerEncoder::TransformerEncoder(const EncoderConfig& config, ParamStore& store)
    : cfg_(config) {
  cfg_.validate();
  Rng rng(mix_seed(cfg_.seed, fnv1a64("encoder-init")));
  const std::size_t d = cfg_.d_model;

  w_in_ = store.create_or_get("encoder.in.w", d, cfg_.input_dim, Init::xavier, rng);
  b_in_ = store.create_or_get("encoder.in.b", 1, d, Init::zeros, rng);

  layers_.resize(cfg_.num_layers);
  for (std::size_t l = 0; l < cfg_.num_layers; ++l) {
    const std::string p = "encoder.layer" + std::to_string(l) + ".";
    Layer& layer = layers_[l];
    layer.wq = store.create_or_get(p + "attn.wq", d, d, Init::xavier, rng);
    layer.bq = store.create_or_get(p + "attn.bq", 1, d, Init::zeros, rng);
    layer.wk = store.create_or_get(p + "attn.wk", d, d, Init::xavier, rng);
    layer.bk = store.create_or_get(p + "attn.bk", 1, d, Init::zeros, rng);
    layer.wv = store.create_or_get(p + "attn.wv", d, d, Init::xavier, rng);
    layer.bv = store.create_or_get(p + "attn.bv", 1, d, Init::zeros, rng);
    layer.wo = store.create_or_get(p + "attn.wo", d, d, Init::xavier, rng);
    layer.bo = store.create_or_get(p + "attn.bo", 1, d, Init::zeros, rng);
    layer.w1 = store.create_or_get(p + "ff.w1", cfg_.d_ff, d, Init::xavier, rng);
    layer.b1 = store.create_or_get(p + "ff.b1", 1, cfg_.d_ff, Init::zeros, rng);
    layer.w2 = store.create_or_get(p + "ff.w2", d, cfg_.d_ff, Init::xavier, rng);
    layer.b2 = store.create_or_get(p + "ff.b2", 1, d, Init::zeros, rng);
    layer.ln1_g = store.create_or_get(p + "ln1.gain", 1, d, Init::ones, rng);
    layer.ln1_b = store.create_or_get(p + "ln1.bias", 1, d, Init::zeros, rng);
    layer.ln2_g = store.create_or_get(p + "ln2.gain", 1, d, Init::ones, rng);
    layer.ln2_b = store.create_or_get(p + "ln2.bias", 1, d, Init::zeros, rng);
  }
}

Var TransformerEncoder::forward(Tape& tape, const Var& x, const std::vector<double>& mask,
                                bool training, Rng& dropout_rng) const {
  if (x->cols != cfg_.input_dim) throw input_error("encoder: input width mismatch");
  if (mask.size() != x->rows) throw input_error("encoder: mask length mismatch");
  for (double v : x->v)
    if (!std::isfinite(v)) throw input_error("encoder: non-finite input");

  const std::size_t n = x->rows;
  const std::size_t d = cfg_.d_model;
  const std::size_t heads = cfg_.num_heads;
  const std::size_t dk = d / heads;

  Var h = linear(tape, x, w_in_, b_in_);
  h = scale(tape, h, std::sqrt(static_cast<double>(d)));
  h = add_const(tape, h, sinusoidal_encoding(n, d));
  h = dropout(tape, h, cfg_.dropout, dropout_rng, training);

  for (const Layer& layer : layers_) {
    // Multi-head self-attention; padded keys are excluded via the mask.
    Var q = linear(tape, h, layer.wq, layer.bq);
    Var key = linear(tape, h, layer.wk, layer.bk);
    Var val = linear(tape, h, layer.wv, layer.bv);

    std::vector<Var> head_outputs;
    head_outputs.reserve(heads);
    for (std::size_t hh = 0; hh < heads; ++hh) {
      Var qh = slice_cols(tape, q, hh * dk, dk);
      Var kh = slice_cols(tape, key, hh * dk, dk);
      Var vh = slice_cols(tape, val, hh * dk, dk);
      Var scores = scale(tape, matmul_nt(tape, qh, kh),
                         1.0 / std::sqrt(static_cast<double>(dk)));
      Var attn = softmax_rows(tape, scores, &mask);
      attn = dropout(tape, attn, cfg_.dropout, dropout_rng, training);
      head_outputs.push_back(matmul(tape, attn, vh));
    }
    Var attn_out = heads == 1 ? head_outputs[0] : concat_cols(tape, head_outputs);
    attn_out = linear(tape, attn_out, layer.wo, layer.bo);
    attn_out = dropout(tape, attn_out, cfg_.dropout, dropout_rng, training);
    h = layer_norm_rows(tape, add(tape, h, attn_out), layer.ln1_g, layer.ln1_b);

    Var ff = relu(tape, linear(tape, h, layer.w1, layer.b1));
    ff = linear(tape, ff, layer.w2, layer.b2);
    ff = dropout(tape, ff, cfg_.dropout, dropout_rng, training);
    h = layer_norm_rows(tape, add(tape, h, ff), layer.ln2_g, layer.ln2_b);
  }

  // Padded rows carry no meaning; zero them so nothing downstream can read
  // them by accident.
  return scale_rows(tape, h, mask);
}

StayHead StayHead::create(ParamStore& store, std::size_t d_model, std::uint64_t seed) {
  Rng rng(mix_seed(seed, fnv1a64("stay-head-init")));
  StayHead head;
  head.w = store.create_or_get("decoder.stay.w", 1, d_model, Init::xavier, rng);
  head.b = store.create_or_get("decoder.stay.b", 1, 1, Init::zeros, rng);
  return head;
}

Var StayHead::forward(Tape& tape, const Var& emb) const {
  return sigmoid(tape, linear(tape, emb, w, b));
}

ModeHead ModeHead::create(ParamStore& store, std::size_t d_model, std::size_t num_modes,
                          std::uint64_t seed) {
  if (num_modes < 2) throw input_error("mode head: need at least 2 classes");
  Rng rng(mix_seed(seed, fnv1a64("mode-head-init")));
  ModeHead head;
  head.num_modes = num_modes;
  head.w = store.create_or_get("decoder.modes.w", num_modes, d_model, Init::xavier, rng);
  head.b = store.create_or_get("decoder.modes.b", 1, num_modes, Init::zeros, rng);
  return head;
}

Var ModeHead::forward(Tape& tape, const Var& emb) const {
  return softmax_rows(tape, linear(tape, emb, w, b));
}

SslHeads SslHeads::create(ParamStore& store, std::size_t d_model, std::uint64_t seed) {
  Rng rng(mix_seed(seed, fnv1a64("ssl-heads-init")));
  SslHeads heads;
  heads.wv = store.create_or_get("ssl.vel.w", 1, 2 * d_model, Init::xavier, rng);
  heads.bv = store.create_or_get("ssl.vel.b", 1, 1, Init::zeros, rng);
  heads.wa = store.create_or_get("ssl.ang.w", 2, 2 * d_model, Init::xavier, rng);
  heads.ba = store.create_or_get("ssl.ang.b", 1, 2, Init::zeros, rng);
  return heads;
}

std::pair<Var, Var> SslHeads::forward(Tape& tape, const Var& emb,
                                      const std::vector<double>& mask) const {
  std::size_t last = mask.size();
  for (std::size_t i = mask.size(); i > 0; --i)
    if (mask[i - 1] != 0.0) {
      last = i - 1;
      break;
    }
  if (last == mask.size()) throw input_error("ssl heads: no masked-in positions");

  Var mean = masked_mean_rows(tape, emb, mask);
  Var last_row = take_row(tape, emb, last);
  Var agg = concat_cols(tape, {mean, last_row});  // [1 x 2*d_model]
  Var v_hat = linear(tape, agg, wv, bv);
  Var ang_hat = tanh_op(tape, linear(tape, agg, wa, ba));
  return {v_hat, ang_hat};
}

}  // namespace staykit::nn
