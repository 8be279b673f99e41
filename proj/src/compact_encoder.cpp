#include "sacl/encoder.hpp"

#include "sacl/seed.hpp"

#include <cmath>
#include <limits>

namespace sacl {

namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

struct LayerNormCache {
  Matrix xhat;
  Vector rstd;
};

Matrix layer_norm(const Matrix& x, const Parameter& gain, const Parameter& bias, LayerNormCache& cache) {
  const auto n = x.rows();
  const auto d = static_cast<double>(x.cols());
  cache.xhat.resize(n, x.cols());
  cache.rstd.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mean = x.row(i).sum() / d;
    const double var = (x.row(i).array() - mean).square().sum() / d;
    const double rstd = 1.0 / std::sqrt(var + kLayerNormEps);
    cache.rstd(i) = rstd;
    cache.xhat.row(i) = (x.row(i).array() - mean) * rstd;
  }
  Matrix y = cache.xhat.array().rowwise() * gain.value.row(0).array();
  y.rowwise() += bias.value.row(0);
  return y;
}

Matrix layer_norm_backward(const Matrix& dy, const LayerNormCache& cache, Parameter& gain, Parameter& bias) {
  gain.grad.row(0) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  bias.grad.row(0) += dy.colwise().sum();
  const Matrix dxhat = dy.array().rowwise() * gain.value.row(0).array();
  const auto d = static_cast<double>(dy.cols());
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const double mean_dxhat = dxhat.row(i).sum() / d;
    const double mean_dxhat_xhat = dxhat.row(i).dot(cache.xhat.row(i)) / d;
    dx.row(i) = cache.rstd(i) *
                (dxhat.row(i).array() - mean_dxhat - cache.xhat.row(i).array() * mean_dxhat_xhat);
  }
  return dx;
}

double gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
}

double gelu_grad(double x) {
  const double t = std::tanh(kGeluC * (x + kGeluA * x * x * x));
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
}

// Inverted dropout mask: entries are 0 or 1/(1-p).
Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, Rng& rng) {
  Matrix m(rows, cols);
  const double keep = 1.0 / (1.0 - p);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform01(rng) < p ? 0.0 : keep;
  return m;
}

Matrix random_normal(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = stddev * standard_normal(rng);
  return m;
}

Matrix sinusoidal_positions(int count, int dim) {
  Matrix pe(count, dim);
  for (int pos = 0; pos < count; ++pos) {
    for (int i = 0; i < dim; i += 2) {
      const double angle = pos / std::pow(10000.0, static_cast<double>(i) / dim);
      pe(pos, i) = std::sin(angle);
      if (i + 1 < dim) pe(pos, i + 1) = std::cos(angle);
    }
  }
  return pe;
}

void add_bias_grad(Parameter& bias, const Matrix& d) { bias.grad.row(0) += d.colwise().sum(); }

struct BlockTrace {
  Eigen::Index rows_out = 0;
  LayerNormCache ln1;
  Matrix attn_in;  // LN1 output, all rows
  Matrix q, k, v;
  std::vector<Matrix> probs;
  Matrix ctx;
  Matrix drop_attn;
  LayerNormCache ln2;
  Matrix ffn_in;  // LN2 output
  Matrix pre_act;
  Matrix act;
  Matrix drop_ffn;
};

struct CompactTrace final : ForwardTrace {
  std::vector<std::uint8_t> mask;
  Matrix drop_embed;
  std::vector<BlockTrace> blocks;
  LayerNormCache final_ln;
};

}  // namespace

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

nlohmann::json CompactEncoderConfig::to_json() const {
  return {{"vocab_size", vocab_size}, {"hidden_size", hidden_size}, {"num_layers", num_layers},
          {"num_heads", num_heads},   {"ffn_size", ffn_size},       {"max_positions", max_positions},
          {"seed", seed}};
}

CompactEncoderConfig CompactEncoderConfig::from_json(const nlohmann::json& j) {
  CompactEncoderConfig c;
  c.vocab_size = j.at("vocab_size").get<int>();
  c.hidden_size = j.at("hidden_size").get<int>();
  c.num_layers = j.at("num_layers").get<int>();
  c.num_heads = j.at("num_heads").get<int>();
  c.ffn_size = j.at("ffn_size").get<int>();
  c.max_positions = j.at("max_positions").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

CompactEncoder::CompactEncoder(const CompactEncoderConfig& config)
    : config_(config), tokenizer_(config.vocab_size) {
  const int d = config.hidden_size;
  if (d <= 0 || config.num_layers <= 0 || config.num_heads <= 0 || d % config.num_heads != 0) {
    throw Error("compact encoder: hidden_size must be a positive multiple of num_heads");
  }
  if (config.max_positions < 4) throw Error("compact encoder: max_positions must be >= 4");

  Rng rng(derive_seed(config.seed, "encoder-init"));
  positions_ = sinusoidal_positions(config.max_positions, d);
  token_embedding_ = Parameter("token_embedding", random_normal(config.vocab_size, d, 1.0, rng),
                               /*apply_decay=*/false, /*sparse=*/true);

  const double in_std = 1.0 / std::sqrt(static_cast<double>(d));
  const double out_scale = 1.0 / std::sqrt(2.0 * config.num_layers);
  auto vec = [](const std::string& name, int n, double fill) {
    return Parameter(name, Matrix::Constant(1, n, fill));
  };
  for (int l = 0; l < config.num_layers; ++l) {
    const auto p = "layer" + std::to_string(l) + ".";
    Layer layer{
        vec(p + "ln1_gain", d, 1.0),
        vec(p + "ln1_bias", d, 0.0),
        Parameter(p + "wq", random_normal(d, d, in_std, rng)),
        vec(p + "bq", d, 0.0),
        Parameter(p + "wk", random_normal(d, d, in_std, rng)),
        vec(p + "bk", d, 0.0),
        Parameter(p + "wv", random_normal(d, d, in_std, rng)),
        vec(p + "bv", d, 0.0),
        Parameter(p + "wo", random_normal(d, d, in_std * out_scale, rng)),
        vec(p + "bo", d, 0.0),
        vec(p + "ln2_gain", d, 1.0),
        vec(p + "ln2_bias", d, 0.0),
        Parameter(p + "w1", random_normal(d, config.ffn_size, in_std, rng)),
        vec(p + "b1", config.ffn_size, 0.0),
        Parameter(p + "w2",
                  random_normal(config.ffn_size, d,
                                out_scale / std::sqrt(static_cast<double>(config.ffn_size)), rng)),
        vec(p + "b2", d, 0.0),
    };
    layers_.push_back(std::move(layer));
  }
  final_gain_ = vec("final_ln_gain", d, 1.0);
  final_bias_ = vec("final_ln_bias", d, 0.0);
}

ParameterRefs CompactEncoder::parameters() {
  ParameterRefs refs{&token_embedding_};
  for (auto& l : layers_) {
    for (Parameter* p : {&l.ln1_gain, &l.ln1_bias, &l.wq, &l.bq, &l.wk, &l.bk, &l.wv, &l.bv, &l.wo,
                         &l.bo, &l.ln2_gain, &l.ln2_bias, &l.w1, &l.b1, &l.w2, &l.b2}) {
      refs.push_back(p);
    }
  }
  refs.push_back(&final_gain_);
  refs.push_back(&final_bias_);
  return refs;
}

std::unique_ptr<Encoder> CompactEncoder::clone() const { return std::make_unique<CompactEncoder>(*this); }

// ---------------------------------------------------------------------------
// Tokens and embeddings
// ---------------------------------------------------------------------------

TokenSequence CompactEncoder::tokenize(const ComposedInput& input, int max_len) const {
  return tokenizer_.tokenize(input, std::min(max_len, config_.max_positions));
}

Matrix CompactEncoder::embed(const TokenSequence& tokens) const {
  if (tokens.ids.empty()) throw Error("embed: empty token sequence");
  Matrix out(tokens.length(), config_.hidden_size);
  for (int j = 0; j < tokens.length(); ++j) {
    const auto id = tokens.ids[j];
    if (id < 0 || id >= config_.vocab_size) {
      throw Error("embed: token id " + std::to_string(id) + " outside vocabulary of size " +
                  std::to_string(config_.vocab_size));
    }
    out.row(j) = token_embedding_.value.row(id);
  }
  return out;
}

void CompactEncoder::accumulate_embedding_grad(const TokenSequence& tokens, const Matrix& grad_embeddings) {
  for (int j = 0; j < tokens.length(); ++j) {
    if (!tokens.mask[j]) continue;
    const auto id = tokens.ids[j];
    token_embedding_.grad.row(id) += grad_embeddings.row(j);
    token_embedding_.touched_rows.push_back(id);
  }
}

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

ForwardResult CompactEncoder::forward(const Matrix& embeddings, std::span<const std::uint8_t> mask,
                                      const ForwardOptions& options) const {
  const auto len = embeddings.rows();
  const int d = config_.hidden_size;
  if (embeddings.cols() != d) throw Error("encode: embedding width does not match hidden size");
  if (len == 0 || static_cast<Eigen::Index>(mask.size()) != len) {
    throw Error("encode: mask length must equal the number of embedding rows");
  }
  if (len > config_.max_positions) throw Error("encode: sequence longer than max_positions");
  if (!embeddings.allFinite()) throw Error("encode: non-finite embedding input");

  const bool drop = options.train && options.dropout > 0.0;
  Rng rng(options.dropout_seed);
  auto trace = std::make_unique<CompactTrace>();
  trace->mask.assign(mask.begin(), mask.end());

  RowVector key_bias(len);
  for (Eigen::Index j = 0; j < len; ++j) {
    key_bias(j) = mask[j] ? 0.0 : -std::numeric_limits<double>::infinity();
  }

  Matrix x = embeddings + positions_.topRows(len);
  if (drop) {
    trace->drop_embed = dropout_mask(len, d, options.dropout, rng);
    x.array() *= trace->drop_embed.array();
  }

  const int heads = config_.num_heads;
  const int head_dim = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const Layer& layer = layers_[li];
    BlockTrace bt;
    bt.rows_out = li + 1 == layers_.size() ? 1 : len;
    const auto r = bt.rows_out;

    bt.attn_in = layer_norm(x, layer.ln1_gain, layer.ln1_bias, bt.ln1);
    bt.q = bt.attn_in.topRows(r) * layer.wq.value;
    bt.q.rowwise() += layer.bq.value.row(0);
    bt.k = bt.attn_in * layer.wk.value;
    bt.k.rowwise() += layer.bk.value.row(0);
    bt.v = bt.attn_in * layer.wv.value;
    bt.v.rowwise() += layer.bv.value.row(0);

    bt.ctx.resize(r, d);
    bt.probs.resize(heads);
    for (int h = 0; h < heads; ++h) {
      const auto c0 = h * head_dim;
      Matrix scores = (bt.q.middleCols(c0, head_dim) * bt.k.middleCols(c0, head_dim).transpose()) * scale;
      scores.rowwise() += key_bias;
      for (Eigen::Index i = 0; i < r; ++i) {
        const double mx = scores.row(i).maxCoeff();
        scores.row(i) = (scores.row(i).array() - mx).exp();
        scores.row(i) /= scores.row(i).sum();
      }
      bt.ctx.middleCols(c0, head_dim) = scores * bt.v.middleCols(c0, head_dim);
      bt.probs[h] = std::move(scores);
    }
    Matrix attn_out = bt.ctx * layer.wo.value;
    attn_out.rowwise() += layer.bo.value.row(0);
    if (drop) {
      bt.drop_attn = dropout_mask(r, d, options.dropout, rng);
      attn_out.array() *= bt.drop_attn.array();
    }
    Matrix x1 = x.topRows(r) + attn_out;

    bt.ffn_in = layer_norm(x1, layer.ln2_gain, layer.ln2_bias, bt.ln2);
    bt.pre_act = bt.ffn_in * layer.w1.value;
    bt.pre_act.rowwise() += layer.b1.value.row(0);
    bt.act = bt.pre_act.unaryExpr(&gelu);
    Matrix ffn_out = bt.act * layer.w2.value;
    ffn_out.rowwise() += layer.b2.value.row(0);
    if (drop) {
      bt.drop_ffn = dropout_mask(r, d, options.dropout, rng);
      ffn_out.array() *= bt.drop_ffn.array();
    }
    x = x1 + ffn_out;
    trace->blocks.push_back(std::move(bt));
  }

  const Matrix pooled_row = layer_norm(x.topRows(1), final_gain_, final_bias_, trace->final_ln);
  ForwardResult result;
  result.pooled = pooled_row.row(0).transpose();
  result.trace = std::move(trace);
  return result;
}

// ---------------------------------------------------------------------------
// Backward
// ---------------------------------------------------------------------------

Matrix CompactEncoder::backward(const ForwardTrace& base, const Vector& grad_pooled) {
  const auto& trace = dynamic_cast<const CompactTrace&>(base);
  const int d = config_.hidden_size;
  const int heads = config_.num_heads;
  const int head_dim = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  if (grad_pooled.size() != d) throw Error("backward: gradient width does not match hidden size");

  // dL/d(block output); starts as the single begin-marker row.
  Matrix dx = layer_norm_backward(grad_pooled.transpose(), trace.final_ln, final_gain_, final_bias_);

  for (std::size_t li = layers_.size(); li-- > 0;) {
    Layer& layer = layers_[li];
    const BlockTrace& bt = trace.blocks[li];
    const auto r = bt.rows_out;
    const auto len = bt.attn_in.rows();

    // Feed-forward sublayer.
    Matrix d_ffn_out = dx;
    if (bt.drop_ffn.size()) d_ffn_out.array() *= bt.drop_ffn.array();
    layer.w2.grad.noalias() += bt.act.transpose() * d_ffn_out;
    add_bias_grad(layer.b2, d_ffn_out);
    Matrix d_pre = d_ffn_out * layer.w2.value.transpose();
    d_pre.array() *= bt.pre_act.unaryExpr(&gelu_grad).array();
    layer.w1.grad.noalias() += bt.ffn_in.transpose() * d_pre;
    add_bias_grad(layer.b1, d_pre);
    const Matrix d_ffn_in = d_pre * layer.w1.value.transpose();
    Matrix dx1 = dx + layer_norm_backward(d_ffn_in, bt.ln2, layer.ln2_gain, layer.ln2_bias);

    // Attention sublayer.
    Matrix d_attn_out = dx1;
    if (bt.drop_attn.size()) d_attn_out.array() *= bt.drop_attn.array();
    layer.wo.grad.noalias() += bt.ctx.transpose() * d_attn_out;
    add_bias_grad(layer.bo, d_attn_out);
    const Matrix d_ctx = d_attn_out * layer.wo.value.transpose();

    Matrix dq(r, d), dk(len, d), dv(len, d);
    for (int h = 0; h < heads; ++h) {
      const auto c0 = h * head_dim;
      const Matrix& p = bt.probs[h];
      const auto dctx_h = d_ctx.middleCols(c0, head_dim);
      const Matrix dp = dctx_h * bt.v.middleCols(c0, head_dim).transpose();
      dv.middleCols(c0, head_dim) = p.transpose() * dctx_h;
      Matrix ds = p.array() * (dp.array().colwise() - (dp.array() * p.array()).rowwise().sum());
      ds *= scale;
      dq.middleCols(c0, head_dim) = ds * bt.k.middleCols(c0, head_dim);
      dk.middleCols(c0, head_dim) = ds.transpose() * bt.q.middleCols(c0, head_dim);
    }
    layer.wq.grad.noalias() += bt.attn_in.topRows(r).transpose() * dq;
    add_bias_grad(layer.bq, dq);
    layer.wk.grad.noalias() += bt.attn_in.transpose() * dk;
    add_bias_grad(layer.bk, dk);
    layer.wv.grad.noalias() += bt.attn_in.transpose() * dv;
    add_bias_grad(layer.bv, dv);
    Matrix d_attn_in = dk * layer.wk.value.transpose() + dv * layer.wv.value.transpose();
    d_attn_in.topRows(r).noalias() += dq * layer.wq.value.transpose();

    Matrix dx_in = layer_norm_backward(d_attn_in, bt.ln1, layer.ln1_gain, layer.ln1_bias);
    dx_in.topRows(r) += dx1;
    dx = std::move(dx_in);
  }

  if (trace.drop_embed.size()) dx.array() *= trace.drop_embed.array();
  return dx;
}

// ---------------------------------------------------------------------------

std::unique_ptr<Encoder> make_encoder(const std::string& kind, const nlohmann::json& config) {
  if (kind == "compact") return std::make_unique<CompactEncoder>(CompactEncoderConfig::from_json(config));
  throw Error("unknown encoder kind '" + kind + "'");
}

}  // namespace sacl
