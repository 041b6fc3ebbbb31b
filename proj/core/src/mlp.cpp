#include "edgemlp/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "edgemlp/error.hpp"

namespace edgemlp {

namespace {

template <typename T>
void add_bias(BasicMatrix<T>& z, const std::vector<T>& bias) {
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto row = z.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias[c];
  }
}

template <typename T>
BasicMatrix<T> dense(const BasicMatrix<T>& x, const BasicLayer<T>& layer) {
  BasicMatrix<T> z(x.rows(), layer.out_dim());
  gemm(Transpose::No, Transpose::No, T{1}, x, layer.weights, T{0}, z);
  add_bias(z, layer.bias);
  return z;
}

// Column sums accumulated in row order.
template <typename T>
std::vector<T> column_sums(const BasicMatrix<T>& m) {
  std::vector<T> s(m.cols(), T{0});
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) s[c] += row[c];
  }
  return s;
}

template <typename T>
void check_input(const BasicModel<T>& model, const BasicMatrix<T>& batch) {
  if (batch.cols() != model.config.input_dim) {
    fail(ErrorCode::ShapeMismatch, "batch has " + std::to_string(batch.cols()) + " columns, model expects " +
                                       std::to_string(model.config.input_dim));
  }
}

// BatchNorm in eval mode: y = gamma * (z - moving_mean) * inv_std + beta.
template <typename T>
std::vector<T> eval_inv_std(const BasicLayer<T>& layer, T eps) {
  std::vector<T> inv(layer.out_dim());
  for (std::size_t c = 0; c < inv.size(); ++c) inv[c] = T{1} / std::sqrt(layer.moving_var[c] + eps);
  return inv;
}

template <typename T>
void batch_norm_eval_relu(BasicMatrix<T>& z, const BasicLayer<T>& layer, const std::vector<T>& inv_std) {
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto row = z.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      const T y = layer.gamma[c] * ((row[c] - layer.moving_mean[c]) * inv_std[c]) + layer.beta[c];
      row[c] = y > T{0} ? y : T{0};
    }
  }
}

}  // namespace

MlpConfig MlpConfig::for_classes(std::size_t output_dim) {
  MlpConfig c;
  c.output_dim = output_dim;
  return c;
}

void validate(const MlpConfig& config) {
  if (config.input_dim == 0 || config.output_dim == 0) fail(ErrorCode::InvalidParameter, "zero layer width");
  if (config.hidden_dims.size() != config.dropout_rates.size()) {
    fail(ErrorCode::InvalidParameter, "one dropout rate per hidden layer required");
  }
  for (const auto d : config.hidden_dims) {
    if (d == 0) fail(ErrorCode::InvalidParameter, "zero hidden width");
  }
  for (const auto p : config.dropout_rates) {
    if (!(p >= 0.0f && p < 1.0f)) fail(ErrorCode::InvalidParameter, "dropout rate " + std::to_string(p));
  }
  if (!(config.bn_epsilon > 0.0f) || !(config.bn_momentum >= 0.0f && config.bn_momentum <= 1.0f)) {
    fail(ErrorCode::InvalidParameter, "batch-norm epsilon/momentum out of range");
  }
}

std::size_t param_count(const MlpConfig& config) {
  std::size_t total = 0;
  std::size_t in = config.input_dim;
  for (const auto h : config.hidden_dims) {
    total += in * h + h;  // dense
    total += 2 * h;       // gamma, beta
    in = h;
  }
  total += in * config.output_dim + config.output_dim;
  return total;
}

std::size_t moving_stat_count(const MlpConfig& config) {
  std::size_t total = 0;
  for (const auto h : config.hidden_dims) total += 2 * h;
  return total;
}

template <typename T>
std::vector<std::span<T>> BasicModel<T>::parameters() {
  std::vector<std::span<T>> out;
  for (auto& l : layers) {
    out.emplace_back(l.weights.data());
    out.emplace_back(l.bias);
    if (l.has_batch_norm()) {
      out.emplace_back(l.gamma);
      out.emplace_back(l.beta);
    }
  }
  return out;
}

template <typename T>
std::vector<std::span<const T>> BasicModel<T>::parameters() const {
  std::vector<std::span<const T>> out;
  for (const auto& l : layers) {
    out.emplace_back(l.weights.data());
    out.emplace_back(l.bias);
    if (l.has_batch_norm()) {
      out.emplace_back(l.gamma);
      out.emplace_back(l.beta);
    }
  }
  return out;
}

template <typename T>
std::vector<std::span<const T>> BasicModel<T>::stored_tensors() const {
  std::vector<std::span<const T>> out;
  for (const auto& l : layers) {
    out.emplace_back(l.weights.data());
    out.emplace_back(l.bias);
    if (l.has_batch_norm()) {
      out.emplace_back(l.gamma);
      out.emplace_back(l.beta);
      out.emplace_back(l.moving_mean);
      out.emplace_back(l.moving_var);
    }
  }
  return out;
}

template <typename T>
std::vector<std::span<T>> BasicModel<T>::stored_tensors() {
  std::vector<std::span<T>> out;
  for (auto& l : layers) {
    out.emplace_back(l.weights.data());
    out.emplace_back(l.bias);
    if (l.has_batch_norm()) {
      out.emplace_back(l.gamma);
      out.emplace_back(l.beta);
      out.emplace_back(l.moving_mean);
      out.emplace_back(l.moving_var);
    }
  }
  return out;
}

template <typename T>
void BasicModel<T>::check_shapes() const {
  if (layers.size() != config.hidden_dims.size() + 1) {
    fail(ErrorCode::ShapeMismatch, "model has " + std::to_string(layers.size()) + " layers, config implies " +
                                       std::to_string(config.hidden_dims.size() + 1));
  }
  std::size_t in = config.input_dim;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const bool hidden = i < config.hidden_dims.size();
    const std::size_t out = hidden ? config.hidden_dims[i] : config.output_dim;
    const std::size_t bn = hidden ? out : 0;
    if (l.weights.rows() != in || l.weights.cols() != out || l.bias.size() != out || l.gamma.size() != bn ||
        l.beta.size() != bn || l.moving_mean.size() != bn || l.moving_var.size() != bn) {
      fail(ErrorCode::ShapeMismatch, "layer " + std::to_string(i) + " does not match the configuration");
    }
    in = out;
  }
}

template <typename T>
BasicModel<T> make_model(const MlpConfig& config) {
  validate(config);
  BasicModel<T> model;
  model.config = config;
  std::size_t in = config.input_dim;
  for (std::size_t i = 0; i <= config.hidden_dims.size(); ++i) {
    const bool hidden = i < config.hidden_dims.size();
    const std::size_t out = hidden ? config.hidden_dims[i] : config.output_dim;
    BasicLayer<T> l;
    l.weights = BasicMatrix<T>(in, out);
    l.bias.assign(out, T{0});
    if (hidden) {
      l.gamma.assign(out, T{1});
      l.beta.assign(out, T{0});
      l.moving_mean.assign(out, T{0});
      l.moving_var.assign(out, T{1});
    }
    model.layers.push_back(std::move(l));
    in = out;
  }
  return model;
}

Model init_model(const MlpConfig& config, std::uint64_t seed) {
  Model model = make_model<float>(config);
  Rng rng(seed, rng_stream::kInit);
  for (auto& l : model.layers) {
    const double fan = static_cast<double>(l.in_dim() + l.out_dim());
    const auto limit = static_cast<float>(std::sqrt(6.0 / fan));
    for (auto& w : l.weights.data()) w = rng.uniform(-limit, limit);
  }
  return model;
}

template <typename T>
BasicMatrix<T> forward_train(BasicModel<T>& model, const BasicMatrix<T>& batch, Rng& rng,
                             BasicForwardCache<T>& cache, ForwardOptions options) {
  check_input(model, batch);
  const std::size_t B = batch.rows();
  if (B < 2) fail(ErrorCode::BatchTooSmall, "train-mode batch needs at least 2 rows, got " + std::to_string(B));

  const T eps = static_cast<T>(model.config.bn_epsilon);
  const T momentum = static_cast<T>(model.config.bn_momentum);
  const T inv_b = T{1} / static_cast<T>(B);

  cache.layers.resize(model.layers.size());
  cache.batch = B;
  BasicMatrix<T> x = batch;
  for (std::size_t li = 0; li < model.layers.size(); ++li) {
    auto& layer = model.layers[li];
    auto& lc = cache.layers[li];
    lc.input = std::move(x);
    BasicMatrix<T> z = dense(lc.input, layer);
    if (!layer.has_batch_norm()) {
      lc.normalized = {};
      lc.inv_std.clear();
      lc.bn_output = {};
      lc.dropout_scale = {};
      return z;
    }

    const std::size_t H = layer.out_dim();
    std::vector<T> mean = column_sums(z);
    for (auto& m : mean) m *= inv_b;
    std::vector<T> var(H, T{0});
    for (std::size_t r = 0; r < B; ++r) {
      const auto row = z.row(r);
      for (std::size_t c = 0; c < H; ++c) {
        const T d = row[c] - mean[c];
        var[c] += d * d;
      }
    }
    lc.inv_std.resize(H);
    for (std::size_t c = 0; c < H; ++c) {
      var[c] *= inv_b;
      lc.inv_std[c] = T{1} / std::sqrt(var[c] + eps);
    }

    lc.normalized = BasicMatrix<T>(B, H);
    lc.bn_output = BasicMatrix<T>(B, H);
    BasicMatrix<T> out(B, H);
    const float rate = model.config.dropout_rates[li];
    const bool drop = options.dropout && rate > 0.0f;
    const T keep_scale = drop ? T{1} / (T{1} - static_cast<T>(rate)) : T{1};
    lc.dropout_scale = drop ? BasicMatrix<T>(B, H) : BasicMatrix<T>{};
    const double keep = 1.0 - static_cast<double>(rate);
    for (std::size_t r = 0; r < B; ++r) {
      const auto zr = z.row(r);
      auto xh = lc.normalized.row(r);
      auto y = lc.bn_output.row(r);
      auto o = out.row(r);
      for (std::size_t c = 0; c < H; ++c) {
        xh[c] = (zr[c] - mean[c]) * lc.inv_std[c];
        y[c] = layer.gamma[c] * xh[c] + layer.beta[c];
        o[c] = y[c] > T{0} ? y[c] : T{0};
      }
      if (drop) {
        auto s = lc.dropout_scale.row(r);
        for (std::size_t c = 0; c < H; ++c) {
          s[c] = rng.bernoulli(keep) ? keep_scale : T{0};
          o[c] *= s[c];
        }
      }
    }
    if (options.update_moving_stats) {
      for (std::size_t c = 0; c < H; ++c) {
        layer.moving_mean[c] = momentum * layer.moving_mean[c] + (T{1} - momentum) * mean[c];
        layer.moving_var[c] = momentum * layer.moving_var[c] + (T{1} - momentum) * var[c];
      }
    }
    x = std::move(out);
  }
  fail(ErrorCode::ShapeMismatch, "model has no output layer");
}

template <typename T>
BasicMatrix<T> forward_eval(const BasicModel<T>& model, const BasicMatrix<T>& batch) {
  check_input(model, batch);
  const T eps = static_cast<T>(model.config.bn_epsilon);
  BasicMatrix<T> x = dense(batch, model.layers.front());
  for (std::size_t li = 0; li + 1 < model.layers.size(); ++li) {
    const auto& layer = model.layers[li];
    batch_norm_eval_relu(x, layer, eval_inv_std(layer, eps));
    x = dense(x, model.layers[li + 1]);
  }
  return x;
}

template <typename T>
BasicForwardResult<T> forward(BasicModel<T>& model, const BasicMatrix<T>& batch, Mode mode, Rng& rng) {
  if (mode == Mode::Eval) return {forward_eval(model, batch), std::nullopt};
  BasicForwardCache<T> cache;
  auto logits = forward_train(model, batch, rng, cache);
  return {std::move(logits), std::move(cache)};
}

template <typename T>
BasicMatrix<T> softmax(const BasicMatrix<T>& logits) {
  BasicMatrix<T> p(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto z = logits.row(r);
    auto out = p.row(r);
    const T m = *std::max_element(z.begin(), z.end());
    T sum{0};
    for (std::size_t c = 0; c < z.size(); ++c) {
      out[c] = std::exp(z[c] - m);
      sum += out[c];
    }
    for (auto& v : out) v /= sum;
  }
  return p;
}

template <typename T>
BasicLossResult<T> loss_softmax_xent(const BasicMatrix<T>& logits, std::span<const std::uint8_t> labels) {
  const std::size_t B = logits.rows();
  const std::size_t C = logits.cols();
  if (labels.size() != B) {
    fail(ErrorCode::ShapeMismatch, std::to_string(labels.size()) + " labels for " + std::to_string(B) + " rows");
  }
  if (B == 0) fail(ErrorCode::EmptyInput, "loss over an empty batch");
  BasicLossResult<T> result{T{0}, BasicMatrix<T>(B, C)};
  const T inv_b = T{1} / static_cast<T>(B);
  double total = 0.0;
  for (std::size_t r = 0; r < B; ++r) {
    if (labels[r] >= C) {
      fail(ErrorCode::LabelOutOfRange, "label " + std::to_string(labels[r]) + " with " + std::to_string(C) +
                                           " classes");
    }
    const auto z = logits.row(r);
    auto g = result.dlogits.row(r);
    const T m = *std::max_element(z.begin(), z.end());
    T sum{0};
    for (std::size_t c = 0; c < C; ++c) {
      g[c] = std::exp(z[c] - m);
      sum += g[c];
    }
    const T log_sum = std::log(sum);
    total -= static_cast<double>(z[labels[r]] - m - log_sum);
    for (std::size_t c = 0; c < C; ++c) g[c] = (g[c] / sum - (c == labels[r] ? T{1} : T{0})) * inv_b;
  }
  result.loss = static_cast<T>(total / static_cast<double>(B));
  return result;
}

template <typename T>
std::vector<std::span<const T>> BasicGradients<T>::tensors() const {
  std::vector<std::span<const T>> out;
  for (const auto& l : layers) {
    out.emplace_back(l.weights.data());
    out.emplace_back(l.bias);
    if (!l.gamma.empty()) {
      out.emplace_back(l.gamma);
      out.emplace_back(l.beta);
    }
  }
  return out;
}

template <typename T>
BasicGradients<T> backward(const BasicModel<T>& model, const BasicForwardCache<T>& cache,
                           const BasicMatrix<T>& dlogits) {
  const std::size_t L = model.layers.size();
  if (cache.layers.size() != L || dlogits.rows() != cache.batch || dlogits.cols() != model.config.output_dim) {
    fail(ErrorCode::StaleCache, "forward cache does not match the model or the loss gradient");
  }
  for (std::size_t li = 0; li < L; ++li) {
    const auto& lc = cache.layers[li];
    const auto& layer = model.layers[li];
    const bool bn_ok = !layer.has_batch_norm() ||
                       (lc.normalized.rows() == cache.batch && lc.normalized.cols() == layer.out_dim());
    if (lc.input.rows() != cache.batch || lc.input.cols() != layer.in_dim() || !bn_ok) {
      fail(ErrorCode::StaleCache, "layer " + std::to_string(li) + " cache has the wrong shape");
    }
  }

  const std::size_t B = cache.batch;
  const T b = static_cast<T>(B);
  BasicGradients<T> grads;
  grads.layers.resize(L);

  BasicMatrix<T> dz = dlogits;  // gradient w.r.t. the current layer's pre-activation
  for (std::size_t li = L; li-- > 0;) {
    const auto& layer = model.layers[li];
    const auto& lc = cache.layers[li];
    auto& g = grads.layers[li];

    if (layer.has_batch_norm()) {
      // dz currently holds d(layer output after dropout); walk back to the dense output.
      const std::size_t H = layer.out_dim();
      BasicMatrix<T> dy(B, H);
      const bool drop = !lc.dropout_scale.empty();
      for (std::size_t r = 0; r < B; ++r) {
        const auto up = dz.row(r);
        const auto y = lc.bn_output.row(r);
        auto d = dy.row(r);
        for (std::size_t c = 0; c < H; ++c) {
          T v = up[c];
          if (drop) v *= lc.dropout_scale(r, c);
          d[c] = y[c] > T{0} ? v : T{0};
        }
      }
      g.gamma.assign(H, T{0});
      g.beta.assign(H, T{0});
      std::vector<T> sum_dxhat(H, T{0});
      std::vector<T> sum_dxhat_xhat(H, T{0});
      for (std::size_t r = 0; r < B; ++r) {
        const auto d = dy.row(r);
        const auto xh = lc.normalized.row(r);
        for (std::size_t c = 0; c < H; ++c) {
          g.gamma[c] += d[c] * xh[c];
          g.beta[c] += d[c];
          const T dxh = d[c] * layer.gamma[c];
          sum_dxhat[c] += dxh;
          sum_dxhat_xhat[c] += dxh * xh[c];
        }
      }
      BasicMatrix<T> dpre(B, H);
      for (std::size_t r = 0; r < B; ++r) {
        const auto d = dy.row(r);
        const auto xh = lc.normalized.row(r);
        auto out = dpre.row(r);
        for (std::size_t c = 0; c < H; ++c) {
          const T dxh = d[c] * layer.gamma[c];
          out[c] = (lc.inv_std[c] / b) * (b * dxh - sum_dxhat[c] - xh[c] * sum_dxhat_xhat[c]);
        }
      }
      dz = std::move(dpre);
    }

    g.weights = BasicMatrix<T>(layer.in_dim(), layer.out_dim());
    gemm(Transpose::Yes, Transpose::No, T{1}, lc.input, dz, T{0}, g.weights);
    g.bias = column_sums(dz);
    if (li > 0) {
      BasicMatrix<T> dx(B, layer.in_dim());
      gemm(Transpose::No, Transpose::Yes, T{1}, dz, layer.weights, T{0}, dx);
      dz = std::move(dx);
    }
  }
  return grads;
}

template <typename T>
BasicMatrix<T> input_gradient_eval(const BasicModel<T>& model, const BasicMatrix<T>& input,
                                   const BasicMatrix<T>& dlogits) {
  check_input(model, input);
  if (dlogits.rows() != input.rows() || dlogits.cols() != model.config.output_dim) {
    fail(ErrorCode::ShapeMismatch, "logit gradient shape does not match the input batch");
  }
  const T eps = static_cast<T>(model.config.bn_epsilon);
  const std::size_t hidden = model.layers.size() - 1;

  // Forward, keeping the pre-ReLU BatchNorm outputs for the ReLU mask.
  std::vector<BasicMatrix<T>> pre_relu(hidden);
  std::vector<std::vector<T>> inv_std(hidden);
  BasicMatrix<T> x = input;
  for (std::size_t li = 0; li < hidden; ++li) {
    const auto& layer = model.layers[li];
    BasicMatrix<T> z = dense(x, layer);
    inv_std[li] = eval_inv_std(layer, eps);
    for (std::size_t r = 0; r < z.rows(); ++r) {
      auto row = z.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) {
        row[c] = layer.gamma[c] * ((row[c] - layer.moving_mean[c]) * inv_std[li][c]) + layer.beta[c];
      }
    }
    pre_relu[li] = z;
    for (auto& v : z.data()) v = v > T{0} ? v : T{0};
    x = std::move(z);
  }

  BasicMatrix<T> grad = dlogits;
  for (std::size_t li = model.layers.size(); li-- > 0;) {
    const auto& layer = model.layers[li];
    if (li < hidden) {
      for (std::size_t r = 0; r < grad.rows(); ++r) {
        auto g = grad.row(r);
        const auto y = pre_relu[li].row(r);
        for (std::size_t c = 0; c < g.size(); ++c) {
          g[c] = y[c] > T{0} ? g[c] * layer.gamma[c] * inv_std[li][c] : T{0};
        }
      }
    }
    BasicMatrix<T> dx(grad.rows(), layer.in_dim());
    gemm(Transpose::No, Transpose::Yes, T{1}, grad, layer.weights, T{0}, dx);
    grad = std::move(dx);
  }
  return grad;
}

#define EDGEMLP_INSTANTIATE(T)                                                                                  \
  template struct BasicModel<T>;                                                                                \
  template struct BasicGradients<T>;                                                                            \
  template BasicModel<T> make_model<T>(const MlpConfig&);                                                       \
  template BasicMatrix<T> forward_train<T>(BasicModel<T>&, const BasicMatrix<T>&, Rng&, BasicForwardCache<T>&, \
                                           ForwardOptions);                                                     \
  template BasicMatrix<T> forward_eval<T>(const BasicModel<T>&, const BasicMatrix<T>&);                         \
  template BasicForwardResult<T> forward<T>(BasicModel<T>&, const BasicMatrix<T>&, Mode, Rng&);                 \
  template BasicMatrix<T> softmax<T>(const BasicMatrix<T>&);                                                    \
  template BasicLossResult<T> loss_softmax_xent<T>(const BasicMatrix<T>&, std::span<const std::uint8_t>);       \
  template BasicGradients<T> backward<T>(const BasicModel<T>&, const BasicForwardCache<T>&,                     \
                                         const BasicMatrix<T>&);                                                \
  template BasicMatrix<T> input_gradient_eval<T>(const BasicModel<T>&, const BasicMatrix<T>&,                   \
                                                 const BasicMatrix<T>&);

EDGEMLP_INSTANTIATE(float)
EDGEMLP_INSTANTIATE(double)

#undef EDGEMLP_INSTANTIATE

}  // namespace edgemlp
