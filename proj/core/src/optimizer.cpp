#include "edgemlp/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "edgemlp/error.hpp"

namespace edgemlp {

namespace {

void check_epoch(int last, int epoch) {
  if (epoch != last + 1) {
    fail(ErrorCode::OutOfOrderEpoch, "expected epoch " + std::to_string(last + 1) + ", got " + std::to_string(epoch));
  }
}

}  // namespace

void adam_step(std::span<const std::span<float>> params, std::span<const std::span<const float>> grads,
               AdamState& state) {
  if (params.size() != grads.size()) {
    fail(ErrorCode::ShapeMismatch, std::to_string(grads.size()) + " gradients for " +
                                       std::to_string(params.size()) + " parameter tensors");
  }
  if (state.m.empty() && state.step == 0) {
    for (const auto& p : params) {
      state.m.emplace_back(p.size(), 0.0f);
      state.v.emplace_back(p.size(), 0.0f);
    }
  }
  if (state.m.size() != params.size()) fail(ErrorCode::ShapeMismatch, "optimizer state tracks other tensors");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size() != grads[i].size() || state.m[i].size() != params[i].size()) {
      fail(ErrorCode::ShapeMismatch, "tensor " + std::to_string(i) + " changed shape");
    }
  }

  state.step += 1;
  const auto t = static_cast<double>(state.step);
  const auto correction1 = static_cast<float>(1.0 - std::pow(static_cast<double>(state.beta1), t));
  const auto correction2 = static_cast<float>(1.0 - std::pow(static_cast<double>(state.beta2), t));
  const float b1 = state.beta1;
  const float b2 = state.beta2;
  const float lr = state.lr;
  const float eps = state.epsilon;

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i];
    const auto g = grads[i];
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = b1 * m[k] + (1.0f - b1) * g[k];
      v[k] = b2 * v[k] + (1.0f - b2) * (g[k] * g[k]);
      const float m_hat = m[k] / correction1;
      const float v_hat = v[k] / correction2;
      p[k] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

Decision EarlyStopping::update(int epoch, double val_accuracy, const Model& weights) {
  check_epoch(last_epoch_, epoch);
  last_epoch_ = epoch;
  if (val_accuracy > best_) {
    best_ = val_accuracy;
    best_epoch_ = epoch;
    best_weights_ = weights;
    wait_ = 0;
    return Decision::Continue;
  }
  ++wait_;
  return wait_ >= patience_ ? Decision::Stop : Decision::Continue;
}

float PlateauScheduler::update(int epoch, double val_loss, float current_lr) {
  check_epoch(last_epoch_, epoch);
  last_epoch_ = epoch;
  const bool improved = val_loss < best_ - options_.min_delta;
  best_ = std::min(best_, val_loss);
  if (improved) {
    wait_ = 0;
    return current_lr;
  }
  if (++wait_ < options_.patience) return current_lr;
  wait_ = 0;
  return std::max(current_lr * options_.factor, options_.min_lr);
}

}  // namespace edgemlp
