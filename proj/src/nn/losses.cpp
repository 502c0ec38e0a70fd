#include "staykit/nn/losses.hpp"

#include <algorithm>
#include <cmath>

namespace staykit::nn {

double clamp_prob(double p) { return std::clamp(p, kProbEps, 1.0 - kProbEps); }

double bce(double c_hat, double c) {
  const double p = clamp_prob(c_hat);
  return -c * std::log(p) - (1.0 - c) * std::log(1.0 - p);
}

double weighted_bce(double c_hat, double c, double c_bar) {
  if (!(c_bar > 0.0 && c_bar < 1.0))
    throw input_error("weighted_bce: c_bar must lie strictly inside (0,1)");
  const double factor = c / c_bar + (1.0 - c) / (1.0 - c_bar);
  return factor * bce(c_hat, c);
}

double weighted_ce(const std::vector<double>& probs_row, std::size_t true_class,
                   const std::vector<double>& class_means) {
  const std::size_t m = probs_row.size();
  if (class_means.size() != m) throw input_error("weighted_ce: class mean count mismatch");
  if (true_class >= m) throw input_error("weighted_ce: class index out of range");
  if (!(class_means[true_class] > 0.0))
    throw input_error("weighted_ce: class means must be strictly positive");
  const double p = clamp_prob(probs_row[true_class]);
  return -std::log(p) / (static_cast<double>(m) * class_means[true_class]);
}

double weighted_label_mean(const std::vector<double>& labels,
                           const std::vector<double>& weights) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    num += labels[i] * w;
    den += w;
  }
  if (den <= 0.0) throw input_error("weighted_label_mean: zero total weight");
  return num / den;
}

double supervised_loss(const BinaryBatch& batch, double c_bar) {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t w = 0; w < batch.probs.size(); ++w)
    for (std::size_t i = 0; i < batch.probs[w].size(); ++i) {
      if (!batch.mask[w][i]) continue;
      total += weighted_bce(batch.probs[w][i], batch.labels[w][i], c_bar);
      ++count;
    }
  if (count == 0) throw input_error("supervised_loss: all points masked out");
  return total / static_cast<double>(count);
}

double weak_loss(const BinaryBatch& batch, double c_bar_weak) {
  double total = 0.0, weight_mass = 0.0;
  std::size_t n = 0, windows = batch.probs.size();
  for (std::size_t w = 0; w < windows; ++w) {
    n = std::max(n, batch.probs[w].size());
    for (std::size_t i = 0; i < batch.probs[w].size(); ++i) {
      if (!batch.mask[w][i]) continue;
      const double cw = batch.weights[w][i];
      weight_mass += cw;
      if (cw == 0.0) continue;  // zero-confidence points contribute exactly 0
      total += cw * weighted_bce(batch.probs[w][i], batch.labels[w][i], c_bar_weak);
    }
  }
  if (weight_mass <= 0.0) throw input_error("weak_loss: total confidence weight is zero");
  return total / (static_cast<double>(windows) * static_cast<double>(n));
}

double mse(const std::vector<double>& pred, const std::vector<double>& target) {
  if (pred.size() != target.size()) throw input_error("mse: length mismatch");
  if (pred.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    acc += (pred[i] - target[i]) * (pred[i] - target[i]);
  return acc / static_cast<double>(pred.size());
}

double ssl_velocity_loss(const SslBatch& batch) { return mse(batch.v_hat, batch.v); }

double ssl_angle_loss(const SslBatch& batch) {
  return mse(batch.sin_hat, batch.sin_t) + mse(batch.cos_hat, batch.cos_t);
}

double multitask_loss(double downstream, double l_vel, double l_ang, double lambda_vel,
                      double lambda_ang) {
  if (lambda_vel < 0.0 || lambda_ang < 0.0)
    throw input_error("multitask_loss: lambdas must be non-negative");
  return downstream + lambda_vel * l_vel + lambda_ang * l_ang;
}

Var weighted_bce_sum(Tape& tape, const Var& probs, const std::vector<double>& targets,
                     const std::vector<double>& point_weights, double c_bar) {
  if (targets.size() != probs->size() || point_weights.size() != probs->size())
    throw input_error("weighted_bce_sum: channel length mismatch");
  if (!(c_bar > 0.0 && c_bar < 1.0))
    throw input_error("weighted_bce_sum: c_bar must lie strictly inside (0,1)");
  const bool rg = tape.grad_enabled() && probs->requires_grad;
  Var out = make_tensor(1, 1, rg);
  double acc = 0.0;
  for (std::size_t i = 0; i < probs->size(); ++i) {
    if (point_weights[i] == 0.0) continue;
    acc += point_weights[i] * weighted_bce(probs->v[i], targets[i], c_bar);
  }
  out->v[0] = acc;
  if (rg) {
    auto t = targets;
    auto w = point_weights;
    tape.record([probs, out, t = std::move(t), w = std::move(w), c_bar] {
      if (!probs->requires_grad) return;
      const double go = out->g[0];
      for (std::size_t i = 0; i < probs->size(); ++i) {
        if (w[i] == 0.0) continue;
        const double factor = t[i] / c_bar + (1.0 - t[i]) / (1.0 - c_bar);
        const double p = clamp_prob(probs->v[i]);
        // d bce / d p, evaluated at the clamped probability
        const double dbce = (p - t[i]) / (p * (1.0 - p));
        probs->g[i] += go * w[i] * factor * dbce;
      }
    });
  }
  return out;
}

Var weighted_ce_sum(Tape& tape, const Var& probs, const std::vector<int>& labels,
                    const std::vector<double>& point_weights,
                    const std::vector<double>& class_means) {
  if (labels.size() != probs->rows || point_weights.size() != probs->rows)
    throw input_error("weighted_ce_sum: channel length mismatch");
  if (class_means.size() != probs->cols)
    throw input_error("weighted_ce_sum: class mean count mismatch");
  for (double m : class_means)
    if (!(m > 0.0)) throw input_error("weighted_ce_sum: class means must be positive");
  const bool rg = tape.grad_enabled() && probs->requires_grad;
  Var out = make_tensor(1, 1, rg);
  const double m_count = static_cast<double>(probs->cols);
  double acc = 0.0;
  for (std::size_t r = 0; r < probs->rows; ++r) {
    if (labels[r] < 0 || point_weights[r] == 0.0) continue;
    const double p = clamp_prob(probs->at(r, static_cast<std::size_t>(labels[r])));
    acc += point_weights[r] * (-std::log(p) / (m_count * class_means[labels[r]]));
  }
  out->v[0] = acc;
  if (rg) {
    auto l = labels;
    auto w = point_weights;
    auto cm = class_means;
    tape.record([probs, out, l = std::move(l), w = std::move(w), cm = std::move(cm), m_count] {
      if (!probs->requires_grad) return;
      const double go = out->g[0];
      for (std::size_t r = 0; r < probs->rows; ++r) {
        if (l[r] < 0 || w[r] == 0.0) continue;
        const std::size_t cls = static_cast<std::size_t>(l[r]);
        const double p = clamp_prob(probs->at(r, cls));
        probs->g[r * probs->cols + cls] += go * w[r] * (-1.0 / (p * m_count * cm[cls]));
      }
    });
  }
  return out;
}

}  // namespace staykit::nn
