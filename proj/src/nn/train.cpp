#include "staykit/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "staykit/nn/losses.hpp"

namespace staykit::nn {

AdamOptimizer::AdamOptimizer(double lr, double weight_decay, double beta1, double beta2)
    : lr_(lr), wd_(weight_decay), beta1_(beta1), beta2_(beta2) {}

void AdamOptimizer::step(const std::vector<std::pair<std::string, Var>>& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (const auto& [name, p] : params) {
    State& s = state_[name];
    if (s.m.size() != p->size()) {
      s.m.assign(p->size(), 0.0);
      s.v.assign(p->size(), 0.0);
    }
    for (std::size_t i = 0; i < p->size(); ++i) {
      const double g = p->g[i];
      s.m[i] = beta1_ * s.m[i] + (1.0 - beta1_) * g;
      s.v[i] = beta2_ * s.v[i] + (1.0 - beta2_) * g * g;
      const double mhat = s.m[i] / bc1;
      const double vhat = s.v[i] / bc2;
      // decoupled weight decay
      p->v[i] -= lr_ * (mhat / (std::sqrt(vhat) + eps_) + wd_ * p->v[i]);
    }
  }
}

namespace {

struct WindowView {
  traj::SequenceWindow window;  // rotated copy when augmentation is on
  const TrainWindow* src = nullptr;
  double ssl_sin = 0.0, ssl_cos = 1.0;
};

struct LossSums {
  double downstream = 0.0;  // weighted bce or ce sum, unscaled
  double vel = 0.0;         // squared velocity residuals
  double ang = 0.0;         // squared sin+cos residuals
  std::size_t ssl_count = 0;
  std::size_t point_count = 0;  // masked-in (supervised) / labeled (modes)
};

Var window_input(const traj::SequenceWindow& w) {
  Var x = make_tensor(w.size(), 4, false);
  for (std::size_t i = 0; i < w.size(); ++i) {
    x->v[i * 4 + 0] = w.rows[i].x;
    x->v[i * 4 + 1] = w.rows[i].y;
    x->v[i * 4 + 2] = w.rows[i].dt;
    x->v[i * 4 + 3] = w.rows[i].v;
  }
  return x;
}

std::vector<double> mask_of(const traj::SequenceWindow& w) {
  std::vector<double> m(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) m[i] = w.mask[i] ? 1.0 : 0.0;
  return m;
}

// Forward + loss for one window; scales are baked in so that summing window
// losses yields the batch loss. Records raw sums for the epoch curve.
Var window_loss(Tape& tape, const StayModel& model, const WindowView& view,
                const TrainConfig& cfg, double downstream_scale, double ssl_scale,
                Rng& drop_rng, LossSums* sums) {
  const traj::SequenceWindow& w = view.window;
  const TrainWindow& tw = *view.src;
  const std::vector<double> mask = mask_of(w);

  Var emb = model.encoder->forward(tape, window_input(w), mask, true, drop_rng);

  Var loss;
  if (cfg.loss == LossKind::modes) {
    Var probs = model.mode_head->forward(tape, emb);
    std::vector<double> pw(w.size(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i)
      if (w.mask[i] && i < tw.mode_labels.size() && tw.mode_labels[i] >= 0) {
        pw[i] = 1.0;
        if (sums) ++sums->point_count;
      }
    Var ce = weighted_ce_sum(tape, probs, tw.mode_labels, pw, model.label_means.class_means);
    if (sums) sums->downstream += ce->v[0];
    loss = scale(tape, ce, downstream_scale);
  } else {
    Var probs = model.stay_head->forward(tape, emb);
    std::vector<double> pw(w.size(), 0.0);
    const bool weak = cfg.loss == LossKind::weak;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!w.mask[i]) continue;
      // The weight channel marks label availability in supervised mode and
      // carries the heuristic confidence in weak mode.
      pw[i] = weak ? w.weights[i] : (w.weights[i] > 0.0 ? 1.0 : 0.0);
      if (sums && !weak && pw[i] > 0.0) ++sums->point_count;
    }
    const double c_bar = weak ? model.label_means.c_bar_weak : model.label_means.c_bar;
    Var bce = weighted_bce_sum(tape, probs, w.labels, pw, c_bar);
    if (sums) sums->downstream += bce->v[0];
    loss = scale(tape, bce, downstream_scale);
  }

  if (tw.has_ssl && (cfg.lambda_vel > 0.0 || cfg.lambda_ang > 0.0)) {
    auto [v_hat, ang_hat] = model.ssl_heads->forward(tape, emb, mask);
    Var v_err = squared_error_sum(tape, v_hat, {tw.ssl_v});
    Var a_err = squared_error_sum(tape, ang_hat, {view.ssl_sin, view.ssl_cos});
    if (sums) {
      sums->vel += v_err->v[0];
      sums->ang += a_err->v[0];
      ++sums->ssl_count;
    }
    loss = add_scalar(tape, loss, scale(tape, v_err, cfg.lambda_vel * ssl_scale));
    loss = add_scalar(tape, loss, scale(tape, a_err, cfg.lambda_ang * ssl_scale));
  } else if (sums && tw.has_ssl) {
    ++sums->ssl_count;
  }

  return loss;
}

std::vector<std::pair<std::string, Var>> trainable_params(StayModel& model,
                                                          const TrainConfig& cfg) {
  std::vector<std::pair<std::string, Var>> out;
  for (const auto& [name, p] : model.params.all()) {
    if (cfg.freeze_encoder && name.rfind("encoder.", 0) == 0) continue;
    out.emplace_back(name, p);
  }
  if (out.empty()) throw config_error("train: configuration freezes every parameter");
  return out;
}

}  // namespace

TrainResult train(StayModel& model, const std::vector<TrainWindow>& data,
                  const TrainConfig& cfg) {
  if (data.empty()) throw input_error("train: empty training set");
  if (cfg.batch_size == 0) throw config_error("train: batch size must be positive");
  if (cfg.loss == LossKind::modes) {
    if (!model.mode_head) throw config_error("train: modes loss needs a mode decoder");
    if (model.label_means.class_means.size() != model.mode_head->num_modes)
      throw config_error("train: class means missing for the mode decoder");
    for (const TrainWindow& tw : data)
      if (tw.mode_labels.size() != tw.window.size())
        throw input_error("train: mode label channel misaligned with window");
  } else if (!model.stay_head) {
    throw config_error("train: stay loss needs a stay decoder");
  }

  auto trainables = trainable_params(model, cfg);
  // Freeze by disabling gradient tracking; restored before returning.
  std::vector<Var> frozen;
  if (cfg.freeze_encoder)
    for (const auto& [name, p] : model.params.all())
      if (name.rfind("encoder.", 0) == 0) {
        p->requires_grad = false;
        frozen.push_back(p);
      }

  const std::size_t threads = std::max<std::size_t>(1, cfg.threads);
  std::vector<StayModel> replicas;
  if (threads > 1)
    for (std::size_t t = 0; t + 1 < threads; ++t) {
      replicas.push_back(model.clone());
      if (cfg.freeze_encoder)
        for (const auto& [name, p] : replicas.back().params.all())
          if (name.rfind("encoder.", 0) == 0) p->requires_grad = false;
    }

  AdamOptimizer adam(cfg.lr, cfg.weight_decay, cfg.beta1, cfg.beta2);
  Rng shuffle_rng(mix_seed(cfg.seed, fnv1a64("epoch-shuffle")));

  TrainResult result;
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const std::size_t n = data[0].window.size();

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order, shuffle_rng);

    // Per-epoch augmentation: a fresh rotation per window, derived from the
    // global seed, window identity, and epoch. Reruns with the same seed and
    // thread count are byte-identical; the thread count only affects gradient
    // summation order (last-ulp effects).
    std::vector<WindowView> views(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      views[i].src = &data[i];
      views[i].window = data[i].window;
      views[i].ssl_sin = data[i].ssl_sin;
      views[i].ssl_cos = data[i].ssl_cos;
      if (cfg.augment_rotate) {
        const std::uint64_t rot_seed = mix_seed(
            cfg.seed, mix_seed(fnv1a64(data[i].window.origin.user_id) +
                                   data[i].window.origin.first_point,
                               epoch));
        const double angle = traj::random_rotate(views[i].window, rot_seed);
        const double s = std::sin(angle), c = std::cos(angle);
        views[i].ssl_sin = data[i].ssl_sin * c + data[i].ssl_cos * s;
        views[i].ssl_cos = data[i].ssl_cos * c - data[i].ssl_sin * s;
      }
    }

    LossSums epoch_sums;
    for (std::size_t batch_start = 0; batch_start < order.size();
         batch_start += cfg.batch_size) {
      const std::size_t batch_end = std::min(order.size(), batch_start + cfg.batch_size);
      const std::size_t batch_count = batch_end - batch_start;

      // Batch-level denominators known up front.
      std::size_t ssl_in_batch = 0;
      std::size_t points_in_batch = 0;
      for (std::size_t bi = batch_start; bi < batch_end; ++bi) {
        const TrainWindow& tw = data[order[bi]];
        if (tw.has_ssl) ++ssl_in_batch;
        if (cfg.loss == LossKind::supervised) {
          for (std::size_t i = 0; i < tw.window.size(); ++i)
            if (tw.window.mask[i] && tw.window.weights[i] > 0.0) ++points_in_batch;
        } else if (cfg.loss == LossKind::modes) {
          for (std::size_t i = 0; i < tw.window.size(); ++i)
            if (tw.window.mask[i] && i < tw.mode_labels.size() && tw.mode_labels[i] >= 0)
              ++points_in_batch;
        }
      }
      double downstream_scale;
      if (cfg.loss == LossKind::weak)
        downstream_scale = 1.0 / (static_cast<double>(batch_count) * static_cast<double>(n));
      else
        downstream_scale = points_in_batch > 0 ? 1.0 / static_cast<double>(points_in_batch) : 0.0;
      const double ssl_scale =
          ssl_in_batch > 0 ? 1.0 / static_cast<double>(ssl_in_batch) : 0.0;

      model.params.zero_grads();
      for (auto& replica : replicas) {
        replica.params.zero_grads();
        replica.params.copy_values_from(model.params);
      }

      double batch_loss = 0.0;
      std::vector<LossSums> chunk_sums(threads);
      std::vector<double> chunk_loss(threads, 0.0);

      const std::size_t chunk = (batch_count + threads - 1) / threads;
      parallel_for(threads, threads, [&](std::size_t t) {
        const std::size_t lo = batch_start + t * chunk;
        const std::size_t hi = std::min(batch_end, lo + chunk);
        if (lo >= hi) return;
        StayModel& worker = t == 0 ? model : replicas[t - 1];
        for (std::size_t bi = lo; bi < hi; ++bi) {
          const std::size_t idx = order[bi];
          Rng drop_rng(mix_seed(cfg.seed, mix_seed(idx, 1000003 + epoch)));
          Tape tape;
          Var loss = window_loss(tape, worker, views[idx], cfg, downstream_scale, ssl_scale,
                                 drop_rng, &chunk_sums[t]);
          chunk_loss[t] += loss->v[0];
          tape.backward(loss);
        }
      });

      for (std::size_t t = 0; t < threads; ++t) {
        batch_loss += chunk_loss[t];
        epoch_sums.downstream += chunk_sums[t].downstream;
        epoch_sums.vel += chunk_sums[t].vel;
        epoch_sums.ang += chunk_sums[t].ang;
        epoch_sums.ssl_count += chunk_sums[t].ssl_count;
        epoch_sums.point_count += chunk_sums[t].point_count;
      }
      if (!std::isfinite(batch_loss))
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                 "; lower the learning rate or inspect the inputs");

      // Merge replica gradients in replica order, then update.
      for (std::size_t t = 1; t < threads; ++t) {
        const auto& src = replicas[t - 1].params.all();
        for (auto& [name, p] : model.params.all()) {
          if (!p->requires_grad) continue;
          const auto it = src.find(name);
          for (std::size_t i = 0; i < p->size(); ++i) p->g[i] += it->second->g[i];
        }
      }
      adam.step(trainables);
    }

    // Dataset-level loss for the curve, normalized as the formulas define.
    double downstream;
    if (cfg.loss == LossKind::weak)
      downstream = epoch_sums.downstream /
                   (static_cast<double>(data.size()) * static_cast<double>(n));
    else
      downstream = epoch_sums.point_count > 0
                       ? epoch_sums.downstream / static_cast<double>(epoch_sums.point_count)
                       : 0.0;
    double total = downstream;
    if (epoch_sums.ssl_count > 0) {
      total += cfg.lambda_vel * epoch_sums.vel / static_cast<double>(epoch_sums.ssl_count);
      total += cfg.lambda_ang * epoch_sums.ang / static_cast<double>(epoch_sums.ssl_count);
    }
    result.curve.push_back({epoch, total});
    if (cfg.verbose)
      std::cerr << "epoch " << epoch << " loss " << total << "\n";
  }

  for (const Var& p : frozen) p->requires_grad = true;
  return result;
}

}  // namespace staykit::nn
