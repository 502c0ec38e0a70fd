#pragma once

#include <optional>
#include <string>
#include <vector>

#include "staykit/nn/transformer.hpp"
#include "staykit/traj.hpp"

namespace staykit::nn {

struct SslTargets {
  double v_next = 0.0;      // m/s
  double sin_next = 0.0;    // bearing sin/cos of the step to point n+1
  double cos_next = 1.0;
};

// Velocity and bearing of the step from `last` to `next`. Throws when the
// timestamps coincide.
SslTargets ssl_targets(const traj::LocationPoint& next, const traj::LocationPoint& last);

struct LabelMeans {
  double c_bar = 0.5;
  double c_bar_weak = 0.5;
  std::vector<double> class_means;  // TMD only; size M, strictly positive
};

// Encoder plus decoders plus everything a checkpoint needs to be replayed:
// the config, standardization stats, and training-set label means.
struct StayModel {
  EncoderConfig config;
  std::size_t num_modes = 0;  // 0 = binary stay decoder, >0 = TMD decoder
  ParamStore params;
  std::optional<TransformerEncoder> encoder;
  std::optional<StayHead> stay_head;
  std::optional<ModeHead> mode_head;
  std::optional<SslHeads> ssl_heads;
  traj::StandardizationStats stats;
  LabelMeans label_means;

  static StayModel create(const EncoderConfig& config, std::size_t num_modes = 0);

  // Deep copy with independent parameter tensors.
  StayModel clone() const;

  // Eval-mode stay probabilities for one window.
  std::vector<double> predict_stay(const traj::SequenceWindow& window) const;
  // Eval-mode [n x M] mode probabilities.
  std::vector<std::vector<double>> predict_modes(const traj::SequenceWindow& window) const;

  void save(const std::string& path) const;
  static StayModel load(const std::string& path);

  std::string checkpoint_json() const;
  static StayModel from_checkpoint_json(const std::string& text);
};

}  // namespace staykit::nn
