#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "staykit/nn/model.hpp"

namespace staykit::nn {

enum class LossKind { supervised, weak, modes };

// One training example: a standardized window plus its targets. `window`
// carries the label channel (ground truth or c_weak) and the weight channel
// (1/0 mask for supervised, w_weak for weak training).
struct TrainWindow {
  traj::SequenceWindow window;
  bool has_ssl = false;
  double ssl_v = 0.0;    // standardized next-step velocity
  double ssl_sin = 0.0;  // next-step bearing in the window frame
  double ssl_cos = 1.0;
  std::vector<int> mode_labels;  // per position, -1 = unlabeled (modes loss only)
};

struct TrainConfig {
  std::size_t epochs = 30;
  double lr = 1e-4;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  std::size_t batch_size = 64;
  std::uint64_t seed = 42;
  double lambda_vel = 0.1;
  double lambda_ang = 0.1;
  bool freeze_encoder = false;  // fine-tuning mode: decoder-only updates
  bool augment_rotate = true;   // fresh uniform rotation per window per epoch
  std::size_t threads = 1;
  LossKind loss = LossKind::supervised;
  bool verbose = false;
};

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> curve;
};

// Adam with decoupled weight decay. Update order follows the sorted
// parameter names, so steps are deterministic.
class AdamOptimizer {
 public:
  AdamOptimizer(double lr, double weight_decay, double beta1 = 0.9, double beta2 = 0.999);

  void step(const std::vector<std::pair<std::string, Var>>& params);

 private:
  struct State {
    std::vector<double> m, v;
  };
  double lr_, wd_, beta1_, beta2_;
  double eps_ = 1e-8;
  std::size_t t_ = 0;
  std::map<std::string, State> state_;
};

// Minimizes the selected loss over `data`. The model's label_means must be
// populated before calling (they parameterize the class weighting). Throws
// on NaN loss and on configurations that freeze every parameter.
TrainResult train(StayModel& model, const std::vector<TrainWindow>& data,
                  const TrainConfig& cfg);

}  // namespace staykit::nn
