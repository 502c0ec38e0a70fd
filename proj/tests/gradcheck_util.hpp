#pragma once

// Central finite-difference gradient checker. The loss builder is invoked
// with a fresh tape for every evaluation; parameter tensors are perturbed in
// place.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "staykit/nn/autograd.hpp"

namespace testutil {

struct GradCheck {
  double max_rel_err = 0.0;
  std::size_t checked = 0;
  std::string worst;  // "param[idx] analytic=... fd=..."
};

inline GradCheck gradcheck(const std::vector<std::pair<std::string, staykit::nn::Var>>& params,
                           const std::function<staykit::nn::Var(staykit::nn::Tape&)>& build,
                           double step = 1e-4) {
  using staykit::nn::Tape;
  using staykit::nn::Var;

  for (const auto& [name, p] : params) p->zero_grad();
  Tape tape;
  Var loss = build(tape);
  tape.backward(loss);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& [name, p] : params) analytic.push_back(p->g);

  auto eval = [&]() {
    Tape t;
    t.set_grad_enabled(false);
    return build(t)->v[0];
  };

  GradCheck result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Var p = params[pi].second;
    for (std::size_t i = 0; i < p->size(); ++i) {
      const double keep = p->v[i];
      p->v[i] = keep + step;
      const double up = eval();
      p->v[i] = keep - step;
      const double down = eval();
      p->v[i] = keep;
      const double fd = (up - down) / (2.0 * step);
      const double a = analytic[pi][i];
      const double denom = std::max(std::abs(a), std::abs(fd));
      double err;
      if (denom < 1e-6)
        err = std::abs(a - fd) < 1e-6 ? 0.0 : 1.0;  // both ~0 or broken
      else
        err = std::abs(a - fd) / denom;
      ++result.checked;
      if (err > result.max_rel_err) {
        result.max_rel_err = err;
        result.worst = params[pi].first + "[" + std::to_string(i) + "] analytic=" +
                       std::to_string(a) + " fd=" + std::to_string(fd);
      }
    }
  }
  return result;
}

}  // namespace testutil
