#pragma once

#include <vector>

#include "staykit/nn/autograd.hpp"

namespace staykit::nn {

// Probabilities are clamped to [kProbEps, 1-kProbEps] before any log.
constexpr double kProbEps = 1e-7;

double clamp_prob(double p);

// -c*log(p) - (1-c)*log(1-p); admits soft targets c in [0,1].
double bce(double c_hat, double c);

// Class-balance factor (c/c_bar + (1-c)/(1-c_bar)) times bce.
double weighted_bce(double c_hat, double c, double c_bar);

// -sum_m c_m * log(p_m) / (M * class_means[m]) for a one-hot row.
double weighted_ce(const std::vector<double>& probs_row, std::size_t true_class,
                   const std::vector<double>& class_means);

// --- batch losses over plain probability vectors -------------------------
// One entry per window; aligned inner vectors of length n.

struct BinaryBatch {
  std::vector<std::vector<double>> probs;
  std::vector<std::vector<double>> labels;
  std::vector<std::vector<double>> weights;  // confidence weights (weak path)
  std::vector<std::vector<bool>> mask;
};

// Mean weighted BCE over masked-in points. Throws when everything is masked.
double supervised_loss(const BinaryBatch& batch, double c_bar);

// Confidence-weighted sum / (N*n). Throws when the total weight is zero.
double weak_loss(const BinaryBatch& batch, double c_bar_weak);

// Weighted mean of labels: sum(c*w)/sum(w); plain mean when weights empty.
double weighted_label_mean(const std::vector<double>& labels,
                           const std::vector<double>& weights);

struct SslBatch {
  std::vector<double> v_hat, v;
  std::vector<double> sin_hat, sin_t;
  std::vector<double> cos_hat, cos_t;
};

double mse(const std::vector<double>& pred, const std::vector<double>& target);
double ssl_velocity_loss(const SslBatch& batch);
double ssl_angle_loss(const SslBatch& batch);

double multitask_loss(double downstream, double l_vel, double l_ang, double lambda_vel,
                      double lambda_ang);

// --- autograd losses ------------------------------------------------------

// sum_i point_weight[i] * weighted_bce(probs[i], target[i], c_bar) -> [1x1].
Var weighted_bce_sum(Tape& tape, const Var& probs, const std::vector<double>& targets,
                     const std::vector<double>& point_weights, double c_bar);

// sum over rows with label >= 0 of point_weight * weighted_ce -> [1x1].
Var weighted_ce_sum(Tape& tape, const Var& probs, const std::vector<int>& labels,
                    const std::vector<double>& point_weights,
                    const std::vector<double>& class_means);

}  // namespace staykit::nn
