#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "staykit/common.hpp"

namespace staykit::nn {

// Row-major 2-D tensor with value and gradient storage.
struct Tensor {
  std::size_t rows = 0, cols = 0;
  std::vector<double> v;
  std::vector<double> g;  // allocated iff requires_grad
  bool requires_grad = false;

  std::size_t size() const { return rows * cols; }
  double& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
  void zero_grad() { std::fill(g.begin(), g.end(), 0.0); }
};

using Var = std::shared_ptr<Tensor>;

Var make_tensor(std::size_t rows, std::size_t cols, bool requires_grad = false);
Var make_tensor(std::size_t rows, std::size_t cols, std::vector<double> values,
                bool requires_grad = false);

// Reverse-mode tape. Ops append backward closures in construction order;
// backward() runs them in reverse. One tape per forward pass.
class Tape {
 public:
  void record(std::function<void()> step) { steps_.push_back(std::move(step)); }

  // Seeds d(loss)/d(loss) = 1 and propagates. `loss` must be 1x1.
  void backward(const Var& loss);

  void clear() { steps_.clear(); }
  std::size_t size() const { return steps_.size(); }

  bool grad_enabled() const { return grad_enabled_; }
  void set_grad_enabled(bool enabled) { grad_enabled_ = enabled; }

 private:
  std::vector<std::function<void()>> steps_;
  bool grad_enabled_ = true;
};

// --- ops -----------------------------------------------------------------
// Output requires_grad iff any input does and the tape has gradients on.

// c = a * b, a [m x k], b [k x n]
Var matmul(Tape& tape, const Var& a, const Var& b);
// c = a * b^T, a [m x k], b [n x k]
Var matmul_nt(Tape& tape, const Var& a, const Var& b);
// y = x * w^T (+ bias rows), x [m x in], w [out x in], bias [1 x out] or null
Var linear(Tape& tape, const Var& x, const Var& w, const Var& bias);

Var add(Tape& tape, const Var& a, const Var& b);
// Adds a [1 x c] row vector to every row.
Var add_rowvec(Tape& tape, const Var& a, const Var& row);
// Adds a gradient-free constant buffer (same shape).
Var add_const(Tape& tape, const Var& a, const std::vector<double>& constant);
Var hadamard(Tape& tape, const Var& a, const Var& b);
Var scale(Tape& tape, const Var& a, double s);
// Multiplies row i by weights[i] (e.g. zeroing padded rows).
Var scale_rows(Tape& tape, const Var& a, const std::vector<double>& weights);

Var sigmoid(Tape& tape, const Var& a);
Var tanh_op(Tape& tape, const Var& a);
Var relu(Tape& tape, const Var& a);

// Row-wise softmax. When key_mask is given, columns with mask 0 receive a
// -1e9 additive penalty before normalization.
Var softmax_rows(Tape& tape, const Var& a, const std::vector<double>* key_mask = nullptr);

// Row-wise layer normalization with learned gain/bias [1 x c].
Var layer_norm_rows(Tape& tape, const Var& x, const Var& gamma, const Var& beta,
                    double eps = 1e-5);

Var slice_cols(Tape& tape, const Var& a, std::size_t first, std::size_t width);
Var concat_cols(Tape& tape, const std::vector<Var>& parts);

// Mean over rows with mask[i] != 0 -> [1 x c]. Requires at least one such row.
Var masked_mean_rows(Tape& tape, const Var& a, const std::vector<double>& mask);
Var take_row(Tape& tape, const Var& a, std::size_t row);

// Inverted-dropout; identity when !training or rate == 0.
Var dropout(Tape& tape, const Var& a, double rate, Rng& rng, bool training);

// Scalar [1 x 1] helpers.
Var add_scalar(Tape& tape, const Var& a, const Var& b);
Var zero_scalar();

// Sum of squared residuals against a gradient-free target: sum_j (a_j - t_j)^2.
Var squared_error_sum(Tape& tape, const Var& a, const std::vector<double>& target);

}  // namespace staykit::nn
