#include "staykit/nn/autograd.hpp"

#include <algorithm>
#include <cmath>

#include "staykit/kernels.hpp"

namespace staykit::nn {

namespace k = staykit::kernels;

Var make_tensor(std::size_t rows, std::size_t cols, bool requires_grad) {
  auto t = std::make_shared<Tensor>();
  t->rows = rows;
  t->cols = cols;
  t->v.assign(rows * cols, 0.0);
  t->requires_grad = requires_grad;
  if (requires_grad) t->g.assign(rows * cols, 0.0);
  return t;
}

Var make_tensor(std::size_t rows, std::size_t cols, std::vector<double> values,
                bool requires_grad) {
  auto t = make_tensor(rows, cols, requires_grad);
  if (values.size() != rows * cols) throw input_error("make_tensor: value size mismatch");
  t->v = std::move(values);
  return t;
}

void Tape::backward(const Var& loss) {
  if (!loss || loss->size() != 1) throw input_error("backward: loss must be a 1x1 tensor");
  if (!loss->requires_grad) return;
  loss->g[0] = 1.0;
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
}

namespace {

inline bool track(const Tape& tape, std::initializer_list<const Var*> inputs) {
  if (!tape.grad_enabled()) return false;
  for (const Var* v : inputs)
    if (*v && (*v)->requires_grad) return true;
  return false;
}

Var out_like(std::size_t rows, std::size_t cols, bool requires_grad) {
  return make_tensor(rows, cols, requires_grad);
}

}  // namespace

Var matmul(Tape& tape, const Var& a, const Var& b) {
  if (a->cols != b->rows) throw input_error("matmul: shape mismatch");
  const bool rg = track(tape, {&a, &b});
  Var c = out_like(a->rows, b->cols, rg);
  k::matmul_nn(a->v.data(), b->v.data(), c->v.data(), a->rows, a->cols, b->cols);
  if (rg) {
    tape.record([a, b, c] {
      // dA += dC * B^T ; dB += A^T * dC
      if (a->requires_grad)
        k::matmul_nt(c->g.data(), b->v.data(), a->g.data(), c->rows, c->cols, b->rows, true);
      if (b->requires_grad)
        k::matmul_tn(a->v.data(), c->g.data(), b->g.data(), a->cols, a->rows, c->cols, true);
    });
  }
  return c;
}

Var matmul_nt(Tape& tape, const Var& a, const Var& b) {
  if (a->cols != b->cols) throw input_error("matmul_nt: shape mismatch");
  const bool rg = track(tape, {&a, &b});
  Var c = out_like(a->rows, b->rows, rg);
  k::matmul_nt(a->v.data(), b->v.data(), c->v.data(), a->rows, a->cols, b->rows);
  if (rg) {
    tape.record([a, b, c] {
      // C = A B^T : dA += dC * B ; dB += dC^T * A
      if (a->requires_grad)
        k::matmul_nn(c->g.data(), b->v.data(), a->g.data(), c->rows, c->cols, b->cols, true);
      if (b->requires_grad)
        k::matmul_tn(c->g.data(), a->v.data(), b->g.data(), c->cols, c->rows, a->cols, true);
    });
  }
  return c;
}

Var linear(Tape& tape, const Var& x, const Var& w, const Var& bias) {
  if (x->cols != w->cols) throw input_error("linear: input width mismatch");
  if (bias && (bias->rows != 1 || bias->cols != w->rows))
    throw input_error("linear: bias shape mismatch");
  const Var b = bias;
  const bool rg = tape.grad_enabled() &&
                  (x->requires_grad || w->requires_grad || (b && b->requires_grad));
  Var y = out_like(x->rows, w->rows, rg);
  k::matmul_nt(x->v.data(), w->v.data(), y->v.data(), x->rows, x->cols, w->rows);
  if (b)
    for (std::size_t r = 0; r < y->rows; ++r)
      k::add(y->v.data() + r * y->cols, b->v.data(), y->v.data() + r * y->cols, y->cols);
  if (rg) {
    tape.record([x, w, b, y] {
      if (x->requires_grad)
        k::matmul_nn(y->g.data(), w->v.data(), x->g.data(), y->rows, y->cols, w->cols, true);
      if (w->requires_grad)
        k::matmul_tn(y->g.data(), x->v.data(), w->g.data(), y->cols, y->rows, x->cols, true);
      if (b && b->requires_grad)
        for (std::size_t r = 0; r < y->rows; ++r)
          k::add(b->g.data(), y->g.data() + r * y->cols, b->g.data(), y->cols);
    });
  }
  return y;
}

Var add(Tape& tape, const Var& a, const Var& b) {
  if (a->rows != b->rows || a->cols != b->cols) throw input_error("add: shape mismatch");
  const bool rg = track(tape, {&a, &b});
  Var c = out_like(a->rows, a->cols, rg);
  k::add(a->v.data(), b->v.data(), c->v.data(), a->size());
  if (rg) {
    tape.record([a, b, c] {
      if (a->requires_grad) k::add(a->g.data(), c->g.data(), a->g.data(), a->size());
      if (b->requires_grad) k::add(b->g.data(), c->g.data(), b->g.data(), b->size());
    });
  }
  return c;
}

Var add_rowvec(Tape& tape, const Var& a, const Var& row) {
  if (row->rows != 1 || row->cols != a->cols) throw input_error("add_rowvec: shape mismatch");
  const bool rg = track(tape, {&a, &row});
  Var c = out_like(a->rows, a->cols, rg);
  for (std::size_t r = 0; r < a->rows; ++r)
    k::add(a->v.data() + r * a->cols, row->v.data(), c->v.data() + r * a->cols, a->cols);
  if (rg) {
    tape.record([a, row, c] {
      if (a->requires_grad) k::add(a->g.data(), c->g.data(), a->g.data(), a->size());
      if (row->requires_grad)
        for (std::size_t r = 0; r < c->rows; ++r)
          k::add(row->g.data(), c->g.data() + r * c->cols, row->g.data(), c->cols);
    });
  }
  return c;
}

Var add_const(Tape& tape, const Var& a, const std::vector<double>& constant) {
  if (constant.size() != a->size()) throw input_error("add_const: shape mismatch");
  const bool rg = track(tape, {&a});
  Var c = out_like(a->rows, a->cols, rg);
  k::add(a->v.data(), constant.data(), c->v.data(), a->size());
  if (rg) {
    tape.record([a, c] {
      if (a->requires_grad) k::add(a->g.data(), c->g.data(), a->g.data(), a->size());
    });
  }
  return c;
}

Var hadamard(Tape& tape, const Var& a, const Var& b) {
  if (a->rows != b->rows || a->cols != b->cols) throw input_error("hadamard: shape mismatch");
  const bool rg = track(tape, {&a, &b});
  Var c = out_like(a->rows, a->cols, rg);
  k::mul(a->v.data(), b->v.data(), c->v.data(), a->size());
  if (rg) {
    tape.record([a, b, c] {
      for (std::size_t i = 0; i < c->size(); ++i) {
        if (a->requires_grad) a->g[i] += c->g[i] * b->v[i];
        if (b->requires_grad) b->g[i] += c->g[i] * a->v[i];
      }
    });
  }
  return c;
}

Var scale(Tape& tape, const Var& a, double s) {
  const bool rg = track(tape, {&a});
  Var c = out_like(a->rows, a->cols, rg);
  k::scale(a->v.data(), s, c->v.data(), a->size());
  if (rg) {
    tape.record([a, c, s] {
      if (a->requires_grad) k::axpy(s, c->g.data(), a->g.data(), a->size());
    });
  }
  return c;
}

Var scale_rows(Tape& tape, const Var& a, const std::vector<double>& weights) {
  if (weights.size() != a->rows) throw input_error("scale_rows: weight count mismatch");
  const bool rg = track(tape, {&a});
  Var c = out_like(a->rows, a->cols, rg);
  for (std::size_t r = 0; r < a->rows; ++r)
    k::scale(a->v.data() + r * a->cols, weights[r], c->v.data() + r * a->cols, a->cols);
  if (rg) {
    auto w = weights;
    tape.record([a, c, w = std::move(w)] {
      if (!a->requires_grad) return;
      for (std::size_t r = 0; r < a->rows; ++r)
        k::axpy(w[r], c->g.data() + r * c->cols, a->g.data() + r * a->cols, a->cols);
    });
  }
  return c;
}

Var sigmoid(Tape& tape, const Var& a) {
  const bool rg = track(tape, {&a});
  Var c = out_like(a->rows, a->cols, rg);
  for (std::size_t i = 0; i < a->size(); ++i) {
    const double z = a->v[i];
    c->v[i] = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  }
  if (rg) {
    tape.record([a, c] {
      if (!a->requires_grad) return;
      for (std::size_t i = 0; i < c->size(); ++i)
        a->g[i] += c->g[i] * c->v[i] * (1.0 - c->v[i]);
    });
  }
  return c;
}

Var tanh_op(Tape& tape, const Var& a) {
  const bool rg = track(tape, {&a});
  Var c = out_like(a->rows, a->cols, rg);
  for (std::size_t i = 0; i < a->size(); ++i) c->v[i] = std::tanh(a->v[i]);
  if (rg) {
    tape.record([a, c] {
      if (!a->requires_grad) return;
      for (std::size_t i = 0; i < c->size(); ++i)
        a->g[i] += c->g[i] * (1.0 - c->v[i] * c->v[i]);
    });
  }
  return c;
}

Var relu(Tape& tape, const Var& a) {
  const bool rg = track(tape, {&a});
  Var c = out_like(a->rows, a->cols, rg);
  for (std::size_t i = 0; i < a->size(); ++i) c->v[i] = a->v[i] > 0.0 ? a->v[i] : 0.0;
  if (rg) {
    tape.record([a, c] {
      if (!a->requires_grad) return;
      for (std::size_t i = 0; i < c->size(); ++i)
        if (a->v[i] > 0.0) a->g[i] += c->g[i];
    });
  }
  return c;
}

Var softmax_rows(Tape& tape, const Var& a, const std::vector<double>* key_mask) {
  if (key_mask && key_mask->size() != a->cols)
    throw input_error("softmax_rows: mask width mismatch");
  const bool rg = track(tape, {&a});
  Var c = out_like(a->rows, a->cols, rg);
  for (std::size_t r = 0; r < a->rows; ++r) {
    const double* in = a->v.data() + r * a->cols;
    double* out = c->v.data() + r * a->cols;
    double mx = -1e300;
    for (std::size_t j = 0; j < a->cols; ++j) {
      const double z = in[j] + (key_mask && (*key_mask)[j] == 0.0 ? -1e9 : 0.0);
      mx = std::max(mx, z);
    }
    double total = 0.0;
    for (std::size_t j = 0; j < a->cols; ++j) {
      const double z = in[j] + (key_mask && (*key_mask)[j] == 0.0 ? -1e9 : 0.0);
      out[j] = std::exp(z - mx);
      total += out[j];
    }
    for (std::size_t j = 0; j < a->cols; ++j) out[j] /= total;
  }
  if (rg) {
    tape.record([a, c] {
      if (!a->requires_grad) return;
      for (std::size_t r = 0; r < c->rows; ++r) {
        const double* y = c->v.data() + r * c->cols;
        const double* gy = c->g.data() + r * c->cols;
        double inner = 0.0;
        for (std::size_t j = 0; j < c->cols; ++j) inner += gy[j] * y[j];
        double* ga = a->g.data() + r * c->cols;
        for (std::size_t j = 0; j < c->cols; ++j) ga[j] += y[j] * (gy[j] - inner);
      }
    });
  }
  return c;
}

Var layer_norm_rows(Tape& tape, const Var& x, const Var& gamma, const Var& beta, double eps) {
  if (gamma->cols != x->cols || beta->cols != x->cols || gamma->rows != 1 || beta->rows != 1)
    throw input_error("layer_norm_rows: parameter shape mismatch");
  const bool rg = track(tape, {&x, &gamma, &beta});
  Var y = out_like(x->rows, x->cols, rg);
  auto xhat = std::make_shared<std::vector<double>>(x->size());
  auto inv_std = std::make_shared<std::vector<double>>(x->rows);
  const std::size_t c = x->cols;
  for (std::size_t r = 0; r < x->rows; ++r) {
    const double* in = x->v.data() + r * c;
    double mean = k::sum(in, c) / static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) var += (in[j] - mean) * (in[j] - mean);
    var /= static_cast<double>(c);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t j = 0; j < c; ++j) {
      const double xh = (in[j] - mean) * is;
      (*xhat)[r * c + j] = xh;
      y->v[r * c + j] = gamma->v[j] * xh + beta->v[j];
    }
  }
  if (rg) {
    tape.record([x, gamma, beta, y, xhat, inv_std] {
      const std::size_t c = x->cols;
      for (std::size_t r = 0; r < x->rows; ++r) {
        const double* gy = y->g.data() + r * c;
        const double* xh = xhat->data() + r * c;
        if (gamma->requires_grad || beta->requires_grad) {
          for (std::size_t j = 0; j < c; ++j) {
            if (gamma->requires_grad) gamma->g[j] += gy[j] * xh[j];
            if (beta->requires_grad) beta->g[j] += gy[j];
          }
        }
        if (x->requires_grad) {
          double mean_g = 0.0, mean_gx = 0.0;
          for (std::size_t j = 0; j < c; ++j) {
            const double gh = gy[j] * gamma->v[j];
            mean_g += gh;
            mean_gx += gh * xh[j];
          }
          mean_g /= static_cast<double>(c);
          mean_gx /= static_cast<double>(c);
          double* gx = x->g.data() + r * c;
          const double is = (*inv_std)[r];
          for (std::size_t j = 0; j < c; ++j) {
            const double gh = gy[j] * gamma->v[j];
            gx[j] += is * (gh - mean_g - xh[j] * mean_gx);
          }
        }
      }
    });
  }
  return y;
}

Var slice_cols(Tape& tape, const Var& a, std::size_t first, std::size_t width) {
  if (first + width > a->cols) throw input_error("slice_cols: range out of bounds");
  const bool rg = track(tape, {&a});
  Var c = out_like(a->rows, width, rg);
  for (std::size_t r = 0; r < a->rows; ++r)
    std::copy_n(a->v.data() + r * a->cols + first, width, c->v.data() + r * width);
  if (rg) {
    tape.record([a, c, first, width] {
      if (!a->requires_grad) return;
      for (std::size_t r = 0; r < a->rows; ++r)
        k::add(a->g.data() + r * a->cols + first, c->g.data() + r * width,
               a->g.data() + r * a->cols + first, width);
    });
  }
  return c;
}

Var concat_cols(Tape& tape, const std::vector<Var>& parts) {
  if (parts.empty()) throw input_error("concat_cols: no inputs");
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (p->rows != parts[0]->rows) throw input_error("concat_cols: row mismatch");
    total += p->cols;
  }
  bool rg = false;
  if (tape.grad_enabled())
    for (const Var& p : parts) rg = rg || p->requires_grad;
  Var c = out_like(parts[0]->rows, total, rg);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    for (std::size_t r = 0; r < p->rows; ++r)
      std::copy_n(p->v.data() + r * p->cols, p->cols, c->v.data() + r * total + offset);
    offset += p->cols;
  }
  if (rg) {
    auto inputs = parts;
    tape.record([inputs, c, total] {
      std::size_t offset = 0;
      for (const Var& p : inputs) {
        if (p->requires_grad)
          for (std::size_t r = 0; r < p->rows; ++r)
            k::add(p->g.data() + r * p->cols, c->g.data() + r * total + offset,
                   p->g.data() + r * p->cols, p->cols);
        offset += p->cols;
      }
    });
  }
  return c;
}

Var masked_mean_rows(Tape& tape, const Var& a, const std::vector<double>& mask) {
  if (mask.size() != a->rows) throw input_error("masked_mean_rows: mask length mismatch");
  double count = 0.0;
  for (double m : mask) count += m != 0.0 ? 1.0 : 0.0;
  if (count == 0.0) throw input_error("masked_mean_rows: no masked-in rows");
  const bool rg = track(tape, {&a});
  Var c = out_like(1, a->cols, rg);
  for (std::size_t r = 0; r < a->rows; ++r)
    if (mask[r] != 0.0) k::add(c->v.data(), a->v.data() + r * a->cols, c->v.data(), a->cols);
  k::scale(c->v.data(), 1.0 / count, c->v.data(), a->cols);
  if (rg) {
    auto m = mask;
    tape.record([a, c, m = std::move(m), count] {
      if (!a->requires_grad) return;
      for (std::size_t r = 0; r < a->rows; ++r)
        if (m[r] != 0.0)
          k::axpy(1.0 / count, c->g.data(), a->g.data() + r * a->cols, a->cols);
    });
  }
  return c;
}

Var take_row(Tape& tape, const Var& a, std::size_t row) {
  if (row >= a->rows) throw input_error("take_row: row out of bounds");
  const bool rg = track(tape, {&a});
  Var c = out_like(1, a->cols, rg);
  std::copy_n(a->v.data() + row * a->cols, a->cols, c->v.data());
  if (rg) {
    tape.record([a, c, row] {
      if (a->requires_grad)
        k::add(a->g.data() + row * a->cols, c->g.data(), a->g.data() + row * a->cols, a->cols);
    });
  }
  return c;
}

Var dropout(Tape& tape, const Var& a, double rate, Rng& rng, bool training) {
  if (!training || rate <= 0.0) return a;
  if (rate >= 1.0) throw input_error("dropout: rate must be < 1");
  const bool rg = track(tape, {&a});
  Var c = out_like(a->rows, a->cols, rg);
  auto keep = std::make_shared<std::vector<double>>(a->size());
  const double inv_keep = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < a->size(); ++i) {
    (*keep)[i] = rng.next_double() >= rate ? inv_keep : 0.0;
    c->v[i] = a->v[i] * (*keep)[i];
  }
  if (rg) {
    tape.record([a, c, keep] {
      if (!a->requires_grad) return;
      for (std::size_t i = 0; i < c->size(); ++i) a->g[i] += c->g[i] * (*keep)[i];
    });
  }
  return c;
}

Var add_scalar(Tape& tape, const Var& a, const Var& b) {
  if (a->size() != 1 || b->size() != 1) throw input_error("add_scalar: inputs must be 1x1");
  return add(tape, a, b);
}

Var zero_scalar() { return make_tensor(1, 1, false); }

Var squared_error_sum(Tape& tape, const Var& a, const std::vector<double>& target) {
  if (target.size() != a->size()) throw input_error("squared_error_sum: target size mismatch");
  const bool rg = track(tape, {&a});
  Var c = out_like(1, 1, rg);
  double acc = 0.0;
  for (std::size_t i = 0; i < a->size(); ++i) {
    const double d = a->v[i] - target[i];
    acc += d * d;
  }
  c->v[0] = acc;
  if (rg) {
    auto t = target;
    tape.record([a, c, t = std::move(t)] {
      if (!a->requires_grad) return;
      for (std::size_t i = 0; i < a->size(); ++i)
        a->g[i] += c->g[0] * 2.0 * (a->v[i] - t[i]);
    });
  }
  return c;
}

}  // namespace staykit::nn
