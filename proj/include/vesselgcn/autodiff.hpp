// Copyright 2026 The vesselgcn Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef VESSELGCN_AUTODIFF_HPP
#define VESSELGCN_AUTODIFF_HPP

// Reverse-mode automatic differentiation over dense matrices.
//
// A Tape owns every value produced during a forward pass. Each primitive
// appends one entry holding its output, the ids of its inputs, and a closure
// that maps the upstream gradient onto input gradients. backward() walks the
// entries in exact reverse order of recording.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vesselgcn/matrix.hpp"

namespace vesselgcn {

using ValueId = std::size_t;

class Tape;

/// Handle to a value recorded on a tape.
class Var {
 public:
  Var(Tape* tape, ValueId id) : tape_(tape), id_(id) {}

  ValueId id() const noexcept { return id_; }
  Tape& tape() const noexcept { return *tape_; }
  /// Valid for the lifetime of the tape; recording more ops does not move it.
  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  Tape* tape_;
  ValueId id_;
};

/// Input gradient slots handed to a backward closure. A null slot means the
/// corresponding input does not need a gradient.
using GradSlots = std::span<Matrix* const>;
using BackwardFn = std::function<void(const Matrix& upstream, GradSlots inputs)>;

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  // Recorded closures refer back to the tape, so it must stay put.
  Tape(Tape&&) = delete;
  Tape& operator=(Tape&&) = delete;

  Var constant(Matrix value) {
    entries_.push_back(Entry{std::move(value), {}, {}, std::nullopt, false});
    return Var(this, entries_.size() - 1);
  }

  Var parameter(std::string name, Matrix value) {
    entries_.push_back(Entry{std::move(value), {}, {}, std::move(name), true});
    return Var(this, entries_.size() - 1);
  }

  /// Appends an operation. Inputs must already be on this tape.
  Var record(Matrix value, std::vector<ValueId> inputs, BackwardFn backward) {
    bool needs = false;
    for (ValueId in : inputs) needs = needs || entries_.at(in).requires_grad;
    entries_.push_back(Entry{std::move(value), std::move(inputs),
                             needs ? std::move(backward) : BackwardFn{},
                             std::nullopt, needs});
    return Var(this, entries_.size() - 1);
  }

  const Matrix& value(ValueId id) const { return entries_.at(id).value; }
  std::size_t size() const noexcept { return entries_.size(); }

  /// Gradients of a scalar value with respect to every named parameter.
  /// Parameters the loss does not reach get an all-zero gradient.
  std::map<std::string, Matrix> backward(Var loss) const {
    if (&loss.tape() != this) throw ValidationError("backward: loss is not on this tape");
    const Matrix& lv = value(loss.id());
    if (lv.rows() != 1 || lv.cols() != 1) {
      throw ValidationError("backward: loss must be 1x1, got " + lv.shape());
    }
    std::vector<Matrix> grads(entries_.size());
    grads[loss.id()] = Matrix(1, 1, 1.0);

    std::vector<Matrix*> slots;
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
      const Entry& e = entries_[i];
      if (!e.backward || grads[i].size() == 0) continue;
      slots.assign(e.inputs.size(), nullptr);
      for (std::size_t j = 0; j < e.inputs.size(); ++j) {
        const Entry& in = entries_[e.inputs[j]];
        if (!in.requires_grad) continue;
        Matrix& g = grads[e.inputs[j]];
        if (!g.same_shape(in.value)) {
          g = Matrix(in.value.rows(), in.value.cols());
        }
        slots[j] = &g;
      }
      e.backward(grads[i], slots);
    }

    std::map<std::string, Matrix> out;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const Entry& e = entries_[i];
      if (!e.param_name) continue;
      if (grads[i].same_shape(e.value)) {
        out[*e.param_name] = std::move(grads[i]);
      } else {
        out[*e.param_name] = Matrix(e.value.rows(), e.value.cols());
      }
    }
    return out;
  }

 private:
  struct Entry {
    Matrix value;
    std::vector<ValueId> inputs;
    BackwardFn backward;
    std::optional<std::string> param_name;
    bool requires_grad = false;
  };
  std::deque<Entry> entries_;
};

inline const Matrix& Var::value() const { return tape_->value(id_); }

inline std::map<std::string, Matrix> backward(const Tape& tape, Var loss) {
  return tape.backward(loss);
}

namespace detail {
inline void same_tape(const Var& a, const Var& b, const char* op) {
  if (&a.tape() != &b.tape()) {
    throw ValidationError(std::string(op) + ": operands live on different tapes");
  }
}
}  // namespace detail

inline Var matmul(const Var& a, const Var& b) {
  detail::same_tape(a, b, "matmul");
  Matrix out = multiply(a.value(), b.value());
  const Var av = a, bv = b;
  return a.tape().record(std::move(out), {a.id(), b.id()},
                         [av, bv](const Matrix& g, GradSlots in) {
                           if (in[0]) gemm_nt_accumulate(g, bv.value(), *in[0]);
                           if (in[1]) gemm_tn_accumulate(av.value(), g, *in[1]);
                         });
}

/// Numerically stable logistic function.
inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Var sigmoid(const Var& x) {
  Matrix out(x.rows(), x.cols());
  const auto& src = x.value().data();
  for (std::size_t i = 0; i < src.size(); ++i) out.data()[i] = logistic(src[i]);
  Tape& tape = x.tape();
  const ValueId self = tape.size();
  return tape.record(std::move(out), {x.id()},
                     [&tape, self](const Matrix& g, GradSlots in) {
                       const auto& y = tape.value(self).data();
                       auto& dst = in[0]->data();
                       for (std::size_t i = 0; i < y.size(); ++i) {
                         dst[i] += g.data()[i] * y[i] * (1.0 - y[i]);
                       }
                     });
}

inline Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ValidationError("concat_cols: no parts");
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  std::vector<ValueId> ids;
  std::vector<std::size_t> offsets;
  for (const Var& p : parts) {
    detail::same_tape(parts[0], p, "concat_cols");
    if (p.rows() != rows) {
      throw ShapeError("concat_cols: row mismatch " + parts[0].value().shape() +
                       " vs " + p.value().shape());
    }
    ids.push_back(p.id());
    offsets.push_back(cols);
    cols += p.cols();
  }
  Matrix out(rows, cols);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Matrix& v = parts[k].value();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(v.row(r).begin(), v.row(r).end(), out.row(r).begin() + offsets[k]);
    }
  }
  return parts[0].tape().record(
      std::move(out), std::move(ids),
      [offsets](const Matrix& g, GradSlots in) {
        for (std::size_t k = 0; k < in.size(); ++k) {
          if (!in[k]) continue;
          Matrix& dst = *in[k];
          for (std::size_t r = 0; r < dst.rows(); ++r) {
            auto grow = g.row(r);
            auto drow = dst.row(r);
            for (std::size_t c = 0; c < dst.cols(); ++c) drow[c] += grow[offsets[k] + c];
          }
        }
      });
}

inline Var concat_cols(std::initializer_list<Var> parts) {
  return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}

/// Columns [begin, begin + width) of x.
inline Var slice_cols(const Var& x, std::size_t begin, std::size_t width) {
  if (begin + width > x.cols()) {
    throw ShapeError("slice_cols: range [" + std::to_string(begin) + ", " +
                     std::to_string(begin + width) + ") exceeds " + x.value().shape());
  }
  Matrix out(x.rows(), width);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto src = x.value().row(r);
    std::copy(src.begin() + begin, src.begin() + begin + width, out.row(r).begin());
  }
  return x.tape().record(std::move(out), {x.id()},
                         [begin, width](const Matrix& g, GradSlots in) {
                           Matrix& dst = *in[0];
                           for (std::size_t r = 0; r < g.rows(); ++r)
                             for (std::size_t c = 0; c < width; ++c)
                               dst(r, begin + c) += g(r, c);
                         });
}

/// Averages non-overlapping windows of `kernel` consecutive columns. A
/// trailing partial window is averaged over its actual width.
inline Var avgpool_cols(const Var& x, std::size_t kernel) {
  if (kernel < 1) throw ValidationError("avgpool_cols: kernel must be >= 1");
  const std::size_t d = x.cols();
  const std::size_t out_cols = (d + kernel - 1) / kernel;
  Matrix out(x.rows(), out_cols);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto src = x.value().row(r);
    for (std::size_t w = 0; w < out_cols; ++w) {
      const std::size_t lo = w * kernel, hi = std::min(d, lo + kernel);
      double s = 0.0;
      for (std::size_t c = lo; c < hi; ++c) s += src[c];
      out(r, w) = s / static_cast<double>(hi - lo);
    }
  }
  return x.tape().record(std::move(out), {x.id()},
                         [kernel, d, out_cols](const Matrix& g, GradSlots in) {
                           Matrix& dst = *in[0];
                           for (std::size_t r = 0; r < g.rows(); ++r) {
                             for (std::size_t w = 0; w < out_cols; ++w) {
                               const std::size_t lo = w * kernel, hi = std::min(d, lo + kernel);
                               const double share = g(r, w) / static_cast<double>(hi - lo);
                               for (std::size_t c = lo; c < hi; ++c) dst(r, c) += share;
                             }
                           }
                         });
}

inline Var add(const Var& a, const Var& b) {
  detail::same_tape(a, b, "add");
  if (!a.value().same_shape(b.value())) {
    throw ShapeError("add: shape mismatch " + a.value().shape() + " vs " + b.value().shape());
  }
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.value().data()[i];
  return a.tape().record(std::move(out), {a.id(), b.id()},
                         [](const Matrix& g, GradSlots in) {
                           for (Matrix* slot : in) {
                             if (!slot) continue;
                             for (std::size_t i = 0; i < g.size(); ++i) slot->data()[i] += g.data()[i];
                           }
                         });
}

inline Var scale(const Var& a, double c) {
  Matrix out = a.value();
  for (double& v : out.data()) v *= c;
  return a.tape().record(std::move(out), {a.id()},
                         [c](const Matrix& g, GradSlots in) {
                           for (std::size_t i = 0; i < g.size(); ++i) in[0]->data()[i] += c * g.data()[i];
                         });
}

/// Mean over unmasked rows of -log softmax(logits)[target]. Rows whose mask
/// entry is false contribute neither loss nor gradient.
inline Var softmax_cross_entropy(const Var& logits, std::span<const int> targets,
                                 const std::vector<bool>& mask) {
  const Matrix& z = logits.value();
  const std::size_t n = z.rows(), c = z.cols();
  if (targets.size() != n || mask.size() != n) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(targets.size()) +
                     " targets / " + std::to_string(mask.size()) + " mask entries for " +
                     z.shape() + " logits");
  }
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= c) {
      throw ValidationError("softmax_cross_entropy: target " + std::to_string(targets[i]) +
                            " at row " + std::to_string(i) + " outside [0," +
                            std::to_string(c) + ")");
    }
    ++count;
  }
  if (count == 0) throw ValidationError("softmax_cross_entropy: every row is masked");

  // Row-wise softmax kept for the backward pass.
  Matrix probs(n, c);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    auto row = z.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) sum += std::exp(row[j] - mx);
    const double log_sum = std::log(sum);
    for (std::size_t j = 0; j < c; ++j) probs(i, j) = std::exp(row[j] - mx - log_sum);
    total += -(row[targets[i]] - mx - log_sum);
  }
  const double inv = 1.0 / static_cast<double>(count);
  std::vector<int> tgt(targets.begin(), targets.end());
  std::vector<bool> msk = mask;
  return logits.tape().record(
      Matrix(1, 1, total * inv), {logits.id()},
      [probs = std::move(probs), tgt = std::move(tgt), msk = std::move(msk), inv](
          const Matrix& g, GradSlots in) {
        Matrix& dst = *in[0];
        const double up = g(0, 0) * inv;
        for (std::size_t i = 0; i < dst.rows(); ++i) {
          if (!msk[i]) continue;
          for (std::size_t j = 0; j < dst.cols(); ++j) {
            const double onehot = static_cast<int>(j) == tgt[i] ? 1.0 : 0.0;
            dst(i, j) += up * (probs(i, j) - onehot);
          }
        }
      });
}

/// Anything exposing its learnable matrices as (name, Matrix&) pairs.
template <typename P>
concept NamedParameterSet = requires(P p) {
  p.for_each([](const std::string&, Matrix&) {});
};

/// Central-difference gradient of a scalar function, one coordinate at a
/// time. Used as an oracle for backward().
template <NamedParameterSet Params, typename F>
  requires std::invocable<F&, const Params&>
std::map<std::string, Matrix> finite_difference_gradient(F&& f, const Params& params,
                                                         double h = 1e-6) {
  Params probe = params;
  std::map<std::string, Matrix> grads;
  std::vector<std::pair<std::string, Matrix*>> slots;
  probe.for_each([&](const std::string& name, Matrix& m) { slots.emplace_back(name, &m); });
  for (auto& [name, m] : slots) {
    Matrix g(m->rows(), m->cols());
    for (std::size_t i = 0; i < m->size(); ++i) {
      const double saved = m->data()[i];
      m->data()[i] = saved + h;
      const double up = static_cast<double>(f(std::as_const(probe)));
      m->data()[i] = saved - h;
      const double down = static_cast<double>(f(std::as_const(probe)));
      m->data()[i] = saved;
      g.data()[i] = (up - down) / (2.0 * h);
    }
    grads[name] = std::move(g);
  }
  return grads;
}

}  // namespace vesselgcn

#endif  // VESSELGCN_AUTODIFF_HPP
