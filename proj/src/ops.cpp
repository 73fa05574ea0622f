// Copyright 2026 The esr-net Authors
// SPDX-License-Identifier: Apache-2.0

#include "esr/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace esr {

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

void require_rank(const char* op, const char* what, const Shape& shape, int rank) {
  if (static_cast<int>(shape.size()) != rank) {
    throw ShapeError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) +
                     ", got " + shape_to_string(shape));
  }
}

void require_dim(const char* op, const std::string& what, Index got, Index expected) {
  if (got != expected) {
    throw ShapeError(std::string(op) + ": " + what + " = " + std::to_string(got) +
                     ", expected " + std::to_string(expected));
  }
}

// Upper bound on the im2col buffer, in scalars; batches are chunked to fit.
constexpr Index kIm2colBudget = Index{1} << 23;

struct ConvGeometry {
  Index channels, height, width;
  Index kernel, stride, padding;
  Index out_h, out_w;

  [[nodiscard]] Index patch() const { return channels * kernel * kernel; }
  [[nodiscard]] Index positions() const { return out_h * out_w; }
};

// Writes sample `x` (C x H x W) into columns [col0, col0 + positions) of `cols`.
template <typename Scalar, typename Cols>
void im2col(const Scalar* x, const ConvGeometry& g, Cols& cols, Index col0) {
  const Index k = g.kernel;
  for (Index c = 0; c < g.channels; ++c) {
    const Scalar* plane = x + c * g.height * g.width;
    for (Index ki = 0; ki < k; ++ki) {
      for (Index kj = 0; kj < k; ++kj) {
        Scalar* row = &cols((c * k + ki) * k + kj, col0);
        for (Index oh = 0; oh < g.out_h; ++oh) {
          const Index ih = oh * g.stride - g.padding + ki;
          Scalar* dst = row + oh * g.out_w;
          if (ih < 0 || ih >= g.height) {
            std::fill(dst, dst + g.out_w, Scalar(0));
            continue;
          }
          const Scalar* src = plane + ih * g.width;
          for (Index ow = 0; ow < g.out_w; ++ow) {
            const Index iw = ow * g.stride - g.padding + kj;
            dst[ow] = (iw >= 0 && iw < g.width) ? src[iw] : Scalar(0);
          }
        }
      }
    }
  }
}

template <typename Scalar, typename Cols>
void col2im(const Cols& cols, Index col0, const ConvGeometry& g, Scalar* dx) {
  const Index k = g.kernel;
  for (Index c = 0; c < g.channels; ++c) {
    Scalar* plane = dx + c * g.height * g.width;
    for (Index ki = 0; ki < k; ++ki) {
      for (Index kj = 0; kj < k; ++kj) {
        const Scalar* row = &cols((c * k + ki) * k + kj, col0);
        for (Index oh = 0; oh < g.out_h; ++oh) {
          const Index ih = oh * g.stride - g.padding + ki;
          if (ih < 0 || ih >= g.height) continue;
          const Scalar* src = row + oh * g.out_w;
          Scalar* dst = plane + ih * g.width;
          for (Index ow = 0; ow < g.out_w; ++ow) {
            const Index iw = ow * g.stride - g.padding + kj;
            if (iw >= 0 && iw < g.width) dst[iw] += src[ow];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename Scalar>
Var<Scalar> conv2d(Tape<Scalar>& tape, const Var<Scalar>& input, const Var<Scalar>& weight,
                   const Var<Scalar>& bias, int stride, int padding) {
  using RowMatrix = typename Tensor<Scalar>::RowMatrix;
  const auto& xs = input->value.shape();
  const auto& ws = weight->value.shape();
  require_rank("conv2d", "input", xs, 4);
  require_rank("conv2d", "weight", ws, 4);
  require_rank("conv2d", "bias", bias->value.shape(), 1);
  if (stride < 1) throw ShapeError("conv2d: stride must be positive");
  if (padding < 0) throw ShapeError("conv2d: padding must be nonnegative");
  require_dim("conv2d", "input channels (dim 1)", xs[1], ws[1]);
  require_dim("conv2d", "weight kernel width (dim 3)", ws[3], ws[2]);
  require_dim("conv2d", "bias length (dim 0)", bias->value.dim(0), ws[0]);
  const Index n_batch = xs[0];
  const Index out_ch = ws[0];
  ConvGeometry g{xs[1], xs[2], xs[3], ws[2], stride, padding, 0, 0};
  if (g.kernel > g.height + 2 * padding) {
    throw ShapeError("conv2d: kernel " + std::to_string(g.kernel) +
                     " exceeds padded input height (dim 2) " +
                     std::to_string(g.height + 2 * padding));
  }
  if (g.kernel > g.width + 2 * padding) {
    throw ShapeError("conv2d: kernel " + std::to_string(g.kernel) +
                     " exceeds padded input width (dim 3) " +
                     std::to_string(g.width + 2 * padding));
  }
  g.out_h = window_output_extent(g.height, g.kernel, stride, padding);
  g.out_w = window_output_extent(g.width, g.kernel, stride, padding);

  const Index patch = g.patch();
  const Index pos = g.positions();
  const Index in_stride = g.channels * g.height * g.width;
  const Index out_stride = out_ch * pos;
  const Index chunk = std::clamp<Index>(kIm2colBudget / std::max<Index>(patch * pos, 1), 1, n_batch);

  Tensor<Scalar> out(Shape{n_batch, out_ch, g.out_h, g.out_w});
  const auto w = weight->value.matrix(out_ch, patch);
  const auto& b = bias->value.values();
  RowMatrix cols;
  RowMatrix y;
  for (Index n0 = 0; n0 < n_batch; n0 += chunk) {
    const Index m = std::min(chunk, n_batch - n0);
    cols.resize(patch, m * pos);
    for (Index i = 0; i < m; ++i) im2col(input->value.data() + (n0 + i) * in_stride, g, cols, i * pos);
    y.noalias() = w * cols;
    for (Index i = 0; i < m; ++i) {
      auto dst = Eigen::Map<RowMatrix>(out.data() + (n0 + i) * out_stride, out_ch, pos);
      dst = y.middleCols(i * pos, pos);
      dst.colwise() += b;
    }
  }

  const bool needs = input->requires_grad || weight->requires_grad || bias->requires_grad;
  return tape.record(
      "conv2d", std::move(out), needs,
      [input, weight, bias, g, n_batch, out_ch, chunk](const Tensor<Scalar>& gy) {
        const Index patch = g.patch();
        const Index pos = g.positions();
        const Index in_stride = g.channels * g.height * g.width;
        const Index out_stride = out_ch * pos;
        const auto w = weight->value.matrix(out_ch, patch);
        if (bias->requires_grad) {
          auto& db = bias->ensure_grad().values();
          for (Index n = 0; n < n_batch; ++n) {
            db += Eigen::Map<const RowMatrix>(gy.data() + n * out_stride, out_ch, pos)
                      .rowwise()
                      .sum();
          }
        }
        if (!weight->requires_grad && !input->requires_grad) return;
        RowMatrix cols;
        RowMatrix dy;
        RowMatrix dcols;
        for (Index n0 = 0; n0 < n_batch; n0 += chunk) {
          const Index m = std::min(chunk, n_batch - n0);
          dy.resize(out_ch, m * pos);
          for (Index i = 0; i < m; ++i) {
            dy.middleCols(i * pos, pos) =
                Eigen::Map<const RowMatrix>(gy.data() + (n0 + i) * out_stride, out_ch, pos);
          }
          if (weight->requires_grad) {
            cols.resize(patch, m * pos);
            for (Index i = 0; i < m; ++i) {
              im2col(input->value.data() + (n0 + i) * in_stride, g, cols, i * pos);
            }
            weight->ensure_grad().matrix(out_ch, patch).noalias() += dy * cols.transpose();
          }
          if (input->requires_grad) {
            dcols.noalias() = w.transpose() * dy;
            Scalar* dx = input->ensure_grad().data();
            for (Index i = 0; i < m; ++i) col2im(dcols, i * pos, g, dx + (n0 + i) * in_stride);
          }
        }
      });
}

template <typename Scalar>
Var<Scalar> batchnorm2d(Tape<Scalar>& tape, const Var<Scalar>& input, const Var<Scalar>& gamma,
                        const Var<Scalar>& beta, BatchNormStats<Scalar>& stats, Mode mode,
                        double momentum, double epsilon) {
  using Vector = typename Tensor<Scalar>::Vector;
  using RowMatrix = typename Tensor<Scalar>::RowMatrix;
  const auto& xs = input->value.shape();
  require_rank("batchnorm2d", "input", xs, 4);
  const Index n_batch = xs[0];
  const Index ch = xs[1];
  const Index plane = xs[2] * xs[3];
  const Index count = n_batch * plane;
  require_dim("batchnorm2d", "gamma length vs input channels (dim 1)", gamma->value.size(), ch);
  require_dim("batchnorm2d", "beta length vs input channels (dim 1)", beta->value.size(), ch);
  if (stats.mean.size() != ch || stats.var.size() != ch) {
    throw ShapeError("batchnorm2d: running statistics length does not match input channels (dim 1)");
  }
  if (mode == Mode::Train && count < 2) {
    throw std::invalid_argument(
        "batchnorm2d: train mode needs at least two elements per channel (N*H*W >= 2)");
  }

  // Per-sample view: rows are channels, columns spatial positions.
  auto sample = [&](const Tensor<Scalar>& t, Index n) {
    return Eigen::Map<const RowMatrix>(t.data() + n * ch * plane, ch, plane);
  };

  Vector mean(ch);
  Vector inv_std(ch);
  if (mode == Mode::Train) {
    Vector sum = Vector::Zero(ch);
    for (Index n = 0; n < n_batch; ++n) sum += sample(input->value, n).rowwise().sum();
    mean = sum / Scalar(count);
    Vector sq = Vector::Zero(ch);
    for (Index n = 0; n < n_batch; ++n) {
      sq += (sample(input->value, n).colwise() - mean).array().square().matrix().rowwise().sum();
    }
    const Vector var = sq / Scalar(count);
    inv_std = (var.array() + Scalar(epsilon)).rsqrt().matrix();
    const auto m = Scalar(momentum);
    stats.mean = (Scalar(1) - m) * stats.mean + m * mean;
    stats.var = (Scalar(1) - m) * stats.var + m * (sq / Scalar(count - 1));
  } else {
    mean = stats.mean;
    inv_std = (stats.var.array() + Scalar(epsilon)).rsqrt().matrix();
  }

  Tensor<Scalar> xhat(xs);
  Tensor<Scalar> out(xs);
  const auto& gm = gamma->value.values();
  const auto& bt = beta->value.values();
  for (Index n = 0; n < n_batch; ++n) {
    auto xh = Eigen::Map<RowMatrix>(xhat.data() + n * ch * plane, ch, plane);
    xh = (sample(input->value, n).colwise() - mean).array().colwise() * inv_std.array();
    auto y = Eigen::Map<RowMatrix>(out.data() + n * ch * plane, ch, plane);
    y = (xh.array().colwise() * gm.array()).colwise() + bt.array();
  }

  const bool needs = input->requires_grad || gamma->requires_grad || beta->requires_grad;
  return tape.record(
      "batchnorm2d", std::move(out), needs,
      [input, gamma, beta, xhat = std::move(xhat), inv_std, mode, n_batch, ch, plane,
       count](const Tensor<Scalar>& gy) {
        auto view = [&](const Tensor<Scalar>& t, Index n) {
          return Eigen::Map<const RowMatrix>(t.data() + n * ch * plane, ch, plane);
        };
        Vector sum_dy = Vector::Zero(ch);
        Vector sum_dy_xhat = Vector::Zero(ch);
        for (Index n = 0; n < n_batch; ++n) {
          sum_dy += view(gy, n).rowwise().sum();
          sum_dy_xhat += view(gy, n).cwiseProduct(view(xhat, n)).rowwise().sum();
        }
        if (gamma->requires_grad) gamma->ensure_grad().values() += sum_dy_xhat;
        if (beta->requires_grad) beta->ensure_grad().values() += sum_dy;
        if (!input->requires_grad) return;
        const Vector scale = gamma->value.values().cwiseProduct(inv_std);
        Scalar* dx = input->ensure_grad().data();
        for (Index n = 0; n < n_batch; ++n) {
          auto d = Eigen::Map<RowMatrix>(dx + n * ch * plane, ch, plane);
          if (mode == Mode::Train) {
            const Vector mean_dy = sum_dy / Scalar(count);
            const Vector mean_dy_xhat = sum_dy_xhat / Scalar(count);
            d.array() += ((view(gy, n).colwise() - mean_dy).array() -
                          view(xhat, n).array().colwise() * mean_dy_xhat.array())
                             .colwise() *
                         scale.array();
          } else {
            d.array() += view(gy, n).array().colwise() * scale.array();
          }
        }
      });
}

template <typename Scalar>
Var<Scalar> maxpool2d(Tape<Scalar>& tape, const Var<Scalar>& input, int kernel, int stride) {
  const auto& xs = input->value.shape();
  require_rank("maxpool2d", "input", xs, 4);
  if (kernel < 1 || stride < 1) throw ShapeError("maxpool2d: kernel and stride must be positive");
  if (kernel > xs[2]) {
    throw ShapeError("maxpool2d: kernel " + std::to_string(kernel) +
                     " exceeds input height (dim 2) " + std::to_string(xs[2]));
  }
  if (kernel > xs[3]) {
    throw ShapeError("maxpool2d: kernel " + std::to_string(kernel) +
                     " exceeds input width (dim 3) " + std::to_string(xs[3]));
  }
  const Index planes = xs[0] * xs[1];
  const Index h = xs[2];
  const Index w = xs[3];
  const Index oh = window_output_extent(h, kernel, stride, 0);
  const Index ow = window_output_extent(w, kernel, stride, 0);
  Tensor<Scalar> out(Shape{xs[0], xs[1], oh, ow});
  std::vector<Index> argmax(static_cast<std::size_t>(out.size()));
  const Scalar* x = input->value.data();
  Index o = 0;
  for (Index p = 0; p < planes; ++p) {
    const Index base = p * h * w;
    for (Index i = 0; i < oh; ++i) {
      for (Index j = 0; j < ow; ++j, ++o) {
        Index best = base + (i * stride) * w + j * stride;
        Scalar best_v = x[best];
        for (Index ki = 0; ki < kernel; ++ki) {
          const Index row = base + (i * stride + ki) * w + j * stride;
          for (Index kj = 0; kj < kernel; ++kj) {
            if (x[row + kj] > best_v) {
              best_v = x[row + kj];
              best = row + kj;
            }
          }
        }
        out[o] = best_v;
        argmax[static_cast<std::size_t>(o)] = best;
      }
    }
  }
  return tape.record("maxpool2d", std::move(out), input->requires_grad,
                     [input, argmax = std::move(argmax)](const Tensor<Scalar>& gy) {
                       Scalar* dx = input->ensure_grad().data();
                       for (Index i = 0; i < gy.size(); ++i) {
                         dx[argmax[static_cast<std::size_t>(i)]] += gy[i];
                       }
                     });
}

template <typename Scalar>
Var<Scalar> global_avg_pool(Tape<Scalar>& tape, const Var<Scalar>& input) {
  const auto& xs = input->value.shape();
  require_rank("global_avg_pool", "input", xs, 4);
  const Index rows = xs[0] * xs[1];
  const Index plane = xs[2] * xs[3];
  Tensor<Scalar> out(Shape{xs[0], xs[1]});
  out.values() = input->value.matrix(rows, plane).rowwise().mean();
  return tape.record("global_avg_pool", std::move(out), input->requires_grad,
                     [input, rows, plane](const Tensor<Scalar>& gy) {
                       auto dx = input->ensure_grad().matrix(rows, plane);
                       dx.colwise() += gy.values() / Scalar(plane);
                     });
}

template <typename Scalar>
Var<Scalar> linear(Tape<Scalar>& tape, const Var<Scalar>& input, const Var<Scalar>& weight,
                   const Var<Scalar>& bias) {
  const auto& xs = input->value.shape();
  const auto& ws = weight->value.shape();
  require_rank("linear", "input", xs, 2);
  require_rank("linear", "weight", ws, 2);
  require_rank("linear", "bias", bias->value.shape(), 1);
  require_dim("linear", "input features (dim 1)", xs[1], ws[1]);
  require_dim("linear", "bias length (dim 0)", bias->value.dim(0), ws[0]);
  const Index n = xs[0];
  const Index f = xs[1];
  const Index o = ws[0];
  Tensor<Scalar> out(Shape{n, o});
  auto y = out.matrix(n, o);
  y.noalias() = input->value.matrix(n, f) * weight->value.matrix(o, f).transpose();
  y.rowwise() += bias->value.values().transpose();
  const bool needs = input->requires_grad || weight->requires_grad || bias->requires_grad;
  return tape.record("linear", std::move(out), needs,
                     [input, weight, bias, n, f, o](const Tensor<Scalar>& gy) {
                       const auto dy = gy.matrix(n, o);
                       if (input->requires_grad) {
                         input->ensure_grad().matrix(n, f).noalias() +=
                             dy * weight->value.matrix(o, f);
                       }
                       if (weight->requires_grad) {
                         weight->ensure_grad().matrix(o, f).noalias() +=
                             dy.transpose() * input->value.matrix(n, f);
                       }
                       if (bias->requires_grad) {
                         bias->ensure_grad().values() += dy.colwise().sum().transpose();
                       }
                     });
}

template <typename Scalar>
Var<Scalar> relu(Tape<Scalar>& tape, const Var<Scalar>& input) {
  Tensor<Scalar> out(input->value.shape());
  out.values() = input->value.values().cwiseMax(Scalar(0));
  return tape.record("relu", std::move(out), input->requires_grad,
                     [input](const Tensor<Scalar>& gy) {
                       input->ensure_grad().values().array() +=
                           (input->value.values().array() > Scalar(0))
                               .select(gy.values().array(), Scalar(0));
                     });
}

template <typename Scalar>
Var<Scalar> softmax_cross_entropy(Tape<Scalar>& tape, const Var<Scalar>& logits,
                                  std::span<const int> labels) {
  const auto& ls = logits->value.shape();
  require_rank("softmax_cross_entropy", "logits", ls, 2);
  require_dim("softmax_cross_entropy", "label count vs batch (dim 0)",
              static_cast<Index>(labels.size()), ls[0]);
  const Index n = ls[0];
  const Index c = ls[1];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= c) {
      throw std::out_of_range("softmax_cross_entropy: label " + std::to_string(labels[i]) +
                              " at row " + std::to_string(i) + " outside [0, " +
                              std::to_string(c) + ")");
    }
  }
  Tensor<Scalar> probs = softmax_rows(logits->value);
  Scalar total = 0;
  const auto z = logits->value.matrix(n, c);
  for (Index i = 0; i < n; ++i) {
    const Scalar mx = z.row(i).maxCoeff();
    const Scalar lse = mx + std::log((z.row(i).array() - mx).exp().sum());
    total += lse - z(i, labels[static_cast<std::size_t>(i)]);
  }
  Tensor<Scalar> out(Shape{1});
  out[0] = total / Scalar(n);
  std::vector<int> lab(labels.begin(), labels.end());
  return tape.record("softmax_cross_entropy", std::move(out), logits->requires_grad,
                     [logits, probs = std::move(probs), lab = std::move(lab), n,
                      c](const Tensor<Scalar>& gy) {
                       auto dz = logits->ensure_grad().matrix(n, c);
                       const Scalar s = gy[0] / Scalar(n);
                       dz += s * probs.matrix(n, c);
                       for (Index i = 0; i < n; ++i) dz(i, lab[static_cast<std::size_t>(i)]) -= s;
                     });
}

template <typename Scalar>
Var<Scalar> rmse_loss(Tape<Scalar>& tape, const Var<Scalar>& pred, const Tensor<Scalar>& target) {
  if (pred->value.shape() != target.shape()) {
    throw ShapeError("rmse_loss: prediction shape " + shape_to_string(pred->value.shape()) +
                     " differs from target shape " + shape_to_string(target.shape()));
  }
  typename Tensor<Scalar>::Vector diff = pred->value.values() - target.values();
  const Scalar m = Scalar(diff.size());
  Tensor<Scalar> out(Shape{1});
  out[0] = std::sqrt(diff.squaredNorm() / m);
  const Scalar value = out[0];
  return tape.record("rmse_loss", std::move(out), pred->requires_grad,
                     [pred, diff = std::move(diff), m, value](const Tensor<Scalar>& gy) {
                       auto& g = pred->ensure_grad();
                       if (value == Scalar(0)) return;
                       g.values() += diff * (gy[0] / (m * value));
                     });
}

template <typename Scalar>
Var<Scalar> add(Tape<Scalar>& tape, std::span<const Var<Scalar>> terms) {
  if (terms.empty()) throw std::invalid_argument("add: no terms");
  Tensor<Scalar> out = terms[0]->value;
  bool needs = terms[0]->requires_grad;
  for (std::size_t i = 1; i < terms.size(); ++i) {
    if (terms[i]->value.shape() != out.shape()) {
      throw ShapeError("add: term " + std::to_string(i) + " has shape " +
                       shape_to_string(terms[i]->value.shape()) + ", expected " +
                       shape_to_string(out.shape()));
    }
    out.values() += terms[i]->value.values();
    needs = needs || terms[i]->requires_grad;
  }
  std::vector<Var<Scalar>> inputs(terms.begin(), terms.end());
  return tape.record("add", std::move(out), needs,
                     [inputs = std::move(inputs)](const Tensor<Scalar>& gy) {
                       for (const auto& t : inputs) {
                         if (t->requires_grad) t->ensure_grad().values() += gy.values();
                       }
                     });
}

template <typename Scalar>
Var<Scalar> pick_column(Tape<Scalar>& tape, const Var<Scalar>& logits, Index column) {
  const auto& ls = logits->value.shape();
  require_rank("pick_column", "logits", ls, 2);
  if (column < 0 || column >= ls[1]) {
    throw std::out_of_range("pick_column: column " + std::to_string(column) + " outside [0, " +
                            std::to_string(ls[1]) + ")");
  }
  Tensor<Scalar> out(Shape{1});
  out[0] = logits->value.matrix(ls[0], ls[1]).col(column).sum();
  const Index n = ls[0];
  const Index c = ls[1];
  return tape.record("pick_column", std::move(out), logits->requires_grad,
                     [logits, column, n, c](const Tensor<Scalar>& gy) {
                       logits->ensure_grad().matrix(n, c).col(column).array() += gy[0];
                     });
}

template <typename Scalar>
Tensor<Scalar> softmax_rows(const Tensor<Scalar>& logits) {
  require_rank("softmax_rows", "logits", logits.shape(), 2);
  const Index n = logits.dim(0);
  const Index c = logits.dim(1);
  Tensor<Scalar> p(logits.shape());
  auto out = p.matrix(n, c);
  const auto z = logits.matrix(n, c);
  for (Index i = 0; i < n; ++i) {
    const Scalar mx = z.row(i).maxCoeff();
    out.row(i) = (z.row(i).array() - mx).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return p;
}

#define ESR_INSTANTIATE_OPS(S)                                                                  \
  template Var<S> conv2d(Tape<S>&, const Var<S>&, const Var<S>&, const Var<S>&, int, int);     \
  template Var<S> batchnorm2d(Tape<S>&, const Var<S>&, const Var<S>&, const Var<S>&,           \
                              BatchNormStats<S>&, Mode, double, double);                       \
  template Var<S> maxpool2d(Tape<S>&, const Var<S>&, int, int);                                \
  template Var<S> global_avg_pool(Tape<S>&, const Var<S>&);                                    \
  template Var<S> linear(Tape<S>&, const Var<S>&, const Var<S>&, const Var<S>&);               \
  template Var<S> relu(Tape<S>&, const Var<S>&);                                               \
  template Var<S> softmax_cross_entropy(Tape<S>&, const Var<S>&, std::span<const int>);        \
  template Var<S> rmse_loss(Tape<S>&, const Var<S>&, const Tensor<S>&);                        \
  template Var<S> add(Tape<S>&, std::span<const Var<S>>);                                      \
  template Var<S> pick_column(Tape<S>&, const Var<S>&, Index);                                 \
  template Tensor<S> softmax_rows(const Tensor<S>&);

ESR_INSTANTIATE_OPS(float)
ESR_INSTANTIATE_OPS(double)

#undef ESR_INSTANTIATE_OPS

}  // namespace esr
