#include "aesust/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace aesust {

namespace {

void require_same_shape(const Shape& a, const Shape& b, const char* op) {
  if (a != b) throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a) + " vs " + to_string(b));
}

Index padded_index(Index i, Index extent, PadMode mode) {
  if (i >= 0 && i < extent) return i;
  if (mode == PadMode::Zero) return -1;
  if (extent == 1) return 0;
  if (i < 0) i = -i;
  if (i >= extent) i = 2 * (extent - 1) - i;
  return std::clamp<Index>(i, 0, extent - 1);
}

// For every kernel tap and output position, the flat source pixel or -1 for zero padding.
std::vector<Index> im2col_table(Index height, Index width, Index kh, Index kw, Index out_h, Index out_w,
                                const ConvOptions& opt) {
  std::vector<Index> table(static_cast<std::size_t>(kh * kw * out_h * out_w));
  std::size_t t = 0;
  for (Index i = 0; i < kh; ++i) {
    for (Index j = 0; j < kw; ++j) {
      for (Index oh = 0; oh < out_h; ++oh) {
        const Index h = padded_index(oh * opt.stride - opt.pad + i, height, opt.pad_mode);
        for (Index ow = 0; ow < out_w; ++ow) {
          const Index w = padded_index(ow * opt.stride - opt.pad + j, width, opt.pad_mode);
          table[t++] = (h < 0 || w < 0) ? -1 : h * width + w;
        }
      }
    }
  }
  return table;
}

}  // namespace

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  Tensor<T> out(a.shape(), a.value().data() + b.value().data());
  return Var<T>::make(std::move(out), {a, b}, [a, b](const Tensor<T>& g) {
    a.accumulate(g);
    b.accumulate(g);
  });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a.shape(), b.shape(), "sub");
  Tensor<T> out(a.shape(), a.value().data() - b.value().data());
  return Var<T>::make(std::move(out), {a, b}, [a, b](const Tensor<T>& g) {
    a.accumulate(g);
    if (auto* gb = b.grad_target()) gb->data() -= g.data();
  });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a.shape(), b.shape(), "mul");
  Tensor<T> out(a.shape(), a.value().data().cwiseProduct(b.value().data()));
  return Var<T>::make(std::move(out), {a, b}, [a, b](const Tensor<T>& g) {
    if (auto* ga = a.grad_target()) ga->data() += g.data().cwiseProduct(b.value().data());
    if (auto* gb = b.grad_target()) gb->data() += g.data().cwiseProduct(a.value().data());
  });
}

template <typename T>
Var<T> scale(const Var<T>& a, T factor) {
  Tensor<T> out(a.shape(), a.value().data() * factor);
  return Var<T>::make(std::move(out), {a}, [a, factor](const Tensor<T>& g) {
    if (auto* ga = a.grad_target()) ga->data() += g.data() * factor;
  });
}

template <typename T>
Var<T> reshape(const Var<T>& a, Shape shape) {
  Tensor<T> out = a.value().reshaped(std::move(shape));
  return Var<T>::make(std::move(out), {a}, [a](const Tensor<T>& g) {
    if (auto* ga = a.grad_target()) ga->data() += g.data();
  });
}

template <typename T>
Var<T> relu(const Var<T>& a) {
  Tensor<T> out(a.shape(), a.value().data().cwiseMax(T(0)));
  return Var<T>::make(std::move(out), {a}, [a](const Tensor<T>& g) {
    if (auto* ga = a.grad_target()) {
      ga->data() += (a.value().data().array() > T(0)).select(g.data(), T(0)).matrix();
    }
  });
}

template <typename T>
Var<T> leaky_relu(const Var<T>& a, T slope) {
  const auto& x = a.value().data();
  Tensor<T> out(a.shape(), (x.array() > T(0)).select(x, x * slope).matrix());
  return Var<T>::make(std::move(out), {a}, [a, slope](const Tensor<T>& g) {
    if (auto* ga = a.grad_target()) {
      ga->data() += (a.value().data().array() > T(0)).select(g.data(), g.data() * slope).matrix();
    }
  });
}

template <typename T>
Var<T> sum(const Var<T>& a) {
  Tensor<T> out = Tensor<T>::constant({1}, a.value().data().sum());
  return Var<T>::make(std::move(out), {a}, [a](const Tensor<T>& g) {
    if (auto* ga = a.grad_target()) ga->data().array() += g[0];
  });
}

template <typename T>
Var<T> mean(const Var<T>& a) {
  const T n = static_cast<T>(a.value().size());
  Tensor<T> out = Tensor<T>::constant({1}, a.value().data().sum() / n);
  return Var<T>::make(std::move(out), {a}, [a, n](const Tensor<T>& g) {
    if (auto* ga = a.grad_target()) ga->data().array() += g[0] / n;
  });
}

template <typename T>
Var<T> l2_norm_per_sample(const Var<T>& a) {
  const Index n = a.dim(0);
  const Index per = a.value().size() / n;
  Tensor<T> out({n});
  for (Index i = 0; i < n; ++i) out[i] = std::sqrt(a.value().data().segment(i * per, per).squaredNorm());
  Tensor<T> norms = out;
  return Var<T>::make(std::move(out), {a}, [a, norms, n, per](const Tensor<T>& g) {
    auto* ga = a.grad_target();
    if (!ga) return;
    for (Index i = 0; i < n; ++i) {
      if (norms[i] == T(0)) continue;
      ga->data().segment(i * per, per) += a.value().data().segment(i * per, per) * (g[i] / norms[i]);
    }
  });
}

template <typename T>
Var<T> neg_log_sigmoid(const Var<T>& x, T floor) {
  const auto& v = x.value().data();
  Tensor<T> out(x.shape());
  Vec<T> sig(v.size());
  const T cap = -std::log(floor);
  for (Index i = 0; i < v.size(); ++i) {
    const T z = v[i];
    sig[i] = z >= 0 ? T(1) / (T(1) + std::exp(-z)) : std::exp(z) / (T(1) + std::exp(z));
    // softplus(-z), evaluated without overflow
    const T nls = z >= 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
    out[i] = sig[i] < floor ? cap : nls;
  }
  return Var<T>::make(std::move(out), {x}, [x, sig, floor](const Tensor<T>& g) {
    auto* gx = x.grad_target();
    if (!gx) return;
    for (Index i = 0; i < sig.size(); ++i) {
      if (sig[i] >= floor) (*gx)[i] += g[i] * (sig[i] - T(1));
    }
  });
}

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, const ConvOptions& opt) {
  const Tensor<T>& X = x.value();
  require_rank4(X, "conv2d input");
  require_rank4(weight.value(), "conv2d weight");
  const Index n_batch = X.dim(0), cin = X.dim(1), height = X.dim(2), width = X.dim(3);
  const Index cout = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
  if (weight.dim(1) != cin) {
    throw ShapeError("conv2d: input has " + std::to_string(cin) + " channels, weight expects " +
                     std::to_string(weight.dim(1)));
  }
  if (bias.value().size() != cout) throw ShapeError("conv2d: bias size does not match output channels");
  const Index out_h = (height + 2 * opt.pad - kh) / opt.stride + 1;
  const Index out_w = (width + 2 * opt.pad - kw) / opt.stride + 1;
  if (out_h < 1 || out_w < 1 || height + 2 * opt.pad < kh || width + 2 * opt.pad < kw) {
    throw ShapeError("conv2d: input " + to_string(X.shape()) + " too small for kernel");
  }
  const Index positions = out_h * out_w;
  const Index taps = kh * kw;
  const Index k = cin * taps;
  const bool pointwise = kh == 1 && kw == 1 && opt.stride == 1 && opt.pad == 0;

  auto table = std::make_shared<std::vector<Index>>(
      pointwise ? std::vector<Index>{} : im2col_table(height, width, kh, kw, out_h, out_w, opt));
  const bool keep_cols = grad_recording() && !pointwise && (weight.requires_grad() || bias.requires_grad());
  auto cols = std::make_shared<std::vector<RowMatrix<T>>>();
  if (keep_cols) cols->resize(static_cast<std::size_t>(n_batch));

  auto build_col = [&X, &table, cin, taps, positions, height, width](Index n, RowMatrix<T>& col) {
    col.resize(cin * taps, positions);
    const T* src = X.raw() + n * cin * height * width;
    for (Index c = 0; c < cin; ++c) {
      const T* plane = src + c * height * width;
      for (Index t = 0; t < taps; ++t) {
        T* dst = col.data() + (c * taps + t) * positions;
        const Index* idx = table->data() + t * positions;
        for (Index p = 0; p < positions; ++p) dst[p] = idx[p] >= 0 ? plane[idx[p]] : T(0);
      }
    }
  };

  Tensor<T> out({n_batch, cout, out_h, out_w});
  const auto wm = weight.value().matrix(cout, k);
  const auto bv = bias.value().data();
  RowMatrix<T> scratch;
  for (Index n = 0; n < n_batch; ++n) {
    auto dst = out.matrix(cout, positions, n * cout * positions);
    if (pointwise) {
      dst.noalias() = wm * X.matrix(cin, positions, n * cin * positions);
    } else {
      RowMatrix<T>& col = keep_cols ? (*cols)[static_cast<std::size_t>(n)] : scratch;
      build_col(n, col);
      dst.noalias() = wm * col;
    }
    dst.colwise() += bv;
  }

  return Var<T>::make(
      std::move(out), {x, weight, bias},
      [x, weight, bias, table, cols, pointwise, n_batch, cin, cout, taps, k, positions, height,
       width](const Tensor<T>& g) {
        const Tensor<T>& X = x.value();
        auto* gx = x.grad_target();
        auto* gw = weight.grad_target();
        auto* gb = bias.grad_target();
        const auto wm = weight.value().matrix(cout, k);
        RowMatrix<T> dcol;
        for (Index n = 0; n < n_batch; ++n) {
          const auto gn = g.matrix(cout, positions, n * cout * positions);
          if (gb) gb->data() += gn.rowwise().sum();
          if (gw) {
            auto gwm = gw->matrix(cout, k);
            if (pointwise) {
              gwm.noalias() += gn * X.matrix(cin, positions, n * cin * positions).transpose();
            } else {
              gwm.noalias() += gn * (*cols)[static_cast<std::size_t>(n)].transpose();
            }
          }
          if (!gx) continue;
          if (pointwise) {
            gx->matrix(cin, positions, n * cin * positions).noalias() += wm.transpose() * gn;
            continue;
          }
          dcol.noalias() = wm.transpose() * gn;
          T* dst = gx->raw() + n * cin * height * width;
          for (Index c = 0; c < cin; ++c) {
            T* plane = dst + c * height * width;
            for (Index t = 0; t < taps; ++t) {
              const T* src = dcol.data() + (c * taps + t) * positions;
              const Index* idx = table->data() + t * positions;
              for (Index p = 0; p < positions; ++p) {
                if (idx[p] >= 0) plane[idx[p]] += src[p];
              }
            }
          }
        }
      });
}

template <typename T>
Var<T> max_pool2(const Var<T>& x) {
  const Tensor<T>& X = x.value();
  require_rank4(X, "max_pool2");
  const Index planes = X.dim(0) * X.dim(1), height = X.dim(2), width = X.dim(3);
  const Index out_h = height / 2, out_w = width / 2;
  if (out_h < 1 || out_w < 1) throw ShapeError("max_pool2: input smaller than 2×2");
  Tensor<T> out({X.dim(0), X.dim(1), out_h, out_w});
  auto argmax = std::make_shared<std::vector<Index>>(static_cast<std::size_t>(out.size()));
  Index o = 0;
  for (Index p = 0; p < planes; ++p) {
    const Index base = p * height * width;
    for (Index h = 0; h < out_h; ++h) {
      for (Index w = 0; w < out_w; ++w, ++o) {
        Index best = base + 2 * h * width + 2 * w;
        for (Index dh = 0; dh < 2; ++dh) {
          for (Index dw = 0; dw < 2; ++dw) {
            const Index i = base + (2 * h + dh) * width + 2 * w + dw;
            if (X[i] > X[best]) best = i;
          }
        }
        out[o] = X[best];
        (*argmax)[static_cast<std::size_t>(o)] = best;
      }
    }
  }
  return Var<T>::make(std::move(out), {x}, [x, argmax](const Tensor<T>& g) {
    auto* gx = x.grad_target();
    if (!gx) return;
    for (Index o = 0; o < g.size(); ++o) (*gx)[(*argmax)[static_cast<std::size_t>(o)]] += g[o];
  });
}

template <typename T>
Var<T> avg_pool3_s2(const Var<T>& x) {
  const Tensor<T>& X = x.value();
  require_rank4(X, "avg_pool3_s2");
  const Index planes = X.dim(0) * X.dim(1), height = X.dim(2), width = X.dim(3);
  const Index out_h = (height - 1) / 2 + 1, out_w = (width - 1) / 2 + 1;
  Tensor<T> out({X.dim(0), X.dim(1), out_h, out_w});
  auto window = [height, width](Index oh, Index ow, auto&& visit) {
    const Index h0 = std::max<Index>(2 * oh - 1, 0), h1 = std::min<Index>(2 * oh + 1, height - 1);
    const Index w0 = std::max<Index>(2 * ow - 1, 0), w1 = std::min<Index>(2 * ow + 1, width - 1);
    const Index count = (h1 - h0 + 1) * (w1 - w0 + 1);
    for (Index h = h0; h <= h1; ++h)
      for (Index w = w0; w <= w1; ++w) visit(h * width + w, count);
  };
  Index o = 0;
  for (Index p = 0; p < planes; ++p) {
    const T* plane = X.raw() + p * height * width;
    for (Index oh = 0; oh < out_h; ++oh) {
      for (Index ow = 0; ow < out_w; ++ow, ++o) {
        T acc = 0;
        Index n = 1;
        window(oh, ow, [&](Index i, Index count) {
          acc += plane[i];
          n = count;
        });
        out[o] = acc / static_cast<T>(n);
      }
    }
  }
  return Var<T>::make(std::move(out), {x}, [x, planes, height, width, out_h, out_w, window](const Tensor<T>& g) {
    auto* gx = x.grad_target();
    if (!gx) return;
    Index o = 0;
    for (Index p = 0; p < planes; ++p) {
      T* plane = gx->raw() + p * height * width;
      for (Index oh = 0; oh < out_h; ++oh) {
        for (Index ow = 0; ow < out_w; ++ow, ++o) {
          const T go = g[o];
          window(oh, ow, [&](Index i, Index count) { plane[i] += go / static_cast<T>(count); });
        }
      }
    }
  });
}

template <typename T>
Var<T> resize_nearest(const Var<T>& x, Index out_h, Index out_w) {
  const Tensor<T>& X = x.value();
  require_rank4(X, "resize_nearest");
  if (out_h < 1 || out_w < 1) throw ShapeError("resize_nearest: empty target grid");
  const Index planes = X.dim(0) * X.dim(1), height = X.dim(2), width = X.dim(3);
  if (out_h == height && out_w == width) return reshape(x, X.shape());
  auto index = std::make_shared<std::vector<Index>>(static_cast<std::size_t>(out_h * out_w));
  for (Index h = 0; h < out_h; ++h) {
    const Index sh = h * height / out_h;
    for (Index w = 0; w < out_w; ++w) (*index)[static_cast<std::size_t>(h * out_w + w)] = sh * width + w * width / out_w;
  }
  Tensor<T> out({X.dim(0), X.dim(1), out_h, out_w});
  const Index plane_out = out_h * out_w, plane_in = height * width;
  for (Index p = 0; p < planes; ++p) {
    for (Index i = 0; i < plane_out; ++i) out[p * plane_out + i] = X[p * plane_in + (*index)[static_cast<std::size_t>(i)]];
  }
  return Var<T>::make(std::move(out), {x}, [x, index, planes, plane_in, plane_out](const Tensor<T>& g) {
    auto* gx = x.grad_target();
    if (!gx) return;
    for (Index p = 0; p < planes; ++p) {
      for (Index i = 0; i < plane_out; ++i) (*gx)[p * plane_in + (*index)[static_cast<std::size_t>(i)]] += g[p * plane_out + i];
    }
  });
}

template <typename T>
Var<T> upsample_nearest(const Var<T>& x, Index factor) {
  require_rank4(x.value(), "upsample_nearest");
  if (factor < 1) throw ShapeError("upsample_nearest: factor must be positive");
  return resize_nearest(x, x.dim(2) * factor, x.dim(3) * factor);
}

template <typename T>
Var<T> channel_norm(const Var<T>& x, T eps) {
  const Tensor<T>& X = x.value();
  require_rank4(X, "channel_norm");
  const Index planes = X.dim(0) * X.dim(1), positions = X.dim(2) * X.dim(3);
  if (positions < 1) throw ShapeError("channel_norm: empty spatial grid");
  Tensor<T> out(X.shape());
  auto inv_std = std::make_shared<Vec<T>>(planes);
  for (Index p = 0; p < planes; ++p) {
    const auto seg = X.data().segment(p * positions, positions);
    const T mu = seg.mean();
    const T var = (seg.array() - mu).square().mean();
    const T inv = T(1) / std::sqrt(var + eps);
    (*inv_std)[p] = inv;
    out.data().segment(p * positions, positions) = ((seg.array() - mu) * inv).matrix();
  }
  Tensor<T> y = out;
  return Var<T>::make(std::move(out), {x}, [x, y, inv_std, planes, positions](const Tensor<T>& g) {
    auto* gx = x.grad_target();
    if (!gx) return;
    for (Index p = 0; p < planes; ++p) {
      const auto gs = g.data().segment(p * positions, positions).array();
      const auto ys = y.data().segment(p * positions, positions).array();
      const T g_mean = gs.mean();
      const T gy_mean = (gs * ys).mean();
      gx->data().segment(p * positions, positions).array() += (*inv_std)[p] * (gs - g_mean - ys * gy_mean);
    }
  });
}

template <typename T>
Var<T> channel_mean(const Var<T>& x) {
  const Tensor<T>& X = x.value();
  require_rank4(X, "channel_mean");
  const Index planes = X.dim(0) * X.dim(1), positions = X.dim(2) * X.dim(3);
  Tensor<T> out({X.dim(0), X.dim(1)});
  for (Index p = 0; p < planes; ++p) out[p] = X.data().segment(p * positions, positions).mean();
  return Var<T>::make(std::move(out), {x}, [x, planes, positions](const Tensor<T>& g) {
    auto* gx = x.grad_target();
    if (!gx) return;
    for (Index p = 0; p < planes; ++p) gx->data().segment(p * positions, positions).array() += g[p] / static_cast<T>(positions);
  });
}

template <typename T>
Var<T> channel_std(const Var<T>& x, T eps) {
  const Tensor<T>& X = x.value();
  require_rank4(X, "channel_std");
  const Index planes = X.dim(0) * X.dim(1), positions = X.dim(2) * X.dim(3);
  Tensor<T> out({X.dim(0), X.dim(1)});
  auto means = std::make_shared<Vec<T>>(planes);
  for (Index p = 0; p < planes; ++p) {
    const auto seg = X.data().segment(p * positions, positions);
    (*means)[p] = seg.mean();
    out[p] = std::sqrt((seg.array() - (*means)[p]).square().mean() + eps);
  }
  Tensor<T> stds = out;
  return Var<T>::make(std::move(out), {x}, [x, means, stds, planes, positions](const Tensor<T>& g) {
    auto* gx = x.grad_target();
    if (!gx) return;
    for (Index p = 0; p < planes; ++p) {
      const T factor = g[p] / (static_cast<T>(positions) * stds[p]);
      gx->data().segment(p * positions, positions).array() +=
          factor * (x.value().data().segment(p * positions, positions).array() - (*means)[p]);
    }
  });
}

template <typename T>
Var<T> batch_matmul(const Var<T>& a, const Var<T>& b, bool ta, bool tb) {
  if (a.value().rank() != 3 || b.value().rank() != 3 || a.dim(0) != b.dim(0)) {
    throw ShapeError("batch_matmul: expected two N×R×C tensors with equal N, got " + to_string(a.shape()) +
                     " and " + to_string(b.shape()));
  }
  const Index n = a.dim(0);
  const Index ar = a.dim(1), ac = a.dim(2), br = b.dim(1), bc = b.dim(2);
  const Index m = ta ? ac : ar, inner_a = ta ? ar : ac;
  const Index inner_b = tb ? bc : br, p = tb ? br : bc;
  if (inner_a != inner_b) {
    throw ShapeError("batch_matmul: inner dimensions differ (" + std::to_string(inner_a) + " vs " +
                     std::to_string(inner_b) + ")");
  }
  Tensor<T> out({n, m, p});
  for (Index i = 0; i < n; ++i) {
    const auto am = a.value().matrix(ar, ac, i * ar * ac);
    const auto bm = b.value().matrix(br, bc, i * br * bc);
    auto om = out.matrix(m, p, i * m * p);
    if (!ta && !tb) om.noalias() = am * bm;
    if (ta && !tb) om.noalias() = am.transpose() * bm;
    if (!ta && tb) om.noalias() = am * bm.transpose();
    if (ta && tb) om.noalias() = am.transpose() * bm.transpose();
  }
  return Var<T>::make(std::move(out), {a, b}, [a, b, ta, tb, n, ar, ac, br, bc, m, p](const Tensor<T>& g) {
    auto* ga = a.grad_target();
    auto* gb = b.grad_target();
    for (Index i = 0; i < n; ++i) {
      const auto gm = g.matrix(m, p, i * m * p);
      const auto am = a.value().matrix(ar, ac, i * ar * ac);
      const auto bm = b.value().matrix(br, bc, i * br * bc);
      if (ga) {
        auto gam = ga->matrix(ar, ac, i * ar * ac);
        if (!ta && !tb) gam.noalias() += gm * bm.transpose();
        if (ta && !tb) gam.noalias() += bm * gm.transpose();
        if (!ta && tb) gam.noalias() += gm * bm;
        if (ta && tb) gam.noalias() += bm.transpose() * gm.transpose();
      }
      if (gb) {
        auto gbm = gb->matrix(br, bc, i * br * bc);
        if (!ta && !tb) gbm.noalias() += am.transpose() * gm;
        if (ta && !tb) gbm.noalias() += am * gm;
        if (!ta && tb) gbm.noalias() += gm.transpose() * am;
        if (ta && tb) gbm.noalias() += gm.transpose() * am.transpose();
      }
    }
  });
}

template <typename T>
Var<T> softmax_rows(const Var<T>& x) {
  const Tensor<T>& X = x.value();
  if (X.rank() < 1) throw ShapeError("softmax_rows: scalar input");
  const Index cols = X.shape().back();
  const Index rows = X.size() / cols;
  Tensor<T> out(X.shape());
  auto om = out.matrix(rows, cols);
  const auto xm = X.matrix(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const T peak = xm.row(r).maxCoeff();
    om.row(r) = (xm.row(r).array() - peak).exp().matrix();
    om.row(r) /= om.row(r).sum();
  }
  Tensor<T> y = out;
  return Var<T>::make(std::move(out), {x}, [x, y, rows, cols](const Tensor<T>& g) {
    auto* gx = x.grad_target();
    if (!gx) return;
    const auto ym = y.matrix(rows, cols);
    const auto gm = g.matrix(rows, cols);
    auto gxm = gx->matrix(rows, cols);
    for (Index r = 0; r < rows; ++r) {
      const T dot = gm.row(r).dot(ym.row(r));
      gxm.row(r).array() += ym.row(r).array() * (gm.row(r).array() - dot);
    }
  });
}

#define AESUST_INSTANTIATE_OPS(T)                                                           \
  template Var<T> add(const Var<T>&, const Var<T>&);                                       \
  template Var<T> sub(const Var<T>&, const Var<T>&);                                       \
  template Var<T> mul(const Var<T>&, const Var<T>&);                                       \
  template Var<T> scale(const Var<T>&, T);                                                 \
  template Var<T> reshape(const Var<T>&, Shape);                                           \
  template Var<T> relu(const Var<T>&);                                                     \
  template Var<T> leaky_relu(const Var<T>&, T);                                            \
  template Var<T> sum(const Var<T>&);                                                      \
  template Var<T> mean(const Var<T>&);                                                     \
  template Var<T> l2_norm_per_sample(const Var<T>&);                                       \
  template Var<T> neg_log_sigmoid(const Var<T>&, T);                                       \
  template Var<T> conv2d(const Var<T>&, const Var<T>&, const Var<T>&, const ConvOptions&); \
  template Var<T> max_pool2(const Var<T>&);                                                \
  template Var<T> avg_pool3_s2(const Var<T>&);                                             \
  template Var<T> upsample_nearest(const Var<T>&, Index);                                  \
  template Var<T> resize_nearest(const Var<T>&, Index, Index);                             \
  template Var<T> channel_norm(const Var<T>&, T);                                          \
  template Var<T> channel_mean(const Var<T>&);                                             \
  template Var<T> channel_std(const Var<T>&, T);                                           \
  template Var<T> batch_matmul(const Var<T>&, const Var<T>&, bool, bool);                  \
  template Var<T> softmax_rows(const Var<T>&);

AESUST_INSTANTIATE_OPS(float)
AESUST_INSTANTIATE_OPS(double)

}  // namespace aesust
