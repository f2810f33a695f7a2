#include "aesust/oracles.hpp"

#include <cmath>
#include <vector>

namespace aesust::oracle {

namespace {

Index reflect(Index i, Index n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
  return i;
}

}  // namespace

Tensor<double> conv2d(const Tensor<double>& x, const Tensor<double>& weight, const Tensor<double>& bias, Index stride,
                      Index pad, PadMode mode) {
  const Index n = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
  const Index cout = weight.dim(0), k = weight.dim(2);
  const Index oh = (h + 2 * pad - k) / stride + 1, ow = (w + 2 * pad - k) / stride + 1;
  Tensor<double> out({n, cout, oh, ow});
  for (Index b = 0; b < n; ++b)
    for (Index o = 0; o < cout; ++o)
      for (Index y = 0; y < oh; ++y)
        for (Index xx = 0; xx < ow; ++xx) {
          double acc = bias[o];
          for (Index c = 0; c < cin; ++c)
            for (Index ky = 0; ky < k; ++ky)
              for (Index kx = 0; kx < k; ++kx) {
                Index sy = y * stride + ky - pad, sx = xx * stride + kx - pad;
                if (mode == PadMode::Reflect) {
                  sy = reflect(sy, h);
                  sx = reflect(sx, w);
                } else if (sy < 0 || sy >= h || sx < 0 || sx >= w) {
                  continue;
                }
                acc += weight(o, c, ky, kx) * x(b, c, sy, sx);
              }
          out(b, o, y, xx) = acc;
        }
  return out;
}

std::array<Tensor<double>, 5> encode(const Encoder<double>& encoder, const Tensor<double>& image) {
  std::array<Tensor<double>, 5> taps;
  Tensor<double> x = image;
  const auto& stages = encoder.stages();
  for (std::size_t s = 0; s < stages.size(); ++s) {
    if (s > 0) {
      Tensor<double> pooled({x.dim(0), x.dim(1), x.dim(2) / 2, x.dim(3) / 2});
      for (Index b = 0; b < x.dim(0); ++b)
        for (Index c = 0; c < x.dim(1); ++c)
          for (Index y = 0; y < pooled.dim(2); ++y)
            for (Index xx = 0; xx < pooled.dim(3); ++xx)
              pooled(b, c, y, xx) = std::max({x(b, c, 2 * y, 2 * xx), x(b, c, 2 * y, 2 * xx + 1),
                                              x(b, c, 2 * y + 1, 2 * xx), x(b, c, 2 * y + 1, 2 * xx + 1)});
      x = pooled;
    }
    for (std::size_t k = 0; k < stages[s].size(); ++k) {
      const Conv2d<double>& conv = stages[s][k];
      x = conv2d(x, conv.weight.value(), conv.bias.value(), 1, 1, PadMode::Zero);
      for (Index i = 0; i < x.size(); ++i) x[i] = std::max(0.0, x[i]);
      if (k == 0) taps[s] = x;
    }
  }
  return taps;
}

Tensor<double> channel_norm(const Tensor<double>& x, double eps) {
  Tensor<double> out(x.shape());
  const Index hw = x.dim(2) * x.dim(3);
  for (Index b = 0; b < x.dim(0); ++b)
    for (Index c = 0; c < x.dim(1); ++c) {
      double mu = 0;
      for (Index i = 0; i < hw; ++i) mu += x(b, c, i / x.dim(3), i % x.dim(3));
      mu /= hw;
      double var = 0;
      for (Index i = 0; i < hw; ++i) {
        const double d = x(b, c, i / x.dim(3), i % x.dim(3)) - mu;
        var += d * d;
      }
      var /= hw;
      for (Index i = 0; i < hw; ++i) {
        out(b, c, i / x.dim(3), i % x.dim(3)) = (x(b, c, i / x.dim(3), i % x.dim(3)) - mu) / std::sqrt(var + eps);
      }
    }
  return out;
}

namespace {

// 1×1 convolution as a per-position channel mix, returned as N×C×(HW).
std::vector<std::vector<std::vector<double>>> pointwise(const Conv2d<double>& conv, const Tensor<double>& x) {
  const Index n = x.dim(0), cin = x.dim(1), hw = x.dim(2) * x.dim(3), cout = conv.out_channels();
  std::vector<std::vector<std::vector<double>>> out(n, std::vector<std::vector<double>>(cout, std::vector<double>(hw)));
  for (Index b = 0; b < n; ++b)
    for (Index o = 0; o < cout; ++o)
      for (Index p = 0; p < hw; ++p) {
        double acc = conv.bias.value()[o];
        for (Index c = 0; c < cin; ++c) acc += conv.weight.value()(o, c, 0, 0) * x[(b * cin + c) * hw + p];
        out[b][o][p] = acc;
      }
  return out;
}

void softmax_in_place(std::vector<double>& row) {
  double m = row[0];
  for (double v : row) m = std::max(m, v);
  double z = 0;
  for (double& v : row) {
    v = std::exp(v - m);
    z += v;
  }
  for (double& v : row) v /= z;
}

}  // namespace

AesSAOracle aessa(const Tensor<double>& content, const Tensor<double>& style, const Tensor<double>& aesthetic,
                  const AesSAParams<double>& p) {
  const Index n = style.dim(0), c = style.dim(1), hs = style.dim(2), ws = style.dim(3);
  const Index hc = content.dim(2), wc = content.dim(3);
  const Index ns = hs * ws, nc = hc * wc;
  AesSAOracle r{Tensor<double>(style.shape()), Tensor<double>(content.shape()), Tensor<double>({n, c, c}),
                Tensor<double>({n, nc, ns})};

  // Step I
  const auto a = pointwise(p.f_a, aesthetic);
  const auto s1 = pointwise(p.f_s1, style);
  const auto s2 = pointwise(p.f_s2, style);
  for (Index b = 0; b < n; ++b) {
    std::vector<std::vector<double>> mixed(c, std::vector<double>(ns, 0.0));
    for (Index i = 0; i < c; ++i) {
      std::vector<double> row(c);
      for (Index j = 0; j < c; ++j) {
        double dot = 0;
        for (Index q = 0; q < ns; ++q) dot += a[b][i][q] * s1[b][j][q];
        row[j] = dot;
      }
      softmax_in_place(row);
      for (Index j = 0; j < c; ++j) {
        r.aesthetic_attention[(b * c + i) * c + j] = row[j];
        for (Index q = 0; q < ns; ++q) mixed[i][q] += row[j] * s2[b][j][q];
      }
    }
    for (Index o = 0; o < c; ++o)
      for (Index q = 0; q < ns; ++q) {
        double acc = p.f_out1.bias.value()[o];
        for (Index i = 0; i < c; ++i) acc += p.f_out1.weight.value()(o, i, 0, 0) * mixed[i][q];
        r.enhanced[(b * c + o) * ns + q] = acc + style[(b * c + o) * ns + q];
      }
  }

  // Step II
  const Tensor<double> nc_feat = channel_norm(content, kNormEpsilon);
  const Tensor<double> nsa_feat = channel_norm(r.enhanced, kNormEpsilon);
  const auto q_c = pointwise(p.f_c, nc_feat);
  const auto k_s = pointwise(p.f_sa1, nsa_feat);
  const auto v_s = pointwise(p.f_sa2, r.enhanced);
  for (Index b = 0; b < n; ++b) {
    std::vector<std::vector<double>> mixed(c, std::vector<double>(nc, 0.0));
    for (Index i = 0; i < nc; ++i) {
      std::vector<double> row(ns);
      for (Index j = 0; j < ns; ++j) {
        double dot = 0;
        for (Index ch = 0; ch < c; ++ch) dot += q_c[b][ch][i] * k_s[b][ch][j];
        row[j] = dot;
      }
      softmax_in_place(row);
      for (Index j = 0; j < ns; ++j) {
        r.style_attention[(b * nc + i) * ns + j] = row[j];
        for (Index ch = 0; ch < c; ++ch) mixed[ch][i] += row[j] * v_s[b][ch][j];
      }
    }
    for (Index o = 0; o < c; ++o)
      for (Index q = 0; q < nc; ++q) {
        double acc = p.f_out2.bias.value()[o];
        for (Index i = 0; i < c; ++i) acc += p.f_out2.weight.value()(o, i, 0, 0) * mixed[i][q];
        r.output[(b * c + o) * nc + q] = acc + content[(b * c + o) * nc + q];
      }
  }
  return r;
}

Tensor<double> avg_pool3_s2(const Tensor<double>& x) {
  const Index oh = (x.dim(2) - 1) / 2 + 1, ow = (x.dim(3) - 1) / 2 + 1;
  Tensor<double> out({x.dim(0), x.dim(1), oh, ow});
  for (Index b = 0; b < x.dim(0); ++b)
    for (Index c = 0; c < x.dim(1); ++c)
      for (Index y = 0; y < oh; ++y)
        for (Index xx = 0; xx < ow; ++xx) {
          double acc = 0;
          int count = 0;
          for (Index dy = -1; dy <= 1; ++dy)
            for (Index dx = -1; dx <= 1; ++dx) {
              const Index sy = 2 * y + dy, sx = 2 * xx + dx;
              if (sy < 0 || sy >= x.dim(2) || sx < 0 || sx >= x.dim(3)) continue;
              acc += x(b, c, sy, sx);
              ++count;
            }
          out(b, c, y, xx) = acc / count;
        }
  return out;
}

Tensor<double> upsample_nearest(const Tensor<double>& x, Index factor) {
  Tensor<double> out({x.dim(0), x.dim(1), x.dim(2) * factor, x.dim(3) * factor});
  for (Index b = 0; b < x.dim(0); ++b)
    for (Index c = 0; c < x.dim(1); ++c)
      for (Index y = 0; y < out.dim(2); ++y)
        for (Index xx = 0; xx < out.dim(3); ++xx) out(b, c, y, xx) = x(b, c, y / factor, xx / factor);
  return out;
}

Tensor<double> aesthetic_features(const Discriminator<double>& disc, const Tensor<double>& image) {
  NoGradGuard no_grad;
  const Tensor<double> half = avg_pool3_s2(image);
  const Tensor<double> quarter = avg_pool3_s2(half);
  const Tensor<double> e1 = disc.encoder(0)(Var<double>(image)).value();
  const Tensor<double> e2 = upsample_nearest(disc.encoder(1)(Var<double>(half)).value(), 2);
  const Tensor<double> e3 = upsample_nearest(disc.encoder(2)(Var<double>(quarter)).value(), 4);
  Tensor<double> out(e1.shape());
  for (Index i = 0; i < out.size(); ++i) out[i] = e1[i] + e2[i] + e3[i];
  return out;
}

}  // namespace aesust::oracle
