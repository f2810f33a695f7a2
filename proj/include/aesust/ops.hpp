#pragma once

#include "aesust/autograd.hpp"

namespace aesust {

enum class PadMode { Zero, Reflect };

struct ConvOptions {
  Index stride = 1;
  Index pad = 0;
  PadMode pad_mode = PadMode::Zero;
};

// Elementwise and structural ops.
template <typename T> Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> sub(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> scale(const Var<T>& a, T factor);
template <typename T> Var<T> reshape(const Var<T>& a, Shape shape);
template <typename T> Var<T> relu(const Var<T>& a);
template <typename T> Var<T> leaky_relu(const Var<T>& a, T slope);

/// Sum of every element, as a one-element tensor.
template <typename T> Var<T> sum(const Var<T>& a);
template <typename T> Var<T> mean(const Var<T>& a);

/// sqrt of the sum of squares over all dims but the first; shape [N].
/// The gradient at an exactly-zero norm is taken as zero.
template <typename T> Var<T> l2_norm_per_sample(const Var<T>& a);

/// -log(max(sigmoid(x), floor)) elementwise; the clamped region has zero gradient.
template <typename T> Var<T> neg_log_sigmoid(const Var<T>& x, T floor);

// Convolutional ops on N×C×H×W tensors.
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, const ConvOptions& options);
template <typename T> Var<T> max_pool2(const Var<T>& x);
/// 3×3 average pool, stride 2, pad 1; padded taps are excluded from the count.
template <typename T> Var<T> avg_pool3_s2(const Var<T>& x);
template <typename T> Var<T> upsample_nearest(const Var<T>& x, Index factor);
/// Nearest resize with source index floor(dst * in / out).
template <typename T> Var<T> resize_nearest(const Var<T>& x, Index height, Index width);

/// Per-sample, per-channel standardization over spatial positions (variance + eps).
template <typename T> Var<T> channel_norm(const Var<T>& x, T eps);
/// Spatial mean per channel, shape N×C.
template <typename T> Var<T> channel_mean(const Var<T>& x);
/// sqrt(biased spatial variance + eps) per channel, shape N×C.
template <typename T> Var<T> channel_std(const Var<T>& x, T eps);

// Batched matrix ops on N×R×C tensors.
template <typename T>
Var<T> batch_matmul(const Var<T>& a, const Var<T>& b, bool transpose_a, bool transpose_b);
/// Softmax along the last dimension, max-subtracted.
template <typename T> Var<T> softmax_rows(const Var<T>& x);

template <typename T> Var<T> operator+(const Var<T>& a, const Var<T>& b) { return add(a, b); }
template <typename T> Var<T> operator-(const Var<T>& a, const Var<T>& b) { return sub(a, b); }
template <typename T> Var<T> operator*(T s, const Var<T>& a) { return scale(a, s); }

}  // namespace aesust
