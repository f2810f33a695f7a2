#pragma once

#include <array>

#include "aesust/aessa.hpp"
#include "aesust/backbone.hpp"
#include "aesust/discriminator.hpp"

// Direct-loop reference implementations. None of these call the op library,
// so they can be used to cross-check it.

namespace aesust::oracle {

/// Per-output-pixel convolution with zero or reflect padding.
Tensor<double> conv2d(const Tensor<double>& x, const Tensor<double>& weight, const Tensor<double>& bias, Index stride,
                      Index pad, PadMode mode);

/// Encoder taps recomputed layer by layer with the loop convolution.
std::array<Tensor<double>, 5> encode(const Encoder<double>& encoder, const Tensor<double>& image);

/// Biased-variance channel standardization, ε added to the variance.
Tensor<double> channel_norm(const Tensor<double>& x, double eps);

struct AesSAOracle {
  Tensor<double> enhanced;   // F_sa
  Tensor<double> output;     // F_cs
  Tensor<double> aesthetic_attention;  // N×C×C
  Tensor<double> style_attention;      // N×HcWc×HsWs
};

/// Both attention steps written element by element.
AesSAOracle aessa(const Tensor<double>& content, const Tensor<double>& style, const Tensor<double>& aesthetic,
                  const AesSAParams<double>& params);

/// 3×3 stride-2 average pool, padding 1, padded cells excluded from the divisor.
Tensor<double> avg_pool3_s2(const Tensor<double>& x);
Tensor<double> upsample_nearest(const Tensor<double>& x, Index factor);

/// Summed aesthetic feature assembled from the three scale encoders with loop pooling and upsampling.
Tensor<double> aesthetic_features(const Discriminator<double>& disc, const Tensor<double>& image);

}  // namespace aesust::oracle
