#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "aesust/tensor.hpp"

namespace aesust {

/// 1×3×H×W RGB image, values in [0,1].
using ImageTensor = Tensor<float>;

/// Decodes PNG or JPEG bytes (8-bit channels mapped by /255).
ImageTensor decode_image(std::span<const std::uint8_t> bytes);

/// Decodes a grayscale mask; pixels >= 128 become 1, the rest 0. Shape 1×1×H×W.
Tensor<float> decode_mask(std::span<const std::uint8_t> bytes);

/// PNG encoding of a 1×C×H×W image (C = 1 or 3), clamped to [0,1] and rounded to 8 bits.
std::vector<std::uint8_t> encode_png(const Tensor<float>& image);

/// Bilinear resampling with half-pixel centers.
Tensor<float> resize_bilinear(const Tensor<float>& image, Index height, Index width);

/// Copy of `image` with every element clamped to [0,1].
template <typename T>
Tensor<T> clamp_unit(const Tensor<T>& image) {
  return Tensor<T>(image.shape(), image.data().cwiseMax(T(0)).cwiseMin(T(1)));
}

}  // namespace aesust
