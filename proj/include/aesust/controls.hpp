#pragma once

#include <vector>

#include "aesust/image_io.hpp"
#include "aesust/model.hpp"

namespace aesust {

/// Styles with simplex weights (nonnegative, summing to 1 within 1e-6).
struct StyleBlend {
  std::vector<ImageTensor> styles;
  std::vector<double> weights;
};

/// Binary 1×1×H×W masks at content resolution, one per style. Must be disjoint and cover the grid.
struct RegionMaskSet {
  std::vector<Tensor<float>> masks;
};

inline constexpr double kWeightSumTolerance = 1e-6;

void validate_weights(const std::vector<double>& weights, std::size_t styles);
void validate_masks(const RegionMaskSet& masks, Index height, Index width);
void validate_alpha(double alpha);

/// Nearest-neighbour resize of a mask (or any 4-D tensor).
Tensor<float> resize_mask_nearest(const Tensor<float>& mask, Index height, Index width);

// Every control returns the raw decoder output; clamp before display or export.

/// Pre-decoder feature for content + style at the models' stage.
Tensor<float> stylized_feature(const Models<float>& models, const ImageTensor& content, const ImageTensor& style);
/// F_cc: the content image in the content, style and aesthetic roles.
Tensor<float> reconstruction_feature(const Models<float>& models, const ImageTensor& content);
ImageTensor decode_feature(const Models<float>& models, const Tensor<float>& feature);

/// decode(α F_cs + (1−α) F_cc). α = 1 is the plain forward pass.
ImageTensor stylize(const Models<float>& models, const ImageTensor& content, const ImageTensor& style, double alpha = 1.0);
Tensor<float> blend_alpha(const Tensor<float>& stylized, const Tensor<float>& reconstruction, double alpha);

/// decode(Σ w_i F_cs^(i)); zero-weight styles are not evaluated.
ImageTensor interpolate_styles(const Models<float>& models, const ImageTensor& content, const StyleBlend& blend);

/// Per-channel affine map of `style` onto `content`'s channel means and stds, unclamped.
ImageTensor color_match(const ImageTensor& style, const ImageTensor& content);
/// color_match clamped to [0,1].
ImageTensor color_preserve(const ImageTensor& style, const ImageTensor& content);

/// Σ m_i↓ ⊙ F_cs^(i) with masks resized (nearest) to the feature grid.
Tensor<float> compose_masked(const std::vector<Tensor<float>>& features, const RegionMaskSet& masks);
/// Decodes the mask-composed feature once.
ImageTensor spatial_stylize(const Models<float>& models, const ImageTensor& content,
                            const std::vector<ImageTensor>& styles, const RegionMaskSet& masks);

/// Every control in one call; the order is color matching, per-style features,
/// mask composition or weighted blend, then the α trade-off.
struct ControlSettings {
  std::vector<double> weights;  // empty means uniform 1 for a single style
  double alpha = 1.0;
  bool preserve_color = false;
  RegionMaskSet masks;          // empty means no spatial control
};

ImageTensor apply_controls(const Models<float>& models, const ImageTensor& content,
                           const std::vector<ImageTensor>& styles, const ControlSettings& settings);

}  // namespace aesust
