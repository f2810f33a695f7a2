#include "aesust/controls.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace aesust {

void validate_weights(const std::vector<double>& weights, std::size_t styles) {
  if (weights.empty() || weights.size() != styles) {
    throw ValidationError("expected " + std::to_string(styles) + " weights, got " + std::to_string(weights.size()));
  }
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0) throw ValidationError("weights must be nonnegative");
  }
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(sum - 1.0) > kWeightSumTolerance) {
    throw ValidationError("weights must sum to 1 (got " + std::to_string(sum) + ")");
  }
}

void validate_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in [0,1]");
}

void validate_masks(const RegionMaskSet& set, Index height, Index width) {
  if (set.masks.empty()) throw ValidationError("mask set is empty");
  Tensor<float> coverage({1, 1, height, width});
  for (std::size_t i = 0; i < set.masks.size(); ++i) {
    const Tensor<float>& m = set.masks[i];
    if (m.shape() != Shape{1, 1, height, width}) {
      throw ValidationError("mask " + std::to_string(i) + " has shape " + to_string(m.shape()) +
                            ", expected content size " + to_string(Shape{1, 1, height, width}));
    }
    for (Index k = 0; k < m.size(); ++k) {
      if (m[k] != 0.0f && m[k] != 1.0f) throw ValidationError("mask " + std::to_string(i) + " is not binary");
      coverage[k] += m[k];
    }
  }
  for (Index k = 0; k < coverage.size(); ++k) {
    if (coverage[k] > 1.0f) throw ValidationError("masks overlap at pixel " + std::to_string(k));
    if (coverage[k] < 1.0f) throw ValidationError("masks do not cover pixel " + std::to_string(k));
  }
}

Tensor<float> resize_mask_nearest(const Tensor<float>& mask, Index height, Index width) {
  NoGradGuard no_grad;
  return resize_nearest(Var<float>(mask), height, width).value();
}

Tensor<float> stylized_feature(const Models<float>& models, const ImageTensor& content, const ImageTensor& style) {
  NoGradGuard no_grad;
  const Var<float> ic(content), is(style);
  const auto pc = models.encoder.encode(ic);
  const auto ps = models.encoder.encode(is);
  if (models.stage == 1) return fused_feature(models, pc, ps, static_cast<const Var<float>*>(nullptr)).value();
  const Var<float> fa = models.discriminator.aesthetic_features(is);
  return fused_feature(models, pc, ps, &fa).value();
}

Tensor<float> reconstruction_feature(const Models<float>& models, const ImageTensor& content) {
  return stylized_feature(models, content, content);
}

ImageTensor decode_feature(const Models<float>& models, const Tensor<float>& feature) {
  NoGradGuard no_grad;
  return models.generator.decoder.decode(Var<float>(feature)).value();
}

Tensor<float> blend_alpha(const Tensor<float>& stylized, const Tensor<float>& reconstruction, double alpha) {
  validate_alpha(alpha);
  if (stylized.shape() != reconstruction.shape()) throw ShapeError("blend_alpha: feature shapes differ");
  const float a = static_cast<float>(alpha);
  return Tensor<float>(stylized.shape(), a * stylized.data() + (1.0f - a) * reconstruction.data());
}

ImageTensor stylize(const Models<float>& models, const ImageTensor& content, const ImageTensor& style, double alpha) {
  ControlSettings settings;
  settings.alpha = alpha;
  return apply_controls(models, content, {style}, settings);
}

ImageTensor interpolate_styles(const Models<float>& models, const ImageTensor& content, const StyleBlend& blend) {
  ControlSettings settings;
  settings.weights = blend.weights;
  return apply_controls(models, content, blend.styles, settings);
}

ImageTensor color_match(const ImageTensor& style, const ImageTensor& content) {
  require_rank4(style, "color_match");
  require_rank4(content, "color_match");
  if (style.dim(1) != content.dim(1) || style.dim(0) != content.dim(0)) {
    throw ShapeError("color_match: batch or channel mismatch");
  }
  constexpr double eps = 1e-5;
  ImageTensor out(style.shape());
  const Index cs = style.dim(2) * style.dim(3), cc = content.dim(2) * content.dim(3);
  for (Index n = 0; n < style.dim(0); ++n) {
    for (Index c = 0; c < style.dim(1); ++c) {
      const auto s = style.data().segment((n * style.dim(1) + c) * cs, cs).template cast<double>();
      const auto t = content.data().segment((n * content.dim(1) + c) * cc, cc).template cast<double>();
      const double ms = s.mean(), mt = t.mean();
      const double ss = std::sqrt((s.array() - ms).square().mean());
      const double st = std::sqrt((t.array() - mt).square().mean());
      const double gain = st / std::max(ss, eps);
      out.data().segment((n * style.dim(1) + c) * cs, cs) = ((s.array() - ms) * gain + mt).cast<float>().matrix();
    }
  }
  return out;
}

ImageTensor color_preserve(const ImageTensor& style, const ImageTensor& content) {
  return clamp_unit(color_match(style, content));
}

Tensor<float> compose_masked(const std::vector<Tensor<float>>& features, const RegionMaskSet& set) {
  if (features.empty() || features.size() != set.masks.size()) {
    throw ValidationError("need exactly one mask per style");
  }
  const Shape& shape = features.front().shape();
  Tensor<float> out(shape);
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].shape() != shape) throw ShapeError("compose_masked: feature shapes differ");
    const Tensor<float> m = resize_mask_nearest(set.masks[i], shape[2], shape[3]);
    const Index plane = shape[2] * shape[3];
    for (Index nc = 0; nc < shape[0] * shape[1]; ++nc) {
      out.data().segment(nc * plane, plane) +=
          features[i].data().segment(nc * plane, plane).cwiseProduct(m.data().head(plane));
    }
  }
  return out;
}

ImageTensor spatial_stylize(const Models<float>& models, const ImageTensor& content,
                            const std::vector<ImageTensor>& styles, const RegionMaskSet& masks) {
  ControlSettings settings;
  settings.masks = masks;
  return apply_controls(models, content, styles, settings);
}

ImageTensor apply_controls(const Models<float>& models, const ImageTensor& content,
                           const std::vector<ImageTensor>& styles, const ControlSettings& settings) {
  if (styles.empty()) throw ValidationError("at least one style image is required");
  validate_alpha(settings.alpha);
  const bool masked = !settings.masks.masks.empty();
  std::vector<double> weights = settings.weights;
  if (masked) {
    if (!weights.empty()) throw ValidationError("weights and masks cannot be combined");
    if (settings.masks.masks.size() != styles.size()) throw ValidationError("need exactly one mask per style");
    validate_masks(settings.masks, content.dim(2), content.dim(3));
  } else {
    if (weights.empty() && styles.size() == 1) weights = {1.0};
    validate_weights(weights, styles.size());
  }

  std::vector<Tensor<float>> features;
  std::vector<double> used;
  for (std::size_t i = 0; i < styles.size(); ++i) {
    if (!masked && weights[i] == 0.0) continue;
    const ImageTensor style = settings.preserve_color ? color_preserve(styles[i], content) : styles[i];
    features.push_back(stylized_feature(models, content, style));
    if (!masked) used.push_back(weights[i]);
  }

  Tensor<float> feature;
  if (masked) {
    feature = compose_masked(features, settings.masks);
  } else {
    feature = features.front();
    if (used.front() != 1.0) feature.data() *= static_cast<float>(used.front());
    for (std::size_t i = 1; i < features.size(); ++i) feature.data() += static_cast<float>(used[i]) * features[i].data();
  }
  if (settings.alpha != 1.0) feature = blend_alpha(feature, reconstruction_feature(models, content), settings.alpha);
  return decode_feature(models, feature);
}

}  // namespace aesust
