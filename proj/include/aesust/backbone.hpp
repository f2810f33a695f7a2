#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "aesust/layers.hpp"

namespace aesust {

class TensorArchive;

enum class Tap { relu1_1 = 0, relu2_1, relu3_1, relu4_1, relu5_1 };
inline constexpr std::array<const char*, 5> kTapNames = {"relu1_1", "relu2_1", "relu3_1", "relu4_1", "relu5_1"};
inline constexpr std::array<Index, 5> kTapChannels = {64, 128, 256, 512, 512};

/// Per-level feature maps tapped from the encoder.
template <typename T>
struct FeaturePyramid {
  std::array<Var<T>, 5> taps;

  const Var<T>& operator[](Tap tap) const { return taps[static_cast<std::size_t>(tap)]; }
  Var<T>& operator[](Tap tap) { return taps[static_cast<std::size_t>(tap)]; }
};

/// VGG-19 stage layout up to relu5_1: each stage is a run of 3×3 convs with
/// ReLU, followed by a 2×2 max-pool (the last stage has no pool). The first
/// conv of every stage is a tap.
struct EncoderSpec {
  double width_multiplier = 1.0;
  std::vector<std::vector<Index>> stages;

  static EncoderSpec vgg19(double width_multiplier = 1.0);
  Index tap_channels(Tap tap) const { return stages[static_cast<std::size_t>(tap)].front(); }
};

/// Mirror of the encoder from the relu4_1 level back to RGB. Every pool is
/// replaced by a 2× nearest upsample; convs use reflection padding.
struct DecoderSpec {
  double width_multiplier = 1.0;
  Index input_channels = 512;
  // (in, out) per conv; kUpsample marks an upsampling step.
  std::vector<std::pair<Index, Index>> layers;

  static constexpr Index kUpsample = -1;
  static DecoderSpec mirror_of(const EncoderSpec& encoder);
};

/// Fixed feature extractor. Weights never require gradients, but gradients
/// still flow through it to the input image.
template <typename T>
class Encoder {
 public:
  explicit Encoder(EncoderSpec spec);

  /// Frozen random orthogonal weights (ReLU gain, zero biases).
  static Encoder random_orthogonal(EncoderSpec spec, std::uint64_t seed);

  /// Image must be N×3×H×W with H, W multiples of 16 and finite values.
  FeaturePyramid<T> encode(const Var<T>& image) const;

  const EncoderSpec& spec() const { return spec_; }
  ParameterList<T> parameters() const;
  /// Conv layers in stage order, for oracles that recompute the stack.
  const std::vector<std::vector<Conv2d<T>>>& stages() const { return stages_; }

 private:
  EncoderSpec spec_;
  std::vector<std::vector<Conv2d<T>>> stages_;
};

/// Builds an encoder for `spec` from `archive` (names `encoder.convS_K.{weight,bias}`).
template <typename T>
Encoder<T> load_encoder_weights(const TensorArchive& archive, const EncoderSpec& spec);

template <typename T>
class Decoder {
 public:
  explicit Decoder(DecoderSpec spec);

  void init_random(Rng& rng);

  /// Maps a relu4_1-level feature (C×h×w) to an unclamped 3×8h×8w image.
  Var<T> decode(const Var<T>& feature) const;

  const DecoderSpec& spec() const { return spec_; }
  ParameterList<T> parameters() const;
  std::vector<Conv2d<T>>& convs() { return convs_; }

 private:
  DecoderSpec spec_;
  std::vector<Conv2d<T>> convs_;
};

}  // namespace aesust
