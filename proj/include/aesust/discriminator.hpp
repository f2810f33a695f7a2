#pragma once

#include <array>
#include <cstdint>

#include "aesust/layers.hpp"

namespace aesust {

inline constexpr double kLeakySlope = 0.2;
inline constexpr double kInstanceNormEpsilon = 1e-5;

/// Three identical patch discriminators over an average-pool image pyramid.
/// Per scale: Conv4×4/s2 + LeakyReLU, then three Conv4×4/s2 + InstanceNorm +
/// LeakyReLU blocks (encoder), and a Conv3×3 classifier producing patch logits.
struct DiscriminatorSpec {
  double width_multiplier = 1.0;
  std::array<Index, 4> widths{64, 128, 256, 512};

  static DiscriminatorSpec scaled(double width_multiplier);
  Index feature_channels() const { return widths.back(); }
};

template <typename T>
struct ScaleEncoder {
  std::array<Conv2d<T>, 4> convs;

  Var<T> operator()(const Var<T>& image) const;
};

/// Image pyramid at scales 1, 1/2, 1/4 (H, W must be multiples of 16).
template <typename T>
std::array<Var<T>, 3> build_pyramid(const Var<T>& image);

template <typename T>
class Discriminator {
 public:
  explicit Discriminator(DiscriminatorSpec spec);

  void init_random(Rng& rng);

  // Both entry points need H, W multiples of 64 so the quarter scale holds a full encoder.

  /// Raw patch logits per scale.
  std::array<Var<T>, 3> discriminate(const Var<T>& image) const;

  /// E_1(I) + up2(E_2(I↓2)) + up4(E_3(I↓4)).
  Var<T> aesthetic_features(const Var<T>& image) const;

  const ScaleEncoder<T>& encoder(std::size_t scale) const { return encoders_[scale]; }
  const Conv2d<T>& classifier(std::size_t scale) const { return classifiers_[scale]; }
  ScaleEncoder<T>& encoder(std::size_t scale) { return encoders_[scale]; }
  Conv2d<T>& classifier(std::size_t scale) { return classifiers_[scale]; }

  const DiscriminatorSpec& spec() const { return spec_; }
  ParameterList<T> parameters() const;

 private:
  DiscriminatorSpec spec_;
  std::array<ScaleEncoder<T>, 3> encoders_;
  std::array<Conv2d<T>, 3> classifiers_;
};

}  // namespace aesust
