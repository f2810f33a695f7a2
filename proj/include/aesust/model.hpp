#pragma once

#include <cstdint>

#include "aesust/aessa.hpp"
#include "aesust/backbone.hpp"
#include "aesust/discriminator.hpp"
#include "aesust/persist.hpp"

namespace aesust {

/// Trainable generator parts: attention at relu4_1 and relu5_1, the shared
/// fusion conv, and the decoder.
template <typename T>
struct Generator {
  AesSAParams<T> r41;
  AesSAParams<T> r51;
  Conv2d<T> fusion;
  Decoder<T> decoder;

  ParameterList<T> parameters() const;
};

/// Frozen encoder, generator and aesthetic discriminator built at one width.
template <typename T>
struct Models {
  double width_multiplier = 1.0;
  int stage = 1;
  Encoder<T> encoder;
  Generator<T> generator;
  Discriminator<T> discriminator;

  /// Seeded initialization; the encoder gets frozen orthogonal weights.
  static Models create(double width_multiplier, std::uint64_t seed);

  ParameterList<T> generator_parameters() const { return generator.parameters(); }
  ParameterList<T> discriminator_parameters() const { return discriminator.parameters(); }
  ParameterList<T> all_parameters() const;
};

template <typename T>
struct GeneratorPass {
  Var<T> image;    // unclamped decoder output
  Var<T> feature;  // fused relu4_1-level feature fed to the decoder
};

/// F_a resized (nearest) onto `level`'s grid.
template <typename T>
Var<T> align_aesthetic(const Var<T>& aesthetic, const Var<T>& level);

/// Fused feature from precomputed pyramids. A null `aesthetic` uses each
/// level's style feature as its aesthetic feature (pre-training mode);
/// otherwise the discriminator feature is aligned to each level's grid.
template <typename T>
Var<T> fused_feature(const Models<T>& models, const FeaturePyramid<T>& content, const FeaturePyramid<T>& style,
                     const Var<T>* aesthetic);

/// Full pipeline. Stage 1 feeds F_s as F_a; stage 2 feeds D_a(I_s).
template <typename T>
GeneratorPass<T> generator_forward(const Models<T>& models, const Var<T>& content, const Var<T>& style, int stage);

template <typename T>
TensorArchive models_to_archive(const Models<T>& models);
/// Rebuilds models from a checkpoint; every tensor must be present with matching shape.
template <typename T>
Models<T> models_from_archive(const TensorArchive& archive);

}  // namespace aesust
