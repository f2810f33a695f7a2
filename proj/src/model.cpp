#include "aesust/model.hpp"

#include <cmath>

namespace aesust {

template <typename T>
ParameterList<T> Generator<T>::parameters() const {
  ParameterList<T> out = r41.parameters("aessa.r41");
  for (auto& p : r51.parameters("aessa.r51")) out.push_back(p);
  fusion.append_parameters("aessa.fusion", out);
  for (auto& p : decoder.parameters()) out.push_back(p);
  return out;
}

template <typename T>
Models<T> Models<T>::create(double width_multiplier, std::uint64_t seed) {
  const EncoderSpec encoder_spec = EncoderSpec::vgg19(width_multiplier);
  const DiscriminatorSpec disc_spec = DiscriminatorSpec::scaled(width_multiplier);
  const Index c41 = encoder_spec.tap_channels(Tap::relu4_1);
  const Index c51 = encoder_spec.tap_channels(Tap::relu5_1);
  const Index ca = disc_spec.feature_channels();

  Rng rng(seed);
  Models<T> m{width_multiplier,
              1,
              Encoder<T>::random_orthogonal(encoder_spec, rng()),
              Generator<T>{AesSAParams<T>::zeros(c41, ca), AesSAParams<T>::zeros(c51, ca), make_fusion_conv<T>(c41),
                           Decoder<T>(DecoderSpec::mirror_of(encoder_spec))},
              Discriminator<T>(disc_spec)};
  m.generator.r41 = AesSAParams<T>::random(c41, ca, rng, 1.0 / std::sqrt(static_cast<double>(c41)));
  m.generator.r51 = AesSAParams<T>::random(c51, ca, rng, 1.0 / std::sqrt(static_cast<double>(c51)));
  m.generator.fusion.init_he(rng);
  m.generator.decoder.init_random(rng);
  m.discriminator.init_random(rng);
  return m;
}

template <typename T>
ParameterList<T> Models<T>::all_parameters() const {
  ParameterList<T> out = encoder.parameters();
  for (auto& p : generator.parameters()) out.push_back(p);
  for (auto& p : discriminator.parameters()) out.push_back(p);
  return out;
}

template <typename T>
Var<T> align_aesthetic(const Var<T>& aesthetic, const Var<T>& level) {
  return resize_nearest(aesthetic, level.dim(2), level.dim(3));
}

template <typename T>
Var<T> fused_feature(const Models<T>& models, const FeaturePyramid<T>& content, const FeaturePyramid<T>& style,
                     const Var<T>* aesthetic) {
  const Var<T>& s41 = style[Tap::relu4_1];
  const Var<T>& s51 = style[Tap::relu5_1];
  const Var<T> a41 = aesthetic ? align_aesthetic(*aesthetic, s41) : s41;
  const Var<T> a51 = aesthetic ? align_aesthetic(*aesthetic, s51) : s51;
  const Var<T> f41 = aessa_forward(content[Tap::relu4_1], s41, a41, models.generator.r41);
  const Var<T> f51 = aessa_forward(content[Tap::relu5_1], s51, a51, models.generator.r51);
  return multi_level_fuse(f41, f51, models.generator.fusion);
}

template <typename T>
GeneratorPass<T> generator_forward(const Models<T>& models, const Var<T>& content, const Var<T>& style, int stage) {
  if (stage != 1 && stage != 2) throw ConfigError("generator_forward: stage must be 1 or 2");
  const FeaturePyramid<T> pc = models.encoder.encode(content);
  const FeaturePyramid<T> ps = models.encoder.encode(style);
  Var<T> feature;
  if (stage == 1) {
    feature = fused_feature(models, pc, ps, static_cast<const Var<T>*>(nullptr));
  } else {
    const Var<T> fa = models.discriminator.aesthetic_features(style);
    feature = fused_feature(models, pc, ps, &fa);
  }
  return {models.generator.decoder.decode(feature), feature};
}

template <typename T>
TensorArchive models_to_archive(const Models<T>& models) {
  TensorArchive archive;
  archive.set_scalar("meta.width_multiplier", models.width_multiplier);
  archive.set_scalar("meta.stage", models.stage);
  store_parameters(models.all_parameters(), archive);
  return archive;
}

template <typename T>
Models<T> models_from_archive(const TensorArchive& archive) {
  const auto width = archive.scalar("meta.width_multiplier");
  const auto stage = archive.scalar("meta.stage");
  if (!width || !stage) throw ConfigError("checkpoint is missing meta.width_multiplier or meta.stage");
  Models<T> models = Models<T>::create(*width, 0);
  models.stage = static_cast<int>(*stage);
  load_parameters(models.all_parameters(), archive);
  return models;
}

#define AESUST_INSTANTIATE_MODEL(T)                                                                           \
  template struct Generator<T>;                                                                               \
  template struct Models<T>;                                                                                  \
  template Var<T> align_aesthetic(const Var<T>&, const Var<T>&);                                              \
  template Var<T> fused_feature(const Models<T>&, const FeaturePyramid<T>&, const FeaturePyramid<T>&, const Var<T>*); \
  template GeneratorPass<T> generator_forward(const Models<T>&, const Var<T>&, const Var<T>&, int);          \
  template TensorArchive models_to_archive(const Models<T>&);                                                 \
  template Models<T> models_from_archive(const TensorArchive&);

AESUST_INSTANTIATE_MODEL(float)
AESUST_INSTANTIATE_MODEL(double)

}  // namespace aesust
