#include "aesust/backbone.hpp"

#include <cmath>

#include "aesust/persist.hpp"

namespace aesust {

namespace {

constexpr std::array<Index, 5> kStageLengths = {2, 2, 4, 4, 1};
constexpr std::array<Index, 5> kStageWidths = {64, 128, 256, 512, 512};

std::string encoder_conv_name(std::size_t stage, std::size_t index) {
  return "encoder.conv" + std::to_string(stage + 1) + "_" + std::to_string(index + 1);
}

}  // namespace

EncoderSpec EncoderSpec::vgg19(double width_multiplier) {
  EncoderSpec spec;
  spec.width_multiplier = width_multiplier;
  for (std::size_t s = 0; s < kStageWidths.size(); ++s) {
    spec.stages.emplace_back(static_cast<std::size_t>(kStageLengths[s]), scaled_width(kStageWidths[s], width_multiplier));
  }
  return spec;
}

DecoderSpec DecoderSpec::mirror_of(const EncoderSpec& encoder) {
  DecoderSpec spec;
  spec.width_multiplier = encoder.width_multiplier;
  spec.input_channels = encoder.tap_channels(Tap::relu4_1);
  for (int level = 3; level >= 0; --level) {
    const auto& stage = encoder.stages[static_cast<std::size_t>(level)];
    const Index width = stage.front();
    const Index convs = level == 3 ? 1 : static_cast<Index>(stage.size());
    const Index out = level == 0 ? 3 : encoder.stages[static_cast<std::size_t>(level - 1)].front();
    for (Index k = 0; k < convs; ++k) spec.layers.emplace_back(width, k + 1 == convs ? out : width);
    if (level > 0) spec.layers.emplace_back(kUpsample, kUpsample);
  }
  return spec;
}

template <typename T>
Encoder<T>::Encoder(EncoderSpec spec) : spec_(std::move(spec)) {
  Index in = 3;
  for (const auto& stage : spec_.stages) {
    auto& convs = stages_.emplace_back();
    for (Index width : stage) {
      convs.emplace_back(in, width, 3, ConvOptions{1, 1, PadMode::Zero}, /*trainable=*/false);
      in = width;
    }
  }
}

template <typename T>
Encoder<T> Encoder<T>::random_orthogonal(EncoderSpec spec, std::uint64_t seed) {
  Encoder<T> encoder(std::move(spec));
  Rng rng(seed);
  for (auto& stage : encoder.stages_) {
    for (auto& conv : stage) conv.init_orthogonal(rng, std::sqrt(2.0));
  }
  return encoder;
}

template <typename T>
FeaturePyramid<T> Encoder<T>::encode(const Var<T>& image) const {
  const Tensor<T>& x = image.value();
  require_rank4(x, "encode");
  if (x.dim(1) != 3) throw ShapeError("encode: expected 3 input channels, got " + std::to_string(x.dim(1)));
  if (x.dim(2) % 16 != 0 || x.dim(3) % 16 != 0 || x.dim(2) == 0 || x.dim(3) == 0) {
    throw ShapeError("encode: image size " + std::to_string(x.dim(2)) + "×" + std::to_string(x.dim(3)) +
                     " is not a multiple of 16");
  }
  if (!x.all_finite()) throw NumericError("encode: input image contains non-finite values");

  FeaturePyramid<T> pyramid;
  Var<T> h = image;
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    for (std::size_t k = 0; k < stages_[s].size(); ++k) {
      h = relu(stages_[s][k](h));
      if (k == 0) pyramid.taps[s] = h;
    }
    if (s + 1 < stages_.size()) h = max_pool2(h);
  }
  return pyramid;
}

template <typename T>
ParameterList<T> Encoder<T>::parameters() const {
  ParameterList<T> out;
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    for (std::size_t k = 0; k < stages_[s].size(); ++k) stages_[s][k].append_parameters(encoder_conv_name(s, k), out);
  }
  return out;
}

template <typename T>
Encoder<T> load_encoder_weights(const TensorArchive& archive, const EncoderSpec& spec) {
  Encoder<T> encoder(spec);
  load_parameters(encoder.parameters(), archive);
  return encoder;
}

template <typename T>
Decoder<T>::Decoder(DecoderSpec spec) : spec_(std::move(spec)) {
  for (const auto& [in, out] : spec_.layers) {
    if (in == DecoderSpec::kUpsample) continue;
    convs_.emplace_back(in, out, 3, ConvOptions{1, 1, PadMode::Reflect});
  }
}

template <typename T>
void Decoder<T>::init_random(Rng& rng) {
  for (auto& conv : convs_) conv.init_he(rng);
}

template <typename T>
Var<T> Decoder<T>::decode(const Var<T>& feature) const {
  require_rank4(feature.value(), "decode");
  if (feature.dim(1) != spec_.input_channels) {
    throw ShapeError("decode: expected " + std::to_string(spec_.input_channels) + " channels, got " +
                     std::to_string(feature.dim(1)));
  }
  Var<T> h = feature;
  std::size_t conv = 0;
  for (const auto& [in, out] : spec_.layers) {
    if (in == DecoderSpec::kUpsample) {
      h = upsample_nearest(h, 2);
      continue;
    }
    h = convs_[conv](h);
    if (++conv < convs_.size()) h = relu(h);
  }
  return h;
}

template <typename T>
ParameterList<T> Decoder<T>::parameters() const {
  ParameterList<T> out;
  for (std::size_t i = 0; i < convs_.size(); ++i) convs_[i].append_parameters("decoder.conv" + std::to_string(i), out);
  return out;
}

template class Encoder<float>;
template class Encoder<double>;
template class Decoder<float>;
template class Decoder<double>;
template Encoder<float> load_encoder_weights(const TensorArchive&, const EncoderSpec&);
template Encoder<double> load_encoder_weights(const TensorArchive&, const EncoderSpec&);

}  // namespace aesust
