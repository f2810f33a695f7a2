#include "aesust/discriminator.hpp"

namespace aesust {

namespace {

template <typename T>
void require_pyramid_input(const Var<T>& image, const char* what) {
  require_rank4(image.value(), what);
  if (image.dim(2) % 16 != 0 || image.dim(3) % 16 != 0 || image.dim(2) == 0 || image.dim(3) == 0) {
    throw ShapeError(std::string(what) + ": image size " + std::to_string(image.dim(2)) + "×" +
                     std::to_string(image.dim(3)) + " is not a multiple of 16");
  }
}

// The quarter-scale encoder needs at least 16 pixels per edge, and the summed feature
// needs every scale to land on the same H/16 grid.
template <typename T>
void require_discriminator_input(const Var<T>& image, const char* what) {
  require_pyramid_input(image, what);
  if (image.dim(2) % 64 != 0 || image.dim(3) % 64 != 0) {
    throw ShapeError(std::string(what) + ": image size " + std::to_string(image.dim(2)) + "×" +
                     std::to_string(image.dim(3)) + " is not a multiple of 64");
  }
}

}  // namespace

DiscriminatorSpec DiscriminatorSpec::scaled(double width_multiplier) {
  DiscriminatorSpec spec;
  spec.width_multiplier = width_multiplier;
  for (auto& w : spec.widths) w = scaled_width(w, width_multiplier);
  return spec;
}

template <typename T>
Var<T> ScaleEncoder<T>::operator()(const Var<T>& image) const {
  const T slope = static_cast<T>(kLeakySlope);
  const T eps = static_cast<T>(kInstanceNormEpsilon);
  Var<T> h = leaky_relu(convs[0](image), slope);
  for (std::size_t i = 1; i < convs.size(); ++i) h = leaky_relu(channel_norm(convs[i](h), eps), slope);
  return h;
}

template <typename T>
std::array<Var<T>, 3> build_pyramid(const Var<T>& image) {
  require_pyramid_input(image, "build_pyramid");
  const Var<T> half = avg_pool3_s2(image);
  return {image, half, avg_pool3_s2(half)};
}

template <typename T>
Discriminator<T>::Discriminator(DiscriminatorSpec spec) : spec_(spec) {
  const ConvOptions down{2, 1, PadMode::Zero};
  for (auto& enc : encoders_) {
    Index in = 3;
    for (std::size_t i = 0; i < enc.convs.size(); ++i) {
      enc.convs[i] = Conv2d<T>(in, spec_.widths[i], 4, down);
      in = spec_.widths[i];
    }
  }
  for (auto& cls : classifiers_) cls = Conv2d<T>(spec_.feature_channels(), 1, 3, ConvOptions{1, 1, PadMode::Zero});
}

template <typename T>
void Discriminator<T>::init_random(Rng& rng) {
  for (auto& enc : encoders_) {
    for (auto& conv : enc.convs) conv.init_normal(rng, 0.02);
  }
  for (auto& cls : classifiers_) cls.init_normal(rng, 0.02);
}

template <typename T>
std::array<Var<T>, 3> Discriminator<T>::discriminate(const Var<T>& image) const {
  require_discriminator_input(image, "discriminate");
  const auto pyramid = build_pyramid(image);
  std::array<Var<T>, 3> logits;
  for (std::size_t k = 0; k < 3; ++k) logits[k] = classifiers_[k](encoders_[k](pyramid[k]));
  return logits;
}

template <typename T>
Var<T> Discriminator<T>::aesthetic_features(const Var<T>& image) const {
  require_discriminator_input(image, "aesthetic_features");
  const auto pyramid = build_pyramid(image);
  Var<T> features = encoders_[0](pyramid[0]);
  features = add(features, upsample_nearest(encoders_[1](pyramid[1]), 2));
  return add(features, upsample_nearest(encoders_[2](pyramid[2]), 4));
}

template <typename T>
ParameterList<T> Discriminator<T>::parameters() const {
  ParameterList<T> out;
  for (std::size_t k = 0; k < 3; ++k) {
    const std::string scale = std::to_string(k + 1);
    for (std::size_t i = 0; i < encoders_[k].convs.size(); ++i) {
      encoders_[k].convs[i].append_parameters("disc.E" + scale + ".conv" + std::to_string(i), out);
    }
    classifiers_[k].append_parameters("disc.C" + scale, out);
  }
  return out;
}

template struct ScaleEncoder<float>;
template struct ScaleEncoder<double>;
template class Discriminator<float>;
template class Discriminator<double>;
template std::array<Var<float>, 3> build_pyramid(const Var<float>&);
template std::array<Var<double>, 3> build_pyramid(const Var<double>&);

}  // namespace aesust
