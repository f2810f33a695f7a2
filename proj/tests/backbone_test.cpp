#include "aesust/backbone.hpp"
#include "aesust/checks.hpp"
#include "aesust/oracles.hpp"
#include "aesust/persist.hpp"
#include "support.hpp"

using namespace aesust;
using namespace testing_support;

namespace {

Tensor<float> constant_image(Index h, Index w, float v) {
  Tensor<float> t({1, 3, h, w});
  for (Index i = 0; i < t.size(); ++i) t[i] = v;
  return t;
}

}  // namespace

TEST(Encoder, TapShapesFollowStrides) {
  const auto enc = Encoder<float>::random_orthogonal(EncoderSpec::vgg19(1.0), 1);
  std::mt19937_64 rng(1);
  const auto taps = enc.encode(Var<float>(uniform_image({1, 3, 64, 48}, rng)));
  for (int k = 0; k < 5; ++k) {
    EXPECT_EQ(taps.taps[k].shape(), (Shape{1, kTapChannels[k], 64 >> k, 48 >> k})) << kTapNames[k];
  }
}

TEST(Encoder, DeepTapsAt256) {
  const auto enc = Encoder<float>::random_orthogonal(EncoderSpec::vgg19(0.125), 1);
  const auto taps = enc.encode(Var<float>(constant_image(256, 256, 0.5f)));
  EXPECT_EQ(taps[Tap::relu4_1].shape(), (Shape{1, 64, 32, 32}));
  EXPECT_EQ(taps[Tap::relu5_1].shape(), (Shape{1, 64, 16, 16}));
  EXPECT_EQ(EncoderSpec::vgg19(1.0).tap_channels(Tap::relu4_1), 512);
  EXPECT_EQ(EncoderSpec::vgg19(1.0).tap_channels(Tap::relu5_1), 512);
}

TEST(Encoder, ConstantInputGivesUniformInterior) {
  const auto enc = Encoder<float>::random_orthogonal(EncoderSpec::vgg19(0.125), 3);
  const auto taps = enc.encode(Var<float>(constant_image(256, 256, 0.3f)));
  // Zero padding disturbs a border that grows by one pixel per conv and halves at each pool.
  const std::array<Index, 5> halo = {1, 2, 3, 4, 5};
  for (int k = 0; k < 5; ++k) {
    const Tensor<float>& t = taps.taps[k].value();
    const Index n = t.dim(2);
    for (Index c = 0; c < t.dim(1); ++c) {
      const float ref = t(0, c, n / 2, n / 2);
      for (Index y = halo[k]; y < n - halo[k]; ++y)
        for (Index x = halo[k]; x < n - halo[k]; ++x)
          ASSERT_NEAR(t(0, c, y, x), ref, 1e-5f * (1 + std::abs(ref))) << kTapNames[k] << " c" << c;
    }
  }
}

TEST(Encoder, MatchesLoopConvolutionOracle) {
  const auto spec = EncoderSpec::vgg19(0.25);
  const auto enc_f = Encoder<float>::random_orthogonal(spec, 11);
  const auto enc_d = Encoder<double>::random_orthogonal(spec, 11);
  std::mt19937_64 rng(5);
  const Tensor<float> img = uniform_image({1, 3, 32, 32}, rng);
  const auto got = enc_f.encode(Var<float>(img));
  const auto want = oracle::encode(enc_d, img.cast<double>());
  for (int k = 0; k < 5; ++k) EXPECT_LT(max_diff(got.taps[k].value().cast<double>(), want[k]), 1e-5) << kTapNames[k];
}

TEST(Encoder, DeterministicAndFrozen) {
  const auto enc = Encoder<float>::random_orthogonal(EncoderSpec::vgg19(0.125), 2);
  std::mt19937_64 rng(2);
  const Var<float> img(uniform_image({1, 3, 32, 32}, rng));
  const auto a = enc.encode(img), b = enc.encode(img);
  for (int k = 0; k < 5; ++k) EXPECT_TRUE(bits_equal(a.taps[k].value(), b.taps[k].value()));
  for (const auto& p : enc.parameters()) EXPECT_FALSE(p.var.requires_grad()) << p.name;
}

TEST(Encoder, RejectsBadInput) {
  const auto enc = Encoder<float>::random_orthogonal(EncoderSpec::vgg19(0.125), 2);
  EXPECT_THROW(enc.encode(Var<float>(constant_image(24, 32, 0.5f))), ShapeError);
  EXPECT_THROW(enc.encode(Var<float>(Tensor<float>({1, 1, 32, 32}))), ShapeError);
  Tensor<float> nan = constant_image(32, 32, 0.5f);
  nan[17] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW(enc.encode(Var<float>(nan)), NumericError);
}

TEST(Encoder, LoadWeights) {
  const auto spec = EncoderSpec::vgg19(0.125);
  const auto enc = Encoder<float>::random_orthogonal(spec, 4);
  TensorArchive a;
  store_parameters(enc.parameters(), a);
  const auto loaded = load_encoder_weights<float>(a, spec);
  std::mt19937_64 rng(3);
  const Var<float> img(uniform_image({1, 3, 32, 32}, rng));
  EXPECT_TRUE(bits_equal(loaded.encode(img)[Tap::relu5_1].value(), enc.encode(img)[Tap::relu5_1].value()));

  TensorArchive missing;
  for (const auto& e : a.entries())
    if (e.name != "encoder.conv3_2.bias") missing.add(e.name, e.tensor);
  try {
    load_encoder_weights<float>(missing, spec);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("encoder.conv3_2.bias"), std::string::npos);
  }

  TensorArchive transposed = a;
  const auto& w = std::get<Tensor<float>>(*a.find("encoder.conv2_1.weight"));
  transposed.set("encoder.conv2_1.weight", Tensor<float>({w.dim(1), w.dim(0), 3, 3}));
  EXPECT_THROW(load_encoder_weights<float>(transposed, spec), ConfigError);

  TensorArchive wrong_dtype = a;
  wrong_dtype.set("encoder.conv1_1.bias", Tensor<double>({8}));
  EXPECT_THROW(load_encoder_weights<float>(wrong_dtype, spec), ConfigError);
}

TEST(Decoder, OutputIsEightTimesInput) {
  Decoder<float> dec(DecoderSpec::mirror_of(EncoderSpec::vgg19(0.125)));
  Rng rng(1);
  dec.init_random(rng);
  const auto out = dec.decode(Var<float>(Tensor<float>({1, 64, 32, 32})));
  EXPECT_EQ(out.shape(), (Shape{1, 3, 256, 256}));

  Decoder<float> full(DecoderSpec::mirror_of(EncoderSpec::vgg19(1.0)));
  EXPECT_EQ(full.spec().input_channels, 512);
  EXPECT_EQ(full.decode(Var<float>(Tensor<float>({1, 512, 4, 4}))).shape(), (Shape{1, 3, 32, 32}));
  for (const auto& p : full.parameters()) EXPECT_TRUE(p.var.requires_grad()) << p.name;
}

TEST(Decoder, RejectsWrongChannels) {
  Decoder<float> dec(DecoderSpec::mirror_of(EncoderSpec::vgg19(0.125)));
  EXPECT_THROW(dec.decode(Var<float>(Tensor<float>({1, 32, 4, 4}))), ShapeError);
}

TEST(Decoder, ZeroFeatureGivesConstantImage) {
  Decoder<float> dec(DecoderSpec::mirror_of(EncoderSpec::vgg19(0.125)));
  Rng rng(9);
  dec.init_random(rng);
  for (auto& conv : dec.convs()) {
    for (Index i = 0; i < conv.bias.value().size(); ++i) conv.bias.mutable_value()[i] = 0.1f * static_cast<float>(i % 3);
  }
  dec.convs().back().bias.mutable_value().set_zero();
  const Tensor<float> out = dec.decode(Var<float>(Tensor<float>({1, 64, 4, 4}))).value();
  ASSERT_TRUE(out.all_finite());
  for (Index c = 0; c < 3; ++c)
    for (Index y = 0; y < 32; ++y)
      for (Index x = 0; x < 32; ++x) ASSERT_NEAR(out(0, c, y, x), out(0, c, 0, 0), 1e-5f);
}

TEST(Decoder, GradientsMatchFiniteDifferences) {
  Decoder<double> dec(DecoderSpec::mirror_of(EncoderSpec::vgg19(8.0 / 512.0)));
  ASSERT_EQ(dec.spec().input_channels, 8);
  Rng rng(4);
  dec.init_random(rng);
  std::mt19937_64 g(4);
  // Nonzero biases keep ReLU inputs of dead regions off the kink at 0.
  for (auto& conv : dec.convs()) conv.bias.mutable_value() = randn(conv.bias.shape(), g, 0.1);
  const Var<double> feature(randn({1, 8, 4, 4}, g), true);
  ParameterList<double> wrt = dec.parameters();
  wrt.push_back({"feature", feature});
  const auto reports = finite_difference_check([&] { return sum(dec.decode(feature)); }, wrt, 48, 4);
  for (const auto& r : reports) EXPECT_LT(r.max_rel_error, kGradientRelTolerance) << r.name;
}
