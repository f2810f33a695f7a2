#include "aesust/checks.hpp"
#include "aesust/discriminator.hpp"
#include "aesust/oracles.hpp"
#include <set>

#include "support.hpp"

using namespace aesust;
using namespace testing_support;

namespace {

Discriminator<double> random_disc(double width, std::uint64_t seed, double scale = 0.2) {
  Discriminator<double> d(DiscriminatorSpec::scaled(width));
  std::mt19937_64 g(seed);
  for (auto p : d.parameters()) p.var.mutable_value() = randn(p.var.shape(), g, scale);
  return d;
}

}  // namespace

TEST(Pyramid, ScalesConstantsAndComposition) {
  std::mt19937_64 g(1);
  const Var<float> img(uniform_image({1, 3, 256, 256}, g));
  const auto p = build_pyramid(img);
  EXPECT_EQ(p[0].shape(), (Shape{1, 3, 256, 256}));
  EXPECT_EQ(p[1].shape(), (Shape{1, 3, 128, 128}));
  EXPECT_EQ(p[2].shape(), (Shape{1, 3, 64, 64}));
  EXPECT_TRUE(bits_equal(build_pyramid(p[1])[1].value(), p[2].value()));

  Tensor<float> flat({1, 3, 64, 32});
  for (Index i = 0; i < flat.size(); ++i) flat[i] = 0.7f;
  for (const auto& level : build_pyramid(Var<float>(flat)))
    for (Index i = 0; i < level.value().size(); ++i) ASSERT_NEAR(level.value()[i], 0.7f, 1e-6f);

  EXPECT_THROW(build_pyramid(Var<float>(Tensor<float>({1, 3, 40, 64}))), ShapeError);
}

TEST(Discriminator, LogitShapesAndDeterminism) {
  Discriminator<float> d(DiscriminatorSpec::scaled(0.125));
  Rng rng(2);
  d.init_random(rng);
  std::mt19937_64 g(2);
  const Var<float> img(uniform_image({1, 3, 256, 256}, g));
  const auto a = d.discriminate(img), b = d.discriminate(img);
  const std::array<Index, 3> side = {16, 8, 4};
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(a[k].shape(), (Shape{1, 1, side[k], side[k]}));
    EXPECT_TRUE(bits_equal(a[k].value(), b[k].value()));
  }
}

TEST(Discriminator, InputMustHoldQuarterScaleEncoder) {
  Discriminator<float> d(DiscriminatorSpec::scaled(0.125));
  EXPECT_THROW(d.discriminate(Var<float>(Tensor<float>({1, 3, 48, 64}))), ShapeError);
  EXPECT_THROW(d.aesthetic_features(Var<float>(Tensor<float>({1, 3, 64, 80}))), ShapeError);
}

TEST(Discriminator, FullWidthFeatureShape) {
  Discriminator<float> d(DiscriminatorSpec::scaled(1.0));
  Rng rng(3);
  d.init_random(rng);
  NoGradGuard no_grad;
  EXPECT_EQ(d.aesthetic_features(Var<float>(Tensor<float>({1, 3, 256, 256}))).shape(), (Shape{1, 512, 16, 16}));
  EXPECT_EQ(d.spec().feature_channels(), 512);
}

TEST(Discriminator, FeaturesMatchManualComposition) {
  const CheckResult r = check_multiscale_features(31);
  EXPECT_TRUE(r.passed) << r.detail;

  const auto d = random_disc(0.125, 4);
  std::mt19937_64 g(4);
  const auto img = uniform_image({1, 3, 128, 64}, g).cast<double>();
  EXPECT_EQ(max_diff(d.aesthetic_features(Var<double>(img)).value(), oracle::aesthetic_features(d, img)), 0.0);
}

TEST(Discriminator, ZeroedCoarseEncodersLeaveFirstScale) {
  auto d = random_disc(0.125, 5);
  for (std::size_t k : {1u, 2u})
    for (auto& conv : d.encoder(k).convs) conv.set_zero();
  std::mt19937_64 g(5);
  const Var<double> img(uniform_image({1, 3, 64, 64}, g).cast<double>());
  // A zeroed encoder ends in InstanceNorm of a constant, then LeakyReLU(0) = 0.
  EXPECT_TRUE(bits_equal(d.aesthetic_features(img).value(), d.encoder(0)(img).value()));
}

TEST(Discriminator, LayerRecipe) {
  const auto d = random_disc(0.125, 6);
  std::mt19937_64 g(6);
  const Var<double> img(uniform_image({1, 3, 64, 64}, g).cast<double>());
  const auto& enc = d.encoder(1);

  auto leaky = [](const Tensor<double>& x) {
    Tensor<double> y(x.shape());
    for (Index i = 0; i < x.size(); ++i) y[i] = x[i] < 0 ? 0.2 * x[i] : x[i];
    return y;
  };
  auto conv = [](const Conv2d<double>& c, const Tensor<double>& x) {
    return oracle::conv2d(x, c.weight.value(), c.bias.value(), 2, 1, PadMode::Zero);
  };
  Tensor<double> h = leaky(conv(enc.convs[0], img.value()));
  for (std::size_t i = 1; i < 4; ++i) {
    const Tensor<double> n = oracle::channel_norm(conv(enc.convs[i], h), kInstanceNormEpsilon);
    const Index hw = n.dim(2) * n.dim(3);
    for (Index c = 0; c < n.dim(1); ++c) {
      double m = 0, v = 0;
      for (Index p = 0; p < hw; ++p) m += n[c * hw + p];
      m /= static_cast<double>(hw);
      for (Index p = 0; p < hw; ++p) v += (n[c * hw + p] - m) * (n[c * hw + p] - m);
      EXPECT_NEAR(m, 0.0, 1e-9);
      if (hw > 1) EXPECT_NEAR(std::sqrt(v / static_cast<double>(hw)), 1.0, 1e-4);
    }
    h = leaky(n);
  }
  EXPECT_LT(max_diff(enc(img).value(), h), 1e-10);
  EXPECT_EQ(h.dim(2), 4);
}

TEST(Discriminator, LeakySlopeIsOneFifth) {
  const auto y = leaky_relu(Var<double>(Tensor<double>::from_values({3}, {-5, -0.5, 2})), kLeakySlope).value();
  EXPECT_DOUBLE_EQ(y[0], -1.0);
  EXPECT_DOUBLE_EQ(y[1], -0.1);
  EXPECT_DOUBLE_EQ(y[2], 2.0);
}

TEST(Discriminator, CriticUpdateMovesAestheticFeatures) {
  Discriminator<float> d(DiscriminatorSpec::scaled(0.125));
  Rng rng(7);
  d.init_random(rng);
  std::mt19937_64 g(7);
  const Var<float> img(uniform_image({1, 3, 64, 64}, g));
  const Tensor<float> before = d.aesthetic_features(img).value();
  // Parameters are handles onto the same tensors the critic uses.
  for (auto p : d.parameters())
    if (p.name == "disc.E1.conv1.weight") p.var.mutable_value()[0] += 1.0f;
  EXPECT_FALSE(bits_equal(before, d.aesthetic_features(img).value()));
  std::set<std::string> names;
  for (const auto& p : d.parameters()) names.insert(p.name);
  EXPECT_TRUE(names.count("disc.E3.conv3.bias"));
  EXPECT_TRUE(names.count("disc.C2.weight"));
}

TEST(Discriminator, InputGradientOfMeanLogit) {
  const auto d = random_disc(0.125, 8);
  std::mt19937_64 g(8);
  const Var<double> img(uniform_image({1, 3, 64, 64}, g).cast<double>(), true);
  const auto reports = finite_difference_check(
      [&] {
        const auto l = d.discriminate(img);
        return scale(add(add(mean(l[0]), mean(l[1])), mean(l[2])), 1.0 / 3.0);
      },
      {{"image", img}}, 256, 8);
  EXPECT_LT(reports.at(0).max_rel_error, kGradientRelTolerance);
}

TEST(Discriminator, ParameterGradients) {
  const auto d = random_disc(0.125, 9);
  std::mt19937_64 g(9);
  const Var<double> img(uniform_image({1, 3, 64, 64}, g).cast<double>());
  const Tensor<double> r = randn({1, 8 * 8, 4, 4}, g);
  const auto reports = finite_difference_check(
      [&] {
        const auto l = d.discriminate(img);
        return add(add(add(mean(l[0]), mean(l[1])), mean(l[2])), sum(mul(d.aesthetic_features(img), Var<double>(r))));
      },
      d.parameters(), 24, 9);
  for (const auto& rep : reports) EXPECT_LT(rep.max_rel_error, kGradientRelTolerance) << rep.name;
}
