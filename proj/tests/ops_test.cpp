#include "aesust/checks.hpp"
#include "aesust/oracles.hpp"
#include "aesust/ops.hpp"
#include "support.hpp"

using namespace aesust;
using namespace testing_support;

namespace {

double worst(const std::vector<GradientReport>& reps) {
  double w = 0;
  for (const auto& r : reps) w = std::max(w, r.max_rel_error);
  return w;
}

Var<double> leaf(const Tensor<double>& t) { return Var<double>(t, true); }

}  // namespace

TEST(Tensor, ShapeAndIndexing) {
  Tensor<float> t({2, 3, 4, 5});
  EXPECT_EQ(t.size(), 120);
  t(1, 2, 3, 4) = 7.0f;
  EXPECT_EQ(t[119], 7.0f);
  EXPECT_THROW(t.reshaped({7, 7}), ShapeError);
}

TEST(Autograd, NoGradGuardSkipsGraph) {
  const Var<double> x(Tensor<double>::from_values({2}, {1, 2}), true);
  NoGradGuard guard;
  const Var<double> y = sum(mul(x, x));
  EXPECT_FALSE(y.requires_grad());
}

TEST(Autograd, SharedSubexpressionAccumulates) {
  const Var<double> x(Tensor<double>::from_values({1}, {3}), true);
  const Var<double> y = mul(x, x);
  backward(add(y, y));
  EXPECT_DOUBLE_EQ(x.grad()[0], 12.0);
}

TEST(Conv, MatchesLoopOracleBothPaddings) {
  std::mt19937_64 rng(1);
  for (PadMode mode : {PadMode::Zero, PadMode::Reflect}) {
    for (Index stride : {1, 2}) {
      const Tensor<double> x = randn({2, 3, 7, 6}, rng);
      const Tensor<double> w = randn({4, 3, 3, 3}, rng);
      const Tensor<double> b = randn({4}, rng);
      const auto got = conv2d(Var<double>(x), Var<double>(w), Var<double>(b), ConvOptions{stride, 1, mode}).value();
      EXPECT_LT(max_diff(got, oracle::conv2d(x, w, b, stride, 1, mode)), 1e-12);
    }
  }
}

TEST(Conv, RejectsChannelMismatch) {
  const Var<float> x(Tensor<float>({1, 2, 4, 4}));
  const Var<float> w(Tensor<float>({1, 3, 1, 1}));
  EXPECT_THROW(conv2d(x, w, Var<float>(Tensor<float>({1})), ConvOptions{}), ShapeError);
}

TEST(Ops, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(2);
  const Var<double> x = leaf(randn({2, 3, 6, 4}, rng));
  const Var<double> w = leaf(randn({2, 3, 4, 4}, rng));
  const Var<double> b = leaf(randn({2}, rng));
  const Var<double> r = Var<double>(randn({2, 3, 6, 4}, rng));
  ParameterList<double> all{{"x", x}, {"w", w}, {"b", b}};
  const std::vector<std::pair<std::string, std::function<Var<double>()>>> cases{
      {"conv_zero_s2", [&] { return sum(mul(conv2d(x, w, b, ConvOptions{2, 1, PadMode::Zero}), conv2d(x, w, b, ConvOptions{2, 1, PadMode::Zero}))); }},
      {"conv_reflect", [&] { return sum(mul(conv2d(x, w, b, ConvOptions{1, 2, PadMode::Reflect}), conv2d(x, w, b, ConvOptions{1, 2, PadMode::Reflect}))); }},
      {"max_pool", [&] { return sum(mul(max_pool2(x), max_pool2(x))); }},
      {"avg_pool", [&] { return sum(mul(avg_pool3_s2(x), avg_pool3_s2(x))); }},
      {"upsample", [&] { return sum(mul(upsample_nearest(x, 3), upsample_nearest(x, 3))); }},
      {"resize", [&] { return sum(mul(resize_nearest(x, 5, 7), resize_nearest(x, 5, 7))); }},
      {"channel_norm", [&] { return sum(mul(channel_norm(x, 1e-5), r)); }},
      {"channel_std", [&] { return sum(mul(channel_std(x, 1e-5), channel_mean(x))); }},
      {"softmax", [&] { return sum(mul(softmax_rows(reshape(x, {2, 12, 6})), reshape(r, {2, 12, 6}))); }},
      {"matmul", [&] { return sum(batch_matmul(reshape(x, {2, 12, 6}), reshape(r, {2, 12, 6}), true, false)); }},
      {"l2_norm", [&] { return sum(l2_norm_per_sample(x)); }},
      {"neg_log_sigmoid", [&] { return sum(neg_log_sigmoid(x, 1e-7)); }},
      {"leaky", [&] { return sum(mul(leaky_relu(x, 0.2), r)); }},
  };
  for (const auto& [name, f] : cases) {
    EXPECT_LT(worst(finite_difference_check(f, all, 200, 7)), kGradientRelTolerance) << name;
  }
}

TEST(Ops, AvgPoolExcludesPadding) {
  Tensor<double> x({1, 1, 2, 2});
  x.data().setConstant(4.0);
  const auto y = avg_pool3_s2(Var<double>(x)).value();
  ASSERT_EQ(y.shape(), (Shape{1, 1, 1, 1}));
  EXPECT_DOUBLE_EQ(y[0], 4.0);
}

TEST(Ops, NegLogSigmoidClampsAtFloor) {
  const Var<double> x(Tensor<double>::from_values({2}, {-100.0, 0.0}), true);
  const Var<double> y = neg_log_sigmoid(x, 1e-7);
  EXPECT_NEAR(y.value()[0], -std::log(1e-7), 1e-12);
  EXPECT_NEAR(y.value()[1], std::log(2.0), 1e-15);
  backward(sum(y));
  EXPECT_EQ(x.grad()[0], 0.0);
}

TEST(Ops, NormGradientAtZeroIsZero) {
  const Var<double> x(Tensor<double>({1, 4}), true);
  backward(sum(l2_norm_per_sample(x)));
  EXPECT_TRUE(x.grad().data().isZero());
}

TEST(Ops, SoftmaxSurvivesHugeLogits) {
  const auto y = softmax_rows(Var<double>(Tensor<double>::from_values({1, 3}, {1000, 999, -1000}))).value();
  EXPECT_NEAR(y[0] + y[1] + y[2], 1.0, 1e-15);
  EXPECT_TRUE(y.all_finite());
}
