#include "aesust/aessa.hpp"
#include "aesust/checks.hpp"
#include "aesust/oracles.hpp"
#include <numeric>

#include "support.hpp"

using namespace aesust;
using namespace testing_support;

namespace {

Var<double> var(const Tensor<double>& t, bool grad = false) { return Var<double>(t, grad); }

// Moves spatial position p to perm[p] in every channel.
Tensor<double> permute_spatial(const Tensor<double>& x, const std::vector<Index>& perm) {
  Tensor<double> out(x.shape());
  const Index hw = x.dim(2) * x.dim(3);
  for (Index c = 0; c < x.dim(0) * x.dim(1); ++c)
    for (Index p = 0; p < hw; ++p) out[c * hw + perm[static_cast<std::size_t>(p)]] = x[c * hw + p];
  return out;
}

}  // namespace

TEST(ChannelNorm, HandExamples) {
  const auto constant = channel_norm(var(Tensor<double>::from_values({1, 1, 1, 3}, {4, 4, 4})), kNormEpsilon).value();
  for (Index i = 0; i < 3; ++i) EXPECT_EQ(constant[i], 0.0);
  const auto two = channel_norm(var(Tensor<double>::from_values({1, 1, 1, 2}, {1, 3})), kNormEpsilon).value();
  EXPECT_NEAR(two[0], -1.0, 1e-5);
  EXPECT_NEAR(two[1], 1.0, 1e-5);
}

TEST(ChannelNorm, IdempotentAndStandardized) {
  std::mt19937_64 rng(1);
  const Tensor<double> x = randn({2, 3, 5, 4}, rng, 3.0);
  const auto once = channel_norm(var(x), kNormEpsilon).value();
  const auto twice = channel_norm(var(once), kNormEpsilon).value();
  // The ε guard shrinks a unit-variance channel by 1/sqrt(1+ε).
  double peak = 0;
  for (Index i = 0; i < once.size(); ++i) peak = std::max(peak, std::abs(once[i]));
  EXPECT_LE(max_diff(once, twice), 0.5 * kNormEpsilon * peak + 1e-12);
  const Tensor<double> small = randn({1, 4, 2, 2}, rng, 3.0);
  const auto n1 = channel_norm(var(small), kNormEpsilon);
  EXPECT_LT(max_diff(n1.value(), channel_norm(n1, kNormEpsilon).value()), 1e-5);
  EXPECT_LT(max_diff(once, oracle::channel_norm(x, kNormEpsilon)), 1e-12);
  for (Index c = 0; c < 6; ++c) {
    double m = 0, s = 0;
    for (Index p = 0; p < 20; ++p) m += once[c * 20 + p];
    m /= 20;
    for (Index p = 0; p < 20; ++p) s += (once[c * 20 + p] - m) * (once[c * 20 + p] - m);
    EXPECT_NEAR(m, 0.0, 1e-12);
    EXPECT_NEAR(std::sqrt(s / 20), 1.0, 1e-5);
  }
}

TEST(Vectorize, RoundTripAndShapes) {
  const auto f = Tensor<double>::from_values({1, 2, 2, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
  const auto m = vectorize(var(f));
  EXPECT_EQ(m.shape(), (Shape{1, 2, 4}));
  EXPECT_EQ(m.value()[5], 6.0);
  EXPECT_TRUE(bits_equal(devectorize(m, 2, 2).value(), f));
  EXPECT_THROW(devectorize(m, 3, 2), ShapeError);
  EXPECT_EQ(vectorize(Var<float>(Tensor<float>({1, 512, 32, 32}))).shape(), (Shape{1, 512, 1024}));
}

TEST(AesSA, FullWidthShapes) {
  auto params = AesSAParams<float>::zeros(512, 512);
  const Var<float> fs(Tensor<float>({1, 512, 32, 32}));
  const auto enhanced = aesthetic_enhance(fs, fs, params);
  EXPECT_EQ(enhanced.features.shape(), (Shape{1, 512, 32, 32}));
  EXPECT_EQ(enhanced.attention.shape(), (Shape{1, 512, 512}));

  const auto integrated = style_integrate(fs, Var<float>(Tensor<float>({1, 512, 24, 24})), params);
  EXPECT_EQ(integrated.attention.shape(), (Shape{1, 1024, 576}));
  EXPECT_EQ(integrated.features.shape(), (Shape{1, 512, 32, 32}));
}

TEST(AesSA, ShapeErrors) {
  auto params = AesSAParams<double>::zeros(3, 3);
  EXPECT_THROW(aesthetic_enhance(var(Tensor<double>({1, 3, 2, 2})), var(Tensor<double>({1, 3, 2, 3})), params),
               ShapeError);
  EXPECT_THROW(style_integrate(var(Tensor<double>({1, 3, 2, 2})), var(Tensor<double>({1, 2, 2, 2})), params),
               ShapeError);
}

TEST(AesSA, ResidualIdentities) {
  const CheckResult r = check_residual_identities(17);
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(AesSA, StageOneModeAcceptsStyleAsAesthetic) {
  Rng rng(2);
  const auto params = AesSAParams<double>::random(4, 4, rng, 0.5);
  std::mt19937_64 g(2);
  const Var<double> fc(randn({1, 4, 3, 3}, g)), fs(randn({1, 4, 2, 3}, g));
  EXPECT_EQ(aessa_forward(fc, fs, fs, params).shape(), fc.shape());
}

TEST(AesSA, MatchesLoopOracleAtSpecShapes) {
  Rng rng(3);
  std::mt19937_64 g(3);
  {
    const auto params = AesSAParams<double>::random(3, 3, rng, 0.7);
    const auto fc = randn({1, 3, 2, 2}, g), fs = randn({1, 3, 2, 2}, g), fa = randn({1, 3, 2, 2}, g);
    const auto want = oracle::aessa(fc, fs, fa, params);
    EXPECT_LT(max_diff(aesthetic_enhance(var(fs), var(fa), params).features.value(), want.enhanced), kOracleTolerance);
  }
  {
    const auto params = AesSAParams<double>::random(2, 2, rng, 0.7);
    const auto fc = randn({1, 2, 2, 2}, g), fs = randn({1, 2, 2, 2}, g), fa = randn({1, 2, 2, 2}, g);
    const auto want = oracle::aessa(fc, fs, fa, params);
    const auto got = style_integrate(var(fc), var(want.enhanced), params);
    EXPECT_LT(max_diff(got.features.value(), want.output), kOracleTolerance);
    EXPECT_LT(max_diff(got.attention.value(), want.style_attention), kOracleTolerance);
  }
}

TEST(AesSA, OracleEquivalenceSweep) {
  const CheckResult r = check_oracle_equivalence(23);
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(AesSA, AttentionRowsAreDistributions) {
  const CheckResult r = check_attention_stochasticity(100, 29);
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(AesSA, StochasticityCheckCatchesSignError) {
  // Same logits as the module, but normalized by the sum over exp(-x).
  const AttentionProbe broken = [](const Var<double>& c, const Var<double>& s, const Var<double>& a,
                                   const AesSAParams<double>& p) {
    auto attention = module_attention_probe()(c, s, a, p);
    for (auto& t : attention) {
      const Index cols = t.dim(t.rank() - 1);
      for (Index r = 0; r < t.size() / cols; ++r) {
        double neg = 0;
        for (Index j = 0; j < cols; ++j) neg += 1.0 / std::max(t[r * cols + j], 1e-300);
        for (Index j = 0; j < cols; ++j) t[r * cols + j] /= neg;
      }
    }
    return attention;
  };
  EXPECT_FALSE(check_attention_stochasticity(20, 29, broken).passed);
}

TEST(AesSA, LargeInputsStayFinite) {
  Rng rng(5);
  const auto params = AesSAParams<double>::random(4, 4, rng, 1.0);
  std::mt19937_64 g(5);
  for (int i = 0; i < 10; ++i) {
    const Var<double> fc(randn({1, 4, 3, 4}, g, 10.0)), fs(randn({1, 4, 4, 3}, g, 10.0)),
        fa(randn({1, 4, 4, 3}, g, 10.0));
    EXPECT_TRUE(aessa_forward(fc, fs, fa, params).value().all_finite());
  }
}

TEST(AesSA, StyleIntegrationIgnoresKeyOrder) {
  Rng rng(6);
  const auto params = AesSAParams<double>::random(3, 3, rng, 0.7);
  std::mt19937_64 g(6);
  const auto fc = randn({1, 3, 3, 3}, g), fsa = randn({1, 3, 2, 3}, g);
  std::vector<Index> perm(6);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), g);
  const auto a = style_integrate(var(fc), var(fsa), params).features.value();
  const auto b = style_integrate(var(fc), var(permute_spatial(fsa, perm)), params).features.value();
  EXPECT_LT(max_diff(a, b), 1e-5);
}

TEST(AesSA, GradientsMatchFiniteDifferences) {
  Rng rng(7);
  const auto params = AesSAParams<double>::random(4, 3, rng, 0.5);
  std::mt19937_64 g(7);
  const Var<double> fc(randn({1, 4, 3, 3}, g), true), fs(randn({1, 4, 2, 3}, g), true), fa(randn({1, 3, 2, 3}, g), true);
  ParameterList<double> wrt = params.parameters("aessa");
  wrt.push_back({"F_c", fc});
  wrt.push_back({"F_s", fs});
  wrt.push_back({"F_a", fa});
  const auto reports = finite_difference_check([&] { return sum(aessa_forward(fc, fs, fa, params)); }, wrt, 64, 7);
  EXPECT_EQ(reports.size(), wrt.size());
  for (const auto& r : reports) EXPECT_LT(r.max_rel_error, kGradientRelTolerance) << r.name;
}

TEST(Fuse, ShapesAndZeroDeepBranch) {
  auto fusion = make_fusion_conv<float>(512);
  EXPECT_EQ(multi_level_fuse(Var<float>(Tensor<float>({1, 512, 32, 32})), Var<float>(Tensor<float>({1, 512, 16, 16})),
                             fusion)
                .shape(),
            (Shape{1, 512, 32, 32}));
  EXPECT_THROW(multi_level_fuse(Var<float>(Tensor<float>({1, 512, 32, 32})),
                                Var<float>(Tensor<float>({1, 512, 15, 16})), fusion),
               ShapeError);

  auto small = make_fusion_conv<double>(3);
  Rng rng(8);
  small.init_he(rng);
  std::mt19937_64 g(8);
  const Var<double> f41(randn({1, 3, 4, 6}, g));
  const auto fused = multi_level_fuse(f41, var(Tensor<double>({1, 3, 2, 3})), small).value();
  EXPECT_TRUE(bits_equal(fused, small(f41).value()));
  EXPECT_EQ(small.kernel(), 3);
}

TEST(Fuse, NearestUpsampleOfSinglePixel) {
  const auto up = upsample_nearest(var(Tensor<double>::from_values({1, 1, 1, 1}, {2.5})), 2).value();
  EXPECT_EQ(up.shape(), (Shape{1, 1, 2, 2}));
  for (Index i = 0; i < 4; ++i) EXPECT_EQ(up[i], 2.5);
}

TEST(AesSAParams, KernelsAndParameterCount) {
  const Index c = 16;
  const auto params = AesSAParams<float>::zeros(c, c);
  for (const auto& p : params.parameters("lvl"))
    if (p.var.shape().size() == 4) EXPECT_EQ(p.var.dim(2), 1) << p.name;
  // Eight 1×1 convs per level; the 3×3 fusion conv is counted once for both levels.
  EXPECT_EQ(parameter_count(params.parameters("lvl")), 8 * (c * c + c));
  ParameterList<float> fusion;
  make_fusion_conv<float>(c).append_parameters("fusion", fusion);
  EXPECT_EQ(parameter_count(fusion), 9 * c * c + c);
}
