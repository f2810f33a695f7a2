#include "aesust/checks.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <numeric>
#include <set>
#include <sstream>

#include "aesust/controls.hpp"
#include "aesust/losses.hpp"
#include "aesust/oracles.hpp"
#include "aesust/synthetic.hpp"
#include "aesust/trainer.hpp"

namespace aesust {

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool passed;
  std::string detail;
};

CheckResult timed(const std::string& name, const std::function<Outcome()>& body) {
  const auto start = Clock::now();
  CheckResult r{name, false, {}, 0};
  try {
    const Outcome o = body();
    r.passed = o.passed;
    r.detail = o.detail;
  } catch (const std::exception& e) {
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return r;
}

template <typename T = double>
Tensor<T> random_tensor(const Shape& shape, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Tensor<T> t(shape);
  for (Index i = 0; i < t.size(); ++i) t[i] = static_cast<T>(dist(rng));
  return t;
}

Tensor<float> random_image(const Shape& shape, Rng& rng) {
  std::uniform_real_distribution<float> dist(0.0f, 1.0f);
  Tensor<float> t(shape);
  for (Index i = 0; i < t.size(); ++i) t[i] = dist(rng);
  return t;
}

int rand_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
  if (a.shape() != b.shape()) return INFINITY;
  return a.size() == 0 ? 0.0 : (a.data() - b.data()).cwiseAbs().maxCoeff();
}

template <typename T>
bool bit_equal(const Tensor<T>& a, const Tensor<T>& b) {
  return a.shape() == b.shape() && std::memcmp(a.raw(), b.raw(), sizeof(T) * static_cast<std::size_t>(a.size())) == 0;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

// Σ r ⊙ x with a fixed random r, so every output element feeds the scalar.
class Projection {
 public:
  explicit Projection(std::uint64_t seed) : rng_(seed) {}
  Var<double> operator()(std::size_t slot, const Var<double>& x) {
    if (weights_.size() <= slot) weights_.resize(slot + 1);
    if (weights_[slot].shape() != x.shape()) weights_[slot] = random_tensor(x.shape(), rng_);
    return sum(mul(x, Var<double>(weights_[slot])));
  }

 private:
  Rng rng_;
  std::vector<Tensor<double>> weights_;
};

Var<double> leaf(const Tensor<double>& t) { return Var<double>(t, true); }

}  // namespace

double row_stochastic_violation(const Tensor<double>& attention) {
  const Index cols = attention.dim(attention.rank() - 1);
  const Index rows = attention.size() / std::max<Index>(cols, 1);
  double worst = 0;
  for (Index r = 0; r < rows; ++r) {
    double s = 0;
    for (Index c = 0; c < cols; ++c) {
      const double v = attention[r * cols + c];
      if (!std::isfinite(v)) return INFINITY;
      worst = std::max(worst, -v);
      s += v;
    }
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

AttentionProbe module_attention_probe() {
  return [](const Var<double>& content, const Var<double>& style, const Var<double>& aesthetic,
            const AesSAParams<double>& params) {
    const auto enhanced = aesthetic_enhance(style, aesthetic, params);
    const auto integrated = style_integrate(content, enhanced.features, params);
    return std::array<Tensor<double>, 2>{enhanced.attention.value(), integrated.attention.value()};
  };
}

std::vector<GradientReport> finite_difference_check(const std::function<Var<double>()>& loss,
                                                    const ParameterList<double>& wrt, Index max_entries,
                                                    std::uint64_t seed, double step) {
  for (auto p : wrt) {
    p.var.set_requires_grad(true);
    p.var.zero_grad();
  }
  backward(loss());
  Rng rng(seed);
  std::vector<GradientReport> reports;
  for (auto p : wrt) {
    const Tensor<double> analytic = p.var.has_grad() ? p.var.grad() : Tensor<double>(p.var.shape());
    std::vector<Index> idx(static_cast<std::size_t>(p.var.value().size()));
    std::iota(idx.begin(), idx.end(), Index{0});
    if (static_cast<Index>(idx.size()) > max_entries) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(static_cast<std::size_t>(max_entries));
    }
    GradientReport rep{p.name, 0, 0};
    NoGradGuard no_grad;
    for (Index i : idx) {
      double& x = p.var.mutable_value()[i];
      const double orig = x;
      x = orig + step;
      const double fp = loss().value()[0];
      x = orig - step;
      const double fm = loss().value()[0];
      x = orig;
      const double numeric = (fp - fm) / (2 * step);
      const double a = analytic[i];
      const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), kGradientErrorFloor});
      rep.max_rel_error = std::max(rep.max_rel_error, std::isfinite(err) ? err : INFINITY);
      ++rep.checked;
    }
    reports.push_back(rep);
  }
  for (auto p : wrt) p.var.zero_grad();
  return reports;
}

CheckResult check_attention_stochasticity(int triples, std::uint64_t seed, const AttentionProbe& probe) {
  return timed("attention_stochasticity", [&]() -> Outcome {
    Rng rng(seed);
    double worst = 0;
    for (int t = 0; t < triples; ++t) {
      const Index c = rand_int(rng, 1, 8), ca = rand_int(rng, 1, 8), n = rand_int(rng, 1, 2);
      const Shape sc{n, c, rand_int(rng, 1, 6), rand_int(rng, 1, 6)};
      const Shape ss{n, c, rand_int(rng, 1, 6), rand_int(rng, 1, 6)};
      const double magnitude = std::array{0.1, 1.0, 10.0}[static_cast<std::size_t>(t % 3)];
      const AesSAParams<double> params = AesSAParams<double>::random(c, ca, rng, 1.0);
      const auto att = probe(Var<double>(random_tensor(sc, rng, magnitude)), Var<double>(random_tensor(ss, rng, magnitude)),
                             Var<double>(random_tensor({n, ca, ss[2], ss[3]}, rng, magnitude)), params);
      if (att[0].shape() != Shape{n, c, c} || att[1].shape() != Shape{n, sc[2] * sc[3], ss[2] * ss[3]}) {
        return {false, "attention shape mismatch at triple " + std::to_string(t)};
      }
      worst = std::max({worst, row_stochastic_violation(att[0]), row_stochastic_violation(att[1])});
    }
    return {worst <= kRowSumTolerance, std::to_string(triples) + " triples, worst row violation " + fmt(worst)};
  });
}

CheckResult check_oracle_equivalence(std::uint64_t seed) {
  return timed("oracle_equivalence", [&]() -> Outcome {
    Rng rng(seed);
    double worst = 0;
    int cases = 0;
    for (Index c = 1; c <= 4; ++c)
      for (Index hc = 1; hc <= 3; ++hc)
        for (Index wc = 1; wc <= 3; ++wc)
          for (Index hs = 1; hs <= 3; ++hs)
            for (Index ws = 1; ws <= 3; ++ws) {
              const Index ca = (hc + ws) % 2 == 0 ? c : c + 1;
              const AesSAParams<double> params = AesSAParams<double>::random(c, ca, rng, 0.7);
              const Tensor<double> fc = random_tensor({1, c, hc, wc}, rng);
              const Tensor<double> fs = random_tensor({1, c, hs, ws}, rng);
              const Tensor<double> fa = random_tensor({1, ca, hs, ws}, rng);
              const auto enhanced = aesthetic_enhance(Var<double>(fs), Var<double>(fa), params);
              const auto integrated = style_integrate(Var<double>(fc), enhanced.features, params);
              const auto ref = oracle::aessa(fc, fs, fa, params);
              worst = std::max({worst, max_abs_diff(integrated.features.value(), ref.output),
                                max_abs_diff(enhanced.features.value(), ref.enhanced),
                                max_abs_diff(enhanced.attention.value(), ref.aesthetic_attention),
                                max_abs_diff(integrated.attention.value(), ref.style_attention)});
              ++cases;
            }
    return {worst <= kOracleTolerance, std::to_string(cases) + " shapes, max abs error " + fmt(worst)};
  });
}

CheckResult check_gradients(std::uint64_t seed) {
  return timed("gradient_suite", [&]() -> Outcome {
    Rng rng(seed);
    std::vector<GradientReport> all;
    auto collect = [&](const std::string& group, std::vector<GradientReport> reps) {
      for (auto& r : reps) {
        r.name = group + ":" + r.name;
        all.push_back(r);
      }
    };

    {  // attention module
      const Index c = 6, ca = 5;
      const AesSAParams<double> params = AesSAParams<double>::random(c, ca, rng, 0.5);
      const Var<double> fc = leaf(random_tensor({1, c, 4, 4}, rng));
      const Var<double> fs = leaf(random_tensor({1, c, 3, 4}, rng));
      const Var<double> fa = leaf(random_tensor({1, ca, 3, 4}, rng));
      ParameterList<double> wrt = params.parameters("aessa");
      wrt.push_back({"F_c", fc});
      wrt.push_back({"F_s", fs});
      wrt.push_back({"F_a", fa});
      Projection proj(rng());
      collect("aessa", finite_difference_check([&] { return proj(0, aessa_forward(fc, fs, fa, params)); }, wrt, 512, rng()));

      Conv2d<double> fusion = make_fusion_conv<double>(c);
      fusion.init_he(rng);
      const Var<double> r41 = leaf(random_tensor({1, c, 4, 4}, rng));
      const Var<double> r51 = leaf(random_tensor({1, c, 2, 2}, rng));
      ParameterList<double> fwrt;
      fusion.append_parameters("fusion", fwrt);
      fwrt.push_back({"relu4_1", r41});
      fwrt.push_back({"relu5_1", r51});
      collect("aessa", finite_difference_check([&] { return proj(1, multi_level_fuse(r41, r51, fusion)); }, fwrt, 512, rng()));
    }

    {  // discriminator at desk widths
      Discriminator<double> disc(DiscriminatorSpec::scaled(0.125));
      disc.init_random(rng);
      // Larger weights than the training init keep activations away from the flat regime.
      for (auto p : disc.parameters()) p.var.mutable_value() = random_tensor(p.var.shape(), rng, 0.2);
      Tensor<double> img = random_tensor({1, 3, 64, 64}, rng, 0.5);
      const Var<double> image = leaf(img);
      ParameterList<double> wrt = disc.parameters();
      wrt.push_back({"image", image});
      Projection proj(rng());
      collect("discriminator", finite_difference_check(
                                   [&] {
                                     const auto logits = disc.discriminate(image);
                                     Var<double> s = proj(0, disc.aesthetic_features(image));
                                     for (std::size_t k = 0; k < 3; ++k) s = add(s, proj(k + 1, logits[k]));
                                     return s;
                                   },
                                   wrt, 64, rng()));
    }

    {  // decoder with an 8-channel relu4_1 level
      Decoder<double> dec(DecoderSpec::mirror_of(EncoderSpec::vgg19(8.0 / 512.0)));
      dec.init_random(rng);
      for (auto p : dec.parameters()) {
        if (p.name.ends_with(".bias")) p.var.mutable_value() = random_tensor(p.var.shape(), rng, 0.1);
      }
      const Var<double> feature = leaf(random_tensor({1, 8, 4, 4}, rng));
      ParameterList<double> wrt = dec.parameters();
      wrt.push_back({"feature", feature});
      collect("decoder", finite_difference_check([&] { return sum(dec.decode(feature)); }, wrt, 64, rng()));
    }

    {  // losses against their direct inputs
      const std::array<Index, 5> ch{3, 4, 5, 6, 6};
      const std::array<Index, 5> hw{8, 4, 4, 2, 2};
      FeaturePyramid<double> a, b;
      ParameterList<double> wrt;
      for (std::size_t i = 0; i < 5; ++i) {
        a.taps[i] = leaf(random_tensor({2, ch[i], hw[i], hw[i]}, rng));
        b.taps[i] = leaf(random_tensor({2, ch[i], hw[i], hw[i]}, rng));
        wrt.push_back({std::string("cs.") + kTapNames[i], a.taps[i]});
        wrt.push_back({std::string("ref.") + kTapNames[i], b.taps[i]});
      }
      collect("content", finite_difference_check([&] { return content_loss(a, b); },
                                                 {wrt[6], wrt[7], wrt[8], wrt[9]}, 4096, rng()));
      collect("style", finite_difference_check([&] { return style_loss(a, b); }, wrt, 4096, rng()));

      std::array<Var<double>, 4> imgs;
      ParameterList<double> iwrt;
      for (std::size_t i = 0; i < 4; ++i) {
        imgs[i] = leaf(random_tensor({2, 3, 8, 8}, rng));
        iwrt.push_back({"image" + std::to_string(i), imgs[i]});
      }
      collect("identity", finite_difference_check([&] { return identity_loss(imgs[0], imgs[1], imgs[2], imgs[3]); },
                                                  iwrt, 4096, rng()));
      collect("ar1", finite_difference_check([&] { return ar1_loss(imgs[0], imgs[1]); }, {iwrt[0], iwrt[1]}, 4096, rng()));

      std::array<Var<double>, 3> real, fake;
      ParameterList<double> lwrt;
      for (std::size_t k = 0; k < 3; ++k) {
        const Index s = Index{4} >> k;
        real[k] = leaf(random_tensor({2, 1, s, s}, rng, 2.0));
        fake[k] = leaf(random_tensor({2, 1, s, s}, rng, 2.0));
        lwrt.push_back({"real" + std::to_string(k), real[k]});
        lwrt.push_back({"fake" + std::to_string(k), fake[k]});
      }
      collect("disc_adv", finite_difference_check([&] { return adv_loss_discriminator(real, fake); }, lwrt, 4096, rng()));
      collect("adv", finite_difference_check([&] { return adv_loss_generator(fake); }, {lwrt[1], lwrt[3], lwrt[5]}, 64,
                                             rng()));

      const Var<double> fa_s = leaf(random_tensor({2, 8, 3, 3}, rng));
      const Var<double> fa_cs = leaf(random_tensor({2, 8, 3, 3}, rng));
      collect("ar2", finite_difference_check([&] { return ar2_loss(fa_s, fa_cs); },
                                             {{"F_a(I_s)", fa_s}, {"F_a(I_cs)", fa_cs}}, 4096, rng()));
    }

    const auto worst = std::max_element(all.begin(), all.end(), [](const auto& x, const auto& y) {
      return x.max_rel_error < y.max_rel_error;
    });
    Index checked = 0;
    for (const auto& r : all) checked += r.checked;
    return {worst->max_rel_error < kGradientRelTolerance,
            std::to_string(all.size()) + " tensors, " + std::to_string(checked) + " entries, worst " + worst->name +
                " rel error " + fmt(worst->max_rel_error)};
  });
}

CheckResult check_residual_identities(std::uint64_t seed) {
  return timed("residual_identities", [&]() -> Outcome {
    Rng rng(seed);
    bool ok = true;
    std::string failed;
    auto run = [&]<typename T>(T) {
      const Index c = 6, ca = 4;
      AesSAParams<T> params = AesSAParams<T>::random(c, ca, rng, 0.5);
      const Var<T> fc(random_tensor<T>({1, c, 4, 5}, rng));
      const Var<T> fs(random_tensor<T>({1, c, 3, 3}, rng));
      const Var<T> fa(random_tensor<T>({1, ca, 3, 3}, rng));
      params.f_out1.set_zero();
      if (!bit_equal(aesthetic_enhance(fs, fa, params).features.value(), fs.value())) {
        ok = false;
        failed += " f_out1";
      }
      params.f_out1.init_normal(rng, 0.5);
      params.f_out2.set_zero();
      const Var<T> fsa(random_tensor<T>({1, c, 3, 3}, rng));
      if (!bit_equal(style_integrate(fc, fsa, params).features.value(), fc.value())) {
        ok = false;
        failed += " f_out2";
      }
      params.f_out1.set_zero();
      if (!bit_equal(aessa_forward(fc, fs, fa, params).value(), fc.value())) {
        ok = false;
        failed += " both";
      }
    };
    run(float{});
    run(double{});
    return {ok, ok ? "zeroed output convs pass F_s / F_c through bit-exactly (f32, f64)" : "not exact:" + failed};
  });
}

CheckResult check_multiscale_features(std::uint64_t seed) {
  return timed("multiscale_features", [&]() -> Outcome {
    Rng rng(seed);
    double worst = 0;
    for (const Shape& shape : {Shape{1, 3, 64, 64}, Shape{2, 3, 64, 128}, Shape{1, 3, 128, 64}}) {
      Discriminator<double> disc(DiscriminatorSpec::scaled(0.125));
      disc.init_random(rng);
      for (auto p : disc.parameters()) p.var.mutable_value() = random_tensor(p.var.shape(), rng, 0.2);
      const Tensor<double> image = random_image(shape, rng).cast<double>();
      NoGradGuard no_grad;
      worst = std::max(worst, max_abs_diff(disc.aesthetic_features(Var<double>(image)).value(),
                                           oracle::aesthetic_features(disc, image)));
    }
    Discriminator<float> full(DiscriminatorSpec::scaled(1.0));
    full.init_random(rng);
    NoGradGuard no_grad;
    const Shape got = full.aesthetic_features(Var<float>(random_image({1, 3, 128, 192}, rng))).shape();
    const bool shape_ok = got == Shape{1, 512, 8, 12};
    return {worst <= kMultiscaleTolerance && shape_ok,
            "max abs error " + fmt(worst) + ", full-width shape " + to_string(got) + " for a 128×192 input"};
  });
}

CheckResult check_loss_sanity() {
  return timed("loss_sanity", [&]() -> Outcome {
    std::vector<std::string> failures;
    auto expect = [&](const std::string& what, double got, double want, double tol = kLossTolerance) {
      if (!(std::abs(got - want) <= tol)) failures.push_back(what + "=" + fmt(got) + " want " + fmt(want));
    };
    Rng rng(11);
    FeaturePyramid<double> p;
    for (std::size_t i = 0; i < 5; ++i) p.taps[i] = Var<double>(random_tensor({1, 3, 4, 4}, rng));
    expect("content(identical)", content_loss(p, p).value()[0], 0.0);
    expect("style(identical)", style_loss(p, p).value()[0], 0.0);

    // ε in the variance keeps the two normalizations a few 1e-6 apart.
    FeaturePyramid<double> a = p, b = p;
    a.taps[3] = Var<double>(Tensor<double>::from_values({1, 1, 1, 2}, {0, 2}));
    b.taps[3] = Var<double>(Tensor<double>::from_values({1, 1, 1, 2}, {0, 4}));
    a.taps[4] = b.taps[4] = Var<double>(Tensor<double>::from_values({1, 1, 1, 2}, {5, 7}));
    expect("content([0,2] vs [0,4])", content_loss(a, b).value()[0], 0.0, 1e-5);

    FeaturePyramid<double> s = p;
    s.taps[2] = Var<double>(Tensor<double>::from_values({1, 1, 1, 2}, {1, 3}));
    FeaturePyramid<double> t = p;
    t.taps[2] = Var<double>(Tensor<double>::from_values({1, 1, 1, 2}, {2, 4}));
    expect("style(mu diff 1)", style_loss(s, t).value()[0], 1.0);

    const Var<double> img(random_tensor({1, 3, 4, 4}, rng));
    Tensor<double> unit = img.value();
    unit[5] += 1.0;
    expect("identity(fixed point)", identity_loss(img, img, img, img).value()[0], 0.0);
    expect("identity(unit)", identity_loss(Var<double>(unit), img, img, img).value()[0], 1.0);
    expect("ar1(identical)", ar1_loss(img, img).value()[0], 0.0);
    expect("ar1(unit)", ar1_loss(Var<double>(unit), img).value()[0], 1.0);

    const Var<double> f(random_tensor({1, 1, 2, 2}, rng));
    Tensor<double> shifted = f.value();
    shifted.data().array() += 2.0;
    expect("ar2(identical)", ar2_loss(f, f).value()[0], 0.0);
    expect("ar2(mean shift 2)", ar2_loss(f, Var<double>(shifted)).value()[0], 2.0);

    std::array<Var<double>, 3> zeros{Var<double>(Tensor<double>({1, 1, 4, 4})), Var<double>(Tensor<double>({1, 1, 2, 2})),
                                     Var<double>(Tensor<double>({1, 1, 1, 1}))};
    expect("disc_adv(0,0)", adv_loss_discriminator(zeros, zeros).value()[0], 2 * std::log(2.0));
    expect("adv(0)", adv_loss_generator(zeros).value()[0], std::log(2.0));
    std::array<Var<double>, 3> big, small;
    for (std::size_t k = 0; k < 3; ++k) {
      Tensor<double> hi = zeros[k].value(), lo = zeros[k].value();
      hi.data().setConstant(40.0);
      lo.data().setConstant(-40.0);
      big[k] = Var<double>(hi);
      small[k] = Var<double>(lo);
    }
    expect("disc_adv(perfect)", adv_loss_discriminator(big, small).value()[0], 0.0);

    GeneratorTerms<double> ones{1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
    const LossWeights w;
    const LossToggles on;
    expect("stage I total", stage1_generator_objective(ones, w, on), 57.0);
    expect("stage II total", stage2_generator_objective(ones, w, on), 507.5);
    const LossWeights zero{0, 0, 0, 0, 0, 0, 0, 0, 0};
    expect("stage I zero weights", stage1_generator_objective(ones, zero, on), 0.0);
    expect("stage II zero weights", stage2_generator_objective(ones, zero, on), 0.0);
    GeneratorTerms<double> doubled = ones;
    doubled.identity = 2.0;
    expect("stage I linearity", stage1_generator_objective(doubled, w, on) - 57.0, w.identity);

    if (!failures.empty()) {
      std::string d;
      for (const auto& f : failures) d += f + "; ";
      return {false, d};
    }
    return {true, "fixed points 0, zero logits 2·log 2 / log 2, weighted totals 57 / 507.5"};
  });
}

CheckResult check_stage_gating(std::uint64_t seed) {
  return timed("stage_gating", [&]() -> Outcome {
    Rng rng(seed);
    TrainConfig cfg = TrainConfig::desk();
    cfg.seed = seed;
    const Batch batch{random_image({2, 3, 64, 64}, rng), random_image({2, 3, 64, 64}, rng)};
    auto generator_terms = [](const LossReport& r) {
      std::set<std::string> names(r.evaluated.begin(), r.evaluated.end());
      names.erase("disc_adv");
      return names;
    };
    Trainer stage1(Models<float>::create(cfg.width_multiplier, seed), cfg);
    const auto t1 = generator_terms(stage1.step(batch));
    cfg.stage = 2;
    Trainer stage2(stage1.models(), cfg);
    const auto t2 = generator_terms(stage2.step(batch));
    const std::set<std::string> want1{"adv", "content", "style", "identity"};
    const std::set<std::string> want2{"adv", "content", "style", "ar1", "ar2"};

    // Objectives ignore the other stage's terms.
    GeneratorTerms<double> terms{1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
    GeneratorTerms<double> varied = terms;
    varied.ar1 = 100.0;
    varied.ar2 = -7.0;
    const LossWeights w;
    const LossToggles on;
    const bool s1_indep = stage1_generator_objective(terms, w, on) == stage1_generator_objective(varied, w, on);
    varied = terms;
    varied.identity = 100.0;
    const bool s2_indep = stage2_generator_objective(terms, w, on) == stage2_generator_objective(varied, w, on);

    auto join = [](const std::set<std::string>& s) {
      std::string out;
      for (const auto& x : s) out += (out.empty() ? "" : ",") + x;
      return "{" + out + "}";
    };
    return {t1 == want1 && t2 == want2 && s1_indep && s2_indep,
            "stage I " + join(t1) + ", stage II " + join(t2) +
                (s1_indep && s2_indep ? ", objectives independent of the other stage" : ", objective leak")};
  });
}

CheckResult check_desk_training(const DeskRunOptions& options) {
  return timed("desk_training", [&]() -> Outcome {
    const auto start = Clock::now();
    std::filesystem::create_directories(options.workdir);
    const SyntheticCorpus corpus = write_synthetic_corpus(options.workdir / "corpus");
    TrainConfig cfg = TrainConfig::desk();
    cfg.iterations = options.stage1_steps;
    cfg.checkpoint_every = std::max<long long>(1, options.stage1_steps);

    std::vector<double> totals, id_mse;
    TrainPaths p1{corpus.content_dir, corpus.style_dir, options.workdir / "stage1.aesu", std::nullopt, std::nullopt};
    train(cfg, p1, [&](const LossReport& r) {
      totals.push_back(r.total);
      id_mse.push_back(r.identity_mse.value_or(NAN));
    });

    long long stage2_steps = 0;
    double stage2_last = NAN;
    cfg.stage = 2;
    cfg.iterations = options.stage2_steps;
    cfg.checkpoint_every = std::max<long long>(1, options.stage2_steps);
    TrainPaths p2{corpus.content_dir, corpus.style_dir, options.workdir / "stage2.aesu", p1.out, std::nullopt};
    train(cfg, p2, [&](const LossReport& r) {
      ++stage2_steps;
      stage2_last = r.total;
    });
    const double wall = std::chrono::duration<double>(Clock::now() - start).count();

    const std::size_t window = static_cast<std::size_t>(std::min<long long>(options.window, options.stage1_steps));
    auto tail_mean = [&](const std::vector<double>& v) {
      return std::accumulate(v.end() - static_cast<std::ptrdiff_t>(window), v.end(), 0.0) / static_cast<double>(window);
    };
    const double final_total = tail_mean(totals), final_mse = tail_mean(id_mse);
    const double reduction = 1.0 - final_total / totals.front();
    const bool ok = reduction >= kDeskObjectiveReduction && final_mse < id_mse.front() &&
                    stage2_steps == options.stage2_steps && std::isfinite(stage2_last) && wall < kDeskWallSeconds;
    return {ok, "objective " + fmt(totals.front()) + " -> " + fmt(final_total) + " (last " + std::to_string(window) +
                    " steps, -" + fmt(100 * reduction) + "%), identity MSE " + fmt(id_mse.front()) + " -> " +
                    fmt(final_mse) + ", stage II " + std::to_string(stage2_steps) + " finite steps, " + fmt(wall) + " s"};
  });
}

CheckResult check_controls(std::uint64_t seed) {
  return timed("controls_algebra", [&]() -> Outcome {
    Rng rng(seed);
    Models<float> models = Models<float>::create(0.125, seed);
    const ImageTensor content = synthetic_content(64, 64, seed);
    const std::vector<ImageTensor> styles{synthetic_style(64, 64, seed + 1), synthetic_style(64, 128, seed + 2),
                                          synthetic_style(128, 64, seed + 3)};
    std::vector<std::string> failures;
    for (int stage : {1, 2}) {
      models.stage = stage;
      const std::string tag = " (stage " + std::to_string(stage) + ")";
      Tensor<float> plain;
      {
        NoGradGuard no_grad;
        plain = generator_forward(models, Var<float>(content), Var<float>(styles[0]), stage).image.value();
      }
      const ImageTensor single = stylize(models, content, styles[0], 1.0);
      if (!bit_equal(single, plain)) failures.push_back("alpha=1" + tag);
      if (!bit_equal(interpolate_styles(models, content, {styles, {1.0, 0.0, 0.0}}), single)) {
        failures.push_back("weights [1,0,0]" + tag);
      }
      Tensor<float> full({1, 1, 64, 64});
      full.data().setOnes();
      if (!bit_equal(spatial_stylize(models, content, {styles[0]}, {{full}}), single)) {
        failures.push_back("full mask" + tag);
      }
      if (!bit_equal(stylize(models, content, styles[0], 0.0),
                     decode_feature(models, reconstruction_feature(models, content)))) {
        failures.push_back("alpha=0" + tag);
      }
    }
    double worst_mean = 0;
    for (const auto& style : styles) {
      const ImageTensor matched = color_match(style, content);
      for (Index c = 0; c < 3; ++c) {
        const Index ps = style.dim(2) * style.dim(3), pc = content.dim(2) * content.dim(3);
        const double ms = matched.data().segment(c * ps, ps).cast<double>().mean();
        const double mc = content.data().segment(c * pc, pc).cast<double>().mean();
        worst_mean = std::max(worst_mean, std::abs(ms - mc));
      }
    }
    if (worst_mean > kColorMeanTolerance) failures.push_back("color means off by " + fmt(worst_mean));
    if (!failures.empty()) {
      std::string d;
      for (const auto& f : failures) d += f + "; ";
      return {false, d};
    }
    return {true, "alpha=1, [1,0,0] weights, full mask and alpha=0 bit-exact at both stages; color mean error " +
                      fmt(worst_mean)};
  });
}

namespace {

std::string random_name(Rng& rng) {
  static const std::array<std::string, 6> pieces{"\xc3\xa9", "\xce\xbb", "\xe6\x97\xa5", "\xf0\x9f\x8e\xa8", ".", "_"};
  std::string s;
  const int len = rand_int(rng, 1, 24);
  for (int i = 0; i < len; ++i) {
    if (rand_int(rng, 0, 4) == 0) {
      s += pieces[static_cast<std::size_t>(rand_int(rng, 0, 5))];
    } else {
      s += static_cast<char>(rand_int(rng, 0x21, 0x7e));
    }
  }
  return s;
}

template <typename T>
Tensor<T> random_bits(const Shape& shape, Rng& rng) {
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  Tensor<T> t(shape);
  for (Index i = 0; i < t.size(); ++i) t[i] = std::bit_cast<T>(static_cast<Bits>(rng()));
  return t;
}

bool same_entry(const ArchiveEntry& a, const ArchiveEntry& b) {
  if (a.name != b.name || a.tensor.index() != b.tensor.index()) return false;
  return std::visit(
      [&](const auto& ta) {
        using TT = std::decay_t<decltype(ta)>;
        return bit_equal(ta, std::get<TT>(b.tensor));
      },
      a.tensor);
}

}  // namespace

CheckResult check_persistence(int cases, std::uint64_t seed) {
  return timed("persistence", [&]() -> Outcome {
    Rng rng(seed);
    std::size_t tensors = 0;
    for (int c = 0; c < cases; ++c) {
      TensorArchive archive;
      const int n = rand_int(rng, 0, 6);
      while (static_cast<int>(archive.size()) < n) {
        const std::string name = random_name(rng);
        if (archive.contains(name)) continue;
        Shape shape(static_cast<std::size_t>(rand_int(rng, 0, 4)));
        for (auto& d : shape) d = rand_int(rng, 0, 5);
        if (rand_int(rng, 0, 1) == 0) {
          archive.add(name, random_bits<float>(shape, rng));
        } else {
          archive.add(name, random_bits<double>(shape, rng));
        }
      }
      const auto bytes = save_archive(archive);
      const TensorArchive back = load_archive(bytes);
      if (back.size() != archive.size()) return {false, "entry count changed in case " + std::to_string(c)};
      for (std::size_t i = 0; i < archive.size(); ++i) {
        if (!same_entry(archive.entries()[i], back.entries()[i])) {
          return {false, "entry '" + archive.entries()[i].name + "' changed in case " + std::to_string(c)};
        }
      }
      if (save_archive(back) != bytes) return {false, "re-saved bytes differ in case " + std::to_string(c)};
      tensors += archive.size();
    }

    // A stage-1 checkpoint must populate every tensor of a stage-2 model by name.
    Models<float> stage1 = Models<float>::create(0.125, seed);
    const TensorArchive ckpt = load_archive(save_archive(models_to_archive(stage1)));
    Models<float> stage2 = Models<float>::create(0.125, seed + 1);
    stage2.stage = 2;
    load_parameters(stage2.all_parameters(), ckpt);
    std::size_t loaded = 0;
    for (const auto& p : stage2.all_parameters()) {
      const ArchiveTensor* t = ckpt.find(p.name);
      if (!t || !bit_equal(std::get<Tensor<float>>(*t), p.var.value())) return {false, "tensor '" + p.name + "' not restored"};
      ++loaded;
    }
    std::size_t stored = 0;
    for (const auto& e : ckpt.entries()) stored += e.name.starts_with("meta.") ? 0 : 1;
    if (stored != loaded) return {false, "checkpoint holds tensors the stage-2 model does not read"};
    return {true, std::to_string(cases) + " random archives (" + std::to_string(tensors) +
                      " tensors) round-trip bit-exactly; stage-2 model restored all " + std::to_string(loaded) +
                      " stage-1 tensors by name"};
  });
}

std::vector<CheckResult> run_selfcheck(const std::filesystem::path& workdir,
                                       const std::function<void(const CheckResult&)>& on_result) {
  std::vector<CheckResult> results;
  auto add = [&](CheckResult r) {
    if (on_result) on_result(r);
    results.push_back(std::move(r));
  };
  add(check_attention_stochasticity());
  add(check_oracle_equivalence());
  add(check_gradients());
  add(check_residual_identities());
  add(check_multiscale_features());
  add(check_loss_sanity());
  add(check_stage_gating());
  add(check_desk_training({workdir}));
  add(check_controls());
  add(check_persistence());
  return results;
}

}  // namespace aesust
