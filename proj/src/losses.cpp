#include "aesust/losses.hpp"

#include <algorithm>

#include "aesust/aessa.hpp"

namespace aesust {

namespace {

thread_local LossTrace* active_trace = nullptr;

template <typename T>
void require_same(const Var<T>& a, const Var<T>& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
}

// Batch mean of per-sample L2 norms of a − b.
template <typename T>
Var<T> norm_of_difference(const Var<T>& a, const Var<T>& b) {
  return mean(l2_norm_per_sample(sub(a, b)));
}

template <typename T>
Var<T> moment_distance(const Var<T>& a, const Var<T>& b) {
  const T eps = static_cast<T>(kNormEpsilon);
  return add(norm_of_difference(channel_mean(a), channel_mean(b)),
             norm_of_difference(channel_std(a, eps), channel_std(b, eps)));
}

template <typename T>
Var<T> scale_mean(const std::array<Var<T>, 3>& per_scale) {
  return scale(add(add(per_scale[0], per_scale[1]), per_scale[2]), T(1) / T(3));
}

double weighted(double term, double w) { return w * term; }
float weighted(float term, double w) { return static_cast<float>(w) * term; }
template <typename T>
Var<T> weighted(const Var<T>& term, double w) { return scale(term, static_cast<T>(w)); }

template <typename V>
void add_term(std::optional<V>& total, const std::optional<V>& term, double w, bool enabled, const char* name) {
  if (!enabled) return;
  if (!term) throw ConfigError(std::string("generator objective: missing term '") + name + "'");
  V part = weighted(*term, w);
  if (total) {
    total = *total + part;
  } else {
    total = part;
  }
}

}  // namespace

LossTrace::LossTrace() : previous_(active_trace) { active_trace = this; }
LossTrace::~LossTrace() { active_trace = previous_; }

bool LossTrace::contains(const std::string& name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

void LossTrace::record(const char* name) {
  if (active_trace) active_trace->names_.emplace_back(name);
}

template <typename T>
Var<T> content_loss(const FeaturePyramid<T>& stylized, const FeaturePyramid<T>& content) {
  LossTrace::record("content");
  const T eps = static_cast<T>(kNormEpsilon);
  Var<T> total;
  for (Tap tap : {Tap::relu4_1, Tap::relu5_1}) {
    require_same(stylized[tap], content[tap], "content_loss");
    Var<T> term = norm_of_difference(channel_norm(stylized[tap], eps), channel_norm(content[tap], eps));
    total = total.defined() ? add(total, term) : term;
  }
  return total;
}

template <typename T>
Var<T> style_loss(const FeaturePyramid<T>& stylized, const FeaturePyramid<T>& style) {
  LossTrace::record("style");
  Var<T> total;
  for (std::size_t i = 0; i < stylized.taps.size(); ++i) {
    if (stylized.taps[i].dim(0) != style.taps[i].dim(0) || stylized.taps[i].dim(1) != style.taps[i].dim(1)) {
      throw ShapeError("style_loss: batch or channel mismatch at " + std::string(kTapNames[i]));
    }
    Var<T> term = moment_distance(stylized.taps[i], style.taps[i]);
    total = total.defined() ? add(total, term) : term;
  }
  return total;
}

template <typename T>
Var<T> identity_loss(const Var<T>& content_recon, const Var<T>& content, const Var<T>& style_recon, const Var<T>& style) {
  LossTrace::record("identity");
  require_same(content_recon, content, "identity_loss");
  require_same(style_recon, style, "identity_loss");
  return add(norm_of_difference(content_recon, content), norm_of_difference(style_recon, style));
}

template <typename T>
Var<T> adv_loss_discriminator(const std::array<Var<T>, 3>& real_logits, const std::array<Var<T>, 3>& fake_logits) {
  LossTrace::record("disc_adv");
  const T floor = static_cast<T>(kLogClamp);
  std::array<Var<T>, 3> per_scale;
  for (std::size_t k = 0; k < 3; ++k) {
    per_scale[k] = add(mean(neg_log_sigmoid(real_logits[k], floor)),
                       mean(neg_log_sigmoid(scale(fake_logits[k], T(-1)), floor)));
  }
  return scale_mean(per_scale);
}

template <typename T>
Var<T> adv_loss_generator(const std::array<Var<T>, 3>& fake_logits) {
  LossTrace::record("adv");
  const T floor = static_cast<T>(kLogClamp);
  std::array<Var<T>, 3> per_scale;
  for (std::size_t k = 0; k < 3; ++k) per_scale[k] = mean(neg_log_sigmoid(fake_logits[k], floor));
  return scale_mean(per_scale);
}

template <typename T>
Var<T> ar1_loss(const Var<T>& stylized, const Var<T>& restylized) {
  LossTrace::record("ar1");
  require_same(stylized, restylized, "ar1_loss");
  return norm_of_difference(stylized, restylized);
}

template <typename T>
Var<T> ar2_loss(const Var<T>& style_aesthetic, const Var<T>& result_aesthetic) {
  LossTrace::record("ar2");
  require_same(style_aesthetic, result_aesthetic, "ar2_loss");
  return moment_distance(style_aesthetic, result_aesthetic);
}

template <typename V>
V stage1_generator_objective(const GeneratorTerms<V>& t, const LossWeights& w, const LossToggles& on) {
  std::optional<V> total;
  add_term(total, t.adv, w.adv1, on.adv, "adv");
  add_term(total, t.content, w.content1, true, "content");
  add_term(total, t.style, w.style1, true, "style");
  add_term(total, t.identity, w.identity, on.identity, "identity");
  return *total;
}

template <typename V>
V stage2_generator_objective(const GeneratorTerms<V>& t, const LossWeights& w, const LossToggles& on) {
  std::optional<V> total;
  add_term(total, t.adv, w.adv2, on.adv, "adv");
  add_term(total, t.content, w.content2, true, "content");
  add_term(total, t.style, w.style2, true, "style");
  add_term(total, t.ar1, w.ar1, on.ar1, "ar1");
  add_term(total, t.ar2, w.ar2, on.ar2, "ar2");
  return *total;
}

#define AESUST_INSTANTIATE_LOSSES(T)                                                                         \
  template Var<T> content_loss(const FeaturePyramid<T>&, const FeaturePyramid<T>&);                          \
  template Var<T> style_loss(const FeaturePyramid<T>&, const FeaturePyramid<T>&);                            \
  template Var<T> identity_loss(const Var<T>&, const Var<T>&, const Var<T>&, const Var<T>&);                 \
  template Var<T> adv_loss_discriminator(const std::array<Var<T>, 3>&, const std::array<Var<T>, 3>&);        \
  template Var<T> adv_loss_generator(const std::array<Var<T>, 3>&);                                          \
  template Var<T> ar1_loss(const Var<T>&, const Var<T>&);                                                    \
  template Var<T> ar2_loss(const Var<T>&, const Var<T>&);                                                    \
  template Var<T> stage1_generator_objective(const GeneratorTerms<Var<T>>&, const LossWeights&, const LossToggles&); \
  template Var<T> stage2_generator_objective(const GeneratorTerms<Var<T>>&, const LossWeights&, const LossToggles&); \
  template T stage1_generator_objective(const GeneratorTerms<T>&, const LossWeights&, const LossToggles&);   \
  template T stage2_generator_objective(const GeneratorTerms<T>&, const LossWeights&, const LossToggles&);

AESUST_INSTANTIATE_LOSSES(float)
AESUST_INSTANTIATE_LOSSES(double)

}  // namespace aesust
