#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "aesust/backbone.hpp"

namespace aesust {

/// Floor applied to sigmoid outputs inside the adversarial logs.
inline constexpr double kLogClamp = 1e-7;

/// Trade-off weights: lambda1..4 weight stage I, lambda5..9 stage II.
struct LossWeights {
  double adv1 = 5.0;       // lambda1
  double content1 = 1.0;   // lambda2
  double style1 = 1.0;     // lambda3
  double identity = 50.0;  // lambda4
  double adv2 = 5.0;       // lambda5
  double content2 = 1.0;   // lambda6
  double style2 = 1.0;     // lambda7
  double ar1 = 0.5;        // lambda8
  double ar2 = 500.0;      // lambda9
};

/// Loss terms that a training step may enable.
struct LossToggles {
  bool adv = true;
  bool identity = true;
  bool ar1 = true;
  bool ar2 = true;
};

/// Records the name of every loss term evaluated on this thread while alive.
class LossTrace {
 public:
  LossTrace();
  ~LossTrace();
  LossTrace(const LossTrace&) = delete;
  LossTrace& operator=(const LossTrace&) = delete;

  const std::vector<std::string>& names() const { return names_; }
  bool contains(const std::string& name) const;

  static void record(const char* name);

 private:
  std::vector<std::string> names_;
  LossTrace* previous_;
};

// All norms are the root of the sum of squares over one sample; batched
// inputs yield the mean over the batch.

/// Σ over relu4_1, relu5_1 of ‖Norm(φ(I_cs)) − Norm(φ(I_c))‖.
template <typename T>
Var<T> content_loss(const FeaturePyramid<T>& stylized, const FeaturePyramid<T>& content);

/// Σ over all five taps of ‖μ diff‖ + ‖σ diff‖.
template <typename T>
Var<T> style_loss(const FeaturePyramid<T>& stylized, const FeaturePyramid<T>& style);

/// ‖I_cc − I_c‖ + ‖I_ss − I_s‖.
template <typename T>
Var<T> identity_loss(const Var<T>& content_recon, const Var<T>& content, const Var<T>& style_recon, const Var<T>& style);

/// Mean over scales and patches of −log σ(real) − log(1 − σ(fake)).
template <typename T>
Var<T> adv_loss_discriminator(const std::array<Var<T>, 3>& real_logits, const std::array<Var<T>, 3>& fake_logits);

/// Non-saturating generator loss: mean over scales and patches of −log σ(fake).
template <typename T>
Var<T> adv_loss_generator(const std::array<Var<T>, 3>& fake_logits);

/// ‖I_cs|s − I_cscs|cs‖.
template <typename T>
Var<T> ar1_loss(const Var<T>& stylized, const Var<T>& restylized);

/// ‖μ(F_a(I_s)) − μ(F_a(I_cs|s))‖ + ‖σ(·) − σ(·)‖ over channels.
template <typename T>
Var<T> ar2_loss(const Var<T>& style_aesthetic, const Var<T>& result_aesthetic);

/// Per-step loss terms; a term is absent when it was not evaluated.
template <typename V>
struct GeneratorTerms {
  std::optional<V> adv, content, style, identity, ar1, ar2;
};

/// λ1·adv + λ2·content + λ3·style + λ4·identity. AR terms are ignored.
/// Throws ConfigError if an enabled term is missing.
template <typename V>
V stage1_generator_objective(const GeneratorTerms<V>& terms, const LossWeights& w, const LossToggles& on = {});

/// λ5·adv + λ6·content + λ7·style + λ8·AR1 + λ9·AR2. The identity term is ignored.
template <typename V>
V stage2_generator_objective(const GeneratorTerms<V>& terms, const LossWeights& w, const LossToggles& on = {});

}  // namespace aesust
