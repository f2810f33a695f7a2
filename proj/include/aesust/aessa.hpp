#pragma once

#include <string>

#include "aesust/layers.hpp"

namespace aesust {

/// Variance guard of the mean-variance channel normalization.
inline constexpr double kNormEpsilon = 1e-5;

/// The seven 1×1 convolutions of one attention level.
///
/// Step I (aesthetic channel attention) uses f_a, f_s1, f_s2 and f_out1;
/// step II (spatial style attention) uses f_c, f_sa1, f_sa2 and f_out2.
/// f_a maps the aesthetic channel count onto the level's channel count.
template <typename T>
struct AesSAParams {
  Conv2d<T> f_a, f_s1, f_s2, f_out1;
  Conv2d<T> f_c, f_sa1, f_sa2, f_out2;

  static AesSAParams zeros(Index channels, Index aesthetic_channels);
  /// Seeded normal init with standard deviation `stddev`; output convs included.
  static AesSAParams random(Index channels, Index aesthetic_channels, Rng& rng, double stddev);

  Index channels() const { return f_s1.out_channels(); }
  ParameterList<T> parameters(const std::string& prefix) const;
};

/// C×H×W feature plus the row-stochastic attention matrix that produced it.
template <typename T>
struct AttentionResult {
  Var<T> features;
  Var<T> attention;
};

/// N×C×H×W -> N×C×HW, row-major spatial flattening.
template <typename T> Var<T> vectorize(const Var<T>& feature);
/// N×C×HW -> N×C×H×W.
template <typename T> Var<T> devectorize(const Var<T>& matrix, Index height, Index width);

/// Global aesthetic-guided enhancement:
///   A_a  = softmax_rows(vec(f_a(F_a)) · vec(f_s1(F_s))ᵀ)          (C×C)
///   F_sa = f_out1(devec(A_a · vec(f_s2(F_s)))) + F_s
/// F_a must already share F_s's spatial grid.
template <typename T>
AttentionResult<T> aesthetic_enhance(const Var<T>& style, const Var<T>& aesthetic, const AesSAParams<T>& params);

/// Local structure-guided integration:
///   A_s  = softmax_rows(vec(f_c(Norm F_c))ᵀ · vec(f_sa1(Norm F_sa)))   (HcWc×HsWs)
///   F_cs = f_out2(devec(vec(f_sa2(F_sa)) · A_sᵀ)) + F_c
template <typename T>
AttentionResult<T> style_integrate(const Var<T>& content, const Var<T>& enhanced_style, const AesSAParams<T>& params);

template <typename T>
Var<T> aessa_forward(const Var<T>& content, const Var<T>& style, const Var<T>& aesthetic, const AesSAParams<T>& params);

/// conv3×3(F_r41 + upsample2(F_r51)) on the relu4_1 grid.
template <typename T>
Var<T> multi_level_fuse(const Var<T>& relu4_1, const Var<T>& relu5_1, const Conv2d<T>& fusion);

/// 3×3, pad 1 reflection fusion conv.
template <typename T>
Conv2d<T> make_fusion_conv(Index channels);

}  // namespace aesust
