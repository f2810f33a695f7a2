#include "aesust/aessa.hpp"

namespace aesust {

namespace {

template <typename T>
Conv2d<T> pointwise(Index in, Index out) {
  return Conv2d<T>(in, out, 1, ConvOptions{});
}

}  // namespace

template <typename T>
AesSAParams<T> AesSAParams<T>::zeros(Index c, Index ca) {
  AesSAParams p;
  p.f_a = pointwise<T>(ca, c);
  p.f_s1 = pointwise<T>(c, c);
  p.f_s2 = pointwise<T>(c, c);
  p.f_out1 = pointwise<T>(c, c);
  p.f_c = pointwise<T>(c, c);
  p.f_sa1 = pointwise<T>(c, c);
  p.f_sa2 = pointwise<T>(c, c);
  p.f_out2 = pointwise<T>(c, c);
  return p;
}

template <typename T>
AesSAParams<T> AesSAParams<T>::random(Index c, Index ca, Rng& rng, double stddev) {
  AesSAParams p = zeros(c, ca);
  for (Conv2d<T>* conv : {&p.f_a, &p.f_s1, &p.f_s2, &p.f_out1, &p.f_c, &p.f_sa1, &p.f_sa2, &p.f_out2}) {
    conv->init_normal(rng, stddev);
  }
  return p;
}

template <typename T>
ParameterList<T> AesSAParams<T>::parameters(const std::string& prefix) const {
  ParameterList<T> out;
  f_a.append_parameters(prefix + ".f_a", out);
  f_s1.append_parameters(prefix + ".f_s1", out);
  f_s2.append_parameters(prefix + ".f_s2", out);
  f_out1.append_parameters(prefix + ".f_out1", out);
  f_c.append_parameters(prefix + ".f_c", out);
  f_sa1.append_parameters(prefix + ".f_sa1", out);
  f_sa2.append_parameters(prefix + ".f_sa2", out);
  f_out2.append_parameters(prefix + ".f_out2", out);
  return out;
}

template <typename T>
Var<T> vectorize(const Var<T>& feature) {
  require_rank4(feature.value(), "vectorize");
  return reshape(feature, {feature.dim(0), feature.dim(1), feature.dim(2) * feature.dim(3)});
}

template <typename T>
Var<T> devectorize(const Var<T>& matrix, Index height, Index width) {
  if (matrix.value().rank() != 3 || matrix.dim(2) != height * width) {
    throw ShapeError("devectorize: cannot view " + to_string(matrix.shape()) + " as a " + std::to_string(height) +
                     "×" + std::to_string(width) + " grid");
  }
  return reshape(matrix, {matrix.dim(0), matrix.dim(1), height, width});
}

template <typename T>
AttentionResult<T> aesthetic_enhance(const Var<T>& style, const Var<T>& aesthetic, const AesSAParams<T>& params) {
  require_rank4(style.value(), "aesthetic_enhance style");
  require_rank4(aesthetic.value(), "aesthetic_enhance aesthetic");
  if (style.dim(0) != aesthetic.dim(0) || style.dim(2) != aesthetic.dim(2) || style.dim(3) != aesthetic.dim(3)) {
    throw ShapeError("aesthetic_enhance: style " + to_string(style.shape()) + " and aesthetic " +
                     to_string(aesthetic.shape()) + " must share batch and spatial size");
  }
  if (aesthetic.dim(1) != params.f_a.in_channels() || style.dim(1) != params.channels()) {
    throw ShapeError("aesthetic_enhance: channel counts do not match the level parameters");
  }
  const Var<T> a_hat = vectorize(params.f_a(aesthetic));
  const Var<T> s1_hat = vectorize(params.f_s1(style));
  const Var<T> s2_hat = vectorize(params.f_s2(style));
  Var<T> attention = softmax_rows(batch_matmul(a_hat, s1_hat, false, true));
  Var<T> mixed = devectorize(batch_matmul(attention, s2_hat, false, false), style.dim(2), style.dim(3));
  return {add(params.f_out1(mixed), style), attention};
}

template <typename T>
AttentionResult<T> style_integrate(const Var<T>& content, const Var<T>& enhanced_style, const AesSAParams<T>& params) {
  require_rank4(content.value(), "style_integrate content");
  require_rank4(enhanced_style.value(), "style_integrate style");
  if (content.dim(1) != enhanced_style.dim(1) || content.dim(0) != enhanced_style.dim(0)) {
    throw ShapeError("style_integrate: content " + to_string(content.shape()) + " and style " +
                     to_string(enhanced_style.shape()) + " differ in batch or channels");
  }
  const T eps = static_cast<T>(kNormEpsilon);
  const Var<T> c_hat = vectorize(params.f_c(channel_norm(content, eps)));
  const Var<T> sa1_hat = vectorize(params.f_sa1(channel_norm(enhanced_style, eps)));
  const Var<T> sa2_hat = vectorize(params.f_sa2(enhanced_style));
  Var<T> attention = softmax_rows(batch_matmul(c_hat, sa1_hat, true, false));
  Var<T> mixed = devectorize(batch_matmul(sa2_hat, attention, false, true), content.dim(2), content.dim(3));
  return {add(params.f_out2(mixed), content), attention};
}

template <typename T>
Var<T> aessa_forward(const Var<T>& content, const Var<T>& style, const Var<T>& aesthetic, const AesSAParams<T>& params) {
  const auto enhanced = aesthetic_enhance(style, aesthetic, params);
  return style_integrate(content, enhanced.features, params).features;
}

template <typename T>
Var<T> multi_level_fuse(const Var<T>& relu4_1, const Var<T>& relu5_1, const Conv2d<T>& fusion) {
  require_rank4(relu4_1.value(), "multi_level_fuse relu4_1");
  require_rank4(relu5_1.value(), "multi_level_fuse relu5_1");
  if (relu4_1.dim(1) != relu5_1.dim(1) || relu4_1.dim(2) != 2 * relu5_1.dim(2) || relu4_1.dim(3) != 2 * relu5_1.dim(3)) {
    throw ShapeError("multi_level_fuse: relu5_1 grid " + to_string(relu5_1.shape()) + " is not half of relu4_1 grid " +
                     to_string(relu4_1.shape()));
  }
  return fusion(add(relu4_1, upsample_nearest(relu5_1, 2)));
}

template <typename T>
Conv2d<T> make_fusion_conv(Index channels) {
  return Conv2d<T>(channels, channels, 3, ConvOptions{1, 1, PadMode::Reflect});
}

#define AESUST_INSTANTIATE_AESSA(T)                                                                          \
  template struct AesSAParams<T>;                                                                            \
  template Var<T> vectorize(const Var<T>&);                                                                  \
  template Var<T> devectorize(const Var<T>&, Index, Index);                                                  \
  template AttentionResult<T> aesthetic_enhance(const Var<T>&, const Var<T>&, const AesSAParams<T>&);        \
  template AttentionResult<T> style_integrate(const Var<T>&, const Var<T>&, const AesSAParams<T>&);          \
  template Var<T> aessa_forward(const Var<T>&, const Var<T>&, const Var<T>&, const AesSAParams<T>&);         \
  template Var<T> multi_level_fuse(const Var<T>&, const Var<T>&, const Conv2d<T>&);                          \
  template Conv2d<T> make_fusion_conv(Index);

AESUST_INSTANTIATE_AESSA(float)
AESUST_INSTANTIATE_AESSA(double)

}  // namespace aesust
