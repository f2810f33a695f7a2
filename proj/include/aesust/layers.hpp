#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "aesust/ops.hpp"

namespace aesust {

using Rng = std::mt19937_64;

template <typename T>
struct NamedParameter {
  std::string name;
  Var<T> var;
};

template <typename T>
using ParameterList = std::vector<NamedParameter<T>>;

template <typename T>
void set_trainable(const ParameterList<T>& params, bool on) {
  for (auto p : params) p.var.set_requires_grad(on);
}

template <typename T>
void zero_grads(const ParameterList<T>& params) {
  for (auto p : params) p.var.zero_grad();
}

template <typename T>
Index parameter_count(const ParameterList<T>& params) {
  Index n = 0;
  for (const auto& p : params) n += p.var.value().size();
  return n;
}

/// Channel width after applying a desk-scale multiplier; never below one.
inline Index scaled_width(Index base, double multiplier) {
  return std::max<Index>(1, static_cast<Index>(std::lround(static_cast<double>(base) * multiplier)));
}

template <typename T>
struct Conv2d {
  Var<T> weight;
  Var<T> bias;
  ConvOptions options;

  Conv2d() = default;
  Conv2d(Index in_channels, Index out_channels, Index kernel, ConvOptions opts, bool trainable = true)
      : weight(Tensor<T>({out_channels, in_channels, kernel, kernel}), trainable),
        bias(Tensor<T>({out_channels}), trainable),
        options(opts) {}

  Var<T> operator()(const Var<T>& x) const { return conv2d(x, weight, bias, options); }

  Index in_channels() const { return weight.dim(1); }
  Index out_channels() const { return weight.dim(0); }
  Index kernel() const { return weight.dim(2); }

  void init_normal(Rng& rng, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    for (Index i = 0; i < weight.value().size(); ++i) weight.mutable_value()[i] = static_cast<T>(dist(rng));
    bias.mutable_value().set_zero();
  }

  /// He-scaled normal init for ReLU stacks.
  void init_he(Rng& rng) { init_normal(rng, std::sqrt(2.0 / static_cast<double>(in_channels() * kernel() * kernel()))); }

  /// Rows (or columns, whichever is fewer) of the out×fan_in matrix are orthonormal, then scaled by `gain`.
  void init_orthogonal(Rng& rng, double gain) {
    const Index rows = out_channels();
    const Index cols = in_channels() * kernel() * kernel();
    std::normal_distribution<double> dist(0.0, 1.0);
    const Index tall = std::max(rows, cols), wide = std::min(rows, cols);
    Eigen::MatrixXd g(tall, wide);
    for (Index i = 0; i < g.size(); ++i) g.data()[i] = dist(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(tall, wide);
    // Sign fix so the factorization is unique.
    const Eigen::VectorXd d = qr.matrixQR().diagonal();
    for (Index j = 0; j < wide; ++j) {
      if (d[j] < 0) q.col(j) *= -1.0;
    }
    RowMatrix<double> w = rows >= cols ? RowMatrix<double>(q) : RowMatrix<double>(q.transpose());
    weight.mutable_value().matrix(rows, cols) = (w * gain).template cast<T>();
    bias.mutable_value().set_zero();
  }

  void set_zero() {
    weight.mutable_value().set_zero();
    bias.mutable_value().set_zero();
  }

  void append_parameters(const std::string& prefix, ParameterList<T>& out) const {
    out.push_back({prefix + ".weight", weight});
    out.push_back({prefix + ".bias", bias});
  }
};

}  // namespace aesust
