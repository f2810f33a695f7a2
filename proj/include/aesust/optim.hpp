#pragma once

#include <string>
#include <unordered_map>

#include "aesust/layers.hpp"

namespace aesust {

class TensorArchive;

struct AdamSettings {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction, no weight decay. State is keyed by parameter name.
template <typename T>
class Adam {
 public:
  explicit Adam(AdamSettings settings = {}) : settings_(settings) {}

  /// Updates every parameter that holds a gradient; others are left untouched.
  void step(const ParameterList<T>& params);

  const AdamSettings& settings() const { return settings_; }

  /// Stored as `<prefix>.<param>.{m,v,t}`.
  void save(TensorArchive& archive, const std::string& prefix) const;
  void load(const TensorArchive& archive, const std::string& prefix, const ParameterList<T>& params);

 private:
  struct State {
    Tensor<T> m;
    Tensor<T> v;
    long long t = 0;
  };

  AdamSettings settings_;
  std::unordered_map<std::string, State> state_;
};

}  // namespace aesust
