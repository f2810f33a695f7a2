#include "aesust/optim.hpp"

#include <cmath>

#include "aesust/persist.hpp"

namespace aesust {

template <typename T>
void Adam<T>::step(const ParameterList<T>& params) {
  const double b1 = settings_.beta1, b2 = settings_.beta2;
  for (auto p : params) {
    if (!p.var.has_grad()) continue;
    State& s = state_[p.name];
    if (s.m.empty()) {
      s.m = Tensor<T>(p.var.shape());
      s.v = Tensor<T>(p.var.shape());
    }
    ++s.t;
    const auto& g = p.var.grad().data().array();
    s.m.data().array() = static_cast<T>(b1) * s.m.data().array() + static_cast<T>(1 - b1) * g;
    s.v.data().array() = static_cast<T>(b2) * s.v.data().array() + static_cast<T>(1 - b2) * g.square();
    const double c1 = 1 - std::pow(b1, static_cast<double>(s.t));
    const double c2 = 1 - std::pow(b2, static_cast<double>(s.t));
    const T step_size = static_cast<T>(settings_.lr / c1);
    const T inv_c2 = static_cast<T>(1 / c2);
    const T eps = static_cast<T>(settings_.eps);
    p.var.mutable_value().data().array() -= step_size * s.m.data().array() / ((s.v.data().array() * inv_c2).sqrt() + eps);
  }
}

template <typename T>
void Adam<T>::save(TensorArchive& archive, const std::string& prefix) const {
  for (const auto& [name, s] : state_) {
    archive.set(prefix + "." + name + ".m", s.m);
    archive.set(prefix + "." + name + ".v", s.v);
    archive.set_scalar(prefix + "." + name + ".t", static_cast<double>(s.t));
  }
}

template <typename T>
void Adam<T>::load(const TensorArchive& archive, const std::string& prefix, const ParameterList<T>& params) {
  state_.clear();
  for (const auto& p : params) {
    const auto t = archive.scalar(prefix + "." + p.name + ".t");
    if (!t) continue;
    State s;
    s.t = static_cast<long long>(*t);
    ParameterList<T> moments{{prefix + "." + p.name + ".m", Var<T>(Tensor<T>(p.var.shape()))},
                             {prefix + "." + p.name + ".v", Var<T>(Tensor<T>(p.var.shape()))}};
    load_parameters(moments, archive);
    s.m = moments[0].var.value();
    s.v = moments[1].var.value();
    state_[p.name] = std::move(s);
  }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace aesust
