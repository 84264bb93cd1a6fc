#include "seqtrans/optim.hpp"

#include <cmath>

namespace seqtrans {

namespace {

template <typename Real>
void check_finite(std::span<const Real> grads) {
  for (Real g : grads) {
    if (!std::isfinite(g)) throw Error("numeric", "non-finite gradient");
  }
}

}  // namespace

template <typename Real>
void adam_step(std::span<Real> params, std::span<const Real> grads, AdamState<Real>& s) {
  check_finite(grads);
  if (s.m.size() != params.size()) {
    s.m.assign(params.size(), Real(0));
    s.v.assign(params.size(), Real(0));
  }
  ++s.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    const double m = s.beta1 * s.m[i] + (1.0 - s.beta1) * g;
    const double v = s.beta2 * s.v[i] + (1.0 - s.beta2) * g * g;
    s.m[i] = static_cast<Real>(m);
    s.v[i] = static_cast<Real>(v);
    const double update = s.lr * (m / c1) / (std::sqrt(v / c2) + s.eps);
    params[i] = static_cast<Real>(params[i] - update);
  }
}

template <typename Real>
void adadelta_step(std::span<Real> params, std::span<const Real> grads, AdaDeltaState<Real>& s) {
  check_finite(grads);
  if (s.sq_grad.size() != params.size()) {
    s.sq_grad.assign(params.size(), Real(0));
    s.sq_update.assign(params.size(), Real(0));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    const double eg = s.rho * s.sq_grad[i] + (1.0 - s.rho) * g * g;
    const double dx = -std::sqrt(s.sq_update[i] + s.eps) / std::sqrt(eg + s.eps) * g;
    s.sq_grad[i] = static_cast<Real>(eg);
    s.sq_update[i] = static_cast<Real>(s.rho * s.sq_update[i] + (1.0 - s.rho) * dx * dx);
    params[i] = static_cast<Real>(params[i] + s.scale * dx);
  }
}

std::string_view optimizer_name(OptimizerKind kind) {
  return kind == OptimizerKind::adam ? "adam" : "adadelta";
}

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "adam") return OptimizerKind::adam;
  if (name == "adadelta") return OptimizerKind::adadelta;
  throw Error("config", "unknown optimizer '" + std::string(name) + "' (expected adam|adadelta)");
}

template <typename Real>
double clip_grad_norm(ParamStore<Real>& store, double max_norm) {
  double sq = 0.0;
  for (const auto& t : store) {
    if (!t.trainable) continue;
    for (Real g : t.grad) sq += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const auto factor = static_cast<Real>(max_norm / norm);
    for (auto& t : store) {
      if (!t.trainable) continue;
      for (Real& g : t.grad) g *= factor;
    }
  }
  return norm;
}

template <typename Real>
Optimizer<Real>::Optimizer(const ParamStore<Real>& store, OptimizerConfig cfg) : cfg_(cfg) {
  adam_.resize(store.size());
  adadelta_.resize(store.size());
  for (auto& s : adam_) s.lr = cfg.lr;
  for (auto& s : adadelta_) s.scale = cfg.adadelta_scale;
}

template <typename Real>
void Optimizer<Real>::step(ParamStore<Real>& store) {
  for (const auto& t : store) {
    if (t.trainable) check_finite<Real>(t.grad);
  }
  clip_grad_norm(store, cfg_.clip);
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto& t = store[i];
    if (!t.trainable) continue;
    if (cfg_.kind == OptimizerKind::adam) {
      adam_step<Real>(t.value, t.grad, adam_[i]);
    } else {
      adadelta_step<Real>(t.value, t.grad, adadelta_[i]);
    }
  }
}

EarlyStopping::Decision EarlyStopping::update(double metric) {
  ++seen_;
  Decision d;
  if (!has_best_ || metric > best_) {
    has_best_ = true;
    best_ = metric;
    best_epoch_ = seen_;
    since_ = 0;
    d.improved = true;
  } else {
    ++since_;
  }
  d.stop = since_ >= patience_;
  return d;
}

#define SEQTRANS_INSTANTIATE(Real)                                                          \
  template void adam_step<Real>(std::span<Real>, std::span<const Real>, AdamState<Real>&);  \
  template void adadelta_step<Real>(std::span<Real>, std::span<const Real>,                 \
                                    AdaDeltaState<Real>&);                                  \
  template double clip_grad_norm<Real>(ParamStore<Real>&, double);                          \
  template class Optimizer<Real>;

SEQTRANS_INSTANTIATE(float)
SEQTRANS_INSTANTIATE(double)

#undef SEQTRANS_INSTANTIATE

}  // namespace seqtrans
