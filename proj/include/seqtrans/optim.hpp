#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "seqtrans/tensor.hpp"

namespace seqtrans {

template <typename Real>
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<Real> m;
  std::vector<Real> v;
  long step = 0;
};

/// m <- b1 m + (1-b1) g; v <- b2 v + (1-b2) g^2; theta -= lr * mhat / (sqrt(vhat) + eps).
/// Throws on a non-finite gradient before touching anything.
template <typename Real>
void adam_step(std::span<Real> params, std::span<const Real> grads, AdamState<Real>& s);

template <typename Real>
struct AdaDeltaState {
  double rho = 0.95;
  double eps = 1e-6;
  /// Multiplier on the update; 1 is the canonical learning-rate-free rule.
  double scale = 1.0;
  std::vector<Real> sq_grad;
  std::vector<Real> sq_update;
};

/// E[g^2] <- rho E[g^2] + (1-rho) g^2; dx = -sqrt(E[dx^2]+eps)/sqrt(E[g^2]+eps) g;
/// E[dx^2] <- rho E[dx^2] + (1-rho) dx^2; theta += dx.
template <typename Real>
void adadelta_step(std::span<Real> params, std::span<const Real> grads, AdaDeltaState<Real>& s);

enum class OptimizerKind { adam, adadelta };

std::string_view optimizer_name(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double lr = 1e-3;
  /// AdaDelta update multiplier.
  double adadelta_scale = 1.0;
  /// Global gradient-norm clip; <= 0 disables.
  double clip = 5.0;
};

/// Scales all trainable gradients so their joint L2 norm is at most
/// `max_norm`. Returns the norm before clipping.
template <typename Real>
double clip_grad_norm(ParamStore<Real>& store, double max_norm);

/// One state per trainable tensor of a store.
template <typename Real>
class Optimizer {
 public:
  Optimizer(const ParamStore<Real>& store, OptimizerConfig cfg);

  /// Clips, then updates every trainable tensor from its gradient.
  void step(ParamStore<Real>& store);
  const OptimizerConfig& config() const { return cfg_; }

 private:
  OptimizerConfig cfg_;
  std::vector<AdamState<Real>> adam_;
  std::vector<AdaDeltaState<Real>> adadelta_;
};

/// Strict-improvement early stopping on a metric to maximize.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience = 5) : patience_(patience) {}

  struct Decision {
    bool improved = false;  // caller should snapshot the model
    bool stop = false;
  };

  Decision update(double metric);

  double best() const { return best_; }
  int best_epoch() const { return best_epoch_; }
  int epochs_since_improvement() const { return since_; }
  int epochs_seen() const { return seen_; }
  int patience() const { return patience_; }

 private:
  int patience_;
  double best_ = 0.0;
  bool has_best_ = false;
  int best_epoch_ = 0;
  int since_ = 0;
  int seen_ = 0;
};

}  // namespace seqtrans
