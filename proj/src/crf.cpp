#include "seqtrans/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace seqtrans {

namespace {

template <typename Real>
Real log_sum_exp(const Real* v, std::size_t n) {
  Real m = *std::max_element(v, v + n);
  if (!std::isfinite(m)) return m;
  Real s = 0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

template <typename Real>
void check_inputs(const Matrix<Real>& emissions, const CrfScores<Real>& crf) {
  if (emissions.cols != crf.tags) {
    throw Error("model", "emission width " + std::to_string(emissions.cols) +
                             " does not match tag count " + std::to_string(crf.tags));
  }
  for (Real v : emissions.data) {
    if (!std::isfinite(v)) throw Error("numeric", "non-finite CRF emission score");
  }
}

// alpha[t][k]: log-sum of all prefixes ending in tag k at t (start and
// emissions included). beta[t][k]: log-sum of all suffixes after t given k
// (end score included).
template <typename Real>
void forward_backward(const Matrix<Real>& e, const CrfScores<Real>& crf, Matrix<Real>& alpha,
                      Matrix<Real>* beta) {
  const std::size_t L = e.rows;
  const std::size_t K = crf.tags;
  alpha = Matrix<Real>(L, K);
  std::vector<Real> buf(K);
  for (std::size_t k = 0; k < K; ++k) alpha(0, k) = crf.start[k] + e(0, k);
  for (std::size_t t = 1; t < L; ++t) {
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t j = 0; j < K; ++j) buf[j] = alpha(t - 1, j) + crf.transitions[j * K + k];
      alpha(t, k) = log_sum_exp(buf.data(), K) + e(t, k);
    }
  }
  if (!beta) return;
  *beta = Matrix<Real>(L, K);
  for (std::size_t k = 0; k < K; ++k) (*beta)(L - 1, k) = crf.end[k];
  for (std::size_t t = L - 1; t-- > 0;) {
    for (std::size_t j = 0; j < K; ++j) {
      for (std::size_t k = 0; k < K; ++k) {
        buf[k] = crf.transitions[j * K + k] + e(t + 1, k) + (*beta)(t + 1, k);
      }
      (*beta)(t, j) = log_sum_exp(buf.data(), K);
    }
  }
}

template <typename Real>
Real final_log_partition(const Matrix<Real>& alpha, const CrfScores<Real>& crf) {
  const std::size_t K = crf.tags;
  std::vector<Real> buf(K);
  for (std::size_t k = 0; k < K; ++k) buf[k] = alpha(alpha.rows - 1, k) + crf.end[k];
  return log_sum_exp(buf.data(), K);
}

}  // namespace

template <typename Real>
Real crf_sequence_score(const Matrix<Real>& emissions, std::span<const int> tags,
                        const CrfScores<Real>& crf) {
  const std::size_t K = crf.tags;
  Real s = crf.start[static_cast<std::size_t>(tags[0])];
  for (std::size_t t = 0; t < tags.size(); ++t) {
    const auto y = static_cast<std::size_t>(tags[t]);
    s += emissions(t, y);
    if (t > 0) s += crf.transitions[static_cast<std::size_t>(tags[t - 1]) * K + y];
  }
  return s + crf.end[static_cast<std::size_t>(tags.back())];
}

template <typename Real>
Real crf_log_partition(const Matrix<Real>& emissions, const CrfScores<Real>& crf) {
  check_inputs(emissions, crf);
  Matrix<Real> alpha;
  forward_backward<Real>(emissions, crf, alpha, nullptr);
  return final_log_partition(alpha, crf);
}

template <typename Real>
Matrix<Real> crf_marginals(const Matrix<Real>& emissions, const CrfScores<Real>& crf) {
  check_inputs(emissions, crf);
  Matrix<Real> alpha;
  Matrix<Real> beta;
  forward_backward<Real>(emissions, crf, alpha, &beta);
  const Real log_z = final_log_partition(alpha, crf);
  Matrix<Real> m(emissions.rows, crf.tags);
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    m.data[i] = std::exp(alpha.data[i] + beta.data[i] - log_z);
  }
  return m;
}

template <typename Real>
Real crf_nll(const Matrix<Real>& emissions, std::span<const int> gold, const CrfScores<Real>& crf,
             CrfGradients<Real>* grads, Real scale) {
  check_inputs(emissions, crf);
  const std::size_t L = emissions.rows;
  const std::size_t K = crf.tags;
  if (gold.size() != L) throw Error("model", "gold sequence length differs from emissions");
  for (int y : gold) {
    if (y < 0 || static_cast<std::size_t>(y) >= K) throw Error("model", "gold tag id out of range");
  }
  Matrix<Real> alpha;
  Matrix<Real> beta;
  forward_backward<Real>(emissions, crf, alpha, grads ? &beta : nullptr);
  const Real log_z = final_log_partition(alpha, crf);
  const Real loss = log_z - crf_sequence_score(emissions, gold, crf);
  if (!grads) return loss;

  grads->emissions = Matrix<Real>(L, K);
  grads->transitions.assign(K * K, Real(0));
  grads->start.assign(K, Real(0));
  grads->end.assign(K, Real(0));
  for (std::size_t t = 0; t < L; ++t) {
    for (std::size_t k = 0; k < K; ++k) {
      grads->emissions(t, k) = scale * std::exp(alpha(t, k) + beta(t, k) - log_z);
    }
  }
  for (std::size_t k = 0; k < K; ++k) {
    grads->start[k] = grads->emissions(0, k);
    grads->end[k] = grads->emissions(L - 1, k);
  }
  for (std::size_t t = 1; t < L; ++t) {
    for (std::size_t j = 0; j < K; ++j) {
      for (std::size_t k = 0; k < K; ++k) {
        const Real lp = alpha(t - 1, j) + crf.transitions[j * K + k] + emissions(t, k) +
                        beta(t, k) - log_z;
        grads->transitions[j * K + k] += scale * std::exp(lp);
      }
    }
  }
  for (std::size_t t = 0; t < L; ++t) {
    const auto y = static_cast<std::size_t>(gold[t]);
    grads->emissions(t, y) -= scale;
    if (t > 0) grads->transitions[static_cast<std::size_t>(gold[t - 1]) * K + y] -= scale;
  }
  grads->start[static_cast<std::size_t>(gold.front())] -= scale;
  grads->end[static_cast<std::size_t>(gold.back())] -= scale;
  return loss;
}

template <typename Real>
std::vector<int> crf_viterbi(const Matrix<Real>& emissions, const CrfScores<Real>& crf) {
  check_inputs(emissions, crf);
  const std::size_t L = emissions.rows;
  const std::size_t K = crf.tags;
  if (L == 0) return {};
  std::vector<Real> score(K);
  std::vector<Real> next(K);
  std::vector<int> back(L * K, 0);
  for (std::size_t k = 0; k < K; ++k) score[k] = crf.start[k] + emissions(0, k);
  for (std::size_t t = 1; t < L; ++t) {
    for (std::size_t k = 0; k < K; ++k) {
      std::size_t best = 0;
      Real best_s = score[0] + crf.transitions[k];
      for (std::size_t j = 1; j < K; ++j) {
        const Real s = score[j] + crf.transitions[j * K + k];
        if (s > best_s) {
          best_s = s;
          best = j;
        }
      }
      next[k] = best_s + emissions(t, k);
      back[t * K + k] = static_cast<int>(best);
    }
    std::swap(score, next);
  }
  std::size_t last = 0;
  for (std::size_t k = 0; k < K; ++k) {
    if (score[k] + crf.end[k] > score[last] + crf.end[last]) last = k;
  }
  std::vector<int> path(L);
  path[L - 1] = static_cast<int>(last);
  for (std::size_t t = L - 1; t > 0; --t) {
    path[t - 1] = back[t * K + static_cast<std::size_t>(path[t])];
  }
  return path;
}

template <typename Real>
Crf<Real>::Crf(ParamStore<Real>& store, const std::string& prefix, std::size_t tags)
    : tags_(tags) {
  if (tags == 0) throw Error("model", "CRF needs at least one tag");
  trans_ = store.add(prefix + ".trans", {tags, tags});
  start_ = store.add(prefix + ".start", {tags});
  end_ = store.add(prefix + ".end", {tags});
}

template <typename Real>
CrfScores<Real> Crf<Real>::scores(const ParamStore<Real>& store) const {
  return {store[trans_].value, store[start_].value, store[end_].value, tags_};
}

template <typename Real>
Real Crf<Real>::nll_backward(ParamStore<Real>& store, const Matrix<Real>& emissions,
                             std::span<const int> gold, Real scale,
                             Matrix<Real>& demissions) const {
  CrfGradients<Real> g;
  const Real loss = crf_nll(emissions, gold, scores(store), &g, scale);
  auto add = [](std::vector<Real>& dst, const std::vector<Real>& src) {
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
  };
  add(store[trans_].grad, g.transitions);
  add(store[start_].grad, g.start);
  add(store[end_].grad, g.end);
  demissions = std::move(g.emissions);
  return loss;
}

template <typename Real>
Real softmax_cross_entropy(const Matrix<Real>& emissions, std::span<const int> gold,
                           Matrix<Real>* grad, Real scale) {
  const std::size_t L = emissions.rows;
  const std::size_t K = emissions.cols;
  if (L == 0 || K == 0) throw Error("model", "empty emission matrix");
  if (gold.size() != L) throw Error("model", "gold sequence length differs from emissions");
  if (grad) *grad = Matrix<Real>(L, K);
  Real loss = 0;
  for (std::size_t t = 0; t < L; ++t) {
    const int y = gold[t];
    if (y < 0 || static_cast<std::size_t>(y) >= K) throw Error("model", "gold tag id out of range");
    const Real* row = emissions.row(t);
    const Real top = *std::max_element(row, row + K);
    if (!std::isfinite(top)) throw Error("numeric", "non-finite emission score");
    Real sum = 0;
    for (std::size_t k = 0; k < K; ++k) sum += std::exp(row[k] - top);
    const Real log_norm = top + std::log(sum);
    loss += log_norm - row[y];
    if (!grad) continue;
    for (std::size_t k = 0; k < K; ++k) (*grad)(t, k) = scale * std::exp(row[k] - log_norm);
    (*grad)(t, static_cast<std::size_t>(y)) -= scale;
  }
  return loss;
}

#define SEQTRANS_INSTANTIATE(Real)                                                            \
  template Real crf_sequence_score<Real>(const Matrix<Real>&, std::span<const int>,          \
                                         const CrfScores<Real>&);                            \
  template Real crf_log_partition<Real>(const Matrix<Real>&, const CrfScores<Real>&);        \
  template Matrix<Real> crf_marginals<Real>(const Matrix<Real>&, const CrfScores<Real>&);    \
  template Real crf_nll<Real>(const Matrix<Real>&, std::span<const int>,                     \
                              const CrfScores<Real>&, CrfGradients<Real>*, Real);            \
  template Real softmax_cross_entropy<Real>(const Matrix<Real>&, std::span<const int>,       \
                                            Matrix<Real>*, Real);                              \
  template std::vector<int> crf_viterbi<Real>(const Matrix<Real>&, const CrfScores<Real>&);  \
  template class Crf<Real>;

SEQTRANS_INSTANTIATE(float)
SEQTRANS_INSTANTIATE(double)

#undef SEQTRANS_INSTANTIATE

}  // namespace seqtrans
