#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "seqtrans/tensor.hpp"

namespace seqtrans {

/// Linear-chain CRF scores. A tag sequence y over L positions scores
///   start[y0] + sum_t emission[t, y_t] + sum_{t>0} trans[y_{t-1}, y_t] + end[y_{L-1}]
/// and p(y | x) = exp(score(y)) / Z. `transitions` is row-major [K x K] with
/// entry (prev, cur).
template <typename Real>
struct CrfScores {
  std::span<const Real> transitions;
  std::span<const Real> start;
  std::span<const Real> end;
  std::size_t tags = 0;
};

template <typename Real>
struct CrfGradients {
  Matrix<Real> emissions;         // [L x K]
  std::vector<Real> transitions;  // [K x K]
  std::vector<Real> start;        // [K]
  std::vector<Real> end;          // [K]
};

template <typename Real>
Real crf_sequence_score(const Matrix<Real>& emissions, std::span<const int> tags,
                        const CrfScores<Real>& crf);

/// log Z by the forward algorithm in log space. Throws on non-finite input.
template <typename Real>
Real crf_log_partition(const Matrix<Real>& emissions, const CrfScores<Real>& crf);

/// Per-position tag marginals p(y_t = k | x), [L x K].
template <typename Real>
Matrix<Real> crf_marginals(const Matrix<Real>& emissions, const CrfScores<Real>& crf);

/// -log p(gold | x). When `grads` is given it receives d loss / d scores
/// (marginals minus gold indicators), scaled by `scale`.
template <typename Real>
Real crf_nll(const Matrix<Real>& emissions, std::span<const int> gold, const CrfScores<Real>& crf,
             CrfGradients<Real>* grads = nullptr, Real scale = Real(1));

/// Sparse categorical cross-entropy of independent per-token softmaxes, summed
/// over positions. An alternative to the CRF loss for softmax-headed ablations.
/// When `grad` is given it receives `scale` * (softmax - one-hot gold), [L x K].
template <typename Real>
Real softmax_cross_entropy(const Matrix<Real>& emissions, std::span<const int> gold,
                           Matrix<Real>* grad = nullptr, Real scale = Real(1));

/// Highest-scoring sequence; ties resolve to the lowest tag id.
template <typename Real>
std::vector<int> crf_viterbi(const Matrix<Real>& emissions, const CrfScores<Real>& crf);

/// Transition/start/end parameters registered in a ParamStore.
template <typename Real>
class Crf {
 public:
  Crf() = default;
  Crf(ParamStore<Real>& store, const std::string& prefix, std::size_t tags);

  CrfScores<Real> scores(const ParamStore<Real>& store) const;
  /// Loss for one sentence; adds scaled parameter gradients and returns
  /// d loss / d emissions (already scaled).
  Real nll_backward(ParamStore<Real>& store, const Matrix<Real>& emissions,
                    std::span<const int> gold, Real scale, Matrix<Real>& demissions) const;

  std::size_t tags() const { return tags_; }

 private:
  std::size_t trans_ = 0, start_ = 0, end_ = 0;
  std::size_t tags_ = 0;
};

}  // namespace seqtrans
