#pragma once

// Exhaustive-enumeration oracles for small linear-chain CRFs. They score every
// one of K^L tag sequences directly, independent of the forward algorithm and
// of Viterbi.

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "seqtrans/crf.hpp"

namespace oracle {

struct CrfInstance {
  seqtrans::Matrix<double> emissions;
  std::vector<double> transitions, start, end;
  std::size_t tags = 0;

  seqtrans::CrfScores<double> scores() const { return {transitions, start, end, tags}; }
};

inline CrfInstance random_instance(std::size_t length, std::size_t tags, std::mt19937_64& rng,
                                   double scale = 2.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  CrfInstance c;
  c.tags = tags;
  c.emissions = seqtrans::Matrix<double>(length, tags);
  for (auto& v : c.emissions.data) v = u(rng);
  c.transitions.resize(tags * tags);
  for (auto& v : c.transitions) v = u(rng);
  c.start.resize(tags);
  for (auto& v : c.start) v = u(rng);
  c.end.resize(tags);
  for (auto& v : c.end) v = u(rng);
  return c;
}

/// Calls fn(sequence) for every tag sequence in lexicographic order.
template <typename Fn>
void for_each_sequence(std::size_t length, std::size_t tags, Fn&& fn) {
  std::vector<int> y(length, 0);
  for (;;) {
    fn(static_cast<const std::vector<int>&>(y));
    std::size_t pos = length;
    while (pos > 0) {
      --pos;
      if (static_cast<std::size_t>(++y[pos]) < tags) break;
      y[pos] = 0;
      if (pos == 0) return;
    }
    if (length == 0) return;
  }
}

inline double score(const CrfInstance& c, const std::vector<int>& y) {
  double s = c.start[static_cast<std::size_t>(y.front())] + c.end[static_cast<std::size_t>(y.back())];
  for (std::size_t t = 0; t < y.size(); ++t) {
    s += c.emissions(t, static_cast<std::size_t>(y[t]));
    if (t > 0) s += c.transitions[static_cast<std::size_t>(y[t - 1]) * c.tags + static_cast<std::size_t>(y[t])];
  }
  return s;
}

/// log sum_y exp(score(y)), with the maximum factored out.
inline double brute_log_partition(const CrfInstance& c) {
  double top = -std::numeric_limits<double>::infinity();
  for_each_sequence(c.emissions.rows, c.tags, [&](const auto& y) { top = std::max(top, score(c, y)); });
  double sum = 0.0;
  for_each_sequence(c.emissions.rows, c.tags, [&](const auto& y) { sum += std::exp(score(c, y) - top); });
  return top + std::log(sum);
}

/// Highest-scoring sequence; the first one in lexicographic order wins ties,
/// which is the lowest-tag-id preference.
inline std::vector<int> brute_argmax(const CrfInstance& c) {
  std::vector<int> best;
  double best_score = -std::numeric_limits<double>::infinity();
  for_each_sequence(c.emissions.rows, c.tags, [&](const auto& y) {
    const double s = score(c, y);
    if (s > best_score) {
      best_score = s;
      best = y;
    }
  });
  return best;
}

}  // namespace oracle
