#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <vector>

namespace seqtrans::vecmap {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Source row -> target row; -1 where a source word has no entry. At most one
/// target per source row, so this is a partial matching.
struct Dictionary {
  std::vector<int> target;

  std::size_t pairs() const;
  bool operator==(const Dictionary&) const = default;
};

/// Length-normalize rows, mean-center columns, length-normalize again.
/// Throws on a zero row (before or after centering) or a single-row input.
Matrix normalize(const Matrix& m);

/// Initial dictionary from sorted intra-lingual similarity profiles over the
/// first `k` rows of each side (rows are assumed frequency-ordered).
Dictionary init_dictionary(const Matrix& x, const Matrix& z, std::size_t k);

struct Procrustes {
  Matrix wx;
  Matrix wz;
  Eigen::VectorXd singular_values;
  bool rank_deficient = false;
};

/// Orthogonal Wx, Wz maximizing the summed similarity of dictionary pairs, from
/// the SVD of X^T D Z = U S V^T (Wx = U, Wz = V).
Procrustes procrustes_step(const Matrix& x, const Matrix& z, const Dictionary& dict);

struct SelfLearningConfig {
  std::size_t vocab_cutoff = 4000;
  double tol = 1e-6;
  int patience = 3;
  int max_iterations = 100;
  /// Randomly drop similarity entries during induction (keep_prob per entry).
  bool stochastic = false;
  double keep_prob = 0.9;
  std::uint64_t seed = 1;
};

struct MappingState {
  Matrix x;
  Matrix z;
  Matrix wx;
  Matrix wz;
  Dictionary dict;
  Eigen::VectorXd singular_values;
  int iteration = 0;
  double best_objective = -std::numeric_limits<double>::infinity();
  /// Objective of every executed iteration, accepted or not.
  std::vector<double> objective_history;
  bool rank_deficient_seen = false;
};

/// Starts a state from normalized matrices and an initial dictionary.
MappingState make_state(Matrix x, Matrix z, Dictionary dict);

/// Nearest neighbour (cosine) from each of the first k rows of `xs` into the
/// first k rows of `zs`. Ties go to the lowest target index.
Dictionary induce_dictionary(const Matrix& xs, const Matrix& zs, std::size_t k);

/// Alternates Procrustes and dictionary re-induction. The loop ends when the
/// dictionary stops changing, when the objective (mean matched similarity)
/// improves by less than `tol` for `patience` consecutive iterations, or at
/// `max_iterations`. An infinite `tol` runs exactly one iteration. Iterations
/// that lower the objective are not accepted.
MappingState self_learning(MappingState state, const SelfLearningConfig& cfg);

struct MappedSpaces {
  Matrix x;
  Matrix z;
};

/// Maps both sides with the state's transforms and scales each mapped
/// dimension by the square root of its singular value.
MappedSpaces reweight(const MappingState& state);
/// Mapping without re-weighting, for comparison.
MappedSpaces apply_mapping(const MappingState& state);

struct VecmapResult {
  MappingState state;
  MappedSpaces mapped;
};

/// normalize -> init_dictionary -> self_learning -> reweight.
VecmapResult map_embeddings(const Matrix& x, const Matrix& z, const SelfLearningConfig& cfg);

/// Fraction of source rows whose induced target equals the gold target.
double precision_at_1(const Dictionary& induced, const std::vector<int>& gold);

}  // namespace seqtrans::vecmap
