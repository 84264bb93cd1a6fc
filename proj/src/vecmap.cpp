#include "seqtrans/vecmap.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "seqtrans/error.hpp"
#include "seqtrans/kernels.hpp"
#include "seqtrans/rng.hpp"

namespace seqtrans::vecmap {

std::size_t Dictionary::pairs() const {
  return static_cast<std::size_t>(
      std::count_if(target.begin(), target.end(), [](int t) { return t >= 0; }));
}

namespace {

void normalize_rows(Matrix& m, const char* stage) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double n = m.row(i).norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw Error("data", "row " + std::to_string(i) + " has zero norm " + stage);
    }
    m.row(i) /= n;
  }
}

// rows(a) x rows(b) dot products of the first ka / kb rows.
Matrix row_products(const Matrix& a, std::size_t ka, const Matrix& b, std::size_t kb) {
  Matrix out(static_cast<Eigen::Index>(ka), static_cast<Eigen::Index>(kb));
  kernels::matmul_nt(a.data(), b.data(), out.data(), ka, static_cast<std::size_t>(a.cols()), kb,
                     false);
  return out;
}

std::size_t argmax_row(const double* row, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < n; ++j) {
    if (row[j] > row[best]) best = j;
  }
  return best;
}

}  // namespace

Matrix normalize(const Matrix& m) {
  if (m.rows() < 2) {
    throw Error("data", "normalization needs at least 2 rows (mean-centering a single row "
                        "leaves a zero vector)");
  }
  Matrix out = m;
  normalize_rows(out, "before normalization");
  const Eigen::RowVectorXd mean = out.colwise().mean();
  out.rowwise() -= mean;
  normalize_rows(out, "after mean-centering");
  return out;
}

Dictionary init_dictionary(const Matrix& x, const Matrix& z, std::size_t k) {
  if (k < 2) throw Error("config", "vocabulary cutoff k must be >= 2");
  if (k > static_cast<std::size_t>(std::min(x.rows(), z.rows()))) {
    throw Error("config", "vocabulary cutoff k exceeds the smaller vocabulary");
  }
  auto profile = [k](const Matrix& m) {
    Matrix sim = row_products(m, k, m, k);
    for (Eigen::Index i = 0; i < sim.rows(); ++i) {
      double* row = sim.row(i).data();
      std::sort(row, row + k, std::greater<>());
    }
    sim.rowwise().normalize();
    return sim;
  };
  const Matrix px = profile(x);
  const Matrix pz = profile(z);
  const Matrix cross = row_products(px, k, pz, k);
  Dictionary d;
  d.target.assign(static_cast<std::size_t>(x.rows()), -1);
  for (std::size_t i = 0; i < k; ++i) {
    d.target[i] = static_cast<int>(argmax_row(cross.row(static_cast<Eigen::Index>(i)).data(), k));
  }
  return d;
}

Procrustes procrustes_step(const Matrix& x, const Matrix& z, const Dictionary& dict) {
  if (dict.pairs() == 0) throw Error("data", "Procrustes needs a non-empty dictionary");
  const Eigen::Index d = x.cols();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t i = 0; i < dict.target.size(); ++i) {
    const int j = dict.target[i];
    if (j < 0) continue;
    cov.noalias() += x.row(static_cast<Eigen::Index>(i)).transpose() * z.row(j);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Procrustes p;
  p.wx = svd.matrixU();
  p.wz = svd.matrixV();
  p.singular_values = svd.singularValues();
  const double top = p.singular_values.size() ? p.singular_values(0) : 0.0;
  const double bottom = p.singular_values.size() ? p.singular_values(d - 1) : 0.0;
  p.rank_deficient = !(bottom > 1e-10 * std::max(top, 1e-300));
  return p;
}

MappingState make_state(Matrix x, Matrix z, Dictionary dict) {
  if (x.cols() != z.cols()) throw Error("data", "embedding dimensions differ between sides");
  MappingState s;
  s.wx = Matrix::Identity(x.cols(), x.cols());
  s.wz = Matrix::Identity(z.cols(), z.cols());
  s.x = std::move(x);
  s.z = std::move(z);
  s.dict = std::move(dict);
  return s;
}

namespace {

struct Induced {
  Dictionary dict;
  double objective = 0.0;
};

Induced induce(const Matrix& xs, const Matrix& zs, std::size_t k, Rng* drop, double keep_prob) {
  Matrix sim = row_products(xs, k, zs, k);
  Induced out;
  out.dict.target.assign(static_cast<std::size_t>(xs.rows()), -1);
  std::bernoulli_distribution keep(keep_prob);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double* row = sim.row(static_cast<Eigen::Index>(i)).data();
    if (drop) {
      for (std::size_t j = 0; j < k; ++j) {
        if (!keep(*drop)) row[j] = -std::numeric_limits<double>::infinity();
      }
    }
    const std::size_t j = argmax_row(row, k);
    out.dict.target[i] = static_cast<int>(j);
    total += std::isfinite(row[j]) ? row[j] : 0.0;
  }
  out.objective = total / static_cast<double>(k);
  return out;
}

std::size_t cutoff(const MappingState& s, std::size_t requested) {
  const auto limit = static_cast<std::size_t>(std::min(s.x.rows(), s.z.rows()));
  return std::min(requested, limit);
}

}  // namespace

Dictionary induce_dictionary(const Matrix& xs, const Matrix& zs, std::size_t k) {
  Matrix a = xs.topRows(static_cast<Eigen::Index>(k)).rowwise().normalized();
  Matrix b = zs.topRows(static_cast<Eigen::Index>(k)).rowwise().normalized();
  Dictionary d = induce(a, b, k, nullptr, 1.0).dict;
  d.target.resize(static_cast<std::size_t>(xs.rows()), -1);
  return d;
}

MappingState self_learning(MappingState state, const SelfLearningConfig& cfg) {
  const std::size_t k = cutoff(state, cfg.vocab_cutoff);
  if (k < 1) throw Error("config", "vocabulary cutoff must be positive");
  const bool single_pass = std::isinf(cfg.tol);
  const int patience = single_pass ? 1 : std::max(cfg.patience, 1);
  Rng rng = make_rng(cfg.seed, "vecmap.dictionary");
  int stall = 0;

  for (int it = 0; it < cfg.max_iterations; ++it) {
    Procrustes p = procrustes_step(state.x, state.z, state.dict);
    state.rank_deficient_seen = state.rank_deficient_seen || p.rank_deficient;
    const Matrix xs = state.x.topRows(static_cast<Eigen::Index>(k)) * p.wx;
    const Matrix zs = state.z.topRows(static_cast<Eigen::Index>(k)) * p.wz;
    Induced next = induce(xs, zs, k, cfg.stochastic ? &rng : nullptr, cfg.keep_prob);
    next.dict.target.resize(state.dict.target.size(), -1);
    ++state.iteration;
    state.objective_history.push_back(next.objective);

    const double improvement = next.objective - state.best_objective;
    if (improvement < 0.0) {
      // Rejected; a deterministic rerun would reproduce this iteration.
      if (!cfg.stochastic || ++stall >= patience) break;
      continue;
    }
    const bool unchanged = next.dict == state.dict;
    state.wx = std::move(p.wx);
    state.wz = std::move(p.wz);
    state.singular_values = std::move(p.singular_values);
    state.dict = std::move(next.dict);
    state.best_objective = next.objective;
    if (unchanged && !cfg.stochastic) break;
    if (single_pass || improvement < cfg.tol) {
      if (++stall >= patience) break;
    } else {
      stall = 0;
    }
  }
  return state;
}

MappedSpaces apply_mapping(const MappingState& state) {
  return {state.x * state.wx, state.z * state.wz};
}

MappedSpaces reweight(const MappingState& state) {
  // Refresh the transforms from the final dictionary so the spectrum matches.
  Procrustes p = procrustes_step(state.x, state.z, state.dict);
  const Eigen::VectorXd scale = p.singular_values.cwiseMax(0.0).cwiseSqrt();
  MappedSpaces out{state.x * p.wx, state.z * p.wz};
  out.x = out.x * scale.asDiagonal();
  out.z = out.z * scale.asDiagonal();
  return out;
}

VecmapResult map_embeddings(const Matrix& x, const Matrix& z, const SelfLearningConfig& cfg) {
  Matrix xn = normalize(x);
  Matrix zn = normalize(z);
  const std::size_t k =
      std::min<std::size_t>(cfg.vocab_cutoff, static_cast<std::size_t>(std::min(xn.rows(), zn.rows())));
  Dictionary init = init_dictionary(xn, zn, k);
  MappingState state = self_learning(make_state(std::move(xn), std::move(zn), std::move(init)), cfg);
  MappedSpaces mapped = reweight(state);
  return {std::move(state), std::move(mapped)};
}

double precision_at_1(const Dictionary& induced, const std::vector<int>& gold) {
  std::size_t total = 0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < gold.size() && i < induced.target.size(); ++i) {
    if (gold[i] < 0) continue;
    ++total;
    if (induced.target[i] == gold[i]) ++hit;
  }
  return total ? static_cast<double>(hit) / static_cast<double>(total) : 0.0;
}

}  // namespace seqtrans::vecmap
