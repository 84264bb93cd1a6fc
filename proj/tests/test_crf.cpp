#include <doctest.h>

#include <cmath>

#include "crf_oracle.hpp"
#include "seqtrans/crf.hpp"
#include "seqtrans/error.hpp"

using namespace seqtrans;

TEST_CASE("log-partition and Viterbi match exhaustive enumeration") {
  std::mt19937_64 rng(42);
  for (std::size_t length = 1; length <= 5; ++length) {
    for (std::size_t tags = 1; tags <= 4; ++tags) {
      for (int rep = 0; rep < 5; ++rep) {
        const auto c = oracle::random_instance(length, tags, rng);
        const double logz = crf_log_partition(c.emissions, c.scores());
        CHECK(std::abs(logz - oracle::brute_log_partition(c)) <= 1e-8);
        CHECK(crf_viterbi(c.emissions, c.scores()) == oracle::brute_argmax(c));
      }
    }
  }
}

TEST_CASE("crf_nll against enumeration and its properties") {
  std::mt19937_64 rng(7);
  const auto c = oracle::random_instance(3, 3, rng);
  const double logz = oracle::brute_log_partition(c);
  double total_prob = 0.0;
  oracle::for_each_sequence(3, 3, [&](const std::vector<int>& y) {
    const double nll = crf_nll(c.emissions, y, c.scores());
    CHECK(std::abs(nll - (logz - oracle::score(c, y))) <= 1e-8);
    CHECK(nll >= 0.0);
    CHECK(crf_sequence_score(c.emissions, y, c.scores()) == doctest::Approx(oracle::score(c, y)));
    total_prob += std::exp(-nll);
  });
  CHECK(std::abs(total_prob - 1.0) <= 1e-8);
}

TEST_CASE("degenerate and uniform chains") {
  SUBCASE("K = 1") {
    std::mt19937_64 rng(3);
    auto c = oracle::random_instance(4, 1, rng);
    CHECK(crf_nll(c.emissions, std::vector<int>(4, 0), c.scores()) == 0.0);
    CHECK(crf_viterbi(c.emissions, c.scores()) == std::vector<int>(4, 0));
  }
  SUBCASE("all zero scores give L log K") {
    oracle::CrfInstance c;
    c.tags = 3;
    c.emissions = Matrix<double>(4, 3);
    c.transitions.assign(9, 0.0);
    c.start.assign(3, 0.0);
    c.end.assign(3, 0.0);
    const double nll = crf_nll(c.emissions, std::vector<int>{0, 2, 1, 1}, c.scores());
    CHECK(std::abs(nll - 4.0 * std::log(3.0)) <= 1e-12);
    // Ties everywhere resolve to tag 0.
    CHECK(crf_viterbi(c.emissions, c.scores()) == std::vector<int>(4, 0));
  }
  SUBCASE("zero transitions decode per position") {
    std::mt19937_64 rng(5);
    auto c = oracle::random_instance(6, 4, rng);
    std::fill(c.transitions.begin(), c.transitions.end(), 0.0);
    std::fill(c.start.begin(), c.start.end(), 0.0);
    std::fill(c.end.begin(), c.end.end(), 0.0);
    const auto path = crf_viterbi(c.emissions, c.scores());
    for (std::size_t t = 0; t < 6; ++t) {
      const double* row = c.emissions.row(t);
      CHECK(path[t] == std::max_element(row, row + 4) - row);
    }
  }
}

TEST_CASE("shift invariance and marginals") {
  std::mt19937_64 rng(11);
  auto c = oracle::random_instance(4, 3, rng);
  const auto m = crf_marginals(c.emissions, c.scores());
  const auto path = crf_viterbi(c.emissions, c.scores());

  // Brute-force marginals.
  const double logz = oracle::brute_log_partition(c);
  Matrix<double> want(4, 3);
  oracle::for_each_sequence(4, 3, [&](const std::vector<int>& y) {
    const double p = std::exp(oracle::score(c, y) - logz);
    for (std::size_t t = 0; t < 4; ++t) want(t, static_cast<std::size_t>(y[t])) += p;
  });
  for (std::size_t i = 0; i < m.data.size(); ++i) CHECK(std::abs(m.data[i] - want.data[i]) <= 1e-10);

  for (std::size_t k = 0; k < 3; ++k) c.emissions(2, k) += 5.0;
  const auto m2 = crf_marginals(c.emissions, c.scores());
  for (std::size_t i = 0; i < m.data.size(); ++i) CHECK(std::abs(m.data[i] - m2.data[i]) <= 1e-12);
  CHECK(crf_viterbi(c.emissions, c.scores()) == path);

  // log Z bounds every sequence score.
  const double logz2 = crf_log_partition(c.emissions, c.scores());
  oracle::for_each_sequence(4, 3, [&](const std::vector<int>& y) {
    CHECK(logz2 >= oracle::score(c, y));
  });
}

TEST_CASE("emission gradient is marginals minus gold") {
  std::mt19937_64 rng(13);
  const auto c = oracle::random_instance(3, 4, rng);
  const std::vector<int> gold{1, 3, 0};
  CrfGradients<double> g;
  crf_nll(c.emissions, gold, c.scores(), &g, 1.0);
  const auto m = crf_marginals(c.emissions, c.scores());
  for (std::size_t t = 0; t < 3; ++t) {
    double row_sum = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      const double want = m(t, k) - (static_cast<int>(k) == gold[t] ? 1.0 : 0.0);
      CHECK(std::abs(g.emissions(t, k) - want) <= 1e-12);
      row_sum += g.emissions(t, k);
    }
    CHECK(std::abs(row_sum) <= 1e-12);
  }
  // Central differences on every score.
  const double h = 1e-5;
  auto nll_with = [&](auto mutate) {
    auto d = c;
    mutate(d);
    return crf_nll(d.emissions, gold, d.scores());
  };
  for (std::size_t i = 0; i < c.transitions.size(); ++i) {
    const double fd = (nll_with([&](auto& d) { d.transitions[i] += h; }) -
                       nll_with([&](auto& d) { d.transitions[i] -= h; })) / (2 * h);
    CHECK(std::abs(fd - g.transitions[i]) <= 1e-7);
  }
  for (std::size_t k = 0; k < 4; ++k) {
    const double fs = (nll_with([&](auto& d) { d.start[k] += h; }) -
                       nll_with([&](auto& d) { d.start[k] -= h; })) / (2 * h);
    const double fe = (nll_with([&](auto& d) { d.end[k] += h; }) -
                       nll_with([&](auto& d) { d.end[k] -= h; })) / (2 * h);
    CHECK(std::abs(fs - g.start[k]) <= 1e-7);
    CHECK(std::abs(fe - g.end[k]) <= 1e-7);
  }
}

TEST_CASE("non-finite emissions are rejected") {
  std::mt19937_64 rng(1);
  auto c = oracle::random_instance(2, 2, rng);
  c.emissions(1, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(crf_log_partition(c.emissions, c.scores()), Error);
  CHECK_THROWS_AS(crf_nll(c.emissions, std::vector<int>{0, 0}, c.scores()), Error);
}

TEST_CASE("Crf parameters start at zero") {
  ParamStore<float> store;
  Crf<float> crf(store, "crf", 5);
  CHECK(store.at("crf.trans").shape == std::vector<std::size_t>{5, 5});
  for (float v : store.at("crf.trans").value) CHECK(v == 0.0f);
  CHECK(crf.scores(store).tags == 5);
}

TEST_CASE("softmax cross-entropy") {
  std::mt19937_64 rng(11);
  SUBCASE("equals the CRF loss when the chain has no transition, start or end scores") {
    for (std::size_t length = 1; length <= 5; ++length) {
      auto c = oracle::random_instance(length, 4, rng);
      std::fill(c.transitions.begin(), c.transitions.end(), 0.0);
      std::fill(c.start.begin(), c.start.end(), 0.0);
      std::fill(c.end.begin(), c.end.end(), 0.0);
      std::vector<int> gold(length);
      for (std::size_t t = 0; t < length; ++t) gold[t] = static_cast<int>((t * 3 + 1) % 4);
      CHECK(std::abs(softmax_cross_entropy(c.emissions, gold) - crf_nll(c.emissions, gold, c.scores())) <=
            1e-10);
    }
  }
  SUBCASE("two-tag hand case") {
    Matrix<double> e(1, 2);
    e(0, 0) = 0.0;
    e(0, 1) = std::log(3.0);  // softmax = (1/4, 3/4)
    const std::vector<int> gold{0};
    Matrix<double> g;
    CHECK(softmax_cross_entropy(e, gold, &g, 2.0) == doctest::Approx(std::log(4.0)));
    CHECK(g(0, 0) == doctest::Approx(2.0 * (0.25 - 1.0)));
    CHECK(g(0, 1) == doctest::Approx(2.0 * 0.75));
  }
  SUBCASE("gradient against central differences") {
    const auto c = oracle::random_instance(4, 3, rng);
    const std::vector<int> gold{2, 0, 1, 1};
    Matrix<double> g;
    softmax_cross_entropy(c.emissions, gold, &g);
    Matrix<double> e = c.emissions;
    for (std::size_t i = 0; i < e.data.size(); ++i) {
      const double orig = e.data[i];
      e.data[i] = orig + 1e-5;
      const double up = softmax_cross_entropy(e, gold);
      e.data[i] = orig - 1e-5;
      const double down = softmax_cross_entropy(e, gold);
      e.data[i] = orig;
      CHECK(std::abs((up - down) / 2e-5 - g.data[i]) <= 1e-7);
    }
  }
  const Matrix<double> e(2, 3);
  CHECK_THROWS_AS(softmax_cross_entropy(e, std::vector<int>{0}), Error);
  CHECK_THROWS_AS(softmax_cross_entropy(e, std::vector<int>{0, 3}), Error);
}
