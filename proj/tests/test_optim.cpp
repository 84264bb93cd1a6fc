#include <doctest.h>

#include <cmath>

#include "seqtrans/error.hpp"
#include "seqtrans/optim.hpp"

using namespace seqtrans;

TEST_CASE("Adam") {
  SUBCASE("zero gradient is a no-op") {
    std::vector<double> p{0.3, -1.2};
    const std::vector<double> g{0.0, 0.0};
    AdamState<double> s;
    for (int i = 0; i < 3; ++i) adam_step<double>(p, g, s);
    CHECK(p == std::vector<double>{0.3, -1.2});
  }
  SUBCASE("first step closed form") {
    std::vector<double> p{0.0};
    const std::vector<double> g{0.1};
    AdamState<double> s;
    adam_step<double>(p, g, s);
    // m = (1-b1) g, v = (1-b2) g^2; bias correction divides them back to g and g^2.
    const double m_hat = (1 - 0.9) * 0.1 / (1 - 0.9);
    const double v_hat = (1 - 0.999) * 0.01 / (1 - 0.999);
    const double want = -1e-3 * m_hat / (std::sqrt(v_hat) + 1e-8);
    CHECK(std::abs(p[0] - want) <= 1e-9);
    CHECK(std::abs(p[0] - (-9.99999e-4)) <= 1e-9);
  }
  SUBCASE("quadratic converges and steps stay bounded") {
    std::vector<double> p{1.0};
    AdamState<double> s;
    s.lr = 0.05;
    for (int i = 0; i < 500; ++i) {
      const std::vector<double> g{p[0]};  // d/dθ of θ²/2
      const double before = p[0];
      adam_step<double>(p, g, s);
      CHECK(std::abs(p[0] - before) <= 10 * s.lr);
    }
    CHECK(std::abs(p[0]) < 1e-2);
  }
  SUBCASE("non-finite gradient aborts without touching the state") {
    std::vector<double> p{1.0};
    const std::vector<double> g{std::nan("")};
    AdamState<double> s;
    CHECK_THROWS_AS(adam_step<double>(p, g, s), Error);
    CHECK(p[0] == 1.0);
    CHECK(s.step == 0);
  }
}

TEST_CASE("AdaDelta") {
  SUBCASE("zero gradient is a no-op") {
    std::vector<double> p{0.5};
    AdaDeltaState<double> s;
    adadelta_step<double>(p, std::vector<double>{0.0}, s);
    CHECK(p[0] == 0.5);
  }
  SUBCASE("first step closed form") {
    std::vector<double> p{0.0};
    AdaDeltaState<double> s;
    adadelta_step<double>(p, std::vector<double>{1.0}, s);
    const double rho = 0.95, eps = 1e-6;
    const double want = -std::sqrt(eps) / std::sqrt((1 - rho) * 1.0 + eps);
    CHECK(std::abs(p[0] - want) <= 1e-9);
    CHECK(std::abs(p[0] - (-4.47e-3)) <= 1e-5);
  }
  SUBCASE("updates oppose the gradient") {
    std::vector<double> p{0.0, 0.0, 0.0};
    AdaDeltaState<double> s;
    const std::vector<std::vector<double>> grads{{1.0, -2.0, 0.5}, {-0.3, 0.7, 4.0}, {2.0, 2.0, -1.0}};
    for (const auto& g : grads) {
      const std::vector<double> before = p;
      adadelta_step<double>(p, g, s);
      for (std::size_t i = 0; i < 3; ++i) CHECK((p[i] - before[i]) * g[i] < 0.0);
    }
    for (double v : s.sq_grad) CHECK(v >= 0.0);
    for (double v : s.sq_update) CHECK(v >= 0.0);
  }
  CHECK_THROWS_AS(
      [] {
        std::vector<double> p{0.0};
        AdaDeltaState<double> s;
        adadelta_step<double>(p, std::vector<double>{INFINITY}, s);
      }(),
      Error);
}

TEST_CASE("gradient clipping and the optimizer wrapper") {
  ParamStore<double> store;
  store.add("a", {2});
  store.add("frozen", {1}, false);
  store.at("a").grad = {3.0, 4.0};
  store.at("frozen").grad = {100.0};
  CHECK(clip_grad_norm(store, 1.0) == doctest::Approx(5.0));
  CHECK(store.at("a").grad[0] == doctest::Approx(0.6));
  CHECK(store.at("a").grad[1] == doctest::Approx(0.8));

  OptimizerConfig cfg;
  Optimizer<double> opt(store, cfg);
  store.at("a").grad = {0.0, 0.0};
  opt.step(store);
  CHECK(store.at("a").value == std::vector<double>{0.0, 0.0});
  CHECK(store.at("frozen").value == std::vector<double>{0.0});

  store.at("a").grad = {std::nan(""), 0.0};
  CHECK_THROWS_AS(opt.step(store), Error);

  CHECK(parse_optimizer("adadelta") == OptimizerKind::adadelta);
  CHECK_THROWS_AS(parse_optimizer("sgd"), Error);
}

TEST_CASE("early stopping") {
  SUBCASE("monotone improvement never stops") {
    EarlyStopping es(5);
    for (double m : {0.5, 0.6, 0.7}) {
      const auto d = es.update(m);
      CHECK(d.improved);
      CHECK_FALSE(d.stop);
    }
    CHECK(es.best() == 0.7);
  }
  SUBCASE("stops exactly at the fifth non-improving epoch") {
    EarlyStopping es(5);
    CHECK(es.update(0.7).improved);
    const double rest[] = {0.69, 0.7, 0.5, 0.7, 0.65};
    for (int i = 0; i < 5; ++i) {
      const auto d = es.update(rest[i]);
      CHECK_FALSE(d.improved);
      CHECK(d.stop == (i == 4));
    }
    CHECK(es.best() == 0.7);
    CHECK(es.best_epoch() == 1);
    CHECK(es.epochs_since_improvement() == 5);
  }
  SUBCASE("ties do not count as improvement") {
    EarlyStopping es(2);
    es.update(0.4);
    CHECK_FALSE(es.update(0.4).improved);
    CHECK(es.update(0.4).stop);
  }
}
