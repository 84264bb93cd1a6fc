#include <doctest.h>

#include <cmath>
#include <numeric>

#include "seqtrans/layers.hpp"

using namespace seqtrans;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Matrix<double> random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix<double> m(r, c);
  for (auto& v : m.data) v = u(rng);
  return m;
}

}  // namespace

TEST_CASE("dropout modes") {
  Rng rng(1);
  std::vector<double> mask;
  std::vector<double> x(100);
  std::iota(x.begin(), x.end(), 1.0);
  const std::vector<double> orig = x;

  dropout<double>(x, 0.0, true, rng, mask);
  CHECK(x == orig);
  dropout<double>(x, 0.0, false, rng, mask);
  CHECK(x == orig);
  dropout<double>(x, 0.5, false, rng, mask);
  CHECK(x == orig);
  CHECK(mask.empty());

  std::vector<double> big(10000, 1.0);
  dropout<double>(big, 0.5, true, rng, mask);
  const auto survivors = std::count_if(big.begin(), big.end(), [](double v) { return v != 0.0; });
  const double frac = double(survivors) / 10000.0;
  CHECK(frac >= 0.48);
  CHECK(frac <= 0.52);
  const double mean = std::accumulate(big.begin(), big.end(), 0.0) / 10000.0;
  CHECK(std::abs(mean - 1.0) <= 0.03);
  for (double v : big) CHECK((v == 0.0 || v == 2.0));

  std::vector<double> g(10000, 1.0);
  dropout_backward<double>(g, mask);
  CHECK(g == big);
}

TEST_CASE("lstm_step analytic cases") {
  SUBCASE("all-zero parameters and state give h = c = 0 exactly") {
    for (std::size_t h : {1u, 3u, 100u}) {
      const std::size_t din = 5;
      std::vector<float> u(din * 4 * h, 0.0f), w(h * 4 * h, 0.0f), b(4 * h, 0.0f);
      LstmWeights<float> lw{u.data(), w.data(), b.data(), din, h};
      std::vector<float> x(din, 0.0f), h0(h, 0.0f), c0(h, 0.0f), h1(h, 1.0f), c1(h, 1.0f);
      lstm_step<float>(lw, x, h0, c0, h1, c1);
      for (std::size_t i = 0; i < h; ++i) {
        CHECK(h1[i] == 0.0f);
        CHECK(c1[i] == 0.0f);
      }
    }
  }
  SUBCASE("scalar closed form") {
    // U, W, b in gate order i, f, c~, o.
    const double U[4] = {0.5, -0.3, 0.8, 0.1};
    const double W[4] = {-0.2, 0.4, 0.6, -0.7};
    const double B[4] = {0.05, 1.0, -0.1, 0.2};
    LstmWeights<double> lw{U, W, B, 1, 1};
    const double x = 0.9, hp = -0.4, cp = 0.3;
    double h = 0, c = 0;
    lstm_step<double>(lw, std::span<const double>(&x, 1), std::span<const double>(&hp, 1),
                      std::span<const double>(&cp, 1), std::span<double>(&h, 1),
                      std::span<double>(&c, 1));
    const double i = sigmoid(W[0] * hp + U[0] * x + B[0]);
    const double f = sigmoid(W[1] * hp + U[1] * x + B[1]);
    const double g = std::tanh(W[2] * hp + U[2] * x + B[2]);
    const double o = sigmoid(W[3] * hp + U[3] * x + B[3]);
    const double c_want = f * cp + i * g;
    const double h_want = o * std::tanh(c_want);
    CHECK(std::abs(c - c_want) <= 1e-7);
    CHECK(std::abs(h - h_want) <= 1e-7);
  }
  SUBCASE("saturated forget gate keeps the cell") {
    const std::size_t h = 4, din = 3;
    std::vector<double> u(din * 4 * h, 0.0), w(h * 4 * h, 0.0), b(4 * h, 0.0);
    for (std::size_t j = 0; j < h; ++j) b[kForgetGate * h + j] = 20.0;
    LstmWeights<double> lw{u.data(), w.data(), b.data(), din, h};
    std::vector<double> x(din, 0.0), h0(h, 0.3), c0{0.5, -1.0, 2.0, 0.0}, h1(h), c1(h);
    lstm_step<double>(lw, x, h0, c0, h1, c1);
    for (std::size_t j = 0; j < h; ++j) CHECK(std::abs(c1[j] - c0[j]) <= 1e-6);
  }
}

TEST_CASE("Lstm initialization") {
  ParamStore<float> store;
  Lstm<float> lstm(store, "l", 6, 5, 1);
  const auto& b = store.at("l.b").value;
  for (std::size_t j = 0; j < 20; ++j) CHECK(b[j] == (j / 5 == kForgetGate ? 1.0f : 0.0f));
  CHECK(store.at("l.U").shape == std::vector<std::size_t>{6, 20});
  CHECK(store.at("l.W").shape == std::vector<std::size_t>{5, 20});
  // Glorot bound per gate block: sqrt(6 / (fan_in + fan_out)).
  const float bound = std::sqrt(6.0f / (6.0f + 5.0f));
  for (float v : store.at("l.U").value) CHECK(std::abs(v) <= bound);
}

TEST_CASE("Blstm structure") {
  SUBCASE("palindromic input with shared weights mirrors the output") {
    ParamStore<double> store;
    Blstm<double> bl(store, "b", 3, 4, 7);
    store.at("b.bwd.U").value = store.at("b.fwd.U").value;
    store.at("b.bwd.W").value = store.at("b.fwd.W").value;
    store.at("b.bwd.b").value = store.at("b.fwd.b").value;
    Matrix<double> x = random_matrix(5, 3, 2);
    for (std::size_t t = 0; t < 2; ++t) {
      for (std::size_t d = 0; d < 3; ++d) x(4 - t, d) = x(t, d);
    }
    typename Blstm<double>::Cache cache;
    Matrix<double> out;
    bl.forward(store, x, cache, out);
    REQUIRE(out.cols == 8);
    for (std::size_t t = 0; t < 5; ++t) {
      for (std::size_t j = 0; j < 4; ++j) {
        CHECK(std::abs(out(t, j) - out(4 - t, 4 + j)) <= 1e-12);
      }
    }
  }
  SUBCASE("length one is two single steps") {
    ParamStore<double> store;
    Blstm<double> bl(store, "b", 3, 2, 9);
    const Matrix<double> x = random_matrix(1, 3, 4);
    typename Blstm<double>::Cache cache;
    Matrix<double> out;
    bl.forward(store, x, cache, out);
    for (const char* dir : {"fwd", "bwd"}) {
      const std::string p = std::string("b.") + dir;
      LstmWeights<double> lw{store.at(p + ".U").value.data(), store.at(p + ".W").value.data(),
                             store.at(p + ".b").value.data(), 3, 2};
      std::vector<double> zero(2, 0.0), h(2), c(2);
      lstm_step<double>(lw, std::span<const double>(x.row(0), 3), zero, zero, h, c);
      const std::size_t off = std::string(dir) == "fwd" ? 0 : 2;
      CHECK(out(0, off) == h[0]);
      CHECK(out(0, off + 1) == h[1]);
    }
  }
  SUBCASE("default width") {
    ParamStore<float> store;
    Blstm<float> bl(store, "b", 158, 100, 1);
    CHECK(bl.output_dim() == 200);
  }
}

TEST_CASE("CharCnn") {
  Rng rng(1);
  SUBCASE("zero filters give a zero vector") {
    ParamStore<float> store;
    const std::size_t table = store.add("chars", {6, 4});
    for (auto& v : store[table].value) v = 0.7f;
    CharCnn<float> cnn(store, "cnn", table, 3, 5, 1);
    std::fill(store.at("cnn.filters").value.begin(), store.at("cnn.filters").value.end(), 0.0f);
    typename CharCnn<float>::Cache cache;
    std::vector<float> out(5, 9.0f);
    const std::vector<int> ids{2, 3, 4};
    cnn.forward(store, ids, 0.0, false, rng, cache, out);
    CHECK(out == std::vector<float>(5, 0.0f));
  }
  SUBCASE("hand-computed single filter") {
    ParamStore<double> store;
    const std::size_t table = store.add("chars", {4, 1});
    store[table].value = {0.0, 0.0, 1.0, 3.0};
    CharCnn<double> cnn(store, "cnn", table, 1, 1, 1);
    store.at("cnn.filters").value = {1.0};
    store.at("cnn.bias").value = {0.0};
    typename CharCnn<double>::Cache cache;
    std::vector<double> out(1);
    const std::vector<int> ids{2, 3, 0, 0};  // trailing PADs ignored
    cnn.forward(store, ids, 0.0, false, rng, cache, out);
    CHECK(out[0] == 3.0);
  }
  SUBCASE("padded window of three") {
    ParamStore<double> store;
    const std::size_t table = store.add("chars", {4, 1});
    store[table].value = {0.0, 0.0, 1.0, 3.0};
    CharCnn<double> cnn(store, "cnn", table, 3, 1, 1);
    store.at("cnn.filters").value = {1.0, -1.0, 2.0};  // left, centre, right
    store.at("cnn.bias").value = {0.5};
    typename CharCnn<double>::Cache cache;
    std::vector<double> out(1);
    const std::vector<int> ids{2, 3};
    cnn.forward(store, ids, 0.0, false, rng, cache, out);
    // t=0: 0 - 1 + 2*3 + 0.5 = 5.5; t=1: 1 - 3 + 0 + 0.5 = -1.5
    CHECK(out[0] == doctest::Approx(5.5));
  }
  SUBCASE("defaults and empty words") {
    ParamStore<float> store;
    const std::size_t table = store.add("chars", {10, 30});
    CharCnn<float> cnn(store, "cnn", table, 3, 30, 1);
    typename CharCnn<float>::Cache cache;
    std::vector<float> out(30, 1.0f);
    const std::vector<int> none{0, 0};
    cnn.forward(store, none, 0.25, true, rng, cache, out);
    CHECK(out == std::vector<float>(30, 0.0f));
  }
}

TEST_CASE("Linear forward") {
  ParamStore<double> store;
  Linear<double> lin(store, "p", 2, 3, 1);
  store.at("p.W").value = {1, 2, 3, 4, 5, 6};  // [2 x 3]
  store.at("p.b").value = {0.5, 0, -0.5};
  Matrix<double> x(1, 2);
  x(0, 0) = 1;
  x(0, 1) = -1;
  Matrix<double> y;
  lin.forward(store, x, y);
  CHECK(y.data == std::vector<double>{-2.5, -3.0, -3.5});
}
