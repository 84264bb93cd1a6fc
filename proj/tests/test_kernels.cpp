#include <doctest.h>

#include <omp.h>

#include <cstring>
#include <random>
#include <vector>

#include "seqtrans/kernels.hpp"

using namespace seqtrans;

namespace {

template <typename Real>
std::vector<Real> random_values(std::size_t n, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Real> v(n);
  for (auto& x : v) x = static_cast<Real>(u(rng));
  return v;
}

// Plain triple loop in long double: independent of either kernel.
template <typename Real>
long double reference(const std::vector<Real>& a, const std::vector<Real>& b, std::size_t i,
                      std::size_t j, std::size_t m, std::size_t k, std::size_t n, char kind) {
  long double s = 0;
  for (std::size_t p = 0; p < k; ++p) {
    long double av = 0, bv = 0;
    switch (kind) {
      case 'n':  // A m x k, B k x n
        av = a[i * k + p];
        bv = b[p * n + j];
        break;
      case 't':  // A stored k x m
        av = a[p * m + i];
        bv = b[p * n + j];
        break;
      default:  // B stored n x k
        av = a[i * k + p];
        bv = b[j * k + p];
        break;
    }
    s += av * bv;
  }
  return s;
}

template <typename Real>
void check_shape(std::size_t m, std::size_t k, std::size_t n, char kind, bool accumulate) {
  const auto a = random_values<Real>(m * k, static_cast<std::uint32_t>(m * 31 + k));
  const auto b = random_values<Real>(k * n, static_cast<std::uint32_t>(n * 17 + k));
  const auto init = random_values<Real>(m * n, 5);
  std::vector<Real> cs = init, cp = init;
  switch (kind) {
    case 'n':
      kernels::serial::matmul(a.data(), b.data(), cs.data(), m, k, n, accumulate);
      kernels::parallel::matmul(a.data(), b.data(), cp.data(), m, k, n, accumulate);
      break;
    case 't':
      kernels::serial::matmul_tn(a.data(), b.data(), cs.data(), m, k, n, accumulate);
      kernels::parallel::matmul_tn(a.data(), b.data(), cp.data(), m, k, n, accumulate);
      break;
    default:
      kernels::serial::matmul_nt(a.data(), b.data(), cs.data(), m, k, n, accumulate);
      kernels::parallel::matmul_nt(a.data(), b.data(), cp.data(), m, k, n, accumulate);
      break;
  }
  CHECK(std::memcmp(cs.data(), cp.data(), cs.size() * sizeof(Real)) == 0);
  const long double tol = sizeof(Real) == 4 ? 1e-4L : 1e-12L;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      long double want = reference(a, b, i, j, m, k, n, kind);
      if (accumulate) want += init[i * n + j];
      CHECK(std::abs(static_cast<long double>(cs[i * n + j]) - want) <= tol * (1 + k));
    }
  }
}

}  // namespace

TEST_CASE("serial and parallel kernels agree bit for bit and match a reference") {
  omp_set_num_threads(4);
  for (char kind : {'n', 't', 'x'}) {
    for (bool acc : {false, true}) {
      check_shape<float>(1, 1, 1, kind, acc);
      check_shape<float>(7, 13, 5, kind, acc);
      check_shape<float>(64, 33, 70, kind, acc);
      check_shape<double>(3, 9, 11, kind, acc);
      check_shape<double>(65, 40, 31, kind, acc);
    }
  }
}

TEST_CASE("dispatcher above the threshold equals the serial result") {
  omp_set_num_threads(3);
  const std::size_t m = 80, k = 64, n = 80;  // m*k*n >= threshold
  REQUIRE(m * k * n >= kernels::kParallelThreshold);
  const auto a = random_values<float>(m * k, 1);
  const auto b = random_values<float>(k * n, 2);
  std::vector<float> c1(m * n), c2(m * n);
  kernels::matmul(a.data(), b.data(), c1.data(), m, k, n, false);
  kernels::serial::matmul(a.data(), b.data(), c2.data(), m, k, n, false);
  CHECK(std::memcmp(c1.data(), c2.data(), c1.size() * sizeof(float)) == 0);
  CHECK(kernels::parallel::max_threads() >= 1);
}

TEST_CASE("zero-sized inner dimension") {
  std::vector<double> c{1.5, 2.5};
  kernels::serial::matmul<double>(nullptr, nullptr, c.data(), 1, 0, 2, true);
  CHECK(c == std::vector<double>{1.5, 2.5});
  kernels::parallel::matmul<double>(nullptr, nullptr, c.data(), 1, 0, 2, false);
  CHECK(c == std::vector<double>{0.0, 0.0});
}
