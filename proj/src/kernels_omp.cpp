#include <algorithm>
#include <cstdint>

#include "seqtrans/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace seqtrans::kernels::parallel {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Rows of C are independent; each thread runs the serial inner loops on its
// rows, so per-element arithmetic matches the reference exactly.

template <typename Real>
void matmul(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t k, std::size_t n,
            bool accumulate) {
  const auto rows = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(static)
  for (std::int64_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    Real* ci = c + i * n;
    if (!accumulate) std::fill(ci, ci + n, Real(0));
    const Real* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const Real aip = ai[p];
      const Real* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

template <typename Real>
void matmul_tn(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t k, std::size_t n,
               bool accumulate) {
  const auto rows = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(static)
  for (std::int64_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    Real* ci = c + i * n;
    if (!accumulate) std::fill(ci, ci + n, Real(0));
    for (std::size_t p = 0; p < k; ++p) {
      const Real api = a[p * m + i];
      const Real* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

template <typename Real>
void matmul_nt(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t k, std::size_t n,
               bool accumulate) {
  const auto rows = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(static)
  for (std::int64_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const Real* ai = a + i * k;
    Real* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const Real* bj = b + j * k;
      Real s = 0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] = accumulate ? ci[j] + s : s;
    }
  }
}

#define SEQTRANS_INSTANTIATE(Real)                                                        \
  template void matmul<Real>(const Real*, const Real*, Real*, std::size_t, std::size_t,   \
                             std::size_t, bool);                                          \
  template void matmul_tn<Real>(const Real*, const Real*, Real*, std::size_t, std::size_t, \
                                std::size_t, bool);                                       \
  template void matmul_nt<Real>(const Real*, const Real*, Real*, std::size_t, std::size_t, \
                                std::size_t, bool);

SEQTRANS_INSTANTIATE(float)
SEQTRANS_INSTANTIATE(double)

#undef SEQTRANS_INSTANTIATE

}  // namespace seqtrans::kernels::parallel
