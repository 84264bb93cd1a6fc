#include "seqtrans/kernels.hpp"

#include <algorithm>

namespace seqtrans::kernels::serial {

template <typename Real>
void matmul(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t k, std::size_t n,
            bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
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
  for (std::size_t i = 0; i < m; ++i) {
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
  for (std::size_t i = 0; i < m; ++i) {
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

}  // namespace seqtrans::kernels::serial
