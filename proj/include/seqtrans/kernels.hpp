#pragma once

#include <cstddef>

// Dense row-major matrix products used by the LSTM input projections and the
// vecmap similarity matrices. Every kernel exists twice: a serial reference in
// `kernels::serial` and an OpenMP version in `kernels::parallel`. Both compute
// each output element with the same reduction order, so they agree bit-for-bit.
//
// Shapes: A is m x k, B is k x n, C is m x n unless the suffix says otherwise.
// With `accumulate` false, C is overwritten; otherwise the product is added.

namespace seqtrans::kernels {

namespace serial {

template <typename Real>
void matmul(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t k, std::size_t n,
            bool accumulate);

/// C (m x n) = A^T B with A stored k x m.
template <typename Real>
void matmul_tn(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t k, std::size_t n,
               bool accumulate);

/// C (m x n) = A B^T with B stored n x k.
template <typename Real>
void matmul_nt(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t k, std::size_t n,
               bool accumulate);

}  // namespace serial

namespace parallel {

template <typename Real>
void matmul(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t k, std::size_t n,
            bool accumulate);

template <typename Real>
void matmul_tn(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t k, std::size_t n,
               bool accumulate);

template <typename Real>
void matmul_nt(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t k, std::size_t n,
               bool accumulate);

/// Threads OpenMP would use; 1 when built without OpenMP.
int max_threads();

}  // namespace parallel

/// Products below this many multiply-adds stay serial; thread start-up costs
/// more than the work.
inline constexpr std::size_t kParallelThreshold = std::size_t{1} << 18;

template <typename Real>
void matmul(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t k, std::size_t n,
            bool accumulate) {
  if (m * k * n >= kParallelThreshold) {
    parallel::matmul(a, b, c, m, k, n, accumulate);
  } else {
    serial::matmul(a, b, c, m, k, n, accumulate);
  }
}

template <typename Real>
void matmul_tn(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t k, std::size_t n,
               bool accumulate) {
  if (m * k * n >= kParallelThreshold) {
    parallel::matmul_tn(a, b, c, m, k, n, accumulate);
  } else {
    serial::matmul_tn(a, b, c, m, k, n, accumulate);
  }
}

template <typename Real>
void matmul_nt(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t k, std::size_t n,
               bool accumulate) {
  if (m * k * n >= kParallelThreshold) {
    parallel::matmul_nt(a, b, c, m, k, n, accumulate);
  } else {
    serial::matmul_nt(a, b, c, m, k, n, accumulate);
  }
}

}  // namespace seqtrans::kernels
