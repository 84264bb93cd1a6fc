// Times the serial and OpenMP matrix products on shapes seen in training
// (LSTM input projections) and in vecmap (similarity matrices), and checks
// that both produce identical bits.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <random>
#include <vector>

#include "seqtrans/kernels.hpp"

namespace k = seqtrans::kernels;

namespace {

using Fn = void (*)(const float*, const float*, float*, std::size_t, std::size_t, std::size_t,
                    bool);

double time_ms(Fn fn, const std::vector<float>& a, const std::vector<float>& b,
               std::vector<float>& c, std::size_t m, std::size_t kk, std::size_t n, int reps) {
  fn(a.data(), b.data(), c.data(), m, kk, n, false);  // warm-up
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) fn(a.data(), b.data(), c.data(), m, kk, n, false);
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

}  // namespace

int main(int argc, char** argv) {
  int reps = 5;
  if (argc > 1) reps = std::max(1, std::atoi(argv[1]));

  struct Shape {
    const char* what;
    std::size_t m, k, n;
    bool nt;
  };
  const Shape shapes[] = {
      {"lstm input projection", 40, 158, 400, false},
      {"lstm projection, batch of sentences", 1280, 158, 400, false},
      {"vecmap similarity", 1000, 128, 1000, true},
      {"vecmap similarity, 4000 cutoff", 4000, 128, 4000, true},
  };

  std::mt19937 rng(1);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::printf("threads=%d reps=%d\n", k::parallel::max_threads(), reps);
  std::printf("%-38s %8s %8s %8s %11s %11s %8s %s\n", "shape", "m", "k", "n", "serial_ms",
              "parallel_ms", "speedup", "identical");
  bool all_same = true;
  for (const Shape& s : shapes) {
    std::vector<float> a(s.m * s.k), b(s.k * s.n), c1(s.m * s.n), c2(s.m * s.n);
    for (auto& x : a) x = u(rng);
    for (auto& x : b) x = u(rng);
    const Fn ser = s.nt ? &k::serial::matmul_nt<float> : &k::serial::matmul<float>;
    const Fn par = s.nt ? &k::parallel::matmul_nt<float> : &k::parallel::matmul<float>;
    const double ts = time_ms(ser, a, b, c1, s.m, s.k, s.n, reps);
    const double tp = time_ms(par, a, b, c2, s.m, s.k, s.n, reps);
    const bool same = std::memcmp(c1.data(), c2.data(), c1.size() * sizeof(float)) == 0;
    all_same = all_same && same;
    std::printf("%-38s %8zu %8zu %8zu %11.3f %11.3f %8.2f %s\n", s.what, s.m, s.k, s.n, ts, tp,
                ts / tp, same ? "yes" : "NO");
  }
  return all_same ? 0 : 1;
}
