#include "seqtrans/layers.hpp"

#include <algorithm>
#include <cmath>

#include "seqtrans/kernels.hpp"

namespace seqtrans {

namespace {

template <typename Real>
inline Real sigmoid(Real x) {
  return Real(1) / (Real(1) + std::exp(-x));
}

}  // namespace

template <typename Real>
void dropout(std::span<Real> x, double p, bool train, Rng& rng, std::vector<Real>& mask) {
  mask.clear();
  if (!train || p <= 0.0) return;
  if (p >= 1.0) throw Error("config", "dropout probability must be < 1");
  const Real keep_scale = Real(1) / Real(1.0 - p);
  std::bernoulli_distribution drop(p);
  mask.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask[i] = drop(rng) ? Real(0) : keep_scale;
    x[i] *= mask[i];
  }
}

template <typename Real>
void dropout_backward(std::span<Real> grad, const std::vector<Real>& mask) {
  if (mask.empty()) return;
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= mask[i];
}

template <typename Real>
void glorot_uniform(std::span<Real> values, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Real& v : values) v = static_cast<Real>(dist(rng));
}

// ---------------------------------------------------------------- LSTM

template <typename Real>
void lstm_step(const LstmWeights<Real>& w, std::span<const Real> x, std::span<const Real> h_prev,
               std::span<const Real> c_prev, std::span<Real> h, std::span<Real> c) {
  const std::size_t H = w.hidden;
  const std::size_t G = 4 * H;
  std::vector<Real> z(w.bias, w.bias + G);
  for (std::size_t p = 0; p < w.input_dim; ++p) {
    for (std::size_t j = 0; j < G; ++j) z[j] += x[p] * w.input[p * G + j];
  }
  for (std::size_t p = 0; p < H; ++p) {
    for (std::size_t j = 0; j < G; ++j) z[j] += h_prev[p] * w.recurrent[p * G + j];
  }
  for (std::size_t j = 0; j < H; ++j) {
    const Real i = sigmoid(z[kInputGate * H + j]);
    const Real f = sigmoid(z[kForgetGate * H + j]);
    const Real g = std::tanh(z[kCellGate * H + j]);
    const Real o = sigmoid(z[kOutputGate * H + j]);
    c[j] = f * c_prev[j] + i * g;
    h[j] = o * std::tanh(c[j]);
  }
}

template <typename Real>
Lstm<Real>::Lstm(ParamStore<Real>& store, const std::string& prefix, std::size_t input_dim,
                 std::size_t hidden, std::uint64_t seed)
    : input_dim_(input_dim), hidden_(hidden) {
  const std::size_t G = 4 * hidden;
  input_ = store.add(prefix + ".U", {input_dim, G});
  recurrent_ = store.add(prefix + ".W", {hidden, G});
  bias_ = store.add(prefix + ".b", {G});
  // Each gate block is its own [fan_in x H] matrix.
  for (std::size_t idx : {input_, recurrent_}) {
    auto& t = store[idx];
    Rng rng = make_rng(seed, "init/" + t.name);
    glorot_uniform<Real>(t.value, t.shape[0], hidden, rng);
  }
  auto& b = store[bias_].value;
  std::fill(b.begin() + static_cast<std::ptrdiff_t>(kForgetGate * hidden),
            b.begin() + static_cast<std::ptrdiff_t>((kForgetGate + 1) * hidden), Real(1));
}

template <typename Real>
LstmWeights<Real> Lstm<Real>::weights(const ParamStore<Real>& store) const {
  return {store[input_].value.data(), store[recurrent_].value.data(), store[bias_].value.data(),
          input_dim_, hidden_};
}

template <typename Real>
void Lstm<Real>::forward(const ParamStore<Real>& store, const Matrix<Real>& x, Cache& cache) const {
  const std::size_t L = x.rows;
  const std::size_t H = hidden_;
  const std::size_t G = 4 * H;
  const Real* U = store[input_].value.data();
  const Real* W = store[recurrent_].value.data();
  const Real* b = store[bias_].value.data();

  cache.x = x;
  cache.gates = Matrix<Real>(L, G);
  cache.cell = Matrix<Real>(L, H);
  cache.tanh_c = Matrix<Real>(L, H);
  cache.hidden = Matrix<Real>(L, H);
  kernels::matmul(x.data.data(), U, cache.gates.data.data(), L, input_dim_, G, false);

  for (std::size_t t = 0; t < L; ++t) {
    Real* z = cache.gates.row(t);
    for (std::size_t j = 0; j < G; ++j) z[j] += b[j];
    if (t > 0) {
      kernels::serial::matmul(cache.hidden.row(t - 1), W, z, 1, H, G, true);
    }
    const Real* c_prev = t > 0 ? cache.cell.row(t - 1) : nullptr;
    Real* c = cache.cell.row(t);
    Real* tc = cache.tanh_c.row(t);
    Real* h = cache.hidden.row(t);
    for (std::size_t j = 0; j < H; ++j) {
      Real& i = z[kInputGate * H + j];
      Real& f = z[kForgetGate * H + j];
      Real& g = z[kCellGate * H + j];
      Real& o = z[kOutputGate * H + j];
      i = sigmoid(i);
      f = sigmoid(f);
      g = std::tanh(g);
      o = sigmoid(o);
      c[j] = (c_prev ? f * c_prev[j] : Real(0)) + i * g;
      tc[j] = std::tanh(c[j]);
      h[j] = o * tc[j];
    }
  }
}

template <typename Real>
void Lstm<Real>::backward(ParamStore<Real>& store, const Cache& cache, const Matrix<Real>& dh,
                          Matrix<Real>& dx) const {
  const std::size_t L = cache.x.rows;
  const std::size_t H = hidden_;
  const std::size_t G = 4 * H;
  const Real* U = store[input_].value.data();
  const Real* W = store[recurrent_].value.data();

  Matrix<Real> dz(L, G);
  std::vector<Real> dh_next(H, Real(0));
  std::vector<Real> dc_next(H, Real(0));
  for (std::size_t tt = L; tt-- > 0;) {
    const Real* gates = cache.gates.row(tt);
    const Real* tc = cache.tanh_c.row(tt);
    const Real* c_prev = tt > 0 ? cache.cell.row(tt - 1) : nullptr;
    const Real* dht = dh.row(tt);
    Real* dzt = dz.row(tt);
    for (std::size_t j = 0; j < H; ++j) {
      const Real i = gates[kInputGate * H + j];
      const Real f = gates[kForgetGate * H + j];
      const Real g = gates[kCellGate * H + j];
      const Real o = gates[kOutputGate * H + j];
      const Real dhj = dht[j] + dh_next[j];
      const Real dc = dhj * o * (Real(1) - tc[j] * tc[j]) + dc_next[j];
      const Real cp = c_prev ? c_prev[j] : Real(0);
      dzt[kInputGate * H + j] = dc * g * i * (Real(1) - i);
      dzt[kForgetGate * H + j] = dc * cp * f * (Real(1) - f);
      dzt[kCellGate * H + j] = dc * i * (Real(1) - g * g);
      dzt[kOutputGate * H + j] = dhj * tc[j] * o * (Real(1) - o);
      dc_next[j] = dc * f;
    }
    kernels::serial::matmul_nt(dzt, W, dh_next.data(), 1, G, H, false);
  }

  // Recurrent weights see h_{t-1}; row 0 of the shifted matrix is zero.
  Matrix<Real> h_prev(L, H);
  for (std::size_t t = 1; t < L; ++t) {
    std::copy_n(cache.hidden.row(t - 1), H, h_prev.row(t));
  }
  kernels::matmul_tn(h_prev.data.data(), dz.data.data(), store[recurrent_].grad.data(), H, L, G,
                     true);
  kernels::matmul_tn(cache.x.data.data(), dz.data.data(), store[input_].grad.data(), input_dim_, L,
                     G, true);
  Real* db = store[bias_].grad.data();
  for (std::size_t t = 0; t < L; ++t) {
    const Real* dzt = dz.row(t);
    for (std::size_t j = 0; j < G; ++j) db[j] += dzt[j];
  }
  dx = Matrix<Real>(L, input_dim_);
  kernels::matmul_nt(dz.data.data(), U, dx.data.data(), L, G, input_dim_, false);
}

template <typename Real>
Blstm<Real>::Blstm(ParamStore<Real>& store, const std::string& prefix, std::size_t input_dim,
                   std::size_t hidden, std::uint64_t seed)
    : fwd_(store, prefix + ".fwd", input_dim, hidden, seed),
      bwd_(store, prefix + ".bwd", input_dim, hidden, seed) {}

namespace {

template <typename Real>
Matrix<Real> reversed_rows(const Matrix<Real>& m) {
  Matrix<Real> r(m.rows, m.cols);
  for (std::size_t t = 0; t < m.rows; ++t) {
    std::copy_n(m.row(m.rows - 1 - t), m.cols, r.row(t));
  }
  return r;
}

}  // namespace

template <typename Real>
void Blstm<Real>::forward(const ParamStore<Real>& store, const Matrix<Real>& x, Cache& cache,
                          Matrix<Real>& out) const {
  const std::size_t L = x.rows;
  const std::size_t H = fwd_.hidden();
  fwd_.forward(store, x, cache.fwd);
  bwd_.forward(store, reversed_rows(x), cache.bwd);
  out = Matrix<Real>(L, 2 * H);
  for (std::size_t t = 0; t < L; ++t) {
    std::copy_n(cache.fwd.hidden.row(t), H, out.row(t));
    std::copy_n(cache.bwd.hidden.row(L - 1 - t), H, out.row(t) + H);
  }
}

template <typename Real>
void Blstm<Real>::backward(ParamStore<Real>& store, const Cache& cache, const Matrix<Real>& dout,
                           Matrix<Real>& dx) const {
  const std::size_t L = dout.rows;
  const std::size_t H = fwd_.hidden();
  Matrix<Real> dfwd(L, H);
  Matrix<Real> dbwd(L, H);
  for (std::size_t t = 0; t < L; ++t) {
    std::copy_n(dout.row(t), H, dfwd.row(t));
    std::copy_n(dout.row(t) + H, H, dbwd.row(L - 1 - t));
  }
  Matrix<Real> dx_fwd;
  Matrix<Real> dx_bwd;
  fwd_.backward(store, cache.fwd, dfwd, dx_fwd);
  bwd_.backward(store, cache.bwd, dbwd, dx_bwd);
  dx = std::move(dx_fwd);
  for (std::size_t t = 0; t < L; ++t) {
    const Real* src = dx_bwd.row(L - 1 - t);
    Real* dst = dx.row(t);
    for (std::size_t j = 0; j < dx.cols; ++j) dst[j] += src[j];
  }
}

// ---------------------------------------------------------------- char CNN

template <typename Real>
CharCnn<Real>::CharCnn(ParamStore<Real>& store, const std::string& prefix, std::size_t char_table,
                       std::size_t window, std::size_t filters, std::uint64_t seed)
    : table_(char_table), window_(window), filters_(filters) {
  if (window == 0 || filters == 0) throw Error("config", "CNN window and filter count must be >= 1");
  char_dim_ = store[char_table].shape.at(1);
  weight_ = store.add(prefix + ".filters", {filters, window, char_dim_});
  bias_ = store.add(prefix + ".bias", {filters});
  Rng rng = make_rng(seed, "init/" + store[weight_].name);
  glorot_uniform<Real>(store[weight_].value, window * char_dim_, filters, rng);
}

template <typename Real>
void CharCnn<Real>::forward(const ParamStore<Real>& store, std::span<const int> char_ids,
                            double dropout_p, bool train, Rng& rng, Cache& cache,
                            std::span<Real> out) const {
  const std::size_t dc = char_dim_;
  cache.ids.clear();
  for (int id : char_ids) {
    if (id != 0) cache.ids.push_back(id);
  }
  const std::size_t n = cache.ids.size();
  const Real* table = store[table_].value.data();
  cache.input = Matrix<Real>(n, dc);
  for (std::size_t t = 0; t < n; ++t) {
    std::copy_n(table + static_cast<std::size_t>(cache.ids[t]) * dc, dc, cache.input.row(t));
  }
  dropout<Real>(cache.input.data, dropout_p, train, rng, cache.mask);

  cache.argmax.assign(filters_, -1);
  std::fill(out.begin(), out.end(), Real(0));
  if (n == 0) return;

  const Real* w = store[weight_].value.data();
  const Real* b = store[bias_].value.data();
  const auto half = static_cast<long>((window_ - 1) / 2);
  const std::size_t span = window_ * dc;
  for (std::size_t f = 0; f < filters_; ++f) {
    const Real* wf = w + f * span;
    Real best = Real(0);
    long best_t = -1;
    for (std::size_t t = 0; t < n; ++t) {
      Real s = b[f];
      for (std::size_t o = 0; o < window_; ++o) {
        const long pos = static_cast<long>(t + o) - half;
        if (pos < 0 || pos >= static_cast<long>(n)) continue;
        const Real* in = cache.input.row(static_cast<std::size_t>(pos));
        const Real* wo = wf + o * dc;
        for (std::size_t d = 0; d < dc; ++d) s += wo[d] * in[d];
      }
      if (best_t < 0 || s > best) {
        best = s;
        best_t = static_cast<long>(t);
      }
    }
    out[f] = best;
    cache.argmax[f] = best_t;
  }
}

template <typename Real>
void CharCnn<Real>::backward(ParamStore<Real>& store, const Cache& cache,
                             std::span<const Real> dout) const {
  const std::size_t n = cache.ids.size();
  if (n == 0) return;
  const std::size_t dc = char_dim_;
  const std::size_t span = window_ * dc;
  const Real* w = store[weight_].value.data();
  Real* dw = store[weight_].grad.data();
  Real* db = store[bias_].grad.data();
  const auto half = static_cast<long>((window_ - 1) / 2);

  Matrix<Real> dinput(n, dc);
  for (std::size_t f = 0; f < filters_; ++f) {
    const long t = cache.argmax[f];
    if (t < 0) continue;
    const Real g = dout[f];
    db[f] += g;
    for (std::size_t o = 0; o < window_; ++o) {
      const long pos = t + static_cast<long>(o) - half;
      if (pos < 0 || pos >= static_cast<long>(n)) continue;
      const Real* in = cache.input.row(static_cast<std::size_t>(pos));
      Real* din = dinput.row(static_cast<std::size_t>(pos));
      const Real* wo = w + f * span + o * dc;
      Real* dwo = dw + f * span + o * dc;
      for (std::size_t d = 0; d < dc; ++d) {
        dwo[d] += g * in[d];
        din[d] += g * wo[d];
      }
    }
  }
  dropout_backward<Real>(dinput.data, cache.mask);
  Real* dtable = store[table_].grad.data();
  for (std::size_t t = 0; t < n; ++t) {
    Real* row = dtable + static_cast<std::size_t>(cache.ids[t]) * dc;
    const Real* src = dinput.row(t);
    for (std::size_t d = 0; d < dc; ++d) row[d] += src[d];
  }
}

// ---------------------------------------------------------------- linear

template <typename Real>
Linear<Real>::Linear(ParamStore<Real>& store, const std::string& prefix, std::size_t input_dim,
                     std::size_t output_dim, std::uint64_t seed)
    : input_dim_(input_dim), output_dim_(output_dim) {
  weight_ = store.add(prefix + ".W", {input_dim, output_dim});
  bias_ = store.add(prefix + ".b", {output_dim});
  Rng rng = make_rng(seed, "init/" + store[weight_].name);
  glorot_uniform<Real>(store[weight_].value, input_dim, output_dim, rng);
}

template <typename Real>
void Linear<Real>::forward(const ParamStore<Real>& store, const Matrix<Real>& x,
                           Matrix<Real>& y) const {
  y = Matrix<Real>(x.rows, output_dim_);
  const Real* b = store[bias_].value.data();
  for (std::size_t t = 0; t < x.rows; ++t) std::copy_n(b, output_dim_, y.row(t));
  kernels::matmul(x.data.data(), store[weight_].value.data(), y.data.data(), x.rows, input_dim_,
                  output_dim_, true);
}

template <typename Real>
void Linear<Real>::backward(ParamStore<Real>& store, const Matrix<Real>& x, const Matrix<Real>& dy,
                            Matrix<Real>& dx) const {
  kernels::matmul_tn(x.data.data(), dy.data.data(), store[weight_].grad.data(), input_dim_, x.rows,
                     output_dim_, true);
  Real* db = store[bias_].grad.data();
  for (std::size_t t = 0; t < dy.rows; ++t) {
    for (std::size_t k = 0; k < output_dim_; ++k) db[k] += dy(t, k);
  }
  dx = Matrix<Real>(x.rows, input_dim_);
  kernels::matmul_nt(dy.data.data(), store[weight_].value.data(), dx.data.data(), x.rows,
                     output_dim_, input_dim_, false);
}

#define SEQTRANS_INSTANTIATE(Real)                                                           \
  template void dropout<Real>(std::span<Real>, double, bool, Rng&, std::vector<Real>&);     \
  template void dropout_backward<Real>(std::span<Real>, const std::vector<Real>&);          \
  template void glorot_uniform<Real>(std::span<Real>, std::size_t, std::size_t, Rng&);      \
  template void lstm_step<Real>(const LstmWeights<Real>&, std::span<const Real>,            \
                                std::span<const Real>, std::span<const Real>,               \
                                std::span<Real>, std::span<Real>);                          \
  template class Lstm<Real>;                                                                \
  template class Blstm<Real>;                                                               \
  template class CharCnn<Real>;                                                             \
  template class Linear<Real>;

SEQTRANS_INSTANTIATE(float)
SEQTRANS_INSTANTIATE(double)

#undef SEQTRANS_INSTANTIATE

}  // namespace seqtrans
