#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "seqtrans/rng.hpp"
#include "seqtrans/tensor.hpp"

namespace seqtrans {

// ---------------------------------------------------------------- dropout

/// Inverted dropout in place. In train mode each element is zeroed with
/// probability p and survivors are scaled by 1/(1-p); `mask` receives the
/// per-element multiplier. Eval mode, or p == 0, leaves x untouched and clears
/// the mask (an empty mask means identity).
template <typename Real>
void dropout(std::span<Real> x, double p, bool train, Rng& rng, std::vector<Real>& mask);

/// Multiplies a gradient by a mask produced by `dropout`.
template <typename Real>
void dropout_backward(std::span<Real> grad, const std::vector<Real>& mask);

// ---------------------------------------------------------------- LSTM

/// Gate blocks inside the 4H-wide weight columns.
enum LstmGate : std::size_t { kInputGate = 0, kForgetGate = 1, kCellGate = 2, kOutputGate = 3 };

/// Read-only view over one direction's weights: input weights U [d_in x 4H],
/// recurrent weights W [H x 4H], bias b [4H]; column block g holds gate g.
template <typename Real>
struct LstmWeights {
  const Real* input = nullptr;
  const Real* recurrent = nullptr;
  const Real* bias = nullptr;
  std::size_t input_dim = 0;
  std::size_t hidden = 0;
};

/// One time step:
///   i = sig(W_i h + U_i x + b_i), f = sig(...), o = sig(...), g = tanh(...)
///   c = f*c_prev + i*g, h = o*tanh(c)
template <typename Real>
void lstm_step(const LstmWeights<Real>& w, std::span<const Real> x, std::span<const Real> h_prev,
               std::span<const Real> c_prev, std::span<Real> h, std::span<Real> c);

/// One LSTM direction with parameters in a ParamStore.
template <typename Real>
class Lstm {
 public:
  Lstm() = default;
  /// Registers `<prefix>.U`, `<prefix>.W`, `<prefix>.b`; Glorot weights,
  /// zero biases except the forget gate at +1.
  Lstm(ParamStore<Real>& store, const std::string& prefix, std::size_t input_dim,
       std::size_t hidden, std::uint64_t seed);

  struct Cache {
    Matrix<Real> x;       // [L x d_in]
    Matrix<Real> gates;   // [L x 4H], post-activation
    Matrix<Real> cell;    // [L x H]
    Matrix<Real> tanh_c;  // [L x H]
    Matrix<Real> hidden;  // [L x H]
  };

  void forward(const ParamStore<Real>& store, const Matrix<Real>& x, Cache& cache) const;
  /// Adds parameter gradients; writes dx ([L x d_in]).
  void backward(ParamStore<Real>& store, const Cache& cache, const Matrix<Real>& dh,
                Matrix<Real>& dx) const;

  LstmWeights<Real> weights(const ParamStore<Real>& store) const;
  std::size_t input_dim() const { return input_dim_; }
  std::size_t hidden() const { return hidden_; }

 private:
  std::size_t input_ = 0, recurrent_ = 0, bias_ = 0;
  std::size_t input_dim_ = 0, hidden_ = 0;
};

/// Forward and backward LSTMs; output row t is [h_fwd(t) | h_bwd(t)].
template <typename Real>
class Blstm {
 public:
  Blstm() = default;
  Blstm(ParamStore<Real>& store, const std::string& prefix, std::size_t input_dim,
        std::size_t hidden, std::uint64_t seed);

  struct Cache {
    typename Lstm<Real>::Cache fwd;
    typename Lstm<Real>::Cache bwd;
  };

  void forward(const ParamStore<Real>& store, const Matrix<Real>& x, Cache& cache,
               Matrix<Real>& out) const;
  void backward(ParamStore<Real>& store, const Cache& cache, const Matrix<Real>& dout,
                Matrix<Real>& dx) const;

  std::size_t output_dim() const { return 2 * fwd_.hidden(); }
  const Lstm<Real>& forward_lstm() const { return fwd_; }
  const Lstm<Real>& backward_lstm() const { return bwd_; }

 private:
  Lstm<Real> fwd_;
  Lstm<Real> bwd_;
};

// ---------------------------------------------------------------- char CNN

/// Character embeddings -> (dropout) -> zero-padded 1-D convolution over the
/// characters -> max over positions, one value per filter.
template <typename Real>
class CharCnn {
 public:
  CharCnn() = default;
  /// `char_table` is the index of an existing [V_c x d_c] tensor, which may be
  /// shared between several CNNs.
  CharCnn(ParamStore<Real>& store, const std::string& prefix, std::size_t char_table,
          std::size_t window, std::size_t filters, std::uint64_t seed);

  struct Cache {
    std::vector<int> ids;        // non-PAD character ids
    Matrix<Real> input;          // [n x d_c], after dropout
    std::vector<Real> mask;      // dropout multipliers over input
    std::vector<long> argmax;    // per filter, -1 when the word is empty
  };

  /// PAD (id 0) positions are skipped; a word with no characters yields zeros.
  void forward(const ParamStore<Real>& store, std::span<const int> char_ids, double dropout_p,
               bool train, Rng& rng, Cache& cache, std::span<Real> out) const;
  void backward(ParamStore<Real>& store, const Cache& cache, std::span<const Real> dout) const;

  std::size_t filters() const { return filters_; }
  std::size_t window() const { return window_; }

 private:
  std::size_t table_ = 0, weight_ = 0, bias_ = 0;
  std::size_t char_dim_ = 0, window_ = 0, filters_ = 0;
};

// ---------------------------------------------------------------- linear

template <typename Real>
class Linear {
 public:
  Linear() = default;
  Linear(ParamStore<Real>& store, const std::string& prefix, std::size_t input_dim,
         std::size_t output_dim, std::uint64_t seed);

  void forward(const ParamStore<Real>& store, const Matrix<Real>& x, Matrix<Real>& y) const;
  void backward(ParamStore<Real>& store, const Matrix<Real>& x, const Matrix<Real>& dy,
                Matrix<Real>& dx) const;

  std::size_t output_dim() const { return output_dim_; }

 private:
  std::size_t weight_ = 0, bias_ = 0;
  std::size_t input_dim_ = 0, output_dim_ = 0;
};

// ---------------------------------------------------------------- init

/// Glorot-uniform fill with explicit fans.
template <typename Real>
void glorot_uniform(std::span<Real> values, std::size_t fan_in, std::size_t fan_out, Rng& rng);

}  // namespace seqtrans
