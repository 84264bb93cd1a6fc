#pragma once

// Tiny models and data shared by the unit tests and the acceptance runner,
// plus a central-difference gradient checker.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "seqtrans/corpus.hpp"
#include "seqtrans/embeddings.hpp"
#include "seqtrans/model.hpp"

namespace fixtures {

using seqtrans::Sentence;
using seqtrans::Task;

/// Random sentences over a small alphabet; every task gets random tags.
struct TinyData {
  std::vector<Sentence> sentences;
  seqtrans::TagSets tagsets;
  seqtrans::Vocabulary vocab;
  seqtrans::EmbeddingTable table;
};

inline TinyData tiny_data(std::uint64_t seed, std::size_t n_sentences, std::size_t length,
                          std::size_t tags, std::size_t word_dim, const std::string& alphabet = "abcde") {
  std::mt19937_64 rng(seed);
  TinyData d;
  for (Task t : {Task::pos, Task::gender, Task::number}) {
    seqtrans::TagSet ts(t);
    for (std::size_t k = 0; k < tags; ++k) ts.intern(std::string(seqtrans::task_name(t)) + std::to_string(k));
    d.tagsets.emplace(t, ts);
  }
  std::uniform_int_distribution<std::size_t> ch(0, alphabet.size() - 1);
  std::uniform_int_distribution<std::size_t> wl(1, 4);
  std::uniform_int_distribution<int> tag(0, static_cast<int>(tags) - 1);
  for (std::size_t s = 0; s < n_sentences; ++s) {
    Sentence sent;
    for (std::size_t t = 0; t < length; ++t) {
      std::string w;
      for (std::size_t i = wl(rng); i > 0; --i) w += alphabet[ch(rng)];
      sent.tokens.push_back(w);
      for (Task task : {Task::pos, Task::gender, Task::number}) sent.tags[task].push_back(tag(rng));
    }
    d.sentences.push_back(sent);
  }
  d.vocab.add_sentences(d.sentences);
  d.table = seqtrans::EmbeddingTable(word_dim);
  std::normal_distribution<float> n(0.0f, 0.5f);
  std::vector<float> row(word_dim);
  for (std::size_t i = 2; i < d.vocab.word_count(); ++i) {
    for (auto& v : row) v = n(rng);
    d.table.add_word(d.vocab.words()[i], row);
  }
  return d;
}

/// Tiny dimensions: word 4, LSTM 3, K as given, char dim 3, 2 filters.
inline seqtrans::ModelConfig tiny_config(std::uint64_t seed) {
  seqtrans::ModelConfig c;
  c.word_dim = 4;
  c.char_dim = 3;
  c.cnn_window = 3;
  c.cnn_filters = 2;
  c.lstm_size = 3;
  c.dropout = 0.0;
  c.freeze_embeddings = false;
  c.seed = seed;
  return c;
}

/// Randomizes every value (including CRF scores, which start at zero) so
/// that no gradient vanishes by symmetry.
template <typename Real>
void randomize(seqtrans::BasicTaggerModel<Real>& model, std::uint64_t seed, double scale = 0.5) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto& t : model.params()) {
    for (auto& v : t.value) v = static_cast<Real>(u(rng));
  }
}

/// One sentence and the language whose encoder and heads it uses.
struct Item {
  const Sentence* sentence;
  std::size_t language;
};

/// Smallest gap between the best and second-best convolution position over
/// every word and filter of the items. Max-pooling is not differentiable at
/// ties, so a finite-difference step must not cross one.
inline double min_pool_margin(const seqtrans::BasicTaggerModel<double>& model,
                              const std::vector<Item>& items) {
  const auto& spec = model.spec();
  const auto& cfg = spec.config;
  const auto& table = model.params().at("char.emb").value;
  const std::size_t dc = cfg.char_dim, w = cfg.cnn_window, nf = cfg.cnn_filters;
  const long half = static_cast<long>((w - 1) / 2);
  double margin = std::numeric_limits<double>::infinity();
  for (const Item& it : items) {
    const std::string prefix = "enc." + spec.languages[it.language].name + ".cnn";
    const auto& filters = model.params().at(prefix + ".filters").value;
    for (const auto& token : it.sentence->tokens) {
      std::vector<int> ids;
      for (int id : spec.chars.char_ids(token)) {
        if (id != 0) ids.push_back(id);
      }
      const long n = static_cast<long>(ids.size());
      if (n < 2) continue;
      for (std::size_t f = 0; f < nf; ++f) {
        std::vector<double> conv;
        for (long t = 0; t < n; ++t) {
          double s = 0.0;
          for (std::size_t o = 0; o < w; ++o) {
            const long pos = t + static_cast<long>(o) - half;
            if (pos < 0 || pos >= n) continue;
            for (std::size_t d = 0; d < dc; ++d) {
              s += filters[(f * w + o) * dc + d] *
                   table[static_cast<std::size_t>(ids[static_cast<std::size_t>(pos)]) * dc + d];
            }
          }
          conv.push_back(s);
        }
        std::sort(conv.begin(), conv.end(), std::greater<>());
        margin = std::min(margin, conv[0] - conv[1]);
      }
    }
  }
  return margin;
}

/// Randomizes the model, redrawing until every max-pool decision is at least
/// `margin` away from a tie.
inline void randomize_away_from_ties(seqtrans::BasicTaggerModel<double>& model,
                                     const std::vector<Item>& items, std::uint64_t seed,
                                     double margin = 5e-3) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    randomize(model, seed * 7919 + attempt);
    if (min_pool_margin(model, items) >= margin) return;
  }
}

struct GradCheck {
  double worst = 0.0;  // largest relative error
  std::string worst_param;
  std::size_t checked = 0;
  std::vector<std::string> groups;  // parameter tensors with at least one checked entry
};

template <typename Real>
double total_loss(seqtrans::BasicTaggerModel<Real>& model, const std::vector<Item>& items,
                  bool backward) {
  double sum = 0.0;
  for (const Item& it : items) {
    sum += static_cast<double>(model.loss(*it.sentence, it.language, false, backward));
  }
  return sum;
}

/// Relative error |a - n| / max(|a|, |n|, floor) for every trainable entry
/// except the rows kept fixed at zero (PAD/UNK word rows, PAD char row).
inline GradCheck check_gradients(seqtrans::BasicTaggerModel<double>& model,
                                 const std::vector<Item>& items, double h = 1e-3,
                                 double floor = 1e-6) {
  auto& params = model.params();
  params.zero_grad();
  total_loss(model, items, true);
  std::vector<std::vector<double>> analytic;
  for (const auto& t : params) analytic.push_back(t.grad);

  GradCheck out;
  for (std::size_t ti = 0; ti < params.size(); ++ti) {
    auto& t = params[ti];
    if (!t.trainable) continue;
    std::size_t skip = 0;
    if (t.name == "char.emb") skip = t.shape[1];
    if (t.name.size() > 6 && t.name.compare(t.name.size() - 6, 6, ".words") == 0) skip = 2 * t.shape[1];
    bool any = false;
    for (std::size_t i = skip; i < t.value.size(); ++i) {
      const double orig = t.value[i];
      t.value[i] = orig + h;
      const double up = total_loss(model, items, false);
      t.value[i] = orig - h;
      const double down = total_loss(model, items, false);
      t.value[i] = orig;
      const double numeric = (up - down) / (2 * h);
      const double a = analytic[ti][i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      if (rel > out.worst) {
        out.worst = rel;
        out.worst_param = t.name + "[" + std::to_string(i) + "]";
      }
      ++out.checked;
      any = true;
    }
    if (any) out.groups.push_back(t.name);
  }
  return out;
}

}  // namespace fixtures
