#include "seqtrans/model.hpp"

#include <algorithm>
#include <cmath>

#include "seqtrans/error.hpp"

namespace seqtrans {

std::string_view architecture_name(Architecture a) {
  switch (a) {
    case Architecture::single: return "single";
    case Architecture::mtl: return "mtl";
    case Architecture::transfer: return "transfer";
  }
  return "single";
}

Architecture parse_architecture(std::string_view name) {
  if (name == "single") return Architecture::single;
  if (name == "mtl") return Architecture::mtl;
  if (name == "transfer") return Architecture::transfer;
  throw Error("config", "unknown mode '" + std::string(name) + "' (expected single|mtl|transfer)");
}

void ModelConfig::validate() const {
  if (word_dim == 0 || char_dim == 0 || cnn_window == 0 || cnn_filters == 0 || lstm_size == 0) {
    throw Error("config", "layer sizes must be >= 1");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error("config", "dropout must be in [0, 1)");
}

template <typename Real>
BasicTaggerModel<Real>::BasicTaggerModel(ModelSpec spec) : spec_(std::move(spec)) {
  const ModelConfig& cfg = spec_.config;
  cfg.validate();
  if (spec_.languages.empty()) throw Error("model", "model needs at least one language");
  if (spec_.heads.empty()) throw Error("model", "model needs at least one output head");
  const std::uint64_t seed = cfg.seed;

  char_table_ = params_.add("char.emb", {spec_.chars.char_count(), cfg.char_dim});
  {
    auto& t = params_[char_table_];
    Rng rng = make_rng(seed, "init/char.emb");
    const double limit = std::sqrt(3.0 / static_cast<double>(cfg.char_dim));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t i = cfg.char_dim; i < t.value.size(); ++i) t.value[i] = static_cast<Real>(dist(rng));
  }
  for (const auto& lang : spec_.languages) {
    const std::string prefix = "enc." + lang.name;
    Encoder e;
    e.words = params_.add(prefix + ".words", {lang.vocab.word_count(), cfg.word_dim},
                          !cfg.freeze_embeddings);
    e.cnn = CharCnn<Real>(params_, prefix + ".cnn", char_table_, cfg.cnn_window, cfg.cnn_filters,
                          seed);
    encoders_.push_back(std::move(e));
  }
  shared_ = Blstm<Real>(params_, "shared", cfg.encoder_width(), cfg.lstm_size, seed);
  for (const auto& h : spec_.heads) {
    if (h.language >= spec_.languages.size()) throw Error("model", "head bound to unknown language");
    if (h.tags.size() == 0) throw Error("model", "head '" + h.name + "' has an empty tag set");
    const std::string prefix = "head." + h.name;
    Head head;
    std::size_t width = shared_.output_dim();
    if (h.private_lstm) {
      head.lstm = Blstm<Real>(params_, prefix, width, cfg.lstm_size, seed);
      width = head.lstm.output_dim();
    }
    head.proj = Linear<Real>(params_, prefix + ".proj", width, h.tags.size(), seed);
    head.crf = Crf<Real>(params_, prefix + ".crf", h.tags.size());
    heads_.push_back(std::move(head));
  }
}

template <typename Real>
void BasicTaggerModel<Real>::set_word_table(std::size_t language, const EmbeddingTable& table) {
  const ModelConfig& cfg = spec_.config;
  if (table.dim() != cfg.word_dim) {
    throw Error("model", "word embedding dimension " + std::to_string(table.dim()) +
                             " does not match configured " + std::to_string(cfg.word_dim));
  }
  auto& t = params_[encoders_.at(language).words];
  const auto& words = spec_.languages[language].vocab.words();
  std::fill(t.value.begin(), t.value.end(), Real(0));
  for (std::size_t i = 2; i < words.size(); ++i) {
    const std::vector<float> v = word_vector(words[i], table);
    std::copy(v.begin(), v.end(), t.value.begin() + static_cast<std::ptrdiff_t>(i * cfg.word_dim));
  }
}

template <typename Real>
std::vector<std::size_t> BasicTaggerModel<Real>::heads_of(std::size_t language) const {
  std::vector<std::size_t> out;
  for (std::size_t h = 0; h < spec_.heads.size(); ++h) {
    if (spec_.heads[h].language == language) out.push_back(h);
  }
  return out;
}

template <typename Real>
std::size_t BasicTaggerModel<Real>::primary_head(std::size_t language) const {
  auto hs = heads_of(language);
  if (hs.empty()) throw Error("model", "language has no heads");
  for (auto h : hs) {
    if (spec_.heads[h].task == Task::pos) return h;
  }
  return hs.front();
}

template <typename Real>
Rng& BasicTaggerModel<Real>::dropout_stream(const std::string& site) {
  auto it = streams_.find(site);
  if (it == streams_.end()) {
    it = streams_.emplace(site, make_rng(spec_.config.seed, "dropout/" + site)).first;
  }
  return it->second;
}

template <typename Real>
void BasicTaggerModel<Real>::encode(std::span<const std::string> tokens, std::size_t language,
                                    bool train, Matrix<Real>& x, EncoderCache& cache) {
  const ModelConfig& cfg = spec_.config;
  const Encoder& enc = encoders_.at(language);
  const auto& vocab = spec_.languages[language].vocab;
  const std::string& lang = spec_.languages[language].name;
  const std::size_t L = tokens.size();
  const std::size_t dw = cfg.word_dim;
  const Real* table = params_[enc.words].value.data();

  x = Matrix<Real>(L, cfg.encoder_width());
  cache.word_ids.resize(L);
  cache.cnn.resize(L);
  Rng& char_rng = dropout_stream("enc." + lang + ".chars");
  for (std::size_t t = 0; t < L; ++t) {
    const int id = vocab.word_id(tokens[t]);
    cache.word_ids[t] = id;
    std::copy_n(table + static_cast<std::size_t>(id) * dw, dw, x.row(t));
    const std::vector<int> chars = spec_.chars.char_ids(tokens[t]);
    enc.cnn.forward(params_, chars, cfg.dropout, train, char_rng, cache.cnn[t],
                    std::span<Real>(x.row(t) + dw, cfg.cnn_filters));
  }
  dropout<Real>(x.data, cfg.dropout, train, dropout_stream("enc." + lang + ".out"), cache.mask);
}

template <typename Real>
void BasicTaggerModel<Real>::encode_eval(std::span<const std::string> tokens,
                                         std::size_t language, Matrix<Real>& x) const {
  const ModelConfig& cfg = spec_.config;
  const Encoder& enc = encoders_.at(language);
  const auto& vocab = spec_.languages[language].vocab;
  const std::size_t dw = cfg.word_dim;
  const Real* table = params_[enc.words].value.data();
  x = Matrix<Real>(tokens.size(), cfg.encoder_width());
  Rng unused;
  typename CharCnn<Real>::Cache scratch;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const auto id = static_cast<std::size_t>(vocab.word_id(tokens[t]));
    std::copy_n(table + id * dw, dw, x.row(t));
    const std::vector<int> chars = spec_.chars.char_ids(tokens[t]);
    enc.cnn.forward(params_, chars, 0.0, false, unused, scratch,
                    std::span<Real>(x.row(t) + dw, cfg.cnn_filters));
  }
}

template <typename Real>
Real BasicTaggerModel<Real>::loss(const Sentence& sentence, std::size_t language, bool train,
                                  bool backward, Real scale) {
  const ModelConfig& cfg = spec_.config;
  if (sentence.tokens.empty()) throw Error("data", "empty sentence");
  const std::string& lang = spec_.languages.at(language).name;

  Matrix<Real> x;
  EncoderCache enc_cache;
  encode(sentence.tokens, language, train, x, enc_cache);

  typename Blstm<Real>::Cache shared_cache;
  Matrix<Real> s;
  shared_.forward(params_, x, shared_cache, s);
  std::vector<Real> shared_mask;
  dropout<Real>(s.data, cfg.dropout, train, dropout_stream("shared.out"), shared_mask);

  Matrix<Real> ds(s.rows, s.cols);
  bool any_grad = false;
  Real total = 0;
  for (std::size_t h : heads_of(language)) {
    const HeadSpec& hs = spec_.heads[h];
    if (hs.weight == 0.0) continue;
    auto gold_it = sentence.tags.find(hs.task);
    if (gold_it == sentence.tags.end()) {
      throw Error("data", "sentence lacks " + std::string(task_name(hs.task)) + " tags");
    }
    const Head& head = heads_[h];
    const Matrix<Real>* p = &s;
    typename Blstm<Real>::Cache head_cache;
    Matrix<Real> hp;
    std::vector<Real> head_mask;
    if (hs.private_lstm) {
      head.lstm.forward(params_, s, head_cache, hp);
      dropout<Real>(hp.data, cfg.dropout, train, dropout_stream("head." + hs.name + ".out"),
                    head_mask);
      p = &hp;
    }
    Matrix<Real> e;
    head.proj.forward(params_, *p, e);
    const auto w = static_cast<Real>(hs.weight);
    if (!backward) {
      total += w * crf_nll(e, gold_it->second, head.crf.scores(params_));
      continue;
    }
    Matrix<Real> de;
    total += w * head.crf.nll_backward(params_, e, gold_it->second, scale * w, de);
    Matrix<Real> dp;
    head.proj.backward(params_, *p, de, dp);
    if (hs.private_lstm) {
      dropout_backward<Real>(dp.data, head_mask);
      Matrix<Real> dsh;
      head.lstm.backward(params_, head_cache, dp, dsh);
      dp = std::move(dsh);
    }
    for (std::size_t i = 0; i < ds.data.size(); ++i) ds.data[i] += dp.data[i];
    any_grad = true;
  }
  if (!std::isfinite(total)) throw Error("numeric", "non-finite loss in language " + lang);
  if (!backward || !any_grad) return total;

  dropout_backward<Real>(ds.data, shared_mask);
  Matrix<Real> dx;
  shared_.backward(params_, shared_cache, ds, dx);
  dropout_backward<Real>(dx.data, enc_cache.mask);

  const Encoder& enc = encoders_[language];
  const std::size_t dw = cfg.word_dim;
  auto& words = params_[enc.words];
  for (std::size_t t = 0; t < dx.rows; ++t) {
    if (words.trainable) {
      Real* g = words.grad.data() + static_cast<std::size_t>(enc_cache.word_ids[t]) * dw;
      const Real* src = dx.row(t);
      for (std::size_t d = 0; d < dw; ++d) g[d] += src[d];
    }
    enc.cnn.backward(params_, enc_cache.cnn[t],
                     std::span<const Real>(dx.row(t) + dw, cfg.cnn_filters));
  }
  // PAD/UNK rows of the word table and the PAD char row stay fixed.
  if (words.trainable) std::fill_n(words.grad.begin(), 2 * dw, Real(0));
  std::fill_n(params_[char_table_].grad.begin(), cfg.char_dim, Real(0));
  return total;
}

template <typename Real>
std::vector<std::vector<int>> BasicTaggerModel<Real>::predict(std::span<const std::string> tokens,
                                                              std::size_t language) const {
  std::vector<std::vector<int>> out;
  if (tokens.empty()) return out;
  Matrix<Real> x;
  encode_eval(tokens, language, x);
  typename Blstm<Real>::Cache cache;
  Matrix<Real> s;
  shared_.forward(params_, x, cache, s);
  for (std::size_t h : heads_of(language)) {
    const Head& head = heads_[h];
    const Matrix<Real>* p = &s;
    Matrix<Real> hp;
    typename Blstm<Real>::Cache head_cache;
    if (spec_.heads[h].private_lstm) {
      head.lstm.forward(params_, s, head_cache, hp);
      p = &hp;
    }
    Matrix<Real> e;
    head.proj.forward(params_, *p, e);
    out.push_back(crf_viterbi(e, head.crf.scores(params_)));
  }
  return out;
}

// ---------------------------------------------------------------- builders

namespace {

void require_table(const EmbeddingTable* table, const ModelConfig& cfg, const std::string& lang) {
  if (!table) throw Error("model", "missing pre-trained word table for language '" + lang + "'");
  if (table->dim() != cfg.word_dim) {
    throw Error("model", "word table for '" + lang + "' has dimension " +
                             std::to_string(table->dim()) + ", configured word_dim is " +
                             std::to_string(cfg.word_dim));
  }
}

}  // namespace

template <typename Real>
BasicTaggerModel<Real> build_single(const ModelConfig& config, const Vocabulary& vocab,
                                    const TagSet& tagset, const EmbeddingTable* word_table,
                                    const std::string& language) {
  require_table(word_table, config, language);
  ModelSpec spec;
  spec.architecture = Architecture::single;
  spec.config = config;
  spec.chars = vocab;
  spec.languages.push_back({language, vocab});
  HeadSpec head;
  head.name = std::string(task_name(tagset.task()));
  head.task = tagset.task();
  head.tags = tagset;
  head.private_lstm = config.head_lstm;
  spec.heads.push_back(std::move(head));
  BasicTaggerModel<Real> model(std::move(spec));
  model.set_word_table(0, *word_table);
  return model;
}

template <typename Real>
BasicTaggerModel<Real> build_mtl(const ModelConfig& config, const Vocabulary& vocab,
                                 const TagSets& tagsets, const EmbeddingTable* word_table,
                                 const std::string& language) {
  require_table(word_table, config, language);
  ModelSpec spec;
  spec.architecture = Architecture::mtl;
  spec.config = config;
  spec.chars = vocab;
  spec.languages.push_back({language, vocab});
  for (Task task : {Task::pos, Task::gender, Task::number}) {
    auto it = tagsets.find(task);
    if (it == tagsets.end() || it->second.size() == 0) {
      throw Error("data", "multitask model needs " + std::string(task_name(task)) + " tags");
    }
    HeadSpec head;
    head.name = std::string(task_name(task));
    head.task = task;
    head.tags = it->second;
    head.private_lstm = true;
    spec.heads.push_back(std::move(head));
  }
  BasicTaggerModel<Real> model(std::move(spec));
  model.set_word_table(0, *word_table);
  return model;
}

template <typename Real>
BasicTaggerModel<Real> build_transfer(const ModelConfig& config,
                                      std::span<const std::string> languages,
                                      std::span<const Vocabulary> vocabs,
                                      std::span<const TagSet> tagsets,
                                      std::span<const EmbeddingTable* const> word_tables) {
  const std::size_t n = languages.size();
  if (n < 2 || vocabs.size() != n || tagsets.size() != n || word_tables.size() != n) {
    throw Error("model", "transfer model needs matching resources for at least two languages");
  }
  ModelSpec spec;
  spec.architecture = Architecture::transfer;
  spec.config = config;
  for (std::size_t l = 0; l < n; ++l) {
    require_table(word_tables[l], config, languages[l]);
    if (word_tables[l]->dim() != word_tables[0]->dim()) {
      throw Error("model", "word embedding dimensions differ across languages");
    }
    spec.chars.merge_chars(vocabs[l]);
    spec.languages.push_back({languages[l], vocabs[l]});
    HeadSpec head;
    head.name = languages[l];
    head.task = tagsets[l].task();
    head.language = l;
    head.tags = tagsets[l];
    head.private_lstm = true;
    spec.heads.push_back(std::move(head));
  }
  BasicTaggerModel<Real> model(std::move(spec));
  for (std::size_t l = 0; l < n; ++l) model.set_word_table(l, *word_tables[l]);
  return model;
}

#define SEQTRANS_INSTANTIATE(Real)                                                             \
  template class BasicTaggerModel<Real>;                                                       \
  template BasicTaggerModel<Real> build_single<Real>(const ModelConfig&, const Vocabulary&,    \
                                                     const TagSet&, const EmbeddingTable*,     \
                                                     const std::string&);                      \
  template BasicTaggerModel<Real> build_mtl<Real>(const ModelConfig&, const Vocabulary&,       \
                                                  const TagSets&, const EmbeddingTable*,       \
                                                  const std::string&);                         \
  template BasicTaggerModel<Real> build_transfer<Real>(                                        \
      const ModelConfig&, std::span<const std::string>, std::span<const Vocabulary>,           \
      std::span<const TagSet>, std::span<const EmbeddingTable* const>);

SEQTRANS_INSTANTIATE(float)
SEQTRANS_INSTANTIATE(double)

#undef SEQTRANS_INSTANTIATE

}  // namespace seqtrans
