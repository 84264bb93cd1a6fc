#include "seqtrans/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "seqtrans/corpus.hpp"
#include "seqtrans/error.hpp"
#include "seqtrans/rng.hpp"

namespace seqtrans {

void NgramConfig::validate() const {
  if (min_n < 1 || max_n < min_n) {
    throw Error("config", "n-gram range must satisfy 1 <= min_n <= max_n");
  }
  if (bucket_count < 1) throw Error("config", "bucket_count must be >= 1");
}

void SkipgramConfig::validate() const {
  if (window < 1) throw Error("config", "window must be >= 1");
  if (negatives < 1) throw Error("config", "negatives must be >= 1");
  if (epochs < 1) throw Error("config", "epochs must be >= 1");
  if (!(learning_rate > 0)) throw Error("config", "learning rate must be positive");
}

std::vector<std::string> extract_ngrams(const std::string& word, const NgramConfig& cfg) {
  std::vector<std::string> chars = utf8_chars(word);
  if (cfg.boundary_markers) {
    chars.insert(chars.begin(), "<");
    chars.emplace_back(">");
  }
  std::vector<std::string> grams;
  const auto len = static_cast<int>(chars.size());
  for (int n = cfg.min_n; n <= cfg.max_n && n <= len; ++n) {
    for (int i = 0; i + n <= len; ++i) {
      std::string g;
      for (int k = i; k < i + n; ++k) g += chars[static_cast<std::size_t>(k)];
      grams.push_back(std::move(g));
    }
  }
  return grams;
}

std::uint64_t ngram_bucket(const std::string& ngram, std::uint64_t bucket_count) {
  return fnv1a64(ngram) % bucket_count;
}

EmbeddingTable::EmbeddingTable(std::size_t dim, NgramConfig ngrams)
    : dim_(dim), ngrams_(ngrams) {
  if (dim == 0) throw Error("config", "embedding dimension must be >= 1");
}

std::size_t EmbeddingTable::add_word(const std::string& word, std::span<const float> row,
                                     std::size_t count) {
  if (row.size() != dim_) {
    throw Error("data", "row for '" + word + "' has " + std::to_string(row.size()) +
                            " values, expected " + std::to_string(dim_));
  }
  auto [it, inserted] = index_.try_emplace(word, words_.size());
  if (!inserted) throw Error("data", "duplicate word '" + word + "'");
  words_.push_back(word);
  counts_.push_back(count);
  word_rows_.insert(word_rows_.end(), row.begin(), row.end());
  return it->second;
}

long EmbeddingTable::find(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? -1 : static_cast<long>(it->second);
}

std::span<float> EmbeddingTable::ngram_row(std::uint64_t bucket) {
  auto [it, inserted] = bucket_rows_.try_emplace(bucket, bucket_rows_.size());
  if (inserted) ngram_data_.resize(ngram_data_.size() + dim_, 0.0f);
  return {ngram_data_.data() + it->second * dim_, dim_};
}

std::span<const float> EmbeddingTable::find_ngram_row(std::uint64_t bucket) const {
  auto it = bucket_rows_.find(bucket);
  if (it == bucket_rows_.end()) return {};
  return {ngram_data_.data() + it->second * dim_, dim_};
}

void EmbeddingTable::scale(float alpha) {
  for (float& v : word_rows_) v *= alpha;
  for (float& v : ngram_data_) v *= alpha;
}

std::vector<float> word_vector(const std::string& word, const EmbeddingTable& table,
                               const NgramConfig& cfg) {
  std::vector<float> out(table.dim(), 0.0f);
  if (long id = table.find(word); id >= 0) {
    auto row = table.word_row(static_cast<std::size_t>(id));
    std::copy(row.begin(), row.end(), out.begin());
  }
  if (table.ngram_row_count() == 0) return out;
  for (const auto& g : extract_ngrams(word, cfg)) {
    auto row = table.find_ngram_row(ngram_bucket(g, cfg.bucket_count));
    for (std::size_t d = 0; d < row.size(); ++d) out[d] += row[d];
  }
  return out;
}

std::vector<float> word_vector(const std::string& word, const EmbeddingTable& table) {
  return word_vector(word, table, table.ngram_config());
}

namespace {

struct WordEntry {
  std::string word;
  std::size_t count = 0;
  std::size_t first_seen = 0;
};

inline float sigmoid(float x) {
  if (x > 30.0f) return 1.0f;
  if (x < -30.0f) return 0.0f;
  return 1.0f / (1.0f + std::exp(-x));
}

}  // namespace

EmbeddingTable train_skipgram(std::span<const std::vector<std::string>> corpus,
                              const SkipgramConfig& cfg, const NgramConfig& ncfg, std::size_t dim,
                              SkipgramStats* stats) {
  cfg.validate();
  ncfg.validate();
  if (corpus.empty()) throw Error("data", "embedding corpus has no sentences");
  if (dim == 0) throw Error("config", "embedding dimension must be >= 1");

  std::unordered_map<std::string, std::size_t> seen;
  std::vector<WordEntry> entries;
  for (const auto& sent : corpus) {
    for (const auto& tok : sent) {
      auto [it, inserted] = seen.try_emplace(tok, entries.size());
      if (inserted) entries.push_back({tok, 0, entries.size()});
      ++entries[it->second].count;
    }
  }
  std::erase_if(entries, [&](const WordEntry& e) {
    return e.count < static_cast<std::size_t>(std::max(cfg.min_count, 0));
  });
  if (entries.empty()) throw Error("data", "empty vocabulary after min-count filtering");
  std::stable_sort(entries.begin(), entries.end(),
                   [](const WordEntry& a, const WordEntry& b) { return a.count > b.count; });

  const std::size_t nwords = entries.size();
  std::unordered_map<std::string, std::size_t> word_id;
  for (std::size_t i = 0; i < nwords; ++i) word_id.emplace(entries[i].word, i);

  EmbeddingTable table(dim, ncfg);
  Rng rng = make_rng(cfg.seed, "skipgram");
  const float bound = 1.0f / static_cast<float>(dim);
  std::uniform_real_distribution<float> init(-bound, bound);

  std::vector<float> row(dim);
  for (const auto& e : entries) {
    for (float& v : row) v = init(rng);
    table.add_word(e.word, row, e.count);
  }
  // Subword rows: materialize each touched bucket in vocabulary order.
  std::vector<std::vector<std::uint64_t>> subwords(nwords);
  for (std::size_t i = 0; i < nwords; ++i) {
    for (const auto& g : extract_ngrams(entries[i].word, ncfg)) {
      const std::uint64_t b = ngram_bucket(g, ncfg.bucket_count);
      if (table.find_ngram_row(b).empty()) {
        auto r = table.ngram_row(b);
        for (float& v : r) v = init(rng);
      }
      subwords[i].push_back(b);
    }
  }
  std::vector<std::vector<float*>> components(nwords);
  for (std::size_t i = 0; i < nwords; ++i) {
    components[i].push_back(table.word_row(i).data());
    for (auto b : subwords[i]) components[i].push_back(table.ngram_row(b).data());
  }

  std::vector<float> output(nwords * dim, 0.0f);
  std::vector<double> weights(nwords);
  for (std::size_t i = 0; i < nwords; ++i) weights[i] = std::pow(double(entries[i].count), 0.75);
  std::discrete_distribution<std::size_t> negative(weights.begin(), weights.end());
  std::uniform_int_distribution<int> shrink(1, cfg.window);

  std::vector<std::vector<std::size_t>> ids;
  ids.reserve(corpus.size());
  std::size_t tokens = 0;
  for (const auto& sent : corpus) {
    auto& v = ids.emplace_back();
    for (const auto& tok : sent) {
      if (auto it = word_id.find(tok); it != word_id.end()) v.push_back(it->second);
    }
    tokens += v.size();
  }

  std::vector<float> hidden(dim), grad(dim);
  const double total = static_cast<double>(tokens) * cfg.epochs;
  std::size_t processed = 0;
  if (stats) stats->epoch_loss.clear();

  auto update = [&](std::size_t target, float label, float lr) -> double {
    float* out = output.data() + target * dim;
    float dot = 0.0f;
    for (std::size_t d = 0; d < dim; ++d) dot += hidden[d] * out[d];
    const float p = sigmoid(dot);
    const float g = lr * (label - p);
    for (std::size_t d = 0; d < dim; ++d) {
      grad[d] += g * out[d];
      out[d] += g * hidden[d];
    }
    const double prob = label > 0.5f ? p : 1.0f - p;
    return -std::log(std::max(prob, 1e-12));
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t pairs = 0;
    for (const auto& sent : ids) {
      for (std::size_t i = 0; i < sent.size(); ++i) {
        const auto lr = static_cast<float>(
            cfg.learning_rate * std::max(0.0, 1.0 - static_cast<double>(processed) / total));
        ++processed;
        const std::size_t center = sent[i];
        const auto span = static_cast<std::size_t>(shrink(rng));
        const std::size_t lo = i >= span ? i - span : 0;
        const std::size_t hi = std::min(sent.size() - 1, i + span);
        for (std::size_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          std::fill(hidden.begin(), hidden.end(), 0.0f);
          for (const float* c : components[center]) {
            for (std::size_t d = 0; d < dim; ++d) hidden[d] += c[d];
          }
          std::fill(grad.begin(), grad.end(), 0.0f);
          double loss = update(sent[j], 1.0f, lr);
          for (int n = 0; n < cfg.negatives; ++n) {
            std::size_t neg = negative(rng);
            if (neg == sent[j]) continue;
            loss += update(neg, 0.0f, lr);
          }
          for (float* c : components[center]) {
            for (std::size_t d = 0; d < dim; ++d) c[d] += grad[d];
          }
          loss_sum += loss;
          ++pairs;
        }
      }
    }
    const double mean = pairs ? loss_sum / static_cast<double>(pairs) : 0.0;
    if (!std::isfinite(mean)) {
      throw Error("numeric", "skip-gram loss became non-finite in epoch " + std::to_string(epoch + 1));
    }
    for (float v : output) {
      if (!std::isfinite(v)) {
        throw Error("numeric", "non-finite embedding value in epoch " + std::to_string(epoch + 1));
      }
    }
    if (stats) {
      stats->epoch_loss.push_back(mean);
      stats->pairs_per_epoch = pairs;
    }
  }
  for (std::size_t i = 0; i < nwords; ++i) {
    for (float v : table.word_row(i)) {
      if (!std::isfinite(v)) throw Error("numeric", "non-finite word vector for '" + entries[i].word + "'");
    }
  }
  return table;
}

void write_vec(std::ostream& out, const EmbeddingTable& table) {
  out << table.word_count() << ' ' << table.dim() << '\n';
  char buf[32];
  for (const auto& w : table.words()) {
    out << w;
    for (float v : word_vector(w, table)) {
      std::snprintf(buf, sizeof buf, " %.6g", static_cast<double>(v));
      out << buf;
    }
    out << '\n';
  }
}

void write_vec(const std::string& path, const EmbeddingTable& table) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot write " + path);
  write_vec(out, table);
}

EmbeddingTable read_vec(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("parse", "line 1: missing `<count> <dim>` header");
  std::istringstream header(line);
  long count = -1;
  long dim = -1;
  if (!(header >> count >> dim) || count < 0 || dim < 1) {
    throw Error("parse", "line 1: malformed `<count> <dim>` header");
  }
  EmbeddingTable table(static_cast<std::size_t>(dim));
  std::vector<float> row;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(' ') == std::string::npos) continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    row.clear();
    std::string tok;
    while (ls >> tok) {
      char* end = nullptr;
      float v = std::strtof(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0') {
        throw Error("parse", "line " + std::to_string(line_no) + ": bad number '" + tok + "'");
      }
      row.push_back(v);
    }
    if (row.size() != static_cast<std::size_t>(dim)) {
      throw Error("parse", "line " + std::to_string(line_no) + ": expected " +
                               std::to_string(dim) + " values, got " + std::to_string(row.size()));
    }
    try {
      table.add_word(word, row);
    } catch (const Error& e) {
      throw Error("parse", "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (table.word_count() != static_cast<std::size_t>(count)) {
    throw Error("parse", "header announces " + std::to_string(count) + " rows, found " +
                             std::to_string(table.word_count()));
  }
  return table;
}

EmbeddingTable read_vec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open " + path);
  return read_vec(in);
}

std::vector<std::vector<std::string>> read_token_streams(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const bool columns = text.find('\t') != std::string::npos;

  std::vector<std::vector<std::string>> out;
  std::vector<std::string> current;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (columns) {
      if (line.empty()) {
        if (!current.empty()) out.push_back(std::move(current));
        current.clear();
      } else if (line.front() != '#') {
        current.push_back(line.substr(0, line.find('\t')));
      }
      continue;
    }
    std::istringstream ls(line);
    std::vector<std::string> toks;
    for (std::string t; ls >> t;) toks.push_back(t);
    if (!toks.empty()) out.push_back(std::move(toks));
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

}  // namespace seqtrans
