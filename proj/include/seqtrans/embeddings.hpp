#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace seqtrans {

struct NgramConfig {
  int min_n = 3;
  int max_n = 6;
  std::uint64_t bucket_count = 2'000'000;
  /// Wrap words in '<' '>' before extracting n-grams.
  bool boundary_markers = false;

  void validate() const;
};

/// Contiguous character n-grams of lengths min_n..max_n, grouped by length and
/// left-to-right within a length. Characters are UTF-8 code points.
std::vector<std::string> extract_ngrams(const std::string& word, const NgramConfig& cfg);

/// FNV-1a 64-bit of the n-gram bytes, reduced modulo bucket_count.
std::uint64_t ngram_bucket(const std::string& ngram, std::uint64_t bucket_count);

/// Word vectors plus (optionally) hashed n-gram vectors. Only buckets that some
/// training word touched are materialized; absent buckets read as zero.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim, NgramConfig ngrams = {});

  std::size_t dim() const { return dim_; }
  const NgramConfig& ngram_config() const { return ngrams_; }
  std::size_t word_count() const { return words_.size(); }
  std::size_t ngram_row_count() const { return bucket_rows_.size(); }
  const std::vector<std::string>& words() const { return words_; }

  /// Appends a word row; throws when the word exists or dims differ.
  std::size_t add_word(const std::string& word, std::span<const float> row, std::size_t count = 0);
  /// -1 when absent.
  long find(const std::string& word) const;
  std::span<float> word_row(std::size_t i) { return {word_rows_.data() + i * dim_, dim_}; }
  std::span<const float> word_row(std::size_t i) const {
    return {word_rows_.data() + i * dim_, dim_};
  }
  std::size_t count(std::size_t i) const { return counts_.at(i); }

  /// Row for a bucket, created zero-filled on first request. Creating a row
  /// may invalidate spans returned earlier.
  std::span<float> ngram_row(std::uint64_t bucket);
  /// Null span when the bucket was never materialized.
  std::span<const float> find_ngram_row(std::uint64_t bucket) const;

  /// Multiplies every stored value by `alpha`.
  void scale(float alpha);

 private:
  std::size_t dim_ = 0;
  NgramConfig ngrams_;
  std::vector<std::string> words_;
  std::vector<std::size_t> counts_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<float> word_rows_;
  std::unordered_map<std::uint64_t, std::size_t> bucket_rows_;
  std::vector<float> ngram_data_;
};

/// Word row (if in vocabulary) plus the sum of the word's n-gram rows. OOV words
/// get the n-gram sum alone; zero when nothing matches.
std::vector<float> word_vector(const std::string& word, const EmbeddingTable& table,
                               const NgramConfig& cfg);
std::vector<float> word_vector(const std::string& word, const EmbeddingTable& table);

struct SkipgramConfig {
  int window = 5;
  int negatives = 5;
  double learning_rate = 0.05;
  int epochs = 5;
  int min_count = 1;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SkipgramStats {
  /// Mean negative-sampling loss per (center, context) pair for each epoch.
  std::vector<double> epoch_loss;
  std::size_t pairs_per_epoch = 0;
};

/// Negative-sampling skip-gram whose center representation is the composed
/// word vector. Vocabulary is ordered by descending frequency (ties by first
/// occurrence). Single-threaded and deterministic under `cfg.seed`.
EmbeddingTable train_skipgram(std::span<const std::vector<std::string>> corpus,
                              const SkipgramConfig& cfg, const NgramConfig& ncfg, std::size_t dim,
                              SkipgramStats* stats = nullptr);

/// Text format: `<count> <dim>` header, then `word v1 ... vdim` per line with
/// 6 significant digits. Each row written is the word's composed vector, so a
/// table without n-gram rows round-trips its word rows.
void write_vec(std::ostream& out, const EmbeddingTable& table);
void write_vec(const std::string& path, const EmbeddingTable& table);
EmbeddingTable read_vec(std::istream& in);
EmbeddingTable read_vec(const std::string& path);

/// Whitespace-tokenized sentences, one per non-empty line. Lines that look like
/// tagged-corpus rows (contain a tab) contribute their first column instead.
std::vector<std::vector<std::string>> read_token_streams(const std::string& path);

}  // namespace seqtrans
