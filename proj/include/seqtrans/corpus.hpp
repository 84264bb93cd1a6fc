#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace seqtrans {

enum class Task { pos, gender, number };

std::string_view task_name(Task task);
Task parse_task(std::string_view name);
/// Comma-separated list, e.g. "pos,gender".
std::vector<Task> parse_task_list(std::string_view list);

/// Ordered set of tag names for one task; ids are 0..K-1 in first-seen order.
class TagSet {
 public:
  TagSet() = default;
  explicit TagSet(Task task) : task_(task) {}

  Task task() const { return task_; }
  int intern(const std::string& name);
  /// -1 when the name is unknown.
  int find(const std::string& name) const;
  const std::string& name(int id) const { return names_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }

 private:
  Task task_ = Task::pos;
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

using TagSets = std::map<Task, TagSet>;

struct Sentence {
  std::vector<std::string> tokens;
  std::map<Task, std::vector<int>> tags;

  std::size_t size() const { return tokens.size(); }
  bool operator==(const Sentence&) const = default;
};

struct Corpus {
  std::vector<Task> tasks;
  std::vector<Sentence> sentences;
  TagSets tagsets;
};

/// Parses tab-separated `token<TAB>tag1[<TAB>tag2...]` lines with blank-line
/// sentence boundaries. Tags are interned into `tagsets`, which may already
/// hold entries from a previously parsed file.
std::vector<Sentence> parse_corpus(std::string_view text, std::span<const Task> tasks,
                                   TagSets& tagsets);
Corpus parse_corpus(std::string_view text, std::span<const Task> tasks);
Corpus read_corpus_file(const std::string& path, std::span<const Task> tasks);

void write_corpus(std::ostream& out, std::span<const Sentence> sentences,
                  std::span<const Task> tasks, const TagSets& tagsets);
std::string format_corpus(std::span<const Sentence> sentences, std::span<const Task> tasks,
                          const TagSets& tagsets);

struct SplitCorpus {
  std::vector<Sentence> train;
  std::vector<Sentence> dev;
  std::vector<Sentence> test;
  std::uint64_t seed = 0;
};

/// Seeded shuffle, then contiguous slices of floor(0.8n), floor(0.1n) and the remainder.
SplitCorpus split_8_1_1(std::span<const Sentence> sentences, std::uint64_t seed);

/// Splits a UTF-8 string into code points (each returned as its byte sequence).
std::vector<std::string> utf8_chars(std::string_view word);
bool is_valid_utf8(std::string_view text);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  Vocabulary();

  void add_sentences(std::span<const Sentence> sentences);
  void add_word(const std::string& word);
  void add_chars_of(const std::string& word);
  void add_char(const std::string& ch);
  /// Appends the other vocabulary's characters that are missing here.
  void merge_chars(const Vocabulary& other);

  int word_id(const std::string& word) const;
  int char_id(const std::string& ch) const;
  std::vector<int> char_ids(const std::string& word) const;

  std::size_t word_count() const { return words_.size(); }
  std::size_t char_count() const { return chars_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  const std::vector<std::string>& chars() const { return chars_; }
  std::size_t frequency(int word_id) const { return freq_.at(static_cast<std::size_t>(word_id)); }

  /// Rebuilds a vocabulary from stored symbol lists (index order preserved).
  static Vocabulary from_lists(std::vector<std::string> words, std::vector<std::string> chars);

 private:
  std::vector<std::string> words_;
  std::vector<std::size_t> freq_;
  std::unordered_map<std::string, int> word_index_;
  std::vector<std::string> chars_;
  std::unordered_map<std::string, int> char_index_;
};

struct PaddedBatch {
  std::size_t batch = 0;
  std::size_t max_len = 0;       // Lmax
  std::size_t max_word_len = 0;  // Wmax
  std::vector<int> word_ids;     // [B x Lmax]
  std::vector<int> char_ids;     // [B x Lmax x Wmax]
  std::vector<std::uint8_t> mask;  // [B x Lmax]

  int word(std::size_t b, std::size_t t) const { return word_ids[b * max_len + t]; }
  int chr(std::size_t b, std::size_t t, std::size_t c) const {
    return char_ids[(b * max_len + t) * max_word_len + c];
  }
  bool real(std::size_t b, std::size_t t) const { return mask[b * max_len + t] != 0; }
};

/// Pads a batch with PAD=0. `max_word_len` of 0 derives Wmax from the batch;
/// a positive value truncates longer words.
PaddedBatch pad_batch(std::span<const Sentence> sentences, const Vocabulary& vocab,
                      std::size_t max_word_len = 0);

}  // namespace seqtrans
