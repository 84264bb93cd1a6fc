#include "seqtrans/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "seqtrans/error.hpp"
#include "seqtrans/rng.hpp"

namespace seqtrans {

std::string_view task_name(Task task) {
  switch (task) {
    case Task::pos: return "pos";
    case Task::gender: return "gender";
    case Task::number: return "number";
  }
  return "pos";
}

Task parse_task(std::string_view name) {
  if (name == "pos") return Task::pos;
  if (name == "gender") return Task::gender;
  if (name == "number") return Task::number;
  throw Error("config", "unknown task '" + std::string(name) + "' (expected pos|gender|number)");
}

std::vector<Task> parse_task_list(std::string_view list) {
  std::vector<Task> tasks;
  std::size_t start = 0;
  while (start <= list.size()) {
    std::size_t end = list.find(',', start);
    if (end == std::string_view::npos) end = list.size();
    tasks.push_back(parse_task(list.substr(start, end - start)));
    start = end + 1;
  }
  return tasks;
}

int TagSet::intern(const std::string& name) {
  auto it = index_.find(name);
  if (it != index_.end()) return it->second;
  int id = static_cast<int>(names_.size());
  names_.push_back(name);
  index_.emplace(name, id);
  return id;
}

int TagSet::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  while (true) {
    std::size_t end = line.find('\t', start);
    if (end == std::string_view::npos) {
      cols.push_back(line.substr(start));
      break;
    }
    cols.push_back(line.substr(start, end - start));
    start = end + 1;
  }
  return cols;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<Sentence> parse_corpus(std::string_view text, std::span<const Task> tasks,
                                   TagSets& tagsets) {
  if (!is_valid_utf8(text)) throw Error("parse", "input is not valid UTF-8");
  for (Task t : tasks) tagsets.try_emplace(t, TagSet(t));

  std::vector<Sentence> out;
  Sentence current;
  auto flush = [&] {
    if (!current.tokens.empty()) out.push_back(std::move(current));
    current = Sentence{};
  };

  const std::size_t expected = 1 + tasks.size();
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (line.empty()) {
      flush();
      continue;
    }
    if (line.front() == '#') continue;

    auto cols = split_tabs(line);
    if (cols.size() != expected) {
      throw Error("parse", "line " + std::to_string(line_no) + ": expected " +
                               std::to_string(expected) + " columns");
    }
    for (const auto& c : cols) {
      if (c.empty()) {
        throw Error("parse", "line " + std::to_string(line_no) + ": empty column");
      }
    }
    current.tokens.emplace_back(cols[0]);
    for (std::size_t k = 0; k < tasks.size(); ++k) {
      current.tags[tasks[k]].push_back(tagsets[tasks[k]].intern(std::string(cols[k + 1])));
    }
  }
  flush();
  return out;
}

Corpus parse_corpus(std::string_view text, std::span<const Task> tasks) {
  Corpus c;
  c.tasks.assign(tasks.begin(), tasks.end());
  c.sentences = parse_corpus(text, tasks, c.tagsets);
  return c;
}

Corpus read_corpus_file(const std::string& path, std::span<const Task> tasks) {
  return parse_corpus(read_file(path), tasks);
}

void write_corpus(std::ostream& out, std::span<const Sentence> sentences,
                  std::span<const Task> tasks, const TagSets& tagsets) {
  for (const auto& s : sentences) {
    for (std::size_t t = 0; t < s.tokens.size(); ++t) {
      out << s.tokens[t];
      for (Task task : tasks) {
        out << '\t' << tagsets.at(task).name(s.tags.at(task)[t]);
      }
      out << '\n';
    }
    out << '\n';
  }
}

std::string format_corpus(std::span<const Sentence> sentences, std::span<const Task> tasks,
                          const TagSets& tagsets) {
  std::ostringstream ss;
  write_corpus(ss, sentences, tasks, tagsets);
  return ss.str();
}

SplitCorpus split_8_1_1(std::span<const Sentence> sentences, std::uint64_t seed) {
  const std::size_t n = sentences.size();
  if (n < 10) {
    throw Error("data", "need at least 10 sentences to split, got " + std::to_string(n));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(seed, "split");
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t n_train = n * 8 / 10;
  const std::size_t n_dev = n / 10;
  SplitCorpus split;
  split.seed = seed;
  for (std::size_t i = 0; i < n; ++i) {
    const Sentence& s = sentences[order[i]];
    if (i < n_train) {
      split.train.push_back(s);
    } else if (i < n_train + n_dev) {
      split.dev.push_back(s);
    } else {
      split.test.push_back(s);
    }
  }
  return split;
}

namespace {

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xe) return 3;
  if ((lead >> 3) == 0x1e) return 4;
  return 0;
}

}  // namespace

bool is_valid_utf8(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t len = utf8_length(static_cast<unsigned char>(text[i]));
    if (len == 0 || i + len > text.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) >> 6) != 0x2) return false;
    }
    i += len;
  }
  return true;
}

std::vector<std::string> utf8_chars(std::string_view word) {
  std::vector<std::string> chars;
  std::size_t i = 0;
  while (i < word.size()) {
    std::size_t len = utf8_length(static_cast<unsigned char>(word[i]));
    if (len == 0 || i + len > word.size()) len = 1;  // stray byte: keep as-is
    chars.emplace_back(word.substr(i, len));
    i += len;
  }
  return chars;
}

Vocabulary::Vocabulary() {
  for (const char* reserved : {"<pad>", "<unk>"}) {
    word_index_.emplace(reserved, static_cast<int>(words_.size()));
    words_.emplace_back(reserved);
    freq_.push_back(0);
    char_index_.emplace(reserved, static_cast<int>(chars_.size()));
    chars_.emplace_back(reserved);
  }
}

void Vocabulary::add_word(const std::string& word) {
  auto [it, inserted] = word_index_.try_emplace(word, static_cast<int>(words_.size()));
  if (inserted) {
    words_.push_back(word);
    freq_.push_back(0);
  }
  ++freq_[static_cast<std::size_t>(it->second)];
}

void Vocabulary::add_chars_of(const std::string& word) {
  for (auto& ch : utf8_chars(word)) add_char(ch);
}

void Vocabulary::add_char(const std::string& ch) {
  if (char_index_.try_emplace(ch, static_cast<int>(chars_.size())).second) {
    chars_.push_back(ch);
  }
}

void Vocabulary::merge_chars(const Vocabulary& other) {
  for (std::size_t i = 2; i < other.chars_.size(); ++i) add_char(other.chars_[i]);
}

void Vocabulary::add_sentences(std::span<const Sentence> sentences) {
  for (const auto& s : sentences) {
    for (const auto& tok : s.tokens) {
      add_word(tok);
      add_chars_of(tok);
    }
  }
}

int Vocabulary::word_id(const std::string& word) const {
  auto it = word_index_.find(word);
  // Reserved spellings are not corpus symbols.
  if (it == word_index_.end() || it->second < 2) return kUnk;
  return it->second;
}

int Vocabulary::char_id(const std::string& ch) const {
  auto it = char_index_.find(ch);
  if (it == char_index_.end() || it->second < 2) return kUnk;
  return it->second;
}

std::vector<int> Vocabulary::char_ids(const std::string& word) const {
  std::vector<int> ids;
  for (const auto& ch : utf8_chars(word)) ids.push_back(char_id(ch));
  return ids;
}

Vocabulary Vocabulary::from_lists(std::vector<std::string> words, std::vector<std::string> chars) {
  if (words.size() < 2 || chars.size() < 2) {
    throw Error("model", "vocabulary lists must include the two reserved entries");
  }
  Vocabulary v;
  for (std::size_t i = 2; i < words.size(); ++i) {
    if (!v.word_index_.try_emplace(words[i], static_cast<int>(v.words_.size())).second) {
      throw Error("model", "duplicate vocabulary word '" + words[i] + "'");
    }
    v.words_.push_back(words[i]);
    v.freq_.push_back(0);
  }
  for (std::size_t i = 2; i < chars.size(); ++i) {
    if (!v.char_index_.try_emplace(chars[i], static_cast<int>(v.chars_.size())).second) {
      throw Error("model", "duplicate vocabulary character '" + chars[i] + "'");
    }
    v.chars_.push_back(chars[i]);
  }
  return v;
}

PaddedBatch pad_batch(std::span<const Sentence> sentences, const Vocabulary& vocab,
                      std::size_t max_word_len) {
  PaddedBatch b;
  b.batch = sentences.size();
  std::vector<std::vector<std::vector<int>>> chars(sentences.size());
  std::size_t wmax = 0;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    b.max_len = std::max(b.max_len, sentences[i].size());
    for (const auto& tok : sentences[i].tokens) {
      chars[i].push_back(vocab.char_ids(tok));
      wmax = std::max(wmax, chars[i].back().size());
    }
  }
  b.max_word_len = max_word_len > 0 ? max_word_len : wmax;
  b.word_ids.assign(b.batch * b.max_len, Vocabulary::kPad);
  b.mask.assign(b.batch * b.max_len, 0);
  b.char_ids.assign(b.batch * b.max_len * b.max_word_len, Vocabulary::kPad);
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    for (std::size_t t = 0; t < sentences[i].size(); ++t) {
      b.word_ids[i * b.max_len + t] = vocab.word_id(sentences[i].tokens[t]);
      b.mask[i * b.max_len + t] = 1;
      const auto& ids = chars[i][t];
      const std::size_t n = std::min(ids.size(), b.max_word_len);
      std::copy_n(ids.begin(), n, b.char_ids.begin() + static_cast<std::ptrdiff_t>(
                                                        (i * b.max_len + t) * b.max_word_len));
    }
  }
  return b;
}

}  // namespace seqtrans
