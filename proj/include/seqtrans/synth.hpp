#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "seqtrans/corpus.hpp"

namespace seqtrans {

/// Parameters of the twin-language generator. Both languages share one latent
/// tag chain and the first `overlap` fraction of their lexicons.
struct SynthSpec {
  std::size_t words_a = 1000;  // lexicon sizes
  std::size_t words_b = 1000;
  std::size_t tags = 8;
  double overlap = 0.8;
  /// Probability that a lexicon entry carries its own tag's suffix; the rest
  /// carry the suffix of a different tag.
  double determinism = 1.0;
  std::size_t min_len = 5;
  std::size_t max_len = 15;
  std::size_t sentences_a = 1000;
  std::size_t sentences_b = 1000;
  /// Also emit gender (from the stem's first consonant) and number (from the
  /// stem's final vowel) columns.
  bool morphology = false;
  std::uint64_t seed = 1;

  void validate() const;
};

struct LexiconEntry {
  std::string form;
  std::string stem;
  int tag = 0;
  bool regular = true;
};

struct SynthOutput {
  Corpus a;
  Corpus b;
  std::vector<LexiconEntry> lexicon_a;
  std::vector<LexiconEntry> lexicon_b;
  /// Suffix of each tag, indexed by tag id.
  std::vector<std::string> suffixes;
};

SynthOutput gen_synthetic(const SynthSpec& spec);

}  // namespace seqtrans
