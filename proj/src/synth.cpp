#include "seqtrans/synth.hpp"

#include <algorithm>
#include <random>
#include <unordered_set>

#include "seqtrans/error.hpp"
#include "seqtrans/rng.hpp"

namespace seqtrans {

namespace {

constexpr std::string_view kConsonants = "ptkbdgmnslrvhjwz";
constexpr std::string_view kVowels = "aeiou";

std::string syllable(Rng& rng) {
  std::uniform_int_distribution<std::size_t> c(0, kConsonants.size() - 1);
  std::uniform_int_distribution<std::size_t> v(0, kVowels.size() - 1);
  return {kConsonants[c(rng)], kVowels[v(rng)]};
}

std::string gender_of(const std::string& stem) {
  static const char* const names[] = {"m", "f", "n"};
  return names[kConsonants.find(stem.front()) % 3];
}

std::string number_of(const std::string& stem) {
  const char v = stem.back();
  return (v == 'a' || v == 'e') ? "sg" : "pl";
}

class LexiconBuilder {
 public:
  LexiconBuilder(const SynthSpec& spec, const std::vector<std::string>& suffixes, Rng& rng)
      : spec_(spec), suffixes_(suffixes), rng_(rng) {}

  LexiconEntry make(int tag) {
    LexiconEntry e;
    e.tag = tag;
    std::bernoulli_distribution regular(spec_.determinism);
    e.regular = regular(rng_);
    int suffix_tag = tag;
    if (!e.regular) {
      std::uniform_int_distribution<int> other(0, static_cast<int>(spec_.tags) - 2);
      suffix_tag = other(rng_);
      if (suffix_tag >= tag) ++suffix_tag;
    }
    std::uniform_int_distribution<int> syllables(1, 3);
    for (;;) {
      std::string stem;
      const int n = syllables(rng_);
      for (int i = 0; i < n; ++i) stem += syllable(rng_);
      std::string form = stem + suffixes_[static_cast<std::size_t>(suffix_tag)];
      if (used_.insert(form).second) {
        e.stem = std::move(stem);
        e.form = std::move(form);
        return e;
      }
    }
  }

 private:
  const SynthSpec& spec_;
  const std::vector<std::string>& suffixes_;
  Rng& rng_;
  std::unordered_set<std::string> used_;
};

struct TagChain {
  std::vector<std::discrete_distribution<int>> rows;
  std::discrete_distribution<int> start;
};

TagChain make_chain(std::size_t k, Rng& rng) {
  TagChain chain;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<double> w(k);
    for (auto& x : w) x = 0.05 + u(rng) * u(rng);
    chain.rows.emplace_back(w.begin(), w.end());
  }
  std::vector<double> s(k, 1.0);
  chain.start = std::discrete_distribution<int>(s.begin(), s.end());
  return chain;
}

Corpus sample_corpus(const SynthSpec& spec, const std::vector<LexiconEntry>& lexicon,
                     TagChain& chain, std::size_t n_sentences, Rng& rng,
                     const TagSets& tagsets) {
  // Words of each tag in lexicon order; rank r is drawn with weight 1/(r+1).
  std::vector<std::vector<std::size_t>> by_tag(spec.tags);
  for (std::size_t i = 0; i < lexicon.size(); ++i) {
    by_tag[static_cast<std::size_t>(lexicon[i].tag)].push_back(i);
  }
  std::vector<std::discrete_distribution<std::size_t>> zipf;
  for (const auto& ids : by_tag) {
    std::vector<double> w(ids.size());
    for (std::size_t r = 0; r < w.size(); ++r) w[r] = 1.0 / static_cast<double>(r + 1);
    zipf.emplace_back(w.begin(), w.end());
  }
  // Every entry is emitted once before Zipf sampling takes over, so corpora
  // long enough cover their whole lexicon.
  std::vector<std::size_t> unseen_next(spec.tags, 0);

  Corpus corpus;
  corpus.tasks = {Task::pos};
  if (spec.morphology) {
    corpus.tasks.push_back(Task::gender);
    corpus.tasks.push_back(Task::number);
  }
  corpus.tagsets = tagsets;
  std::uniform_int_distribution<std::size_t> length(spec.min_len, spec.max_len);
  for (std::size_t s = 0; s < n_sentences; ++s) {
    Sentence sent;
    const std::size_t len = length(rng);
    int tag = chain.start(rng);
    for (std::size_t t = 0; t < len; ++t) {
      if (t > 0) tag = chain.rows[static_cast<std::size_t>(tag)](rng);
      const auto ti = static_cast<std::size_t>(tag);
      const auto& ids = by_tag[ti];
      if (ids.empty()) throw Error("config", "synthetic lexicon has no word for a tag");
      std::size_t pick;
      if (unseen_next[ti] < ids.size()) {
        pick = ids[unseen_next[ti]++];
      } else {
        pick = ids[zipf[ti](rng)];
      }
      const LexiconEntry& e = lexicon[pick];
      sent.tokens.push_back(e.form);
      sent.tags[Task::pos].push_back(e.tag);
      if (spec.morphology) {
        sent.tags[Task::gender].push_back(tagsets.at(Task::gender).find(gender_of(e.stem)));
        sent.tags[Task::number].push_back(tagsets.at(Task::number).find(number_of(e.stem)));
      }
    }
    corpus.sentences.push_back(std::move(sent));
  }
  return corpus;
}

}  // namespace

void SynthSpec::validate() const {
  if (!(overlap >= 0.0 && overlap <= 1.0)) throw Error("config", "overlap must be in [0, 1]");
  if (!(determinism >= 0.0 && determinism <= 1.0)) {
    throw Error("config", "determinism must be in [0, 1]");
  }
  if (tags < 2) throw Error("config", "at least 2 tags are required");
  if (tags > kConsonants.size() * kVowels.size()) {
    throw Error("config", "too many tags for the suffix inventory");
  }
  if (words_a < tags || words_b < tags) {
    throw Error("config", "each lexicon needs at least one word per tag");
  }
  if (min_len < 1 || max_len < min_len) throw Error("config", "invalid sentence length range");
}

SynthOutput gen_synthetic(const SynthSpec& spec) {
  spec.validate();
  SynthOutput out;

  Rng lex_rng = make_rng(spec.seed, "synth/lexicon");
  std::vector<std::string> all_suffixes;
  for (char c : kConsonants) {
    for (char v : kVowels) all_suffixes.push_back(std::string{c, v});
  }
  std::shuffle(all_suffixes.begin(), all_suffixes.end(), lex_rng);
  out.suffixes.assign(all_suffixes.begin(),
                      all_suffixes.begin() + static_cast<std::ptrdiff_t>(spec.tags));

  LexiconBuilder builder(spec, out.suffixes, lex_rng);
  for (std::size_t i = 0; i < spec.words_a; ++i) {
    out.lexicon_a.push_back(builder.make(static_cast<int>(i % spec.tags)));
  }
  const auto shared = static_cast<std::size_t>(
      spec.overlap * static_cast<double>(std::min(spec.words_a, spec.words_b)) + 0.5);
  for (std::size_t i = 0; i < spec.words_b; ++i) {
    if (i < shared) {
      out.lexicon_b.push_back(out.lexicon_a[i]);
    } else {
      out.lexicon_b.push_back(builder.make(static_cast<int>(i % spec.tags)));
    }
  }

  TagSets tagsets;
  tagsets.emplace(Task::pos, TagSet(Task::pos));
  for (std::size_t k = 0; k < spec.tags; ++k) tagsets[Task::pos].intern("T" + std::to_string(k));
  if (spec.morphology) {
    tagsets.emplace(Task::gender, TagSet(Task::gender));
    for (const char* g : {"m", "f", "n"}) tagsets[Task::gender].intern(g);
    tagsets.emplace(Task::number, TagSet(Task::number));
    for (const char* n : {"sg", "pl"}) tagsets[Task::number].intern(n);
  }

  Rng chain_rng = make_rng(spec.seed, "synth/chain");
  TagChain chain = make_chain(spec.tags, chain_rng);
  Rng rng_a = make_rng(spec.seed, "synth/sentences/a");
  Rng rng_b = make_rng(spec.seed, "synth/sentences/b");
  out.a = sample_corpus(spec, out.lexicon_a, chain, spec.sentences_a, rng_a, tagsets);
  out.b = sample_corpus(spec, out.lexicon_b, chain, spec.sentences_b, rng_b, tagsets);
  return out;
}

}  // namespace seqtrans
