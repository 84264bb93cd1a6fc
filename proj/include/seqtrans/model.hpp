#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "seqtrans/corpus.hpp"
#include "seqtrans/crf.hpp"
#include "seqtrans/embeddings.hpp"
#include "seqtrans/layers.hpp"
#include "seqtrans/tensor.hpp"

namespace seqtrans {

enum class Architecture { single, mtl, transfer };

std::string_view architecture_name(Architecture a);
Architecture parse_architecture(std::string_view name);

/// Layer sizes and regularization shared by all three architectures.
struct ModelConfig {
  std::size_t word_dim = 128;
  std::size_t char_dim = 30;
  std::size_t cnn_window = 3;
  std::size_t cnn_filters = 30;
  std::size_t lstm_size = 100;
  double dropout = 0.25;
  bool freeze_embeddings = true;
  /// Give the single-task head its own BLSTM above the shared one, matching
  /// the depth of an MTL head.
  bool head_lstm = false;
  std::uint64_t seed = 1;

  std::size_t encoder_width() const { return word_dim + cnn_filters; }
  void validate() const;
};

struct LanguageSpec {
  std::string name;
  Vocabulary vocab;  // word index; characters come from ModelSpec::chars
};

struct HeadSpec {
  std::string name;
  Task task = Task::pos;
  std::size_t language = 0;
  TagSet tags;
  bool private_lstm = false;
  double weight = 1.0;
};

/// Everything needed to rebuild a model's parameter layout.
struct ModelSpec {
  Architecture architecture = Architecture::single;
  ModelConfig config;
  Vocabulary chars;  // shared character inventory (word part unused)
  std::vector<LanguageSpec> languages;
  std::vector<HeadSpec> heads;
};

/// Char-CNN + word embedding encoders (one per language), a shared BLSTM, and
/// CRF heads (optionally with a private BLSTM each).
template <typename Real>
class BasicTaggerModel {
 public:
  explicit BasicTaggerModel(ModelSpec spec);

  const ModelSpec& spec() const { return spec_; }
  ParamStore<Real>& params() { return params_; }
  const ParamStore<Real>& params() const { return params_; }
  std::size_t shared_input_width() const { return spec_.config.encoder_width(); }

  /// Fills a language's word rows from a pre-trained table (composed vectors);
  /// PAD and UNK rows stay zero.
  void set_word_table(std::size_t language, const EmbeddingTable& table);

  std::vector<std::size_t> heads_of(std::size_t language) const;
  /// First POS head of a language, else its first head.
  std::size_t primary_head(std::size_t language) const;
  void set_head_weight(std::size_t head, double weight) { spec_.heads.at(head).weight = weight; }

  /// Weighted sum of the language's head losses for one sentence. With
  /// `backward`, gradients of (scale * loss) are added to the parameter grads.
  /// Heads with weight 0 are skipped entirely.
  Real loss(const Sentence& sentence, std::size_t language, bool train, bool backward,
            Real scale = Real(1));

  /// Viterbi tags for every head of the language, indexed like heads_of().
  std::vector<std::vector<int>> predict(std::span<const std::string> tokens,
                                        std::size_t language) const;

  /// Named dropout stream; created from the model seed on first use.
  Rng& dropout_stream(const std::string& site);

 private:
  struct Encoder {
    std::size_t words = 0;  // [V x word_dim]
    CharCnn<Real> cnn;
  };
  struct Head {
    Blstm<Real> lstm;
    Linear<Real> proj;
    Crf<Real> crf;
  };
  struct EncoderCache {
    std::vector<int> word_ids;
    std::vector<typename CharCnn<Real>::Cache> cnn;
    std::vector<Real> mask;
  };

  void encode(std::span<const std::string> tokens, std::size_t language, bool train,
              Matrix<Real>& x, EncoderCache& cache);
  void encode_eval(std::span<const std::string> tokens, std::size_t language,
                   Matrix<Real>& x) const;

  ModelSpec spec_;
  ParamStore<Real> params_;
  std::size_t char_table_ = 0;
  std::vector<Encoder> encoders_;
  Blstm<Real> shared_;
  std::vector<Head> heads_;
  std::unordered_map<std::string, Rng> streams_;
};

using TaggerModel = BasicTaggerModel<float>;

/// CNN(chars) + word embedding -> BLSTM -> CRF for one task.
template <typename Real = float>
BasicTaggerModel<Real> build_single(const ModelConfig& config, const Vocabulary& vocab,
                                    const TagSet& tagset, const EmbeddingTable* word_table,
                                    const std::string& language = "main");

/// Shared encoder and BLSTM, then one BLSTM + CRF per task (pos, gender, number).
template <typename Real = float>
BasicTaggerModel<Real> build_mtl(const ModelConfig& config, const Vocabulary& vocab,
                                 const TagSets& tagsets, const EmbeddingTable* word_table,
                                 const std::string& language = "main");

/// Per-language encoders sharing one character table, a shared BLSTM, then a
/// BLSTM + CRF per language.
template <typename Real = float>
BasicTaggerModel<Real> build_transfer(const ModelConfig& config,
                                      std::span<const std::string> languages,
                                      std::span<const Vocabulary> vocabs,
                                      std::span<const TagSet> tagsets,
                                      std::span<const EmbeddingTable* const> word_tables);

/// Binary model file: magic, version, model layout, then named little-endian float32 tensors.
inline constexpr std::uint32_t kModelFormatVersion = 1;
void save_model(const std::string& path, const TaggerModel& model);
TaggerModel load_model(const std::string& path);
void save_model(std::ostream& out, const TaggerModel& model);
TaggerModel load_model(std::istream& in);

}  // namespace seqtrans
