#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "seqtrans/corpus.hpp"
#include "seqtrans/model.hpp"
#include "seqtrans/optim.hpp"
#include "seqtrans/train.hpp"

namespace seqtrans {

/// Flat run configuration. Defaults are the standard BLSTM-CNN-CRF setup:
/// dropout 0.25, LSTM 100, 50 epochs, patience 5, 128-d word vectors, Adam,
/// batch 32, CNN window 3 with 30 filters.
struct RunConfig {
  double dropout = 0.25;
  std::size_t lstm_size = 100;
  int epochs = 50;
  int patience = 5;
  std::size_t embed_dim = 128;
  OptimizerKind optimizer = OptimizerKind::adam;
  std::size_t batch_size = 32;
  std::size_t cnn_window = 3;
  std::size_t cnn_filters = 30;
  std::size_t char_dim = 30;
  double lr = 1e-3;
  double clip = 5.0;
  double adadelta_scale = 1.0;
  bool freeze_embeddings = true;
  std::uint64_t seed = 1;
  Architecture mode = Architecture::single;
  std::vector<Task> tasks{Task::pos};
  Monitor monitor = Monitor::accuracy;

  /// Sets one key from its text value; unknown keys throw a usage error that
  /// lists every valid key.
  void set(std::string_view key, std::string_view value);
  void validate() const;

  /// `key=value` lines for every key, in a fixed order.
  std::vector<std::string> echo() const;
  static const std::vector<std::string>& keys();

  ModelConfig model_config() const;
  TrainConfig train_config() const;
};

/// Applies `key = value` lines (with `#` comments) from a file onto `cfg`.
void apply_config_file(RunConfig& cfg, const std::string& path);
void apply_config_text(RunConfig& cfg, std::string_view text, const std::string& origin);

/// Seed used when neither config nor flags give one: SEQTRANS_SEED, else 1.
std::uint64_t default_seed();

}  // namespace seqtrans
