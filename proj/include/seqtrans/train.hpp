#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "seqtrans/corpus.hpp"
#include "seqtrans/model.hpp"
#include "seqtrans/optim.hpp"

namespace seqtrans {

/// Token-level accuracy counts: correct / total.
struct Metrics {
  std::size_t correct = 0;
  std::size_t total = 0;

  double accuracy() const;
  Metrics& operator+=(const Metrics& o) {
    correct += o.correct;
    total += o.total;
    return *this;
  }
};

/// Binary confusion counts; accuracy = (TP + TN) / (TP + TN + FP + FN).
struct BinaryConfusion {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;

  void add(bool predicted, bool actual);
  double accuracy() const;
};

/// Throws when sequence counts or lengths differ.
Metrics accuracy(std::span<const std::vector<int>> predicted,
                 std::span<const std::vector<int>> gold);

/// Dev quantity that early stopping tracks: primary-head token accuracy, or the
/// mean dev loss (negated so that larger is better).
enum class Monitor { accuracy, loss };

std::string_view monitor_name(Monitor m);
Monitor parse_monitor(std::string_view name);

struct TrainConfig {
  int epochs = 50;
  std::size_t batch_size = 32;
  int patience = 5;
  OptimizerConfig optimizer;
  std::uint64_t seed = 1;
  Monitor monitor = Monitor::accuracy;
  /// Progress lines per epoch; null for silence.
  std::ostream* log = nullptr;
};

/// One language's data. Transfer training takes one entry per language.
struct LanguageData {
  std::vector<Sentence> train;
  std::vector<Sentence> dev;
  std::vector<Sentence> test;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  std::vector<double> dev_accuracy;  // per head

  bool operator==(const EpochRecord&) const = default;
};

struct TrainReport {
  std::vector<std::string> heads;
  std::vector<EpochRecord> epochs;
  int stopped_at = 0;
  int best_epoch = 0;
  /// Early-stopping metric of the snapshot: mean primary-head dev accuracy
  /// over languages, or the negated mean dev loss.
  double best_dev = 0.0;
  /// Snapshot accuracies per head.
  std::vector<double> dev_accuracy;
  std::vector<double> test_accuracy;

  bool operator==(const TrainReport&) const = default;
};

template <typename Real>
Metrics evaluate(const BasicTaggerModel<Real>& model, std::span<const Sentence> sentences,
                 std::size_t language, std::size_t head);

/// Mean of the per-sentence training loss over a data set (eval mode).
template <typename Real>
double mean_loss(BasicTaggerModel<Real>& model, std::span<const Sentence> sentences,
                 std::size_t language);

/// Single/MTL: shuffled minibatches over one language. Transfer: alternating
/// single-sentence updates, one per language per step, over the longer corpus
/// with the shorter one cycling. Dev evaluation and early stopping every epoch;
/// the model is left holding the best snapshot.
template <typename Real>
TrainReport train(BasicTaggerModel<Real>& model, std::span<const LanguageData> data,
                  const TrainConfig& cfg);

/// Tab-separated per-epoch table preceded by `# key=value` header lines.
void write_report(std::ostream& out, const TrainReport& report,
                  std::span<const std::string> header_lines);

}  // namespace seqtrans
