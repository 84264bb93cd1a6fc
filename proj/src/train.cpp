#include "seqtrans/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "seqtrans/error.hpp"

namespace seqtrans {

double Metrics::accuracy() const {
  return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

void BinaryConfusion::add(bool predicted, bool actual) {
  if (predicted && actual) ++tp;
  else if (!predicted && !actual) ++tn;
  else if (predicted) ++fp;
  else ++fn;
}

double BinaryConfusion::accuracy() const {
  const std::size_t n = tp + tn + fp + fn;
  return n ? static_cast<double>(tp + tn) / static_cast<double>(n) : 0.0;
}

Metrics accuracy(std::span<const std::vector<int>> predicted,
                 std::span<const std::vector<int>> gold) {
  if (predicted.size() != gold.size()) {
    throw Error("data", "prediction and gold sentence counts differ");
  }
  Metrics m;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predicted[i].size() != gold[i].size()) {
      throw Error("data", "length mismatch in sentence " + std::to_string(i + 1));
    }
    for (std::size_t t = 0; t < gold[i].size(); ++t) {
      m.correct += predicted[i][t] == gold[i][t] ? 1 : 0;
    }
    m.total += gold[i].size();
  }
  return m;
}

std::string_view monitor_name(Monitor m) { return m == Monitor::loss ? "loss" : "accuracy"; }

Monitor parse_monitor(std::string_view name) {
  if (name == "accuracy") return Monitor::accuracy;
  if (name == "loss") return Monitor::loss;
  throw Error("config", "unknown monitor '" + std::string(name) + "' (expected accuracy|loss)");
}

template <typename Real>
Metrics evaluate(const BasicTaggerModel<Real>& model, std::span<const Sentence> sentences,
                 std::size_t language, std::size_t head) {
  const auto heads = model.heads_of(language);
  const auto slot = std::find(heads.begin(), heads.end(), head);
  if (slot == heads.end()) throw Error("model", "head does not belong to this language");
  const Task task = model.spec().heads[head].task;
  Metrics m;
  for (const auto& s : sentences) {
    auto it = s.tags.find(task);
    if (it == s.tags.end()) {
      throw Error("data", "sentence lacks " + std::string(task_name(task)) + " tags");
    }
    auto pred = model.predict(s.tokens, language);
    const std::vector<int>& p = pred[static_cast<std::size_t>(slot - heads.begin())];
    m += accuracy(std::span(&p, 1), std::span(&it->second, 1));
  }
  return m;
}

template <typename Real>
double mean_loss(BasicTaggerModel<Real>& model, std::span<const Sentence> sentences,
                 std::size_t language) {
  if (sentences.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : sentences) sum += model.loss(s, language, false, false);
  return sum / static_cast<double>(sentences.size());
}

namespace {

std::vector<std::size_t> shuffled(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

void check_loss(double loss, int epoch, std::size_t step) {
  if (!std::isfinite(loss)) {
    throw Error("numeric", "training diverged: non-finite loss at epoch " +
                               std::to_string(epoch) + ", step " + std::to_string(step));
  }
}

}  // namespace

template <typename Real>
TrainReport train(BasicTaggerModel<Real>& model, std::span<const LanguageData> data,
                  const TrainConfig& cfg) {
  const auto& spec = model.spec();
  const bool transfer = spec.architecture == Architecture::transfer;
  if (data.size() != spec.languages.size()) {
    throw Error("data", "expected data for " + std::to_string(spec.languages.size()) +
                            " language(s), got " + std::to_string(data.size()));
  }
  for (std::size_t l = 0; l < data.size(); ++l) {
    if (data[l].train.empty()) {
      throw Error("data", "no training sentences for language " + spec.languages[l].name);
    }
  }
  if (cfg.epochs < 1) throw Error("config", "epochs must be >= 1");
  if (cfg.batch_size < 1) throw Error("config", "batch_size must be >= 1");

  TrainReport report;
  for (const auto& h : spec.heads) report.heads.push_back(h.name);

  Optimizer<Real> opt(model.params(), cfg.optimizer);
  EarlyStopping stopper(cfg.patience);
  Rng shuffle_rng = make_rng(cfg.seed, "shuffle");
  auto snapshot = model.params().snapshot();

  auto dev_scores = [&](std::vector<double>& per_head) {
    per_head.assign(spec.heads.size(), 0.0);
    double primary = 0.0;
    std::size_t languages_with_dev = 0;
    for (std::size_t l = 0; l < data.size(); ++l) {
      for (std::size_t h : model.heads_of(l)) {
        per_head[h] = evaluate(model, std::span<const Sentence>(data[l].dev), l, h).accuracy();
      }
      if (!data[l].dev.empty()) {
        primary += per_head[model.primary_head(l)];
        ++languages_with_dev;
      }
    }
    if (cfg.monitor == Monitor::loss) {
      double loss = 0.0;
      for (std::size_t l = 0; l < data.size(); ++l) {
        if (!data[l].dev.empty()) loss += mean_loss(model, std::span<const Sentence>(data[l].dev), l);
      }
      return languages_with_dev ? -loss / static_cast<double>(languages_with_dev) : 0.0;
    }
    return languages_with_dev ? primary / static_cast<double>(languages_with_dev) : 0.0;
  };

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    std::size_t step = 0;
    if (!transfer) {
      const auto& train_set = data[0].train;
      const auto order = shuffled(train_set.size(), shuffle_rng);
      for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
        const std::size_t end = std::min(order.size(), start + cfg.batch_size);
        const auto scale = static_cast<Real>(1.0 / static_cast<double>(end - start));
        model.params().zero_grad();
        for (std::size_t i = start; i < end; ++i) {
          const double l = model.loss(train_set[order[i]], 0, true, true, scale);
          check_loss(l, epoch, step);
          loss_sum += l;
          ++loss_count;
        }
        opt.step(model.params());
        ++step;
      }
    } else {
      std::size_t longest = 0;
      std::vector<std::vector<std::size_t>> orders;
      for (const auto& d : data) {
        longest = std::max(longest, d.train.size());
        orders.push_back(shuffled(d.train.size(), shuffle_rng));
      }
      for (std::size_t i = 0; i < longest; ++i) {
        for (std::size_t l = 0; l < data.size(); ++l) {
          auto& order = orders[l];
          if (i > 0 && i % order.size() == 0) {
            order = shuffled(order.size(), shuffle_rng);  // shorter corpus wraps
          }
          model.params().zero_grad();
          const double loss = model.loss(data[l].train[order[i % order.size()]], l, true, true);
          check_loss(loss, epoch, step);
          loss_sum += loss;
          ++loss_count;
          opt.step(model.params());
          ++step;
        }
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(std::max<std::size_t>(loss_count, 1));
    const double metric = dev_scores(rec.dev_accuracy);
    report.epochs.push_back(rec);
    report.stopped_at = epoch;

    const auto decision = stopper.update(metric);
    if (decision.improved) snapshot = model.params().snapshot();
    if (cfg.log) {
      char line[160];
      std::snprintf(line, sizeof line, "epoch %d  loss %.5f  dev %.4f%s\n", epoch, rec.train_loss,
                    metric, decision.improved ? "  *" : "");
      *cfg.log << line << std::flush;
    }
    if (decision.stop) break;
  }

  model.params().restore(snapshot);
  report.best_epoch = stopper.best_epoch();
  report.best_dev = stopper.best();
  report.dev_accuracy.assign(spec.heads.size(), 0.0);
  report.test_accuracy.assign(spec.heads.size(), 0.0);
  for (std::size_t l = 0; l < data.size(); ++l) {
    for (std::size_t h : model.heads_of(l)) {
      report.dev_accuracy[h] =
          evaluate(model, std::span<const Sentence>(data[l].dev), l, h).accuracy();
      report.test_accuracy[h] =
          evaluate(model, std::span<const Sentence>(data[l].test), l, h).accuracy();
    }
  }
  return report;
}

void write_report(std::ostream& out, const TrainReport& report,
                  std::span<const std::string> header_lines) {
  for (const auto& line : header_lines) out << "# " << line << '\n';
  out << "epoch\ttrain_loss";
  for (const auto& h : report.heads) out << "\tdev_acc_" << h;
  out << '\n';
  char buf[64];
  for (const auto& e : report.epochs) {
    out << e.epoch;
    std::snprintf(buf, sizeof buf, "\t%.6f", e.train_loss);
    out << buf;
    for (double a : e.dev_accuracy) {
      std::snprintf(buf, sizeof buf, "\t%.6f", a);
      out << buf;
    }
    out << '\n';
  }
  out << "# stopped_at=" << report.stopped_at << " best_epoch=" << report.best_epoch << '\n';
  for (std::size_t h = 0; h < report.heads.size(); ++h) {
    std::snprintf(buf, sizeof buf, "dev=%.6f test=%.6f", report.dev_accuracy[h],
                  report.test_accuracy[h]);
    out << "# snapshot " << report.heads[h] << ' ' << buf << '\n';
  }
}

#define SEQTRANS_INSTANTIATE(Real)                                                          \
  template Metrics evaluate<Real>(const BasicTaggerModel<Real>&, std::span<const Sentence>, \
                                  std::size_t, std::size_t);                                \
  template double mean_loss<Real>(BasicTaggerModel<Real>&, std::span<const Sentence>,       \
                                  std::size_t);                                             \
  template TrainReport train<Real>(BasicTaggerModel<Real>&, std::span<const LanguageData>,  \
                                   const TrainConfig&);

SEQTRANS_INSTANTIATE(float)
SEQTRANS_INSTANTIATE(double)

#undef SEQTRANS_INSTANTIATE

}  // namespace seqtrans
