#include "seqtrans/commands.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "seqtrans/config.hpp"
#include "seqtrans/corpus.hpp"
#include "seqtrans/embeddings.hpp"
#include "seqtrans/error.hpp"
#include "seqtrans/model.hpp"
#include "seqtrans/synth.hpp"
#include "seqtrans/train.hpp"
#include "seqtrans/vecmap.hpp"

namespace seqtrans {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", "cannot write " + path);
  return out;
}

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

// ---------------------------------------------------------------- train-embeddings

struct EmbeddingArgs {
  std::vector<std::string> inputs;
  std::string out;
  std::size_t dim = 128;
  SkipgramConfig sg;
  NgramConfig ng;
  std::optional<std::uint64_t> seed;
};

void cmd_train_embeddings(const EmbeddingArgs& a, std::ostream& out) {
  std::vector<std::vector<std::string>> streams;
  for (const auto& path : a.inputs) {
    auto s = read_token_streams(path);
    streams.insert(streams.end(), std::make_move_iterator(s.begin()),
                   std::make_move_iterator(s.end()));
  }
  SkipgramConfig sg = a.sg;
  sg.seed = a.seed.value_or(default_seed());
  SkipgramStats stats;
  const EmbeddingTable table = train_skipgram(streams, sg, a.ng, a.dim, &stats);
  write_vec(a.out, table);
  out << "words=" << table.word_count() << " dim=" << table.dim()
      << " ngram_rows=" << table.ngram_row_count() << " seed=" << sg.seed << '\n';
  for (std::size_t e = 0; e < stats.epoch_loss.size(); ++e) {
    out << "epoch " << (e + 1) << " loss " << stats.epoch_loss[e] << '\n';
  }
}

// ---------------------------------------------------------------- vecmap

struct VecmapArgs {
  std::string src, trg, out_src, out_trg;
  vecmap::SelfLearningConfig cfg;
  bool no_reweight = false;
  std::optional<std::uint64_t> seed;
};

vecmap::Matrix to_matrix(const EmbeddingTable& t) {
  vecmap::Matrix m(static_cast<Eigen::Index>(t.word_count()), static_cast<Eigen::Index>(t.dim()));
  for (std::size_t i = 0; i < t.word_count(); ++i) {
    const auto row = t.word_row(i);
    for (std::size_t j = 0; j < t.dim(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
    }
  }
  return m;
}

EmbeddingTable from_matrix(const vecmap::Matrix& m, const EmbeddingTable& like) {
  EmbeddingTable t(static_cast<std::size_t>(m.cols()));
  std::vector<float> row(static_cast<std::size_t>(m.cols()));
  for (std::size_t i = 0; i < like.word_count(); ++i) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      row[j] = static_cast<float>(m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    t.add_word(like.words()[i], row, like.count(i));
  }
  return t;
}

void cmd_vecmap(const VecmapArgs& a, std::ostream& out) {
  const EmbeddingTable src = read_vec(a.src);
  const EmbeddingTable trg = read_vec(a.trg);
  if (src.dim() != trg.dim()) {
    throw Error("data", "embedding dimensions differ: " + std::to_string(src.dim()) + " vs " +
                            std::to_string(trg.dim()));
  }
  vecmap::SelfLearningConfig cfg = a.cfg;
  cfg.seed = a.seed.value_or(default_seed());
  const auto result = vecmap::map_embeddings(to_matrix(src), to_matrix(trg), cfg);
  const vecmap::MappedSpaces mapped =
      a.no_reweight ? vecmap::apply_mapping(result.state) : result.mapped;
  write_vec(a.out_src, from_matrix(mapped.x, src));
  write_vec(a.out_trg, from_matrix(mapped.z, trg));
  out << "iterations=" << result.state.iteration
      << " objective=" << result.state.best_objective
      << " dictionary_pairs=" << result.state.dict.target.size() << '\n';
  if (result.state.rank_deficient_seen) {
    out << "warning: rank-deficient cross-covariance during self-learning\n";
  }
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string config_path;
  std::vector<std::string> sets;  // key=value overrides
  std::map<std::string, std::string> flags;  // config key -> value from dedicated flags
  std::string mode_flag;
  bool unfreeze = false;
  std::vector<std::string> corpora, trains, devs, tests, embeddings, langs;
  std::string model_out, report_out;
  bool quiet = false;
};

RunConfig resolve_config(const TrainArgs& a) {
  RunConfig cfg;
  cfg.seed = default_seed();
  if (!a.config_path.empty()) apply_config_file(cfg, a.config_path);
  for (const auto& kv : a.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error("usage", "--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  for (const auto& [k, v] : a.flags) cfg.set(k, v);
  if (!a.mode_flag.empty()) cfg.set("mode", a.mode_flag);
  if (a.unfreeze) cfg.freeze_embeddings = false;
  cfg.validate();
  return cfg;
}

struct LoadedLanguage {
  std::string name;
  LanguageData data;
  TagSets tagsets;
  Vocabulary vocab;
  EmbeddingTable table;
};

std::vector<LoadedLanguage> load_languages(const TrainArgs& a, const RunConfig& cfg,
                                           std::span<const Task> tasks, std::size_t count,
                                           std::ostream& out) {
  const bool explicit_splits = !a.trains.empty();
  const std::size_t available = explicit_splits ? a.trains.size() : a.corpora.size();
  if (available < count) {
    throw Error("usage", "mode " + std::string(architecture_name(cfg.mode)) + " needs " +
                             std::to_string(count) + " corpora (--corpus or --train/--dev/--test)");
  }
  if (explicit_splits && (a.devs.size() < count || a.tests.size() < count)) {
    throw Error("usage", "--train, --dev and --test must be given once per language");
  }
  std::vector<LoadedLanguage> langs(count);
  for (std::size_t l = 0; l < count; ++l) {
    LoadedLanguage& lang = langs[l];
    if (l < a.langs.size()) {
      lang.name = a.langs[l];
    } else {
      lang.name = count == 1 ? "main" : "lang" + std::to_string(l);
    }
    if (explicit_splits) {
      Corpus tr = read_corpus_file(a.trains[l], tasks);
      lang.tagsets = tr.tagsets;
      lang.data.train = std::move(tr.sentences);
      const auto read_more = [&](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error("io", "cannot open corpus " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse_corpus(ss.str(), tasks, lang.tagsets);
      };
      lang.data.dev = read_more(a.devs[l]);
      lang.data.test = read_more(a.tests[l]);
    } else {
      Corpus c = read_corpus_file(a.corpora[l], tasks);
      lang.tagsets = c.tagsets;
      SplitCorpus split = split_8_1_1(c.sentences, cfg.seed);
      lang.data.train = std::move(split.train);
      lang.data.dev = std::move(split.dev);
      lang.data.test = std::move(split.test);
    }
    if (lang.data.train.empty() || lang.data.dev.empty()) {
      throw Error("data", "language " + lang.name + " has an empty train or dev split");
    }
    lang.vocab.add_sentences(lang.data.train);
    lang.vocab.add_sentences(lang.data.dev);
    lang.vocab.add_sentences(lang.data.test);

    if (l < a.embeddings.size()) {
      lang.table = read_vec(a.embeddings[l]);
    } else {
      std::vector<std::vector<std::string>> streams;
      for (const auto& s : lang.data.train) streams.push_back(s.tokens);
      SkipgramConfig sg;
      sg.seed = cfg.seed;
      lang.table = train_skipgram(streams, sg, NgramConfig{}, cfg.embed_dim);
      out << "trained " << cfg.embed_dim << "-d embeddings for " << lang.name << " on "
          << streams.size() << " training sentences\n";
    }
    out << "language " << lang.name << ": train=" << lang.data.train.size()
        << " dev=" << lang.data.dev.size() << " test=" << lang.data.test.size()
        << " words=" << lang.vocab.word_count() << '\n';
  }
  return langs;
}

void cmd_train(const TrainArgs& a, std::ostream& out) {
  const RunConfig cfg = resolve_config(a);
  const auto echo = cfg.echo();
  out << "effective config:\n";
  for (const auto& line : echo) out << "  " << line << '\n';

  const ModelConfig mcfg = cfg.model_config();
  std::vector<Task> tasks;
  std::size_t n_lang = 1;
  switch (cfg.mode) {
    case Architecture::single:
      tasks = {cfg.tasks.front()};
      break;
    case Architecture::mtl:
      tasks = {Task::pos, Task::gender, Task::number};
      break;
    case Architecture::transfer:
      tasks = {cfg.tasks.front()};
      n_lang = std::max<std::size_t>(2, std::max(a.corpora.size(), a.trains.size()));
      break;
  }
  std::vector<LoadedLanguage> langs = load_languages(a, cfg, tasks, n_lang, out);

  std::unique_ptr<TaggerModel> model;
  switch (cfg.mode) {
    case Architecture::single:
      model = std::make_unique<TaggerModel>(build_single<float>(
          mcfg, langs[0].vocab, langs[0].tagsets.at(tasks[0]), &langs[0].table, langs[0].name));
      break;
    case Architecture::mtl:
      model = std::make_unique<TaggerModel>(
          build_mtl<float>(mcfg, langs[0].vocab, langs[0].tagsets, &langs[0].table, langs[0].name));
      break;
    case Architecture::transfer: {
      std::vector<std::string> names;
      std::vector<Vocabulary> vocabs;
      std::vector<TagSet> tagsets;
      std::vector<const EmbeddingTable*> tables;
      for (const auto& l : langs) {
        names.push_back(l.name);
        vocabs.push_back(l.vocab);
        tagsets.push_back(l.tagsets.at(tasks[0]));
        tables.push_back(&l.table);
      }
      model = std::make_unique<TaggerModel>(
          build_transfer<float>(mcfg, names, vocabs, tagsets, tables));
      break;
    }
  }

  std::vector<LanguageData> data;
  for (auto& l : langs) data.push_back(std::move(l.data));
  TrainConfig tcfg = cfg.train_config();
  tcfg.log = a.quiet ? nullptr : &out;
  const TrainReport report = train(*model, data, tcfg);

  if (!a.report_out.empty()) {
    auto rep = open_out(a.report_out);
    write_report(rep, report, echo);
  }
  if (!a.model_out.empty()) save_model(a.model_out, *model);

  char buf[96];
  std::snprintf(buf, sizeof buf, "stopped_at=%d best_epoch=%d best_dev=%.6f", report.stopped_at,
                report.best_epoch, report.best_dev);
  out << buf << '\n';
  for (std::size_t h = 0; h < report.heads.size(); ++h) {
    std::snprintf(buf, sizeof buf, " dev=%.6f test=%.6f", report.dev_accuracy[h],
                  report.test_accuracy[h]);
    out << "head " << report.heads[h] << buf << '\n';
  }
}

// ---------------------------------------------------------------- eval / tag

std::size_t language_index(const TaggerModel& model, const std::string& name) {
  const auto& langs = model.spec().languages;
  if (name.empty()) return 0;
  for (std::size_t l = 0; l < langs.size(); ++l) {
    if (langs[l].name == name) return l;
  }
  std::string known;
  for (const auto& l : langs) known += (known.empty() ? "" : ", ") + l.name;
  throw Error("usage", "model has no language '" + name + "' (languages: " + known + ")");
}

struct EvalArgs {
  std::string model, corpus, lang, out;
};

void cmd_eval(const EvalArgs& a, std::ostream& out) {
  const TaggerModel model = load_model(a.model);
  const std::size_t lang = language_index(model, a.lang);
  const auto heads = model.heads_of(lang);

  std::vector<Task> tasks;
  TagSets tagsets;
  for (std::size_t h : heads) {
    const HeadSpec& hs = model.spec().heads[h];
    tasks.push_back(hs.task);
    tagsets[hs.task] = hs.tags;
  }
  std::map<Task, std::size_t> known;
  for (const auto& [t, ts] : tagsets) known[t] = ts.size();

  std::ifstream in(a.corpus, std::ios::binary);
  if (!in) throw Error("io", "cannot open corpus " + a.corpus);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::vector<Sentence> sentences = parse_corpus(ss.str(), tasks, tagsets);
  if (sentences.empty()) throw Error("data", "corpus " + a.corpus + " has no sentences");

  std::string unknown;
  for (const auto& [t, ts] : tagsets) {
    for (std::size_t i = known[t]; i < ts.size(); ++i) {
      unknown += (unknown.empty() ? "" : ", ") + std::string(task_name(t)) + ":" +
                 ts.name(static_cast<int>(i));
    }
  }
  if (!unknown.empty()) throw Error("data", "tags not known to the model: " + unknown);

  std::ostringstream result;
  char buf[96];
  for (std::size_t h : heads) {
    const Metrics m = evaluate(model, std::span<const Sentence>(sentences), lang, h);
    std::snprintf(buf, sizeof buf, "\taccuracy=%.6f\tcorrect=%zu\ttotal=%zu", m.accuracy(),
                  m.correct, m.total);
    result << model.spec().heads[h].name << '\t' << task_name(model.spec().heads[h].task) << buf
           << '\n';
  }
  out << result.str();
  if (!a.out.empty()) {
    auto f = open_out(a.out);
    f << result.str();
  }
}

struct TagArgs {
  std::string model, input, lang, out;
};

void cmd_tag(const TagArgs& a, std::ostream& out, std::ostream& err) {
  const TaggerModel model = load_model(a.model);
  const std::size_t lang = language_index(model, a.lang);
  const auto heads = model.heads_of(lang);

  std::ifstream file;
  std::istream* in = &std::cin;
  if (a.input != "-") {
    file.open(a.input, std::ios::binary);
    if (!file) throw Error("io", "cannot open input " + a.input);
    in = &file;
  }
  std::ofstream out_file;
  std::ostream* dest = &out;
  if (!a.out.empty()) {
    out_file = open_out(a.out);
    dest = &out_file;
  }

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(*in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::vector<std::string> tokens;
    for (std::string tok; ls >> tok;) tokens.push_back(tok);
    if (tokens.empty()) {
      err << "seqtrans: warning: line " << line_no << ": empty line skipped\n";
      continue;
    }
    if (!is_valid_utf8(line)) throw Error("parse", "line " + std::to_string(line_no) + ": invalid UTF-8");
    const auto tags = model.predict(tokens, lang);
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      *dest << tokens[t];
      for (std::size_t k = 0; k < heads.size(); ++k) {
        *dest << '\t' << model.spec().heads[heads[k]].tags.name(tags[k][t]);
      }
      *dest << '\n';
    }
    *dest << '\n';
  }
}

// ---------------------------------------------------------------- gen-synthetic

struct SynthArgs {
  SynthSpec spec;
  std::string out_a, out_b;
  std::optional<std::uint64_t> seed;
};

void cmd_gen_synthetic(const SynthArgs& a, std::ostream& out) {
  SynthSpec spec = a.spec;
  spec.seed = a.seed.value_or(default_seed());
  const SynthOutput s = gen_synthetic(spec);
  {
    auto f = open_out(a.out_a);
    write_corpus(f, s.a.sentences, s.a.tasks, s.a.tagsets);
  }
  if (!a.out_b.empty()) {
    auto f = open_out(a.out_b);
    write_corpus(f, s.b.sentences, s.b.tasks, s.b.tagsets);
  }
  out << "seed=" << spec.seed << " tags=" << spec.tags << " overlap=" << spec.overlap
      << " determinism=" << spec.determinism << " sentences_a=" << s.a.sentences.size()
      << " sentences_b=" << s.b.sentences.size() << '\n';
}

int exit_code_for(const std::string& category) {
  return (category == "usage" || category == "config") ? 2 : 1;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cross-lingual sequence tagging: embeddings, mapping and BLSTM-CNN-CRF taggers",
               "seqtrans"};
  app.require_subcommand(1);

  EmbeddingArgs emb;
  auto* c_emb = app.add_subcommand("train-embeddings", "Train sub-word skip-gram embeddings");
  c_emb->add_option("--corpus,--input", emb.inputs, "Text or corpus file (repeatable; concatenated)")
      ->required()
      ;
  c_emb->add_option("--out", emb.out, "Output .vec file")->required();
  c_emb->add_option("--dim", emb.dim, "Vector dimension")->capture_default_str();
  c_emb->add_option("--window", emb.sg.window)->capture_default_str();
  c_emb->add_option("--negatives", emb.sg.negatives)->capture_default_str();
  c_emb->add_option("--lr", emb.sg.learning_rate)->capture_default_str();
  c_emb->add_option("--epochs", emb.sg.epochs)->capture_default_str();
  c_emb->add_option("--min-count", emb.sg.min_count)->capture_default_str();
  c_emb->add_option("--minn", emb.ng.min_n)->capture_default_str();
  c_emb->add_option("--maxn", emb.ng.max_n)->capture_default_str();
  c_emb->add_option("--buckets", emb.ng.bucket_count)->capture_default_str();
  c_emb->add_flag("--markers", emb.ng.boundary_markers, "Wrap words in < > for n-grams");
  c_emb->add_option("--seed", emb.seed);

  VecmapArgs vm;
  auto* c_vm = app.add_subcommand("vecmap", "Map two embedding spaces into a shared space");
  c_vm->add_option("--src", vm.src)->required();
  c_vm->add_option("--trg", vm.trg)->required();
  c_vm->add_option("--out-src", vm.out_src)->required();
  c_vm->add_option("--out-trg", vm.out_trg)->required();
  c_vm->add_option("--cutoff", vm.cfg.vocab_cutoff)->capture_default_str();
  c_vm->add_option("--tol", vm.cfg.tol)->capture_default_str();
  c_vm->add_option("--patience", vm.cfg.patience)->capture_default_str();
  c_vm->add_option("--max-iter", vm.cfg.max_iterations)->capture_default_str();
  c_vm->add_flag("--stochastic", vm.cfg.stochastic);
  c_vm->add_option("--keep-prob", vm.cfg.keep_prob)->capture_default_str();
  c_vm->add_flag("--no-reweight", vm.no_reweight);
  c_vm->add_option("--seed", vm.seed);

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "Train a tagger (single, mtl or transfer)");
  c_tr->add_option("--mode", tr.mode_flag, "single|mtl|transfer");
  c_tr->add_option("--config", tr.config_path, "key = value file");
  c_tr->add_option("--set", tr.sets, "key=value override (repeatable)");
  for (const char* key : {"dropout", "lstm_size", "epochs", "patience", "embed_dim", "optimizer",
                          "batch_size", "cnn_window", "cnn_filters", "char_dim", "lr", "clip",
                          "adadelta_scale", "seed", "tasks", "monitor"}) {
    std::string flag = std::string("--") + key;
    for (char& c : flag) {
      if (c == '_') c = '-';
    }
    c_tr->add_option_function<std::string>(
        flag, [&tr, key](const std::string& v) { tr.flags[key] = v; }, "Overrides " + std::string(key));
  }
  c_tr->add_flag("--unfreeze", tr.unfreeze, "Update word embeddings during training");
  c_tr->add_option("--corpus", tr.corpora, "Corpus split 8:1:1 by seed (one per language)");
  c_tr->add_option("--train", tr.trains);
  c_tr->add_option("--dev", tr.devs);
  c_tr->add_option("--test", tr.tests);
  c_tr->add_option("--embeddings", tr.embeddings, ".vec file per language");
  c_tr->add_option("--lang", tr.langs, "Language name per corpus");
  c_tr->add_option("--model", tr.model_out, "Output model file");
  c_tr->add_option("--report", tr.report_out, "Output report (TSV)");
  c_tr->add_flag("--quiet", tr.quiet);

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("eval", "Token accuracy of a model on a tagged corpus");
  c_ev->add_option("--model", ev.model)->required();
  c_ev->add_option("--corpus", ev.corpus)->required();
  c_ev->add_option("--lang", ev.lang);
  c_ev->add_option("--out", ev.out);

  TagArgs tg;
  auto* c_tg = app.add_subcommand("tag", "Tag whitespace-tokenized sentences, one per line");
  c_tg->add_option("--model", tg.model)->required();
  c_tg->add_option("--input", tg.input, "Input file or - for stdin")->required();
  c_tg->add_option("--lang", tg.lang);
  c_tg->add_option("--out", tg.out);

  SynthArgs sy;
  auto* c_sy = app.add_subcommand("gen-synthetic", "Write a pair of synthetic twin corpora");
  c_sy->add_option("--out-a", sy.out_a)->required();
  c_sy->add_option("--out-b", sy.out_b);
  c_sy->add_option("--words-a", sy.spec.words_a)->capture_default_str();
  c_sy->add_option("--words-b", sy.spec.words_b)->capture_default_str();
  c_sy->add_option("--tags", sy.spec.tags)->capture_default_str();
  c_sy->add_option("--overlap", sy.spec.overlap)->capture_default_str();
  c_sy->add_option("--determinism", sy.spec.determinism)->capture_default_str();
  c_sy->add_option("--min-len", sy.spec.min_len)->capture_default_str();
  c_sy->add_option("--max-len", sy.spec.max_len)->capture_default_str();
  c_sy->add_option("--sentences-a", sy.spec.sentences_a)->capture_default_str();
  c_sy->add_option("--sentences-b", sy.spec.sentences_b)->capture_default_str();
  c_sy->add_flag("--morphology", sy.spec.morphology, "Add gender and number columns");
  c_sy->add_option("--seed", sy.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "seqtrans: error: usage: " << one_line(e.what()) << '\n';
    return 2;
  }

  try {
    if (c_emb->parsed()) cmd_train_embeddings(emb, out);
    else if (c_vm->parsed()) cmd_vecmap(vm, out);
    else if (c_tr->parsed()) cmd_train(tr, out);
    else if (c_ev->parsed()) cmd_eval(ev, out);
    else if (c_tg->parsed()) cmd_tag(tg, out, err);
    else if (c_sy->parsed()) cmd_gen_synthetic(sy, out);
  } catch (const Error& e) {
    err << "seqtrans: error: " << e.category() << ": " << one_line(e.what()) << '\n';
    return exit_code_for(e.category());
  } catch (const std::exception& e) {
    err << "seqtrans: error: internal: " << one_line(e.what()) << '\n';
    return 1;
  }
  return 0;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"seqtrans"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace seqtrans
