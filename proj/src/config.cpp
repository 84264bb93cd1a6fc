#include "seqtrans/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "seqtrans/error.hpp"

namespace seqtrans {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string key_list() {
  std::string out;
  for (const auto& k : RunConfig::keys()) {
    if (!out.empty()) out += ", ";
    out += k;
  }
  return out;
}

double to_double(std::string_view key, std::string_view v) {
  try {
    std::size_t used = 0;
    const std::string s(v);
    const double d = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw Error("config", "value for " + std::string(key) + " is not a number: '" +
                              std::string(v) + "'");
  }
}

std::uint64_t to_uint(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw Error("config", "value for " + std::string(key) + " is not a non-negative integer: '" +
                              std::string(v) + "'");
  }
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw Error("config", "value for " + std::string(key) + " is not a boolean: '" +
                            std::string(v) + "'");
}

std::string fmt_double(double v) {
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = {
      "dropout",   "lstm_size",   "epochs",   "patience", "embed_dim",
      "optimizer", "batch_size",  "cnn_window", "cnn_filters", "char_dim",
      "lr",        "clip",        "adadelta_scale", "freeze_embeddings", "seed",
      "mode",      "tasks",       "monitor"};
  return k;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  if (key == "dropout") dropout = to_double(key, value);
  else if (key == "lstm_size") lstm_size = to_uint(key, value);
  else if (key == "epochs") epochs = static_cast<int>(to_uint(key, value));
  else if (key == "patience") patience = static_cast<int>(to_uint(key, value));
  else if (key == "embed_dim") embed_dim = to_uint(key, value);
  else if (key == "optimizer") optimizer = parse_optimizer(value);
  else if (key == "batch_size") batch_size = to_uint(key, value);
  else if (key == "cnn_window") cnn_window = to_uint(key, value);
  else if (key == "cnn_filters") cnn_filters = to_uint(key, value);
  else if (key == "char_dim") char_dim = to_uint(key, value);
  else if (key == "lr") lr = to_double(key, value);
  else if (key == "clip") clip = to_double(key, value);
  else if (key == "adadelta_scale") adadelta_scale = to_double(key, value);
  else if (key == "freeze_embeddings") freeze_embeddings = to_bool(key, value);
  else if (key == "seed") seed = to_uint(key, value);
  else if (key == "mode") mode = parse_architecture(value);
  else if (key == "tasks") tasks = parse_task_list(value);
  else if (key == "monitor") monitor = parse_monitor(value);
  else {
    throw Error("usage", "unknown config key '" + std::string(key) + "'; valid keys: " + key_list());
  }
}

void RunConfig::validate() const {
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw Error("config", "dropout must be in [0, 1), got " + fmt_double(dropout));
  }
  if (epochs < 1) throw Error("config", "epochs must be >= 1");
  if (patience < 1) throw Error("config", "patience must be >= 1");
  if (batch_size < 1) throw Error("config", "batch_size must be >= 1");
  if (lstm_size < 1 || embed_dim < 1 || cnn_window < 1 || cnn_filters < 1 || char_dim < 1) {
    throw Error("config", "layer sizes must be >= 1");
  }
  if (!(lr > 0.0)) throw Error("config", "lr must be positive");
  if (tasks.empty()) throw Error("config", "at least one task is required");
}

std::vector<std::string> RunConfig::echo() const {
  std::string task_text;
  for (Task t : tasks) {
    if (!task_text.empty()) task_text += ',';
    task_text += task_name(t);
  }
  return {
      "dropout=" + fmt_double(dropout),
      "lstm_size=" + std::to_string(lstm_size),
      "epochs=" + std::to_string(epochs),
      "patience=" + std::to_string(patience),
      "embed_dim=" + std::to_string(embed_dim),
      "optimizer=" + std::string(optimizer_name(optimizer)),
      "batch_size=" + std::to_string(batch_size),
      "cnn_window=" + std::to_string(cnn_window),
      "cnn_filters=" + std::to_string(cnn_filters),
      "char_dim=" + std::to_string(char_dim),
      "lr=" + fmt_double(lr),
      "clip=" + fmt_double(clip),
      "adadelta_scale=" + fmt_double(adadelta_scale),
      "freeze_embeddings=" + std::string(freeze_embeddings ? "true" : "false"),
      "seed=" + std::to_string(seed),
      "mode=" + std::string(architecture_name(mode)),
      "tasks=" + task_text,
      "monitor=" + std::string(monitor_name(monitor)),
  };
}

ModelConfig RunConfig::model_config() const {
  ModelConfig m;
  m.word_dim = embed_dim;
  m.char_dim = char_dim;
  m.cnn_window = cnn_window;
  m.cnn_filters = cnn_filters;
  m.lstm_size = lstm_size;
  m.dropout = dropout;
  m.freeze_embeddings = freeze_embeddings;
  m.seed = seed;
  return m;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.epochs = epochs;
  t.batch_size = batch_size;
  t.patience = patience;
  t.optimizer.kind = optimizer;
  t.optimizer.lr = lr;
  t.optimizer.clip = clip;
  t.optimizer.adadelta_scale = adadelta_scale;
  t.seed = seed;
  t.monitor = monitor;
  return t;
}

void apply_config_text(RunConfig& cfg, std::string_view text, const std::string& origin) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw Error("config", origin + ":" + std::to_string(line_no) + ": expected `key = value`");
    }
    try {
      cfg.set(trim(std::string_view(body).substr(0, eq)), trim(std::string_view(body).substr(eq + 1)));
    } catch (const Error& e) {
      throw Error(e.category(), origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  apply_config_text(cfg, ss.str(), path);
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("SEQTRANS_SEED"); env && *env) {
    return to_uint("SEQTRANS_SEED", env);
  }
  return 1;
}

}  // namespace seqtrans
