#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "seqtrans/error.hpp"
#include "seqtrans/model.hpp"

namespace seqtrans {

namespace {

constexpr char kMagic[8] = {'S', 'Q', 'T', 'M', 'O', 'D', 'E', 'L'};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void strings(const std::vector<std::string>& v) {
    u32(static_cast<std::uint32_t>(v.size()));
    for (const auto& s : v) str(s);
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint8_t u8() {
    char c;
    if (!in_.get(c)) truncated();
    return static_cast<std::uint8_t>(c);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    if (n > (1u << 28)) throw Error("model", "corrupt model file (string length)");
    std::string s(n, '\0');
    if (n && !in_.read(s.data(), n)) truncated();
    return s;
  }
  std::vector<std::string> strings() {
    const std::uint32_t n = u32();
    std::vector<std::string> v;
    v.reserve(std::min<std::uint32_t>(n, 1u << 20));
    for (std::uint32_t i = 0; i < n; ++i) v.push_back(str());
    return v;
  }

  [[noreturn]] static void truncated() { throw Error("model", "model file is truncated"); }

 private:
  std::istream& in_;
};

std::string config_text(const ModelConfig& c) {
  return "word_dim=" + std::to_string(c.word_dim) + "\nchar_dim=" + std::to_string(c.char_dim) +
         "\ncnn_window=" + std::to_string(c.cnn_window) +
         "\ncnn_filters=" + std::to_string(c.cnn_filters) +
         "\nlstm_size=" + std::to_string(c.lstm_size) +
         "\nfreeze_embeddings=" + (c.freeze_embeddings ? "1" : "0") +
         "\nhead_lstm=" + (c.head_lstm ? "1" : "0") + "\nseed=" + std::to_string(c.seed) + "\n";
}

ModelConfig parse_config_text(const std::string& text, double dropout) {
  ModelConfig c;
  c.dropout = dropout;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    const std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    const auto num = static_cast<std::size_t>(std::stoull(val));
    if (key == "word_dim") c.word_dim = num;
    else if (key == "char_dim") c.char_dim = num;
    else if (key == "cnn_window") c.cnn_window = num;
    else if (key == "cnn_filters") c.cnn_filters = num;
    else if (key == "lstm_size") c.lstm_size = num;
    else if (key == "freeze_embeddings") c.freeze_embeddings = num != 0;
    else if (key == "head_lstm") c.head_lstm = num != 0;
    else if (key == "seed") c.seed = std::stoull(val);
    else throw Error("model", "unknown config key '" + key + "' in model file");
  }
  return c;
}

}  // namespace

void save_model(std::ostream& out, const TaggerModel& model) {
  Writer w(out);
  const ModelSpec& spec = model.spec();
  out.write(kMagic, sizeof kMagic);
  w.u32(kModelFormatVersion);
  w.u8(static_cast<std::uint8_t>(spec.architecture));
  w.f64(spec.config.dropout);
  w.str(config_text(spec.config));
  w.strings(spec.chars.chars());
  w.u32(static_cast<std::uint32_t>(spec.languages.size()));
  for (const auto& l : spec.languages) {
    w.str(l.name);
    w.strings(l.vocab.words());
  }
  w.u32(static_cast<std::uint32_t>(spec.heads.size()));
  for (const auto& h : spec.heads) {
    w.str(h.name);
    w.u8(static_cast<std::uint8_t>(h.task));
    w.u32(static_cast<std::uint32_t>(h.language));
    w.u8(h.private_lstm ? 1 : 0);
    w.f64(h.weight);
    w.strings(h.tags.names());
  }
  const auto& params = model.params();
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& t : params) {
    w.str(t.name);
    w.u32(static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) w.u64(d);
    w.u8(t.trainable ? 1 : 0);
    for (float v : t.value) w.f32(v);
  }
  if (!out) throw Error("io", "failed writing model");
}

void save_model(const std::string& path, const TaggerModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", "cannot write " + path);
  save_model(out, model);
}

TaggerModel load_model(std::istream& in) {
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic)) Reader::truncated();
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw Error("model", "not a model file (bad magic bytes)");
  }
  Reader r(in);
  const std::uint32_t version = r.u32();
  if (version != kModelFormatVersion) {
    throw Error("model", "unsupported version " + std::to_string(version) + " (this build reads " +
                             std::to_string(kModelFormatVersion) + ")");
  }
  ModelSpec spec;
  const std::uint8_t arch = r.u8();
  if (arch > 2) throw Error("model", "corrupt model file (architecture)");
  spec.architecture = static_cast<Architecture>(arch);
  const double dropout = r.f64();
  spec.config = parse_config_text(r.str(), dropout);
  spec.chars = Vocabulary::from_lists({"<pad>", "<unk>"}, r.strings());
  const std::uint32_t nlang = r.u32();
  for (std::uint32_t i = 0; i < nlang; ++i) {
    LanguageSpec l;
    l.name = r.str();
    l.vocab = Vocabulary::from_lists(r.strings(), {"<pad>", "<unk>"});
    spec.languages.push_back(std::move(l));
  }
  const std::uint32_t nheads = r.u32();
  for (std::uint32_t i = 0; i < nheads; ++i) {
    HeadSpec h;
    h.name = r.str();
    const std::uint8_t task = r.u8();
    if (task > 2) throw Error("model", "corrupt model file (task)");
    h.task = static_cast<Task>(task);
    h.language = r.u32();
    h.private_lstm = r.u8() != 0;
    h.weight = r.f64();
    h.tags = TagSet(h.task);
    for (const auto& name : r.strings()) h.tags.intern(name);
    spec.heads.push_back(std::move(h));
  }
  TaggerModel model(std::move(spec));
  auto& params = model.params();
  const std::uint32_t ntensors = r.u32();
  if (ntensors != params.size()) throw Error("model", "tensor count does not match model layout");
  for (std::uint32_t i = 0; i < ntensors; ++i) {
    const std::string name = r.str();
    auto& t = params.at(name);
    const std::uint32_t rank = r.u32();
    std::vector<std::size_t> shape;
    for (std::uint32_t k = 0; k < rank; ++k) shape.push_back(static_cast<std::size_t>(r.u64()));
    if (shape != t.shape) throw Error("model", "shape mismatch for tensor '" + name + "'");
    t.trainable = r.u8() != 0;
    for (float& v : t.value) v = r.f32();
  }
  return model;
}

TaggerModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot open " + path);
  return load_model(in);
}

}  // namespace seqtrans
