#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include "seqtrans/config.hpp"
#include "seqtrans/error.hpp"

using namespace seqtrans;

TEST_CASE("defaults") {
  const RunConfig c;
  CHECK(c.echo() == std::vector<std::string>{
                        "dropout=0.25", "lstm_size=100", "epochs=50", "patience=5", "embed_dim=128",
                        "optimizer=adam", "batch_size=32", "cnn_window=3", "cnn_filters=30",
                        "char_dim=30", "lr=0.001", "clip=5", "adadelta_scale=1",
                        "freeze_embeddings=true", "seed=1", "mode=single", "tasks=pos",
                        "monitor=accuracy"});
  CHECK(c.echo().size() == RunConfig::keys().size());
  CHECK_NOTHROW(c.validate());
  const ModelConfig m = c.model_config();
  CHECK(m.encoder_width() == 158);
  CHECK(m.lstm_size == 100);
  const TrainConfig t = c.train_config();
  CHECK(t.epochs == 50);
  CHECK(t.patience == 5);
  CHECK(t.batch_size == 32);
}

TEST_CASE("set and validate") {
  RunConfig c;
  c.set("dropout", "0.5");
  c.set("tasks", "pos,gender,number");
  c.set("mode", "mtl");
  c.set("optimizer", "adadelta");
  c.set("freeze_embeddings", "false");
  c.set("monitor", "loss");
  CHECK(c.dropout == 0.5);
  CHECK(c.tasks.size() == 3);
  CHECK(c.mode == Architecture::mtl);
  CHECK(c.train_config().optimizer.kind == OptimizerKind::adadelta);
  CHECK_FALSE(c.model_config().freeze_embeddings);
  CHECK(c.train_config().monitor == Monitor::loss);
  CHECK_THROWS_AS(c.set("monitor", "f1"), Error);

  c.set("dropout", "1.5");
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("dropout"), Error);
  c.set("dropout", "0");
  c.set("epochs", "0");
  CHECK_THROWS_AS(c.validate(), Error);

  try {
    c.set("droput", "0.1");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.category() == "usage");
    const std::string msg = e.what();
    for (const auto& k : RunConfig::keys()) CHECK(msg.find(k) != std::string::npos);
  }
  CHECK_THROWS_AS(c.set("lstm_size", "-3"), Error);
  CHECK_THROWS_AS(c.set("lr", "fast"), Error);
  CHECK_THROWS_AS(c.set("freeze_embeddings", "maybe"), Error);
  CHECK_THROWS_AS(c.set("mode", "ensemble"), Error);
}

TEST_CASE("config text and files") {
  RunConfig c;
  apply_config_text(c, "# comment\n\ndropout = 0.4   # trailing\nlstm_size=64\n", "inline");
  CHECK(c.dropout == 0.4);
  CHECK(c.lstm_size == 64);

  try {
    apply_config_text(c, "epochs = 3\nnot a pair\n", "cfg.txt");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("cfg.txt:2") != std::string::npos);
  }
  try {
    apply_config_text(c, "colour = red\n", "cfg.txt");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.category() == "usage");
    CHECK(std::string(e.what()).find("cfg.txt:1") != std::string::npos);
  }

  const std::string path = "/tmp/seqtrans_test_config.txt";
  std::ofstream(path) << "seed = 42\nmode = transfer\n";
  RunConfig f;
  apply_config_file(f, path);
  CHECK(f.seed == 42);
  CHECK(f.mode == Architecture::transfer);
  CHECK_THROWS_WITH_AS(apply_config_file(f, "/nonexistent/cfg"), doctest::Contains("cannot open"), Error);
}

TEST_CASE("seed from the environment") {
  ::unsetenv("SEQTRANS_SEED");
  CHECK(default_seed() == 1);
  ::setenv("SEQTRANS_SEED", "77", 1);
  CHECK(default_seed() == 77);
  ::setenv("SEQTRANS_SEED", "x", 1);
  CHECK_THROWS_AS(default_seed(), Error);
  ::unsetenv("SEQTRANS_SEED");
}
