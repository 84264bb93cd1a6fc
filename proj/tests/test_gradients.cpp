#include <doctest.h>

#include <array>

#include "fixtures.hpp"
#include "seqtrans/model.hpp"

using namespace seqtrans;

namespace {

constexpr double kTolerance = 1e-3;

void report(const std::string& what, std::uint64_t seed, const fixtures::GradCheck& g) {
  INFO(what << " seed " << seed << ": worst relative error " << g.worst << " at " << g.worst_param);
  CHECK(g.worst <= kTolerance);
}

}  // namespace

TEST_CASE("single model gradients, with and without a head BLSTM") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    for (bool head_lstm : {false, true}) {
      auto d = fixtures::tiny_data(seed, 2, 3, 3, 4);
      auto cfg = fixtures::tiny_config(seed);
      cfg.head_lstm = head_lstm;
      auto model = build_single<double>(cfg, d.vocab, d.tagsets.at(Task::pos), &d.table);
      std::vector<fixtures::Item> items;
      for (const auto& s : d.sentences) items.push_back({&s, 0});
      fixtures::randomize_away_from_ties(model, items, seed);
      const auto g = fixtures::check_gradients(model, items);
      report(head_lstm ? "single+head" : "single", seed, g);
      CHECK(g.groups.size() == model.params().size());
    }
  }
}

TEST_CASE("multitask model gradients") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto d = fixtures::tiny_data(seed + 100, 2, 3, 3, 4);
    auto model = build_mtl<double>(fixtures::tiny_config(seed), d.vocab, d.tagsets, &d.table);
    std::vector<fixtures::Item> items;
    for (const auto& s : d.sentences) items.push_back({&s, 0});
    fixtures::randomize_away_from_ties(model, items, seed);
    const auto g = fixtures::check_gradients(model, items);
    report("mtl", seed, g);
    CHECK(g.groups.size() == model.params().size());
  }
}

TEST_CASE("transfer model gradients") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto a = fixtures::tiny_data(seed + 200, 2, 3, 3, 4, "abcde");
    auto b = fixtures::tiny_data(seed + 300, 2, 3, 2, 4, "cdefg");
    const std::array<std::string, 2> names{"hi", "ne"};
    const std::array<Vocabulary, 2> vocabs{a.vocab, b.vocab};
    const std::array<TagSet, 2> tagsets{a.tagsets.at(Task::pos), b.tagsets.at(Task::pos)};
    const std::array<const EmbeddingTable*, 2> tables{&a.table, &b.table};
    auto model = build_transfer<double>(fixtures::tiny_config(seed), names, vocabs, tagsets, tables);
    std::vector<fixtures::Item> items;
    for (const auto& s : a.sentences) items.push_back({&s, 0});
    for (const auto& s : b.sentences) items.push_back({&s, 1});
    fixtures::randomize_away_from_ties(model, items, seed);
    const auto g = fixtures::check_gradients(model, items);
    report("transfer", seed, g);
    CHECK(g.groups.size() == model.params().size());
  }
}
