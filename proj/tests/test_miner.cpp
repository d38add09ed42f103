#include <doctest.h>

#include <random>

#include "entrain/error.hpp"
#include "entrain/metrics.hpp"
#include "entrain/miner.hpp"
#include "oracles.hpp"

using namespace entrain;

namespace {

Dialogue dialogue_of(const std::vector<std::pair<std::string, std::string>>& turns,
                     const PauseList& pauses = pauses::map_task()) {
  Dialogue d;
  d.dialogue_id = "t";
  for (std::size_t i = 0; i < turns.size(); ++i) {
    d.utterances.push_back({i, turns[i].first, tokenize(turns[i].second, pauses)});
    if (std::find(d.speakers.begin(), d.speakers.end(), turns[i].first) == d.speakers.end()) {
      d.speakers.push_back(turns[i].first);
    }
  }
  return d;
}

std::set<std::string> texts(const ConstructionLexicon& lex) {
  std::set<std::string> out;
  for (const auto& e : lex.entries()) {
    std::string s;
    for (const auto& t : e.tokens) s += (s.empty() ? "" : " ") + t;
    out.insert(s);
  }
  return out;
}

void require_matches_oracle(const Dialogue& d, const PauseList& pauses) {
  auto lex = build_lexicon(d, pauses);
  auto expected = oracle::mine(d, pauses);
  REQUIRE(lex.size() == expected.size());
  for (const auto& e : lex.entries()) {
    auto it = expected.find(e.tokens);
    REQUIRE(it != expected.end());
    CHECK(e.occurrences == it->second.occurrences);
    CHECK(e.is_maximal == it->second.maximal);
  }
}

}  // namespace

TEST_CASE("shared constructions of a map task exchange") {
  auto d = dialogue_of({{"A", "go to the left side"}, {"B", "okay the left side yes"}, {"A", "the left side okay"}});
  auto lex = build_lexicon(d, pauses::map_task());
  CHECK(texts(lex) == std::set<std::string>{"left side", "the left", "the left side"});
  auto idx = lex.find(std::vector<std::string>{"the", "left", "side"});
  REQUIRE(idx);
  const auto& e = lex.entries()[*idx];
  CHECK(e.is_maximal);
  CHECK(e.occurrences.size() == 3);
  CHECK(e.occurrences[1] == Occurrence{1, 1, "B"});
  CHECK_FALSE(lex.entries()[*lex.find(std::vector<std::string>{"the", "left"})].is_maximal);
}

TEST_CASE("disjoint vocabularies give an empty lexicon") {
  auto d = dialogue_of({{"A", "red green blue"}, {"B", "one two three"}});
  CHECK(build_lexicon(d, {}).empty());
  CHECK(mine_shared_constructions(d).empty());
}

TEST_CASE("verbatim repetition keeps every sub-sequence, one maximal") {
  auto d = dialogue_of({{"A", "a b c"}, {"B", "a b c"}});
  auto lex = build_lexicon(d, {});
  CHECK(texts(lex) == std::set<std::string>{"a b", "a b c", "b c"});
  for (const auto& e : lex.entries()) CHECK(e.is_maximal == (e.length() == 3));
}

TEST_CASE("filters") {
  const auto& mt = pauses::map_task();
  CHECK_FALSE(passes_construction_filters(std::vector<std::string>{"um", "uh-huh", "er"}, mt));
  CHECK(passes_construction_filters(std::vector<std::string>{"uh-huh", "aye"}, mt));
  CHECK_FALSE(passes_construction_filters(std::vector<std::string>{"right", ",", "okay"}, mt));
  CHECK_FALSE(passes_construction_filters(std::vector<std::string>{"right", "."}, mt));
  CHECK_FALSE(passes_construction_filters(std::vector<std::string>{"why", "?"}, mt));
  CHECK(passes_construction_filters(std::vector<std::string>{"why", "!", "not"}, mt));
  CHECK_FALSE(passes_construction_filters(std::vector<std::string>{"go", "!"}, mt));
}

TEST_CASE("filtering removes pause-heavy and punctuated entries from a mined lexicon") {
  auto d = dialogue_of({{"A", "um uh-huh er right , okay"}, {"B", "um uh-huh er right , okay"}});
  auto raw = mine_shared_constructions(d);
  CHECK(raw.contains(std::vector<std::string>{"um", "uh-huh", "er"}));
  auto lex = filter_constructions(raw, pauses::map_task());
  CHECK_FALSE(lex.contains(std::vector<std::string>{"um", "uh-huh", "er"}));
  CHECK_FALSE(lex.contains(std::vector<std::string>{"right", ",", "okay"}));
  CHECK(lex.contains(std::vector<std::string>{"er", "right"}));
  CHECK_FALSE(lex.contains(std::vector<std::string>{"uh-huh", "er"}));
}

TEST_CASE("mining rejects a dialogue without two speakers") {
  auto d = dialogue_of({{"A", "a b"}, {"A", "a b"}});
  CHECK_THROWS_AS(mine_shared_constructions(d), DataError);
}

TEST_CASE("miner equals the brute-force oracle on random dialogues") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    CAPTURE(trial);
    require_matches_oracle(oracle::random_dialogue(rng), pauses::map_task());
  }
}

TEST_CASE("occurrence slices equal the entry tokens") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    auto d = oracle::random_dialogue(rng);
    auto lex = build_lexicon(d, pauses::map_task());
    for (const auto& e : lex.entries()) {
      for (const auto& o : e.occurrences) {
        const auto& u = d.utterances[o.utterance_index];
        CHECK(u.speaker == o.speaker);
        for (std::size_t k = 0; k < e.length(); ++k) CHECK(u.tokens[o.token_offset + k].norm == e.tokens[k]);
      }
    }
  }
}

TEST_CASE("adding an utterance never removes an entry") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    auto d = oracle::random_dialogue(rng);
    auto before = build_lexicon(d, pauses::map_task());
    auto extra = oracle::random_dialogue(rng);
    Utterance u = extra.utterances.front();
    u.index = d.utterances.size();
    u.speaker = d.utterances.back().speaker == "A" ? "B" : "A";
    d.utterances.push_back(u);
    auto after = build_lexicon(d, pauses::map_task());
    for (const auto& e : before.entries()) CHECK(after.contains(e.tokens));
  }
}

TEST_CASE("filter is idempotent") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    auto d = oracle::random_dialogue(rng);
    auto once = filter_constructions(mine_shared_constructions(d), pauses::map_task());
    auto twice = filter_constructions(once, pauses::map_task());
    REQUIRE(once.size() == twice.size());
    for (std::size_t i = 0; i < once.size(); ++i) {
      CHECK(once.entries()[i].tokens == twice.entries()[i].tokens);
      CHECK(once.entries()[i].occurrences == twice.entries()[i].occurrences);
      CHECK(once.entries()[i].is_maximal == twice.entries()[i].is_maximal);
    }
  }
}

TEST_CASE("construction statistics within a scope") {
  // "x y" sits in utterances 2, 5 and 9 of the scope.
  std::vector<std::pair<std::string, std::string>> turns;
  for (std::size_t i = 0; i < 10; ++i) {
    const bool planted = i == 2 || i == 5 || i == 9;
    turns.emplace_back(i % 2 ? "B" : "A", planted ? "x y w" + std::to_string(i) : "w" + std::to_string(i));
  }
  auto d = dialogue_of(turns, {});
  auto lex = build_lexicon(d, {});
  REQUIRE(lex.size() == 1);
  std::vector<const Utterance*> all;
  for (const auto& u : d.utterances) all.push_back(&u);
  auto counts = CorpusCounts::build_all(all, 4);
  auto rows = construction_stats(lex, Scope::of(d), counts);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].length == 2);
  CHECK(rows[0].frequency == 3);
  CHECK(rows[0].incidence == 3);
  REQUIRE(rows[0].rep_distance);
  CHECK(*rows[0].rep_distance == doctest::Approx(3.5).epsilon(1e-12));
  // The scope is the whole corpus, so the sequence is exactly as likely in both.
  CHECK(rows[0].pmi == doctest::Approx(0.0));
}

TEST_CASE("single occurrence has no repetition distance") {
  auto d = dialogue_of({{"A", "x y"}, {"B", "x y"}, {"A", "z"}});
  auto lex = build_lexicon(d, {});
  Scope scope;
  scope.first = 1;
  scope.last = 3;
  scope.utterances = {&d.utterances[1], &d.utterances[2]};
  std::vector<const Utterance*> all;
  for (const auto& u : d.utterances) all.push_back(&u);
  auto rows = construction_stats(lex, scope, CorpusCounts::build_all(all, 3));
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].frequency == 1);
  CHECK(rows[0].incidence == 1);
  CHECK_FALSE(rows[0].rep_distance);
}

TEST_CASE("repeats inside one utterance raise incidence, not frequency") {
  auto d = dialogue_of({{"A", "x y and x y"}, {"B", "x y"}});
  auto lex = build_lexicon(d, {});
  std::vector<const Utterance*> all;
  for (const auto& u : d.utterances) all.push_back(&u);
  auto rows = construction_stats(lex, Scope::of(d), CorpusCounts::build_all(all, 3));
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].frequency == 2);
  CHECK(rows[0].incidence == 3);
  CHECK(*rows[0].rep_distance == 1.0);
}

TEST_CASE("batched counts equal single lookups") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<Dialogue> ds;
    for (int k = 0; k < 3; ++k) ds.push_back(oracle::random_dialogue(rng, 10, 6));
    std::vector<ConstructionLexicon> lexica;
    for (const auto& d : ds) lexica.push_back(mine_shared_constructions(d));
    auto counts = count_lexicon_sequences(ds, lexica);
    std::vector<Construction> probes;
    for (const auto& lexicon : lexica) {
      probes.insert(probes.end(), lexicon.entries().begin(), lexicon.entries().end());
      auto batched = counts.count_each(lexicon.entries());
      REQUIRE(batched.size() == lexicon.size());
      for (std::size_t e = 0; e < lexicon.size(); ++e) CHECK(batched[e] == counts.count(lexicon.entries()[e].tokens));
    }
    for (int k = 0; k < 20; ++k) {
      Construction c;
      const std::size_t length = 1 + rng() % 4;
      for (std::size_t n = 0; n < length; ++n) c.tokens.push_back(std::vector<std::string>{"go", "the", "left", "zz"}[rng() % 4]);
      probes.push_back(c);
    }
    std::shuffle(probes.begin(), probes.end(), rng);
    auto batched = counts.count_each(probes);
    for (std::size_t i = 0; i < probes.size(); ++i) CHECK(batched[i] == counts.count(probes[i].tokens));
  }
}
