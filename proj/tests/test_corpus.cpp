#include <doctest.h>

#include <random>

#include "entrain/corpus.hpp"
#include "entrain/error.hpp"

using namespace entrain;

namespace {

std::vector<std::string> surfaces(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  for (const auto& t : tokens) out.push_back(t.surface);
  return out;
}

Dialogue make_dialogue(const std::vector<std::pair<std::string, std::string>>& turns) {
  std::string jsonl = R"({"dialogue_id": "t", "turns": [)";
  for (std::size_t i = 0; i < turns.size(); ++i) {
    if (i) jsonl += ",";
    jsonl += R"({"speaker": ")" + turns[i].first + R"(", "text": ")" + turns[i].second + R"("})";
  }
  jsonl += "]}\n";
  return parse_corpus(jsonl, CorpusFormat::kGenericJsonl, "t").dialogues.at(0);
}

Dialogue alternating(std::size_t n) {
  std::vector<std::pair<std::string, std::string>> turns;
  for (std::size_t i = 0; i < n; ++i) turns.emplace_back(i % 2 ? "B" : "A", "turn " + std::to_string(i));
  return make_dialogue(turns);
}

}  // namespace

TEST_CASE("tokenize plain words") {
  auto tokens = tokenize("the beach is great");
  CHECK(surfaces(tokens) == std::vector<std::string>{"the", "beach", "is", "great"});
  for (const auto& t : tokens) {
    CHECK(t.is_alphanumeric);
    CHECK_FALSE(t.is_punct);
  }
}

TEST_CASE("tokenize peels punctuation") {
  auto tokens = tokenize("okay, right.");
  REQUIRE(surfaces(tokens) == std::vector<std::string>{"okay", ",", "right", "."});
  CHECK(tokens[1].is_punct);
  CHECK(tokens[3].is_punct);
  CHECK_FALSE(tokens[0].is_punct);
}

TEST_CASE("tokenize keeps internal hyphens and apostrophes") {
  CHECK(surfaces(tokenize("uh-huh don't?")) == std::vector<std::string>{"uh-huh", "don't", "?"});
  CHECK(surfaces(tokenize("...well")) == std::vector<std::string>{".", ".", ".", "well"});
}

TEST_CASE("filled pauses from the map task list") {
  auto tokens = tokenize("uh-huh aye", pauses::map_task());
  REQUIRE(tokens.size() == 2);
  CHECK(tokens[0].is_filled_pause);
  CHECK_FALSE(tokens[1].is_filled_pause);
  for (const char* p : {"uh-huh", "er", "um"}) CHECK(pauses::map_task().contains(p));
}

TEST_CASE("norms are lowercased") {
  auto tokens = tokenize("The BEACH");
  CHECK(tokens[0].norm == "the");
  CHECK(tokens[1].norm == "beach");
  CHECK(tokens[1].surface == "BEACH");
}

TEST_CASE("tokenize round trip on random text") {
  std::mt19937_64 rng(11);
  const std::vector<std::string> pieces{"a", "b", "uh", ".", ",", "?", "!", "x-y", "it's", "Go", "..", "a,", "?b"};
  for (int trial = 0; trial < 500; ++trial) {
    std::string text;
    const auto n = rng() % 12;
    for (std::size_t i = 0; i < n; ++i) {
      text += pieces[rng() % pieces.size()];
      text += rng() % 3 ? " " : "  ";
    }
    auto first = tokenize(text);
    std::string joined;
    for (const auto& t : first) joined += (joined.empty() ? "" : " ") + t.surface;
    auto second = tokenize(joined);
    REQUIRE(surfaces(second) == surfaces(first));
  }
}

TEST_CASE("generic jsonl ingestion") {
  auto corpus = load_corpus(ENTRAIN_FIXTURES "/corpus.jsonl", CorpusFormat::kGenericJsonl);
  REQUIRE(corpus.dialogues.size() == 3);
  CHECK(corpus.dialogues[0].dialogue_id == "d1");
  CHECK(corpus.dialogues[0].speakers == std::vector<std::string>{"A", "B"});

  const std::string two = R"({"dialogue_id": "a", "turns": [{"speaker": "x", "text": "hi"}, {"speaker": "y", "text": "yo"}]}
{"dialogue_id": "b", "turns": [{"speaker": "x", "text": "hi"}, {"speaker": "y", "text": "yo"}]}
)";
  CHECK(parse_corpus(two, CorpusFormat::kGenericJsonl, "two").dialogues.size() == 2);
}

TEST_CASE("three speakers are rejected with the dialogue id") {
  const std::string bad =
      R"({"dialogue_id": "trio", "turns": [{"speaker": "a", "text": "x"}, {"speaker": "b", "text": "y"}, {"speaker": "c", "text": "z"}]})";
  try {
    parse_corpus(bad, CorpusFormat::kGenericJsonl, "bad");
    FAIL("expected rejection");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("trio") != std::string::npos);
    CHECK(e.code() == ExitCode::kData);
  }
}

TEST_CASE("malformed lines and duplicate ids are rejected") {
  CHECK_THROWS_AS(parse_corpus("{oops\n", CorpusFormat::kGenericJsonl, "x"), DataError);
  const std::string dup = R"({"dialogue_id": "a", "turns": [{"speaker": "x", "text": "hi"}, {"speaker": "y", "text": "yo"}]}
{"dialogue_id": "a", "turns": [{"speaker": "x", "text": "hi"}, {"speaker": "y", "text": "yo"}]}
)";
  CHECK_THROWS_AS(parse_corpus(dup, CorpusFormat::kGenericJsonl, "x"), DataError);
}

TEST_CASE("swda-like and maptask-like inputs") {
  const std::string swda =
      "conversation_no,caller,text\n"
      "4325,A,\"Okay, {F uh } so / \"\n"
      "4325,B,\"Right, [ the, + the ] beach. / \"\n";
  auto s = parse_corpus(swda, CorpusFormat::kSwdaLike, "swda");
  REQUIRE(s.dialogues.size() == 1);
  CHECK(s.dialogues[0].utterances.size() == 2);
  CHECK(s.filled_pauses == pauses::switchboard());
  CHECK(s.dialogues[0].utterances[0].text() == "Okay , uh so");
  CHECK(s.dialogues[0].utterances[1].text() == "Right , the , the beach .");

  const std::string maptask = "# map task\nq1ec1\tg\tgo to the left\nq1ec1\tf\tuh-huh the left\n";
  auto m = parse_corpus(maptask, CorpusFormat::kMapTaskLike, "maptask");
  REQUIRE(m.dialogues.size() == 1);
  CHECK(m.dialogues[0].utterances[1].tokens[0].is_filled_pause);
  CHECK_THROWS_AS(parse_corpus("q1\tg\n", CorpusFormat::kMapTaskLike, "bad"), DataError);
}

TEST_CASE("format and pause names") {
  CHECK(parse_corpus_format("generic-jsonl") == CorpusFormat::kGenericJsonl);
  CHECK(parse_corpus_format("swda") == CorpusFormat::kSwdaLike);
  CHECK_THROWS_AS(parse_corpus_format("xml"), ConfigError);
  CHECK(resolve_pauses("none").empty());
  CHECK(resolve_pauses("maptask") == pauses::map_task());
}

TEST_CASE("normalize merges same-speaker runs") {
  auto d = make_dialogue({{"A", "go on"}, {"A", "please"}, {"B", "okay"}});
  auto n = normalize_turns(d);
  REQUIRE(n.utterances.size() == 2);
  CHECK(n.utterances[0].text() == "go on please");
  CHECK(n.utterances[0].speaker == "A");
  CHECK(n.utterances[1].text() == "okay");
  CHECK(n.utterances[1].index == 1);
}

TEST_CASE("normalize fixed points") {
  auto d = alternating(5);
  auto n = normalize_turns(d);
  CHECK(n.utterances.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(n.utterances[i].text() == d.utterances[i].text());

  auto single = make_dialogue({{"A", "hello"}, {"B", "hi"}});
  single.utterances.resize(1);
  CHECK(normalize_turns(single).utterances.size() == 1);
}

TEST_CASE("normalize is idempotent on random speaker runs") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::pair<std::string, std::string>> turns{{"A", "w0"}, {"B", "w1"}};
    const auto n = rng() % 20;
    for (std::size_t i = 0; i < n; ++i) turns.emplace_back(rng() % 2 ? "A" : "B", "w" + std::to_string(rng() % 9));
    std::shuffle(turns.begin(), turns.end(), rng);
    auto once = normalize_turns(make_dialogue(turns));
    auto twice = normalize_turns(once);
    REQUIRE(once.utterances.size() == twice.utterances.size());
    for (std::size_t i = 0; i < once.utterances.size(); ++i) {
      CHECK(once.utterances[i].text() == twice.utterances[i].text());
      CHECK(once.utterances[i].speaker == twice.utterances[i].speaker);
      if (i) CHECK(once.utterances[i].speaker != once.utterances[i - 1].speaker);
    }
  }
}

TEST_CASE("moved and copied dialogues normalize alike") {
  auto d = make_dialogue({{"A", "go on"}, {"A", "please"}, {"B", "okay"}, {"B", "yes"}, {"A", "right"}});
  auto copied = normalize_turns(d);
  auto moved = normalize_turns(Dialogue(d));
  REQUIRE(copied.utterances.size() == 3);
  REQUIRE(moved.utterances.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(moved.utterances[i].text() == copied.utterances[i].text());
    CHECK(moved.utterances[i].index == i);
  }
  CHECK(moved.dialogue_id == "t");
}

TEST_CASE("vocabulary ids follow first use") {
  auto d = make_dialogue({{"A", "the left Side"}, {"B", "the side okay"}});
  auto v = index_vocabulary(d);
  CHECK(v.words == std::vector<std::string_view>{"the", "left", "side", "okay"});
  CHECK(v.ids == std::vector<std::vector<std::uint32_t>>{{0, 1, 2}, {0, 2, 3}});
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::pair<std::string, std::string>> turns;
    for (int i = 0; i < 6; ++i) {
      std::string text;
      for (int k = 0; k < 5; ++k) text += "W" + std::to_string(rng() % 7) + " ";
      turns.emplace_back(i % 2 ? "B" : "A", text);
    }
    auto dialogue = make_dialogue(turns);
    auto vocabulary = index_vocabulary(dialogue);
    for (std::size_t u = 0; u < dialogue.utterances.size(); ++u) {
      const auto& tokens = dialogue.utterances[u].tokens;
      REQUIRE(vocabulary.ids[u].size() == tokens.size());
      for (std::size_t t = 0; t < tokens.size(); ++t) CHECK(vocabulary.words[vocabulary.ids[u][t]] == tokens[t].norm);
    }
  }
}

TEST_CASE("sample counts") {
  CHECK(extract_samples(alternating(12), 10).size() == 3);
  CHECK(extract_samples(alternating(10), 10).size() == 1);
  CHECK(extract_samples(alternating(9), 10).empty());
  CHECK_THROWS_AS(extract_samples(alternating(4), 1), ConfigError);
  for (std::size_t n = 2; n <= 25; ++n) {
    for (std::size_t w = 2; w <= 12; ++w) {
      CHECK(extract_samples(alternating(n), w).size() == (n >= w ? n - w + 1 : 0));
    }
  }
}

TEST_CASE("samples are contiguous and alternate") {
  auto corpus = load_corpus(ENTRAIN_FIXTURES "/corpus.jsonl", CorpusFormat::kGenericJsonl);
  std::size_t total = 0;
  for (const auto& raw : corpus.dialogues) {
    auto d = normalize_turns(raw);
    for (const auto& s : extract_samples(d, 10)) {
      ++total;
      REQUIRE(s.utterances.size() == 10);
      CHECK(s.sample_id == d.dialogue_id + ":" + std::to_string(s.start));
      CHECK(s.target_speaker == s.target().speaker);
      for (std::size_t i = 0; i < 10; ++i) {
        CHECK(s.utterances[i].index == s.start + i);
        if (i) CHECK(s.utterances[i].speaker != s.utterances[i - 1].speaker);
      }
      CHECK(&s.at(1) == &s.utterances.front());
    }
  }
  CHECK(total == 6);
}
