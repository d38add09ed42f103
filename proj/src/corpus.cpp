#include "entrain/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <json.hpp>
#include <unordered_map>
#include <unordered_set>

#include <absl/container/flat_hash_map.h>

#include "entrain/error.hpp"
#include "entrain/io.hpp"

namespace entrain {

namespace {

bool is_boundary_punct(char c) noexcept { return c == '.' || c == ',' || c == '?' || c == '!'; }

bool is_space(char c) noexcept { return std::isspace(static_cast<unsigned char>(c)) != 0; }

struct RawTurn {
  std::string speaker;
  std::string text;
};

struct RawDialogue {
  std::string id;
  std::vector<RawTurn> turns;
  std::size_t first_line = 0;
};

// Removes Switchboard (SWDA) transcription markup: disfluency brackets,
// slash-unit boundaries, {F ...} style tags and <noise> annotations.
std::string strip_swda_markup(std::string_view text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '<') {
      auto close = text.find('>', i);
      if (close != std::string_view::npos) {
        i = close;
        cleaned += ' ';
        continue;
      }
    }
    if (c == '{' && i + 1 < text.size() && std::isalpha(static_cast<unsigned char>(text[i + 1]))) {
      ++i;
      cleaned += ' ';
      continue;
    }
    if (c == '}' || c == '[' || c == ']' || c == '+' || c == '/' || c == '#' || c == '(' ||
        c == ')') {
      cleaned += ' ';
      continue;
    }
    cleaned += c;
  }
  // standalone dash runs ("--", "-") are markup, not words
  std::string out;
  std::size_t pos = 0;
  while (pos < cleaned.size()) {
    while (pos < cleaned.size() && is_space(cleaned[pos])) ++pos;
    std::size_t end = pos;
    while (end < cleaned.size() && !is_space(cleaned[end])) ++end;
    std::string_view chunk(cleaned.data() + pos, end - pos);
    if (!chunk.empty() && chunk.find_first_not_of('-') != std::string_view::npos) {
      if (!out.empty()) out += ' ';
      out += chunk;
    }
    pos = end;
  }
  return out;
}

Dialogue build_dialogue(const RawDialogue& raw, const PauseList& pauses) {
  Dialogue dialogue;
  dialogue.dialogue_id = raw.id;
  for (const auto& turn : raw.turns) {
    auto tokens = tokenize(turn.text, pauses);
    if (tokens.empty()) continue;
    Utterance utterance;
    utterance.index = dialogue.utterances.size();
    utterance.speaker = turn.speaker;
    utterance.tokens = std::move(tokens);
    if (std::find(dialogue.speakers.begin(), dialogue.speakers.end(), turn.speaker) ==
        dialogue.speakers.end()) {
      dialogue.speakers.push_back(turn.speaker);
    }
    dialogue.utterances.push_back(std::move(utterance));
  }
  if (dialogue.speakers.size() != 2) {
    throw DataError("dialogue '" + raw.id + "' has " + std::to_string(dialogue.speakers.size()) +
                    " speakers, expected exactly 2");
  }
  return dialogue;
}

std::vector<RawDialogue> read_generic_jsonl(std::string_view content) {
  std::vector<RawDialogue> dialogues;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (end == content.size()) break;
      continue;
    }
    try {
      auto record = nlohmann::json::parse(line);
      RawDialogue raw;
      raw.id = record.at("dialogue_id").get<std::string>();
      raw.first_line = line_no;
      for (const auto& turn : record.at("turns")) {
        raw.turns.push_back({turn.at("speaker").get<std::string>(), turn.at("text").get<std::string>()});
      }
      dialogues.push_back(std::move(raw));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": malformed dialogue record: " + e.what());
    }
    if (end == content.size()) break;
  }
  return dialogues;
}

class RowGrouper {
 public:
  void add(const std::string& id, std::string speaker, std::string text, std::size_t line) {
    auto [it, inserted] = positions_.try_emplace(id, dialogues_.size());
    if (inserted) dialogues_.push_back({id, {}, line});
    dialogues_[it->second].turns.push_back({std::move(speaker), std::move(text)});
  }
  std::vector<RawDialogue> take() { return std::move(dialogues_); }

 private:
  std::unordered_map<std::string, std::size_t> positions_;
  std::vector<RawDialogue> dialogues_;
};

std::vector<RawDialogue> read_swda_like(std::string_view content) {
  auto table = io::CsvTable::parse(content);
  auto conv = table.column("conversation_no");
  auto caller = table.column("caller");
  auto text = table.column("text");
  RowGrouper grouper;
  for (std::size_t r = 0; r < table.rows().size(); ++r) {
    const auto& row = table.rows()[r];
    if (row[conv].empty() || row[caller].empty()) {
      throw DataError("line " + std::to_string(table.line_of(r)) + ": empty conversation_no or caller");
    }
    grouper.add(row[conv], row[caller], strip_swda_markup(row[text]), table.line_of(r));
  }
  return grouper.take();
}

std::vector<RawDialogue> read_maptask_like(std::string_view content) {
  RowGrouper grouper;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string line(content.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto tab1 = line.find('\t');
    auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos || tab1 == 0 || tab2 == tab1 + 1) {
      throw DataError("line " + std::to_string(line_no) +
                      ": expected <dialogue_id>\\t<speaker>\\t<text>");
    }
    grouper.add(line.substr(0, tab1), line.substr(tab1 + 1, tab2 - tab1 - 1), line.substr(tab2 + 1),
                line_no);
  }
  return grouper.take();
}

}  // namespace

bool has_alphanumeric(std::string_view text) noexcept {
  for (char c : text) {
    auto u = static_cast<unsigned char>(c);
    if (u >= 0x80 || std::isalnum(u)) return true;
  }
  return false;
}

std::string to_lower(std::string_view text) {
  std::string out(text);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

Token make_token(std::string_view surface, const PauseList& pauses) {
  Token token;
  token.surface = std::string(surface);
  token.norm = to_lower(surface);
  token.is_alphanumeric = has_alphanumeric(surface);
  token.is_punct = !token.is_alphanumeric;
  token.is_filled_pause = pauses.contains(token.norm);
  return token;
}

std::vector<Token> tokenize(std::string_view text, const PauseList& pauses) {
  std::vector<Token> tokens;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && is_space(text[pos])) ++pos;
    std::size_t end = pos;
    while (end < text.size() && !is_space(text[end])) ++end;
    if (end == pos) break;
    std::string_view chunk = text.substr(pos, end - pos);
    pos = end;

    std::size_t lead = 0;
    while (lead < chunk.size() && is_boundary_punct(chunk[lead])) ++lead;
    for (std::size_t i = 0; i < lead; ++i) tokens.push_back(make_token(chunk.substr(i, 1), pauses));
    if (lead == chunk.size()) continue;

    std::size_t trail = chunk.size();
    while (trail > lead && is_boundary_punct(chunk[trail - 1])) --trail;
    tokens.push_back(make_token(chunk.substr(lead, trail - lead), pauses));
    for (std::size_t i = trail; i < chunk.size(); ++i) {
      tokens.push_back(make_token(chunk.substr(i, 1), pauses));
    }
  }
  return tokens;
}

std::size_t Utterance::word_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(tokens.begin(), tokens.end(), [](const Token& t) { return !t.is_punct; }));
}

std::vector<std::string> Utterance::norms() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.norm);
  return out;
}

std::string Utterance::text() const {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t.surface;
  }
  return out;
}

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "generic-jsonl" || name == "generic") return CorpusFormat::kGenericJsonl;
  if (name == "swda-like" || name == "swda") return CorpusFormat::kSwdaLike;
  if (name == "maptask-like" || name == "maptask") return CorpusFormat::kMapTaskLike;
  throw ConfigError("unknown corpus format '" + std::string(name) +
                    "' (expected generic-jsonl, swda-like or maptask-like)");
}

std::string_view to_string(CorpusFormat format) noexcept {
  switch (format) {
    case CorpusFormat::kGenericJsonl: return "generic-jsonl";
    case CorpusFormat::kSwdaLike: return "swda-like";
    case CorpusFormat::kMapTaskLike: return "maptask-like";
  }
  return "unknown";
}

namespace pauses {

const PauseList& map_task() {
  static const PauseList list{"uh-huh", "er",    "um",  "mm-mm", "eh",  "uh",  "mm",     "uh-uh",
                              "nah",    "mm-hmm", "erm", "ehm",  "huh", "hmm", "mmhmm"};
  return list;
}

const PauseList& switchboard() {
  static const PauseList list{"hm", "huh", "uh", "um-hum", "huh-uh", "uh-huh", "um"};
  return list;
}

}  // namespace pauses

PauseList resolve_pauses(std::string_view spec) {
  if (spec == "maptask" || spec == "map-task") return pauses::map_task();
  if (spec == "switchboard") return pauses::switchboard();
  if (spec == "none" || spec.empty()) return {};
  std::string content;
  try {
    content = io::read_file(std::filesystem::path(std::string(spec)));
  } catch (const DataError&) {
    throw ConfigError("cannot read pause list '" + std::string(spec) + "'");
  }
  PauseList list;
  for (const auto& token : tokenize(content)) list.insert(token.norm);
  return list;
}

Corpus parse_corpus(std::string_view content, CorpusFormat format, std::string name,
                    const LoadOptions& options) {
  Corpus corpus;
  corpus.name = std::move(name);
  std::vector<RawDialogue> raw;
  switch (format) {
    case CorpusFormat::kGenericJsonl:
      raw = read_generic_jsonl(content);
      break;
    case CorpusFormat::kSwdaLike:
      raw = read_swda_like(content);
      corpus.filled_pauses = pauses::switchboard();
      break;
    case CorpusFormat::kMapTaskLike:
      raw = read_maptask_like(content);
      corpus.filled_pauses = pauses::map_task();
      break;
  }
  if (options.pauses) corpus.filled_pauses = *options.pauses;

  std::unordered_set<std::string> seen;
  corpus.dialogues.reserve(raw.size());
  for (const auto& dialogue : raw) {
    if (!seen.insert(dialogue.id).second) {
      throw DataError("line " + std::to_string(dialogue.first_line) + ": duplicate dialogue_id '" +
                      dialogue.id + "'");
    }
    corpus.dialogues.push_back(build_dialogue(dialogue, corpus.filled_pauses));
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format, const LoadOptions& options) {
  return parse_corpus(io::read_file(path), format, path.stem().string(), options);
}

Dialogue normalize_turns(const Dialogue& dialogue) { return normalize_turns(Dialogue(dialogue)); }

Dialogue normalize_turns(Dialogue&& dialogue) {
  Dialogue out;
  out.dialogue_id = std::move(dialogue.dialogue_id);
  out.speakers = std::move(dialogue.speakers);
  out.utterances.reserve(dialogue.utterances.size());
  for (auto& utterance : dialogue.utterances) {
    if (!out.utterances.empty() && out.utterances.back().speaker == utterance.speaker) {
      auto& tokens = out.utterances.back().tokens;
      tokens.insert(tokens.end(), std::make_move_iterator(utterance.tokens.begin()),
                    std::make_move_iterator(utterance.tokens.end()));
      continue;
    }
    utterance.index = out.utterances.size();
    out.utterances.push_back(std::move(utterance));
  }
  return out;
}

DialogueVocabulary index_vocabulary(const Dialogue& dialogue) {
  DialogueVocabulary vocabulary;
  absl::flat_hash_map<std::string_view, std::uint32_t> known;
  std::size_t tokens = 0;
  for (const auto& u : dialogue.utterances) tokens += u.tokens.size();
  known.reserve(tokens);
  vocabulary.ids.resize(dialogue.utterances.size());
  for (std::size_t u = 0; u < dialogue.utterances.size(); ++u) {
    const auto& tokens = dialogue.utterances[u].tokens;
    auto& ids = vocabulary.ids[u];
    ids.reserve(tokens.size());
    for (const auto& token : tokens) {
      auto [it, inserted] = known.emplace(token.norm, static_cast<std::uint32_t>(vocabulary.words.size()));
      if (inserted) vocabulary.words.push_back(token.norm);
      ids.push_back(it->second);
    }
  }
  return vocabulary;
}

std::vector<ContextSample> extract_samples(const Dialogue& dialogue, std::size_t window) {
  if (window < 2) throw ConfigError("window must be at least 2, got " + std::to_string(window));
  std::vector<ContextSample> samples;
  const auto n = dialogue.utterances.size();
  if (n < window) return samples;
  samples.reserve(n - window + 1);
  for (std::size_t start = 0; start + window <= n; ++start) {
    ContextSample sample;
    sample.sample_id = dialogue.dialogue_id + ":" + std::to_string(start);
    sample.dialogue_id = dialogue.dialogue_id;
    sample.start = start;
    sample.utterances.assign(dialogue.utterances.begin() + static_cast<std::ptrdiff_t>(start),
                             dialogue.utterances.begin() + static_cast<std::ptrdiff_t>(start + window));
    sample.target_speaker = sample.utterances.back().speaker;
    samples.push_back(std::move(sample));
  }
  return samples;
}

}  // namespace entrain
