#include "entrain/metrics.hpp"

#include <algorithm>
#include <cstdint>
#include <json.hpp>
#include <unordered_set>

#include <absl/container/flat_hash_map.h>

#include "entrain/error.hpp"
#include "entrain/io.hpp"

namespace entrain {

std::string_view to_string(SpeakerRelation relation) noexcept {
  return relation == SpeakerRelation::kWithin ? "within" : "between";
}

std::string_view to_string(ModelType type) noexcept {
  switch (type) {
    case ModelType::kBase: return "base";
    case ModelType::kTuned: return "tuned";
    case ModelType::kNone: return "n/a";
  }
  return "n/a";
}

std::string_view to_string(CoMode mode) noexcept { return mode == CoMode::kTokens ? "tokens" : "types"; }
std::string_view to_string(PairMode mode) noexcept { return mode == PairMode::kAll ? "all" : "target"; }

SpeakerRelation parse_speaker_relation(std::string_view text) {
  if (text == "between") return SpeakerRelation::kBetween;
  if (text == "within") return SpeakerRelation::kWithin;
  throw DataError("unknown speaker relation '" + std::string(text) + "'");
}

ModelType parse_model_type(std::string_view text) {
  if (text == "base") return ModelType::kBase;
  if (text == "tuned") return ModelType::kTuned;
  if (text == "n/a" || text.empty()) return ModelType::kNone;
  throw DataError("unknown model type '" + std::string(text) + "'");
}

CoMode parse_co_mode(std::string_view text) {
  if (text == "types") return CoMode::kTypes;
  if (text == "tokens") return CoMode::kTokens;
  throw ConfigError("--co-mode must be 'types' or 'tokens'");
}

PairMode parse_pair_mode(std::string_view text) {
  if (text == "target") return PairMode::kTarget;
  if (text == "all") return PairMode::kAll;
  throw ConfigError("--pairs must be 'target' or 'all'");
}

double vocabulary_overlap(const Utterance& current, const Utterance& previous) {
  std::unordered_set<std::string_view> previous_words;
  for (const auto& t : previous.tokens) {
    if (!t.is_punct) previous_words.insert(t.norm);
  }
  std::size_t words = 0;
  std::size_t hits = 0;
  for (const auto& t : current.tokens) {
    if (t.is_punct) continue;
    ++words;
    if (previous_words.contains(t.norm)) ++hits;
  }
  return words == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(words);
}

namespace {

TurnProfile profile_of(std::span<const std::size_t> found) {
  TurnProfile profile;
  for (std::size_t i = 0; i < found.size();) {
    std::size_t j = i;
    while (j < found.size() && found[j] == found[i]) ++j;
    profile.entries.push_back(found[i]);
    profile.counts.push_back(j - i);
    i = j;
  }
  return profile;
}

}  // namespace

TurnProfile profile_turn(const Utterance& utterance, const ConstructionLexicon& lexicon) {
  std::vector<std::size_t> found;
  lexicon.sequences().scan(utterance.tokens, [&](std::size_t, std::size_t, std::size_t entry) {
    found.push_back(entry);
  });
  std::sort(found.begin(), found.end());
  return profile_of(found);
}

OverlapResult construction_overlap(const Utterance& current, const TurnProfile& current_profile,
                                   const TurnProfile& previous_profile, CoMode mode) {
  OverlapResult result;
  std::size_t numerator = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < current_profile.entries.size() && j < previous_profile.entries.size()) {
    if (current_profile.entries[i] < previous_profile.entries[j]) {
      ++i;
    } else if (previous_profile.entries[j] < current_profile.entries[i]) {
      ++j;
    } else {
      result.shared.push_back(current_profile.entries[i]);
      numerator += mode == CoMode::kTypes ? 1 : current_profile.counts[i];
      ++i;
      ++j;
    }
  }
  const auto words = current.word_count();
  result.ratio = words == 0 ? 0.0 : static_cast<double>(numerator) / static_cast<double>(words);
  return result;
}

OverlapResult construction_overlap(const Utterance& current, const Utterance& previous,
                                   const ConstructionLexicon& lexicon, CoMode mode) {
  return construction_overlap(current, profile_turn(current, lexicon), profile_turn(previous, lexicon), mode);
}

namespace {

std::size_t slots_in(const std::vector<Utterance>& utterances, std::size_t length) {
  std::size_t total = 0;
  for (const auto& u : utterances) total += u.tokens.size() >= length ? u.tokens.size() - length + 1 : 0;
  return total;
}

std::size_t occurrences_in(const Utterance& utterance, std::span<const std::string> tokens) {
  std::size_t hits = 0;
  const auto& ts = utterance.tokens;
  for (std::size_t start = 0; start + tokens.size() <= ts.size(); ++start) {
    bool match = true;
    for (std::size_t k = 0; k < tokens.size() && match; ++k) match = ts[start + k].norm == tokens[k];
    if (match) ++hits;
  }
  return hits;
}

}  // namespace

double pmi(std::span<const std::string> tokens, const ContextSample& sample, const CorpusCounts& counts) {
  std::size_t in_sample = 0;
  for (const auto& u : sample.utterances) in_sample += occurrences_in(u, tokens);
  if (in_sample == 0) {
    throw InvariantError("PMI requested for a construction absent from sample " + sample.sample_id);
  }
  return pmi_bits(in_sample, slots_in(sample.utterances, tokens.size()), counts.count(tokens),
                  counts.slots(tokens.size()));
}

namespace {

/// Per-utterance data shared by every window an utterance appears in.
struct TurnIndex {
  std::vector<std::uint32_t> words;  // non-punctuation word ids, in order
  std::vector<bool> present;         // by word id
  TurnProfile profile;
};

class TurnIndexer {
 public:
  TurnIndex index(const Utterance& utterance, TurnProfile profile) {
    TurnIndex turn;
    for (const auto& t : utterance.tokens) {
      if (t.is_punct) continue;
      auto it = ids_.find(t.norm);
      if (it == ids_.end()) it = ids_.emplace(t.norm, static_cast<std::uint32_t>(ids_.size())).first;
      turn.words.push_back(it->second);
    }
    turn.profile = std::move(profile);
    return turn;
  }

  void finish(std::vector<TurnIndex>& turns) const {
    for (auto& turn : turns) {
      turn.present.assign(ids_.size(), false);
      for (auto w : turn.words) turn.present[w] = true;
    }
  }

 private:
  absl::flat_hash_map<std::string, std::uint32_t> ids_;
};

/// Corpus count of each lexicon entry, looked up once.
class EntryCounts {
 public:
  EntryCounts(const ConstructionLexicon& lexicon, const CorpusCounts& counts)
      : lexicon_(lexicon), counts_(counts), cache_(lexicon.size(), kUnknown) {}
  /// Looks every entry up at once.
  static EntryCounts all(const ConstructionLexicon& lexicon, const CorpusCounts& counts) {
    EntryCounts out(lexicon, counts);
    out.cache_ = counts.count_each(lexicon.entries());
    return out;
  }

  std::size_t operator()(std::size_t entry) {
    if (cache_[entry] == kUnknown) cache_[entry] = counts_.count(lexicon_.entries()[entry].tokens);
    return cache_[entry];
  }

 private:
  static constexpr std::size_t kUnknown = SIZE_MAX;
  const ConstructionLexicon& lexicon_;
  const CorpusCounts& counts_;
  std::vector<std::size_t> cache_;
};

std::vector<RepetitionRecord> window_pairs(std::span<const Utterance> utterances, std::span<const TurnIndex> turns,
                                           const std::string& sample_id, const ConstructionLexicon& lexicon,
                                           const CorpusCounts& counts, EntryCounts& entry_counts,
                                           const PairOptions& options) {
  const auto n = utterances.size();

  // PMI per lexicon entry is a property of the window, so cache it.
  absl::flat_hash_map<std::size_t, double> pmi_cache;
  auto entry_pmi = [&](std::size_t entry) {
    auto it = pmi_cache.find(entry);
    if (it != pmi_cache.end()) return it->second;
    std::size_t in_sample = 0;
    for (const auto& turn : turns) {
      const auto& p = turn.profile;
      auto pos = std::lower_bound(p.entries.begin(), p.entries.end(), entry);
      if (pos != p.entries.end() && *pos == entry) in_sample += p.counts[static_cast<std::size_t>(pos - p.entries.begin())];
    }
    const auto& tokens = lexicon.entries()[entry].tokens;
    std::size_t sample_slots = 0;
    for (const auto& u : utterances) {
      sample_slots += u.tokens.size() >= tokens.size() ? u.tokens.size() - tokens.size() + 1 : 0;
    }
    double value = pmi_bits(in_sample, sample_slots, entry_counts(entry), counts.slots(tokens.size()));
    pmi_cache.emplace(entry, value);
    return value;
  };

  auto overlap_vo = [&](const TurnIndex& previous, const TurnIndex& current) {
    if (current.words.empty()) return 0.0;
    std::size_t hits = 0;
    for (auto w : current.words) hits += previous.present[w] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(current.words.size());
  };

  std::vector<RepetitionRecord> records;
  auto emit = [&](std::size_t prev, std::size_t cur) {
    const auto& previous = utterances[prev - 1];
    const auto& current = utterances[cur - 1];
    RepetitionRecord r;
    r.sample_id = sample_id;
    r.prev_index = prev;
    r.cur_index = cur;
    r.distance = cur - prev;
    r.speaker_relation =
        previous.speaker == current.speaker ? SpeakerRelation::kWithin : SpeakerRelation::kBetween;
    r.vo = overlap_vo(turns[prev - 1], turns[cur - 1]);
    auto overlap = construction_overlap(current, turns[cur - 1].profile, turns[prev - 1].profile, options.co_mode);
    r.co = overlap.ratio;
    if (!overlap.shared.empty() && (options.shared_tokens || options.pmi)) {
      double total = 0.0;
      if (options.shared_tokens) r.shared_constructions.reserve(overlap.shared.size());
      for (auto entry : overlap.shared) {
        if (options.shared_tokens) r.shared_constructions.push_back(lexicon.entries()[entry].tokens);
        if (options.pmi) total += entry_pmi(entry);
      }
      if (options.pmi) r.pmi_avg = total / static_cast<double>(overlap.shared.size());
    }
    r.producer = options.producer;
    r.model_type = options.model_type;
    r.generation_index = options.generation_index;
    records.push_back(std::move(r));
  };

  if (options.pair_mode == PairMode::kTarget) {
    for (std::size_t prev = 1; prev < n; ++prev) emit(prev, n);
  } else {
    for (std::size_t cur = 2; cur <= n; ++cur) {
      for (std::size_t prev = 1; prev < cur; ++prev) emit(prev, cur);
    }
  }
  return records;
}

}  // namespace

std::vector<RepetitionRecord> pair_records(const ContextSample& sample, const ConstructionLexicon& lexicon,
                                           const CorpusCounts& counts, const PairOptions& options) {
  const auto n = sample.utterances.size();
  // Context turns come from the lexicon's own dialogue, whose occurrence
  // lists are complete; the target may have been replaced, so scan it.
  const bool own_dialogue = lexicon.dialogue_id() == sample.dialogue_id;
  TurnIndexer indexer;
  std::vector<TurnIndex> turns;
  turns.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& u = sample.utterances[k];
    turns.push_back(indexer.index(u, own_dialogue && k + 1 < n ? profile_of(lexicon.entries_in(sample.start + k))
                                                               : profile_turn(u, lexicon)));
  }
  indexer.finish(turns);
  EntryCounts entry_counts(lexicon, counts);
  return window_pairs(sample.utterances, turns, sample.sample_id, lexicon, counts, entry_counts, options);
}

std::vector<RepetitionRecord> dialogue_pair_records(const Dialogue& dialogue, std::size_t window,
                                                    const ConstructionLexicon& lexicon, const CorpusCounts& counts,
                                                    const PairOptions& options) {
  return dialogue_pair_records(dialogue, index_vocabulary(dialogue), window, lexicon, counts, options);
}

std::vector<RepetitionRecord> dialogue_pair_records(const Dialogue& dialogue, const DialogueVocabulary& vocabulary,
                                                    std::size_t window, const ConstructionLexicon& lexicon,
                                                    const CorpusCounts& counts, const PairOptions& options) {
  if (window < 2) throw ConfigError("window must be at least 2, got " + std::to_string(window));
  const auto& utterances = dialogue.utterances;
  if (vocabulary.ids.size() != utterances.size()) {
    throw InvariantError("vocabulary does not match dialogue '" + dialogue.dialogue_id + "'");
  }
  const bool own_dialogue = lexicon.dialogue_id() == dialogue.dialogue_id;
  auto entry_counts = options.pmi ? EntryCounts::all(lexicon, counts) : EntryCounts(lexicon, counts);
  std::vector<TurnIndex> turns(utterances.size());
  for (std::size_t k = 0; k < utterances.size(); ++k) {
    auto& turn = turns[k];
    const auto& tokens = utterances[k].tokens;
    turn.present.assign(vocabulary.words.size(), false);
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      if (tokens[t].is_punct) continue;
      turn.words.push_back(vocabulary.ids[k][t]);
      turn.present[vocabulary.ids[k][t]] = true;
    }
    turn.profile = own_dialogue ? profile_of(lexicon.entries_in(k)) : profile_turn(utterances[k], lexicon);
  }
  std::vector<RepetitionRecord> records;
  for (std::size_t start = 0; start + window <= utterances.size(); ++start) {
    auto sample = window_pairs(std::span(utterances).subspan(start, window), std::span(turns).subspan(start, window),
                               dialogue.dialogue_id + ":" + std::to_string(start), lexicon, counts, entry_counts, options);
    records.insert(records.end(), std::make_move_iterator(sample.begin()), std::make_move_iterator(sample.end()));
  }
  return records;
}

ContextSample with_target(const ContextSample& sample, Utterance target) {
  ContextSample out = sample;
  target.index = out.utterances.back().index;
  out.target_speaker = target.speaker;
  out.utterances.back() = std::move(target);
  return out;
}

CorpusCounts count_lexicon_sequences(const std::vector<Dialogue>& dialogues,
                                     const std::vector<ConstructionLexicon>& lexica) {
  SequenceIndex tracked;
  std::size_t tokens = 0;
  for (const auto& lexicon : lexica) {
    for (const auto& entry : lexicon.entries()) tokens += entry.length();
  }
  tracked.reserve(tokens);
  for (const auto& lexicon : lexica) {
    for (const auto& entry : lexicon.entries()) tracked.insert(entry.tokens);
  }
  std::vector<const Utterance*> all;
  for (const auto& d : dialogues) {
    for (const auto& u : d.utterances) all.push_back(&u);
  }
  return CorpusCounts::build(all, std::move(tracked));
}

const std::vector<std::string>& record_csv_header() {
  static const std::vector<std::string> header{"sample_id", "prev_index",       "cur_index",
                                               "distance",  "speaker_relation", "vo",
                                               "co",        "pmi_avg",          "producer",
                                               "model_type", "generation_index"};
  return header;
}

std::string record_csv_row(const RepetitionRecord& r) {
  return io::csv_row({r.sample_id, std::to_string(r.prev_index), std::to_string(r.cur_index),
                      std::to_string(r.distance), std::string(to_string(r.speaker_relation)),
                      io::format_double(r.vo), io::format_double(r.co), io::format_optional(r.pmi_avg),
                      r.producer, std::string(to_string(r.model_type)),
                      r.generation_index ? std::to_string(*r.generation_index) : std::string{}});
}

std::string records_to_csv(const std::vector<RepetitionRecord>& records) {
  std::string out = io::csv_row(record_csv_header());
  for (const auto& r : records) out += record_csv_row(r);
  return out;
}

std::vector<RepetitionRecord> records_from_csv(std::string_view content) {
  auto table = io::CsvTable::parse(content);
  if (table.header() != record_csv_header()) throw DataError("unexpected repetition record CSV header");
  std::vector<RepetitionRecord> records;
  records.reserve(table.rows().size());
  for (std::size_t i = 0; i < table.rows().size(); ++i) {
    const auto& row = table.rows()[i];
    try {
      RepetitionRecord r;
      r.sample_id = row[0];
      r.prev_index = std::stoul(row[1]);
      r.cur_index = std::stoul(row[2]);
      r.distance = std::stoul(row[3]);
      r.speaker_relation = parse_speaker_relation(row[4]);
      r.vo = io::parse_double(row[5]);
      r.co = io::parse_double(row[6]);
      r.pmi_avg = io::parse_optional_double(row[7]);
      r.producer = row[8];
      r.model_type = parse_model_type(row[9]);
      if (!row[10].empty()) r.generation_index = std::stoul(row[10]);
      records.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw DataError("line " + std::to_string(table.line_of(i)) + ": malformed repetition record");
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(table.line_of(i)) + ": " + e.what());
    }
  }
  return records;
}

std::string record_to_jsonl(const RepetitionRecord& r) {
  nlohmann::ordered_json j;
  j["sample_id"] = r.sample_id;
  j["prev_index"] = r.prev_index;
  j["cur_index"] = r.cur_index;
  j["distance"] = r.distance;
  j["speaker_relation"] = to_string(r.speaker_relation);
  j["vo"] = r.vo;
  j["co"] = r.co;
  j["shared_constructions"] = r.shared_constructions;
  j["pmi_avg"] = r.pmi_avg ? nlohmann::ordered_json(*r.pmi_avg) : nlohmann::ordered_json(nullptr);
  j["producer"] = r.producer;
  j["model_type"] = to_string(r.model_type);
  j["generation_index"] =
      r.generation_index ? nlohmann::ordered_json(*r.generation_index) : nlohmann::ordered_json(nullptr);
  return j.dump() + "\n";
}

}  // namespace entrain
