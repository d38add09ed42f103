#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "entrain/corpus.hpp"
#include "entrain/counts.hpp"
#include "entrain/miner.hpp"

namespace entrain {

enum class SpeakerRelation { kBetween, kWithin };
enum class ModelType { kBase, kTuned, kNone };
/// How the construction-overlap numerator counts shared entries.
enum class CoMode { kTypes, kTokens };
enum class PairMode { kTarget, kAll };

std::string_view to_string(SpeakerRelation relation) noexcept;
std::string_view to_string(ModelType type) noexcept;
std::string_view to_string(CoMode mode) noexcept;
std::string_view to_string(PairMode mode) noexcept;
SpeakerRelation parse_speaker_relation(std::string_view text);
ModelType parse_model_type(std::string_view text);
CoMode parse_co_mode(std::string_view text);
PairMode parse_pair_mode(std::string_view text);

struct RepetitionRecord {
  std::string sample_id;
  std::size_t prev_index = 0;  // 1-based window positions
  std::size_t cur_index = 0;
  std::size_t distance = 0;
  SpeakerRelation speaker_relation = SpeakerRelation::kBetween;
  double vo = 0.0;
  double co = 0.0;
  std::vector<std::vector<std::string>> shared_constructions;
  std::optional<double> pmi_avg;
  std::string producer = "human";
  ModelType model_type = ModelType::kNone;
  std::optional<std::size_t> generation_index;  // model generations only

  friend bool operator==(const RepetitionRecord&, const RepetitionRecord&) = default;
};

/// Share of non-punctuation tokens of `current` whose norm appears among the
/// non-punctuation norms of `previous`. Zero when `current` has no words.
double vocabulary_overlap(const Utterance& current, const Utterance& previous);

/// Lexicon entries found in one utterance, with how often each occurs.
struct TurnProfile {
  std::vector<std::size_t> entries;  // sorted lexicon positions
  std::vector<std::size_t> counts;   // occurrences, parallel to entries
};

TurnProfile profile_turn(const Utterance& utterance, const ConstructionLexicon& lexicon);

struct OverlapResult {
  double ratio = 0.0;
  std::vector<std::size_t> shared;  // lexicon positions present in both turns
};

/// Shared lexicon entries between the turns over the word count of `current`.
OverlapResult construction_overlap(const Utterance& current, const Utterance& previous,
                                   const ConstructionLexicon& lexicon, CoMode mode = CoMode::kTypes);
OverlapResult construction_overlap(const Utterance& current, const TurnProfile& current_profile,
                                   const TurnProfile& previous_profile, CoMode mode = CoMode::kTypes);

/// Specificity in bits of `tokens` to `sample` against corpus-wide counts.
/// Throws InvariantError if the sequence is absent from the sample.
double pmi(std::span<const std::string> tokens, const ContextSample& sample, const CorpusCounts& counts);

struct PairOptions {
  std::string producer = "human";
  ModelType model_type = ModelType::kNone;
  CoMode co_mode = CoMode::kTypes;
  PairMode pair_mode = PairMode::kTarget;
  std::optional<std::size_t> generation_index;
  /// Fill RepetitionRecord::shared_constructions.
  bool shared_tokens = true;
  /// Fill RepetitionRecord::pmi_avg; without it `counts` is not read.
  bool pmi = true;
};

/// Target mode: (prev, last) for prev = 1 .. n-1. All mode: every prev < cur.
std::vector<RepetitionRecord> pair_records(const ContextSample& sample, const ConstructionLexicon& lexicon,
                                           const CorpusCounts& counts, const PairOptions& options = {});

/// pair_records() over every extract_samples() window of the dialogue, in
/// sample order, without copying the windows.
std::vector<RepetitionRecord> dialogue_pair_records(const Dialogue& dialogue, std::size_t window,
                                                    const ConstructionLexicon& lexicon, const CorpusCounts& counts,
                                                    const PairOptions& options = {});
/// Same, reusing a vocabulary already indexed from `dialogue`.
std::vector<RepetitionRecord> dialogue_pair_records(const Dialogue& dialogue, const DialogueVocabulary& vocabulary,
                                                    std::size_t window, const ConstructionLexicon& lexicon,
                                                    const CorpusCounts& counts, const PairOptions& options = {});

/// Copy of `sample` with its target replaced, e.g. by a model generation.
ContextSample with_target(const ContextSample& sample, Utterance target);

/// Corpus-wide counts of every sequence in any of the lexica.
CorpusCounts count_lexicon_sequences(const std::vector<Dialogue>& dialogues,
                                     const std::vector<ConstructionLexicon>& lexica);

/// Fixed CSV column order for repetition records.
const std::vector<std::string>& record_csv_header();
std::string record_csv_row(const RepetitionRecord& record);
std::string records_to_csv(const std::vector<RepetitionRecord>& records);
/// Parses what records_to_csv() wrote; shared_constructions is not part of the CSV.
std::vector<RepetitionRecord> records_from_csv(std::string_view content);
std::string record_to_jsonl(const RepetitionRecord& record);

}  // namespace entrain
