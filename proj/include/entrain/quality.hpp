#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "entrain/metrics.hpp"
#include "entrain/stats.hpp"

namespace entrain {

/// Floor applied to a zero modified n-gram precision before taking logs.
inline constexpr double kBleuEpsilon = 1e-9;

struct GenerationRecord {
  std::string sample_id;
  std::string model;
  ModelType model_type = ModelType::kBase;
  std::size_t generation_index = 0;
  std::string text;
  std::vector<Token> tokens;
};

struct BleuScore {
  double bleu = 0.0;
  double bp = 0.0;  // brevity penalty
  double lr = 0.0;  // hypothesis length / reference length
  std::vector<double> precisions;
  std::size_t hypothesis_length = 0;
  std::size_t reference_length = 0;
};

/// Corpus BLEU over aligned token sequences (one reference per hypothesis).
BleuScore corpus_bleu(const std::vector<std::vector<std::string>>& references,
                      const std::vector<std::vector<std::string>>& hypotheses, std::size_t max_n = 4);
/// Tokenizes both sides with tokenize() and compares norms.
BleuScore corpus_bleu_text(const std::vector<std::string>& references, const std::vector<std::string>& hypotheses,
                           std::size_t max_n = 4);

struct GenerationKey {
  std::string sample_id;
  std::string model;
  ModelType model_type = ModelType::kBase;
  std::size_t generation_index = 0;

  auto operator<=>(const GenerationKey&) const = default;
};

struct GroupKey {
  std::string model;
  ModelType model_type = ModelType::kBase;
  std::size_t generation_index = 0;

  auto operator<=>(const GroupKey&) const = default;
};

std::string describe(const GenerationKey& key);
std::string describe(const GroupKey& key);

struct ExternalScores {
  std::optional<double> bert_p;
  std::optional<double> bert_r;
  std::optional<double> bert_f1;
  std::optional<std::string> ppl_evaluator;
  std::optional<double> ppl_ii;
  std::optional<double> ppl_id;
};

template <typename Key, typename Value>
struct KeyedLoad {
  std::map<Key, Value> values;
  std::size_t rows = 0;        // well-formed lines
  std::size_t duplicates = 0;  // lines overwritten by a later line with the same key
  std::vector<std::string> warnings;
};

std::vector<GenerationRecord> parse_generations(std::string_view content);
KeyedLoad<GenerationKey, ExternalScores> parse_external_scores(std::string_view content);
KeyedLoad<GroupKey, double> parse_mauve(std::string_view content);

struct QualityRow {
  GenerationKey key;
  ExternalScores scores;
  std::optional<double> mauve;
};

struct JoinReport {
  std::vector<QualityRow> rows;  // one per generation, in generation order
  std::size_t score_rows = 0;    // lines read from the score file
  std::size_t matched = 0;
  std::size_t duplicates = 0;
  std::vector<std::string> unmatched;  // score keys with no generation
  std::vector<std::string> warnings;
};

/// Attaches per-generation scores and per-group MAUVE to generations.
/// Unmatched keys are reported, never fatal.
JoinReport join_scores(const std::vector<GenerationRecord>& generations,
                       const KeyedLoad<GenerationKey, ExternalScores>& scores,
                       const KeyedLoad<GroupKey, double>& mauve);

std::string quality_rows_to_csv(const std::vector<QualityRow>& rows);

enum class LikenessMetric { kCo, kVo, kPropRepetition };
std::string_view to_string(LikenessMetric metric) noexcept;

struct HumanLikenessRecord {
  GroupKey group;
  LikenessMetric metric = LikenessMetric::kCo;
  double distance = 0.0;  // |human - model|
};

std::vector<HumanLikenessRecord> humanlikeness_distances(double human_value,
                                                         const std::map<GroupKey, double>& model_values,
                                                         LikenessMetric metric);

/// Spearman correlation between human-likeness distance and a quality score,
/// joined on group. Requires at least 3 joined groups.
stats::CorrelationResult humanlikeness_correlation(const std::vector<HumanLikenessRecord>& distances,
                                                   const std::map<GroupKey, double>& quality);

/// Share of the utterance's words covered by an occurrence of any lexicon entry.
double prop_repetition(const Utterance& utterance, const ConstructionLexicon& lexicon);

}  // namespace entrain
