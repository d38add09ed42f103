#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "entrain/attribution.hpp"
#include "entrain/corpus.hpp"
#include "entrain/metrics.hpp"
#include "entrain/miner.hpp"
#include "entrain/stats.hpp"
#include "entrain/synthetic.hpp"

namespace entrain {

struct AnalysisOptions {
  std::size_t window = 10;
  CoMode co_mode = CoMode::kTypes;
  PairMode pair_mode = PairMode::kTarget;
  /// Per-sample construction statistics (length, frequency, distance, PMI).
  bool construction_stats = true;
  /// Token lists of the shared constructions in each record.
  bool shared_tokens = true;
  /// Corpus counts and pmi_avg. Construction statistics need them.
  bool pmi = true;
};

struct SampleSummary {
  std::string sample_id;
  std::string dialogue_id;
  std::size_t start = 0;
  std::string target_speaker;
};

struct ScopedStats {
  std::string scope_id;
  ConstructionStats stats;
};

struct Analysis {
  Corpus corpus;  // turns normalised
  std::vector<SampleSummary> samples;
  std::vector<ConstructionLexicon> lexica;  // parallel to corpus.dialogues
  CorpusCounts counts;
  std::vector<RepetitionRecord> records;
  std::vector<ScopedStats> construction_stats;
};

/// normalise -> sample -> mine -> filter -> corpus counts -> pair records.
Analysis analyze(Corpus corpus, const AnalysisOptions& options = {});

struct RunConfig {
  std::optional<std::filesystem::path> corpus_path;
  CorpusFormat format = CorpusFormat::kGenericJsonl;
  std::optional<SyntheticSpec> synthetic;  // used when no corpus path is given
  std::optional<std::string> pauses;
  std::size_t window = 10;
  std::filesystem::path out_dir;
  CoMode co_mode = CoMode::kTypes;
  PairMode pair_mode = PairMode::kTarget;
  std::uint64_t seed = 1;
  std::optional<std::filesystem::path> attributions;
};

/// Throws ConfigError for a window below 2, a missing input, or an unusable
/// output directory.
void validate(const RunConfig& config);

/// File name -> content, written in name order.
using Bundle = std::map<std::string, std::string>;

/// Runs every stage and writes the bundle to config.out_dir. A failing stage
/// is rethrown with its name prefixed, keeping the original exit code.
Bundle run_pipeline(const RunConfig& config);

/// Serialisers shared by the pipeline and the command-line tool.
std::string samples_to_csv(const std::vector<SampleSummary>& samples);
/// Context samples as consumed by the language-model adapter: context turns, then the target turn.
std::string samples_to_jsonl(const std::vector<ContextSample>& samples);
std::string lexicon_to_jsonl(const ConstructionLexicon& lexicon);
std::string construction_stats_to_csv(const std::vector<ScopedStats>& rows);
std::string dialogues_to_jsonl(const std::vector<Dialogue>& dialogues);
std::string corpus_summary_json(const Corpus& corpus, std::size_t window);
std::string synthetic_truth_json(const SyntheticTruth& truth);
/// Mean measure by distance and speaker relation, as x/y series.
std::string plot_data_json(const std::vector<RepetitionRecord>& records, const std::vector<ElementRow>& elements);
std::string decay_report(const std::vector<RepetitionRecord>& records, std::string* csv_out = nullptr);

void write_bundle(const Bundle& bundle, const std::filesystem::path& out_dir);

}  // namespace entrain
