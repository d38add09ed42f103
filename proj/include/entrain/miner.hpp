#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "entrain/corpus.hpp"
#include "entrain/counts.hpp"

namespace entrain {

struct Occurrence {
  std::size_t utterance_index = 0;
  std::size_t token_offset = 0;
  std::string speaker;

  friend bool operator==(const Occurrence&, const Occurrence&) = default;
};

struct Construction {
  std::vector<std::string> tokens;  // norms, length >= 2
  std::vector<Occurrence> occurrences;  // sorted by (utterance, offset)
  std::vector<std::string> speakers_used;
  bool is_maximal = false;

  std::size_t length() const noexcept { return tokens.size(); }
};

/// Joins norms with a unit separator; the lookup key used across the library.
std::string construction_key(std::span<const std::string> tokens);

/// Shared lexicon of one dialogue. Entries are kept sorted by token sequence.
class ConstructionLexicon {
 public:
  ConstructionLexicon() = default;
  ConstructionLexicon(std::string dialogue_id, std::vector<Construction> entries);

  const std::string& dialogue_id() const noexcept { return dialogue_id_; }
  const std::vector<Construction>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  std::optional<std::size_t> find(std::span<const std::string> tokens) const;
  bool contains(std::span<const std::string> tokens) const { return find(tokens).has_value(); }

  /// Longest entry length; 0 for an empty lexicon.
  std::size_t max_length() const noexcept { return max_length_; }
  /// Sequence ids in the index equal entry positions. Built on first use.
  const SequenceIndex& sequences() const;
  /// Entry of every occurrence in the given dialogue utterance, ascending.
  std::span<const std::size_t> entries_in(std::size_t utterance_index) const;

 private:
  std::string dialogue_id_;
  std::vector<Construction> entries_;
  std::size_t max_length_ = 0;
  std::vector<std::vector<std::size_t>> by_utterance_;
  struct LazyIndex {
    std::once_flag built;
    SequenceIndex index;
  };
  std::shared_ptr<LazyIndex> sequences_ = std::make_shared<LazyIndex>();
};

/// Every contiguous norm sequence of length >= 2 used at least once by each
/// speaker, with all of its occurrences in the dialogue. Unfiltered.
ConstructionLexicon mine_shared_constructions(const Dialogue& dialogue);

/// Drops entries with fewer than two alphanumeric tokens, more than half
/// filled pauses, or a standalone ".", "," or "?" token; recomputes maximality.
ConstructionLexicon filter_constructions(const ConstructionLexicon& lexicon, const PauseList& pauses);

/// mine_shared_constructions() followed by filter_constructions().
ConstructionLexicon build_lexicon(const Dialogue& dialogue, const PauseList& pauses);
/// Same, reusing a vocabulary already indexed from `dialogue`.
ConstructionLexicon build_lexicon(const Dialogue& dialogue, const DialogueVocabulary& vocabulary,
                                  const PauseList& pauses);

/// Flags each entry maximal when one of its occurrences is not covered by an
/// occurrence of a longer entry.
void mark_maximal(std::vector<Construction>& entries);

bool passes_construction_filters(std::span<const std::string> tokens, const PauseList& pauses);

struct ConstructionStats {
  std::vector<std::string> tokens;
  std::size_t length = 0;
  /// Distinct utterances in scope containing the entry.
  std::size_t frequency = 0;
  /// Mean gap between consecutive distinct utterances; absent when frequency is 1.
  std::optional<double> rep_distance;
  /// Occurrences in scope, counting repeats inside one utterance.
  std::size_t incidence = 0;
  double pmi = 0.0;
};

/// Range of dialogue utterance indices a statistic is computed over.
struct Scope {
  std::size_t first = 0;
  std::size_t last = 0;  // exclusive
  std::vector<const Utterance*> utterances;

  static Scope of(const ContextSample& sample);
  static Scope of(const Dialogue& dialogue);
};

/// One row per lexicon entry that occurs in scope; PMI treats the scope as the sample.
std::vector<ConstructionStats> construction_stats(const ConstructionLexicon& lexicon, const Scope& scope,
                                                  const CorpusCounts& corpus_counts);

}  // namespace entrain
