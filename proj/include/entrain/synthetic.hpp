#pragma once

#include <cstddef>
#include <cstdint>

#include "entrain/corpus.hpp"

namespace entrain {

/// Parameters of a synthetic two-speaker corpus with planted repetition decay.
/// Intercepts and slopes are in construction-overlap units: the expected CO of
/// a (previous, current) pair at distance d is intercept + slope * d.
struct SyntheticSpec {
  std::size_t n_dialogues = 200;
  std::size_t utterances_per_dialogue = 30;
  std::size_t vocab_size = 5000;
  std::size_t construction_length = 5;
  /// Tokens per utterance; 0 picks the smallest size that always fits.
  std::size_t words_per_utterance = 0;
  double between_intercept = 0.105;
  double between_slope = -0.01;
  double within_intercept = 0.021;
  double within_slope = 0.0;
  /// Standard deviation of a per-dialogue shift of both intercepts.
  double noise_sigma = 0.0;
  std::uint64_t seed = 1;
};

struct SyntheticTruth {
  SyntheticSpec spec;
  std::size_t words_per_utterance = 0;
  std::size_t types_per_construction = 0;
  /// CO contributed by one planted construction shared by a pair.
  double co_per_planting = 0.0;
};

struct SyntheticCorpus {
  Corpus corpus;
  SyntheticTruth truth;
};

/// Each pair of turns at distance 1..9 shares a fresh construction with
/// probability (intercept + slope * d) / co_per_planting. Within-speaker
/// constructions are also placed in an anchor turn of the partner, far enough
/// away that the anchor never forms an analysed pair with either turn.
/// Throws ConfigError when a probability would leave [0, 1].
SyntheticCorpus generate_synthetic(const SyntheticSpec& spec);

}  // namespace entrain
