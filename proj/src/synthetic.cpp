#include "entrain/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "entrain/error.hpp"

namespace entrain {

namespace {

constexpr std::size_t kMaxDistance = 9;

std::size_t fitting_words(std::size_t length) { return 2 * kMaxDistance * length + 10; }

void check_spec(const SyntheticSpec& spec, const SyntheticTruth& truth) {
  if (spec.n_dialogues == 0) throw ConfigError("synthetic corpus needs at least one dialogue");
  if (spec.utterances_per_dialogue < 30) {
    throw ConfigError("synthetic dialogues need at least 30 utterances so anchors stay out of analysed pairs");
  }
  if (spec.construction_length < 2) throw ConfigError("construction length must be at least 2");
  if (spec.vocab_size == 0) throw ConfigError("vocabulary must not be empty");
  if (!std::isfinite(spec.between_slope) || !std::isfinite(spec.within_slope) ||
      !std::isfinite(spec.between_intercept) || !std::isfinite(spec.within_intercept)) {
    throw ConfigError("synthetic slopes and intercepts must be finite");
  }
  if (!(spec.noise_sigma >= 0.0)) throw ConfigError("noise sigma must be non-negative");
  if (truth.words_per_utterance < 2 * kMaxDistance * spec.construction_length) {
    throw ConfigError("words per utterance too small to hold every planted construction");
  }
  for (std::size_t d = 1; d <= kMaxDistance; ++d) {
    for (auto [intercept, slope] : {std::pair{spec.between_intercept, spec.between_slope},
                                    std::pair{spec.within_intercept, spec.within_slope}}) {
      const double p = (intercept + slope * static_cast<double>(d)) / truth.co_per_planting;
      if (p < 0.0 || p > 1.0) {
        throw ConfigError("planted probability " + std::to_string(p) + " at distance " + std::to_string(d) +
                          " lies outside [0, 1]");
      }
    }
  }
}

}  // namespace

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
  SyntheticCorpus out;
  auto& truth = out.truth;
  truth.spec = spec;
  truth.words_per_utterance = spec.words_per_utterance ? spec.words_per_utterance : fitting_words(spec.construction_length);
  truth.types_per_construction = spec.construction_length * (spec.construction_length - 1) / 2;
  truth.co_per_planting =
      static_cast<double>(truth.types_per_construction) / static_cast<double>(truth.words_per_utterance);
  check_spec(spec, truth);

  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<std::size_t> filler_word(0, spec.vocab_size - 1);
  std::normal_distribution<double> shift(0.0, 1.0);

  out.corpus.name = "synthetic";
  const std::size_t n = spec.utterances_per_dialogue;
  const std::string speakers[2] = {"A", "B"};

  for (std::size_t dlg = 0; dlg < spec.n_dialogues; ++dlg) {
    const double offset = spec.noise_sigma > 0.0 ? spec.noise_sigma * shift(rng) : 0.0;
    // Blocks hold indices into the dialogue's constructions.
    std::vector<std::vector<std::string>> constructions;
    std::vector<std::vector<std::size_t>> blocks(n);
    struct Shared {
      std::size_t first, second, construction;
    };
    std::vector<Shared> within_shared;

    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n && j - i <= kMaxDistance; ++j) {
        const std::size_t d = j - i;
        const bool within = d % 2 == 0;
        const double intercept = (within ? spec.within_intercept : spec.between_intercept) + offset;
        const double slope = within ? spec.within_slope : spec.between_slope;
        const double p = std::clamp((intercept + slope * static_cast<double>(d)) / truth.co_per_planting, 0.0, 1.0);
        if (!std::bernoulli_distribution(p)(rng)) continue;

        std::vector<std::string> construction;
        const std::string stem = "s" + std::to_string(dlg) + "p" + std::to_string(i) + "x" + std::to_string(j) + "t";
        for (std::size_t k = 0; k < spec.construction_length; ++k) construction.push_back(stem + std::to_string(k));
        constructions.push_back(std::move(construction));
        blocks[i].push_back(constructions.size() - 1);
        blocks[j].push_back(constructions.size() - 1);
        if (within) within_shared.push_back({i, j, constructions.size() - 1});
      }
    }

    // A within-speaker construction also needs the partner, so a copy goes to
    // a partner turn at least kMaxDistance + 1 away from both users, keeping
    // every turn at the fixed length.
    auto used = [&](std::size_t u) { return blocks[u].size() * spec.construction_length; };
    for (const auto& w : within_shared) {
      const std::size_t partner = 1 - w.first % 2;
      std::size_t best = n, best_room = 0;
      for (std::size_t a = partner; a < n; a += 2) {
        const bool far = a + kMaxDistance < w.first || a > w.second + kMaxDistance;
        if (!far) continue;
        const std::size_t room = truth.words_per_utterance - used(a);
        if (room > best_room) {
          best = a;
          best_room = room;
        }
      }
      if (best == n || best_room < spec.construction_length) {
        throw InvariantError("no partner turn has room for a planted construction in dialogue " +
                             std::to_string(dlg));
      }
      blocks[best].push_back(w.construction);
    }

    Dialogue dialogue;
    dialogue.dialogue_id = "synth" + std::to_string(dlg);
    dialogue.speakers = {speakers[0], speakers[1]};
    for (std::size_t u = 0; u < n; ++u) {
      // Items are whole blocks or single filler words, shuffled together.
      // Non-negative items are constructions, negative ones encode a filler word.
      std::vector<std::int64_t> items;
      for (auto b : blocks[u]) items.push_back(static_cast<std::int64_t>(b));
      for (std::size_t w = used(u); w < truth.words_per_utterance; ++w) {
        items.push_back(-1 - static_cast<std::int64_t>(filler_word(rng)));
      }
      std::shuffle(items.begin(), items.end(), rng);
      Utterance utterance;
      utterance.index = u;
      utterance.speaker = speakers[u % 2];
      utterance.tokens.reserve(truth.words_per_utterance);
      auto add = [&](const std::string& word) {
        auto& token = utterance.tokens.emplace_back();
        token.surface = word;
        token.norm = word;
        token.is_alphanumeric = true;
      };
      for (auto item : items) {
        if (item >= 0) {
          for (const auto& word : constructions[static_cast<std::size_t>(item)]) add(word);
        } else {
          add("w" + std::to_string(-1 - item));
        }
      }
      dialogue.utterances.push_back(std::move(utterance));
    }
    out.corpus.dialogues.push_back(std::move(dialogue));
  }
  return out;
}

}  // namespace entrain
