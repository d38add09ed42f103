#include "entrain/miner.hpp"

#include <algorithm>
#include <cstdint>

#include <absl/container/flat_hash_map.h>

#include "entrain/error.hpp"

namespace entrain {

std::string construction_key(std::span<const std::string> tokens) {
  std::string key;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) key += '\x1f';
    key += tokens[i];
  }
  return key;
}

ConstructionLexicon::ConstructionLexicon(std::string dialogue_id, std::vector<Construction> entries)
    : dialogue_id_(std::move(dialogue_id)), entries_(std::move(entries)) {
  auto by_tokens = [](const Construction& a, const Construction& b) { return a.tokens < b.tokens; };
  if (!std::is_sorted(entries_.begin(), entries_.end(), by_tokens)) std::sort(entries_.begin(), entries_.end(), by_tokens);
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (i > 0 && entries_[i - 1].tokens == entries_[i].tokens) {
      throw InvariantError("duplicate lexicon entry in dialogue " + dialogue_id_);
    }
    max_length_ = std::max(max_length_, entries_[i].length());
    for (const auto& occ : entries_[i].occurrences) {
      if (occ.utterance_index >= by_utterance_.size()) by_utterance_.resize(occ.utterance_index + 1);
      by_utterance_[occ.utterance_index].push_back(i);
    }
  }
}

std::optional<std::size_t> ConstructionLexicon::find(std::span<const std::string> tokens) const {
  return sequences().find(tokens);
}

const SequenceIndex& ConstructionLexicon::sequences() const {
  std::call_once(sequences_->built, [this] {
    for (const auto& entry : entries_) sequences_->index.insert(entry.tokens);
  });
  return sequences_->index;
}

std::span<const std::size_t> ConstructionLexicon::entries_in(std::size_t utterance_index) const {
  if (utterance_index >= by_utterance_.size()) return {};
  return by_utterance_[utterance_index];
}

namespace {

struct Position {
  std::uint64_t key;
  std::uint32_t utterance;
  std::uint32_t offset;

  friend auto operator<=>(const Position&, const Position&) = default;
};

/// Mines shared sequences in string order. With `pauses`, entries failing
/// the construction filters are left out; their extensions are still mined.
std::vector<Construction> mine_entries(const Dialogue& dialogue, const DialogueVocabulary& vocabulary,
                                       const PauseList* pauses) {
  if (dialogue.speakers.size() != 2) {
    throw DataError("dialogue '" + dialogue.dialogue_id + "' must have exactly two speakers");
  }
  if (vocabulary.ids.size() != dialogue.utterances.size()) {
    throw InvariantError("vocabulary does not match dialogue '" + dialogue.dialogue_id + "'");
  }
  const auto& words = vocabulary.words;
  const auto& ids = vocabulary.ids;
  std::vector<unsigned> speaker_bit(dialogue.utterances.size());
  for (std::size_t u = 0; u < dialogue.utterances.size(); ++u) {
    speaker_bit[u] = dialogue.utterances[u].speaker == dialogue.speakers[0] ? 1u : 2u;
  }

  struct WordClass {
    bool alphanumeric, filled, separator;
  };
  std::vector<WordClass> classes;
  if (pauses) {
    classes.reserve(words.size());
    for (auto w : words) {
      classes.push_back({has_alphanumeric(w), pauses->contains(w), w == "." || w == "," || w == "?"});
    }
  }
  auto passes = [&](const Position& p, std::size_t length) {
    std::size_t alphanumeric = 0, filled = 0;
    for (std::size_t k = 0; k < length; ++k) {
      const auto& c = classes[ids[p.utterance][p.offset + k]];
      if (c.separator) return false;
      alphanumeric += c.alphanumeric ? 1 : 0;
      filled += c.filled ? 1 : 0;
    }
    return alphanumeric >= 2 && 2 * filled <= length;
  };

  std::vector<Construction> entries;
  std::vector<std::pair<std::size_t, std::size_t>> keys;  // (utterance, offset) of a first occurrence
  auto emit = [&](std::span<const Position> group, std::size_t length) {
    if (pauses && !passes(group.front(), length)) return;
    Construction c;
    const auto& tokens = dialogue.utterances[group.front().utterance].tokens;
    c.tokens.reserve(length);
    for (std::size_t k = 0; k < length; ++k) c.tokens.push_back(tokens[group.front().offset + k].norm);
    c.occurrences.reserve(group.size());
    for (const auto& p : group) c.occurrences.push_back({p.utterance, p.offset, dialogue.utterances[p.utterance].speaker});
    c.speakers_used = dialogue.speakers;
    entries.push_back(std::move(c));
    keys.emplace_back(group.front().utterance, group.front().offset);
  };

  // Level 2: bigrams used by both speakers, keyed by their token pair.
  std::vector<Position> level;
  {
    absl::flat_hash_map<std::uint64_t, unsigned> masks;
    std::size_t tokens = 0;
    for (const auto& u : ids) tokens += u.size();
    masks.reserve(tokens);
    auto bigram = [&](std::uint32_t u, std::uint32_t o) { return (std::uint64_t{ids[u][o]} << 32) | ids[u][o + 1]; };
    for (std::uint32_t u = 0; u < ids.size(); ++u) {
      for (std::uint32_t o = 0; o + 1 < ids[u].size(); ++o) masks[bigram(u, o)] |= speaker_bit[u];
    }
    for (std::uint32_t u = 0; u < ids.size(); ++u) {
      for (std::uint32_t o = 0; o + 1 < ids[u].size(); ++o) {
        if (masks[bigram(u, o)] == 3u) level.push_back({bigram(u, o), u, o});
      }
    }
  }

  // A sequence is shared only if its prefix is, so each level extends the
  // shared groups of the previous one by one token. Sorting keeps each
  // group contiguous and its occurrences in (utterance, offset) order.
  for (std::size_t length = 2; !level.empty(); ++length) {
    std::sort(level.begin(), level.end());
    std::vector<Position> next;
    std::uint64_t group_index = 0;
    for (std::size_t i = 0; i < level.size();) {
      std::size_t j = i;
      unsigned mask = 0;
      while (j < level.size() && level[j].key == level[i].key) mask |= speaker_bit[level[j++].utterance];
      if (mask == 3u) {
        const auto group = std::span(level).subspan(i, j - i);
        emit(group, length);
        for (const auto& p : group) {
          if (p.offset + length < ids[p.utterance].size()) {
            next.push_back({(group_index << 32) | ids[p.utterance][p.offset + length], p.utterance, p.offset});
          }
        }
        ++group_index;
      }
      i = j;
    }
    level = std::move(next);
  }

  // Order entries by their norms, comparing ranks of the words they use.
  std::vector<std::uint32_t> used;
  std::vector<bool> seen(words.size(), false);
  for (std::size_t e = 0; e < entries.size(); ++e) {
    const auto [u, o] = keys[e];
    for (std::size_t k = 0; k < entries[e].length(); ++k) {
      const auto w = ids[u][o + k];
      if (!seen[w]) used.push_back(w);
      seen[w] = true;
    }
  }
  std::sort(used.begin(), used.end(), [&](std::uint32_t a, std::uint32_t b) { return words[a] < words[b]; });
  std::vector<std::uint32_t> rank(words.size(), 0);
  for (std::uint32_t r = 0; r < used.size(); ++r) rank[used[r]] = r;
  std::vector<std::uint32_t> ranks;
  std::vector<std::size_t> begin;
  for (std::size_t e = 0; e < entries.size(); ++e) {
    begin.push_back(ranks.size());
    const auto [u, o] = keys[e];
    for (std::size_t k = 0; k < entries[e].length(); ++k) ranks.push_back(rank[ids[u][o + k]]);
  }
  begin.push_back(ranks.size());
  std::vector<std::size_t> order(entries.size());
  for (std::size_t e = 0; e < order.size(); ++e) order[e] = e;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(ranks.begin() + static_cast<std::ptrdiff_t>(begin[a]),
                                        ranks.begin() + static_cast<std::ptrdiff_t>(begin[a + 1]),
                                        ranks.begin() + static_cast<std::ptrdiff_t>(begin[b]),
                                        ranks.begin() + static_cast<std::ptrdiff_t>(begin[b + 1]));
  });
  std::vector<Construction> ordered;
  ordered.reserve(entries.size());
  for (auto e : order) ordered.push_back(std::move(entries[e]));
  entries = std::move(ordered);
  return entries;
}

}  // namespace

ConstructionLexicon mine_shared_constructions(const Dialogue& dialogue) {
  auto entries = mine_entries(dialogue, index_vocabulary(dialogue), nullptr);
  mark_maximal(entries);
  return ConstructionLexicon(dialogue.dialogue_id, std::move(entries));
}

void mark_maximal(std::vector<Construction>& entries) {
  struct Span {
    std::size_t start, end, entry;
  };
  std::vector<std::vector<Span>> by_utterance;
  for (std::size_t e = 0; e < entries.size(); ++e) {
    entries[e].is_maximal = false;
    for (const auto& occ : entries[e].occurrences) {
      if (occ.utterance_index >= by_utterance.size()) by_utterance.resize(occ.utterance_index + 1);
      by_utterance[occ.utterance_index].push_back(
          {occ.token_offset, occ.token_offset + entries[e].length(), e});
    }
  }
  for (auto& spans : by_utterance) {
    std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) {
      return a.start != b.start ? a.start < b.start : a.end > b.end;
    });
    // Covered by a longer span iff an earlier start reaches at least as far,
    // or the same start reaches further.
    std::size_t reach_before = 0;
    bool any_before = false;
    std::size_t i = 0;
    while (i < spans.size()) {
      std::size_t j = i;
      const std::size_t start = spans[i].start;
      const std::size_t longest_here = spans[i].end;
      while (j < spans.size() && spans[j].start == start) {
        const auto& s = spans[j];
        bool covered = (any_before && reach_before >= s.end) || longest_here > s.end;
        if (!covered) entries[s.entry].is_maximal = true;
        ++j;
      }
      reach_before = any_before ? std::max(reach_before, longest_here) : longest_here;
      any_before = true;
      i = j;
    }
  }
}

bool passes_construction_filters(std::span<const std::string> tokens, const PauseList& pauses) {
  std::size_t alphanumeric = 0;
  std::size_t filled = 0;
  for (const auto& norm : tokens) {
    if (norm == "." || norm == "," || norm == "?") return false;
    if (has_alphanumeric(norm)) ++alphanumeric;
    if (pauses.contains(norm)) ++filled;
  }
  return alphanumeric >= 2 && 2 * filled <= tokens.size();
}

ConstructionLexicon filter_constructions(const ConstructionLexicon& lexicon, const PauseList& pauses) {
  std::vector<Construction> kept;
  for (const auto& entry : lexicon.entries()) {
    if (passes_construction_filters(entry.tokens, pauses)) kept.push_back(entry);
  }
  mark_maximal(kept);
  return ConstructionLexicon(lexicon.dialogue_id(), std::move(kept));
}

ConstructionLexicon build_lexicon(const Dialogue& dialogue, const PauseList& pauses) {
  return build_lexicon(dialogue, index_vocabulary(dialogue), pauses);
}

ConstructionLexicon build_lexicon(const Dialogue& dialogue, const DialogueVocabulary& vocabulary,
                                  const PauseList& pauses) {
  auto entries = mine_entries(dialogue, vocabulary, &pauses);
  mark_maximal(entries);
  return ConstructionLexicon(dialogue.dialogue_id, std::move(entries));
}

Scope Scope::of(const ContextSample& sample) {
  Scope scope;
  scope.first = sample.start;
  scope.last = sample.start + sample.utterances.size();
  for (const auto& u : sample.utterances) scope.utterances.push_back(&u);
  return scope;
}

Scope Scope::of(const Dialogue& dialogue) {
  Scope scope;
  scope.first = 0;
  scope.last = dialogue.utterances.size();
  for (const auto& u : dialogue.utterances) scope.utterances.push_back(&u);
  return scope;
}

std::vector<ConstructionStats> construction_stats(const ConstructionLexicon& lexicon, const Scope& scope,
                                                  const CorpusCounts& corpus_counts) {
  std::vector<std::size_t> token_counts;
  for (const Utterance* u : scope.utterances) token_counts.push_back(u->tokens.size());
  auto scope_slots = [&](std::size_t length) {
    std::size_t total = 0;
    for (auto n : token_counts) total += n >= length ? n - length + 1 : 0;
    return total;
  };

  std::vector<ConstructionStats> rows;
  for (const auto& entry : lexicon.entries()) {
    std::vector<std::size_t> utterances;
    std::size_t incidence = 0;
    for (const auto& occ : entry.occurrences) {
      if (occ.utterance_index < scope.first || occ.utterance_index >= scope.last) continue;
      ++incidence;
      if (utterances.empty() || utterances.back() != occ.utterance_index) {
        utterances.push_back(occ.utterance_index);
      }
    }
    if (incidence == 0) continue;

    ConstructionStats stats;
    stats.tokens = entry.tokens;
    stats.length = entry.length();
    stats.frequency = utterances.size();
    stats.incidence = incidence;
    if (utterances.size() >= 2) {
      double gaps = static_cast<double>(utterances.back() - utterances.front());
      stats.rep_distance = gaps / static_cast<double>(utterances.size() - 1);
    }
    stats.pmi = pmi_bits(incidence, scope_slots(entry.length()), corpus_counts.count(entry.tokens),
                         corpus_counts.slots(entry.length()));
    rows.push_back(std::move(stats));
  }
  return rows;
}

}  // namespace entrain
