#include "entrain/counts.hpp"

#include <algorithm>
#include <cmath>

#include "entrain/error.hpp"
#include "entrain/miner.hpp"

namespace entrain {

std::size_t SequenceIndex::insert(std::span<const std::string> tokens) {
  // Sorted input shares prefixes with the previous insertion; resume there.
  std::size_t shared = 0;
  while (shared < tokens.size() && shared < last_tokens_.size() && tokens[shared] == last_tokens_[shared]) ++shared;
  last_tokens_.resize(shared);
  last_path_.resize(shared);
  std::uint32_t node = shared ? last_path_.back() : kRoot;
  for (std::size_t k = shared; k < tokens.size(); ++k) {
    const auto& norm = tokens[k];
    auto w = words_.find(norm);
    if (w == words_.end()) w = words_.emplace(norm, static_cast<std::uint32_t>(words_.size())).first;
    auto [edge, inserted] = edges_.emplace((std::uint64_t{node} << 32) | w->second,
                                           static_cast<std::uint32_t>(terminal_.size()));
    if (inserted) terminal_.push_back(kNone);
    node = edge->second;
    last_tokens_.push_back(norm);
    last_path_.push_back(node);
  }
  if (terminal_[node] == kNone) terminal_[node] = size_++;
  max_length_ = std::max(max_length_, tokens.size());
  return terminal_[node];
}

std::optional<std::size_t> SequenceIndex::find(std::span<const std::string> tokens) const {
  std::uint32_t node = kRoot;
  for (const auto& norm : tokens) {
    node = child(node, word(norm));
    if (node == kRoot) return std::nullopt;
  }
  if (terminal_[node] == kNone) return std::nullopt;
  return terminal_[node];
}

CorpusCounts CorpusCounts::build(std::span<const Utterance* const> utterances, SequenceIndex tracked) {
  CorpusCounts counts;
  counts.index_ = std::move(tracked);
  counts.counts_.assign(counts.index_.size(), 0);
  for (const Utterance* u : utterances) {
    ++counts.length_histogram_[u->tokens.size()];
    counts.index_.scan(u->tokens, [&](std::size_t, std::size_t, std::size_t id) { ++counts.counts_[id]; });
  }
  return counts;
}

CorpusCounts CorpusCounts::build_all(std::span<const Utterance* const> utterances, std::size_t max_length) {
  CorpusCounts counts;
  for (const Utterance* u : utterances) {
    ++counts.length_histogram_[u->tokens.size()];
    auto norms = u->norms();
    for (std::size_t start = 0; start < norms.size(); ++start) {
      for (std::size_t len = 2; len <= max_length && start + len <= norms.size(); ++len) {
        const auto id = counts.index_.insert(std::span(norms).subspan(start, len));
        if (id == counts.counts_.size()) counts.counts_.push_back(0);
        ++counts.counts_[id];
      }
    }
  }
  return counts;
}

std::size_t CorpusCounts::count(std::span<const std::string> tokens) const {
  auto id = index_.find(tokens);
  return id ? counts_[*id] : 0;
}

std::size_t CorpusCounts::slots(std::size_t length) const {
  std::size_t total = 0;
  for (auto it = length_histogram_.lower_bound(length); it != length_histogram_.end(); ++it) {
    total += (it->first - length + 1) * it->second;
  }
  return total;
}

std::size_t CorpusCounts::utterance_count() const {
  std::size_t total = 0;
  for (const auto& [len, n] : length_histogram_) total += n;
  return total;
}

}  // namespace entrain

namespace entrain {

double pmi_bits(std::size_t sample_count, std::size_t sample_slots, std::size_t corpus_count,
                std::size_t corpus_slots) {
  if (sample_count == 0 || sample_slots == 0) {
    throw InvariantError("PMI undefined: sequence does not occur in the sample");
  }
  if (corpus_count == 0 || corpus_slots == 0) {
    throw InvariantError("PMI undefined: sequence has zero corpus count");
  }
  const double p_sample = static_cast<double>(sample_count) / static_cast<double>(sample_slots);
  const double p_corpus = static_cast<double>(corpus_count) / static_cast<double>(corpus_slots);
  return std::log2(p_sample / p_corpus);
}

}  // namespace entrain
