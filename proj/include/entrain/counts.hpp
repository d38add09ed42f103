#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <absl/container/flat_hash_map.h>

#include "entrain/corpus.hpp"

namespace entrain {

/// Trie of norm sequences over interned words. Sequence ids are dense and
/// assigned in first-insertion order.
class SequenceIndex {
 public:
  /// Returns the id of the sequence, inserting it if new.
  std::size_t insert(std::span<const std::string> tokens);
  std::optional<std::size_t> find(std::span<const std::string> tokens) const;
  /// find() for each sequence in turn; fastest when they are sorted.
  template <typename Sequences>
  std::vector<std::optional<std::size_t>> find_each(const Sequences& sequences) const {
    std::vector<std::optional<std::size_t>> out;
    out.reserve(sequences.size());
    const std::vector<std::string>* previous = nullptr;
    std::vector<std::uint32_t> path;  // node after each token of `previous`
    for (const auto& s : sequences) {
      const std::vector<std::string>& tokens = s.tokens;
      std::size_t shared = 0;
      if (previous) {
        while (shared < tokens.size() && shared < path.size() && tokens[shared] == (*previous)[shared]) ++shared;
      }
      path.resize(shared);
      std::uint32_t node = shared ? path.back() : kRoot;
      for (std::size_t k = shared; k < tokens.size(); ++k) {
        node = child(node, word(tokens[k]));
        if (node == kRoot) break;
        path.push_back(node);
      }
      previous = &tokens;
      const bool complete = !tokens.empty() && path.size() == tokens.size();
      out.push_back(complete && terminal_[node] != kNone ? std::optional(terminal_[node]) : std::nullopt);
    }
    return out;
  }
  /// Room for sequences holding `tokens` tokens in total.
  void reserve(std::size_t tokens) {
    words_.reserve(tokens);
    edges_.reserve(tokens);
    terminal_.reserve(tokens + 1);
  }
  std::size_t max_length() const noexcept { return max_length_; }
  std::size_t size() const noexcept { return size_; }

  /// Calls on_match(offset, length, id) for every indexed sequence of length >= 2 occurring in `tokens`.
  template <typename OnMatch>
  void scan(const std::vector<Token>& tokens, OnMatch&& on_match) const {
    std::vector<std::uint32_t> words(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) words[i] = word(tokens[i].norm);
    for (std::size_t start = 0; start < words.size(); ++start) {
      std::uint32_t node = kRoot;
      for (std::size_t len = 1; start + len <= words.size() && len <= max_length_; ++len) {
        node = child(node, words[start + len - 1]);
        if (node == kRoot) break;
        if (len >= 2 && terminal_[node] != kNone) on_match(start, len, terminal_[node]);
      }
    }
  }

 private:
  static constexpr std::uint32_t kRoot = 0;
  static constexpr std::uint32_t kUnknown = UINT32_MAX;
  static constexpr std::size_t kNone = SIZE_MAX;

  std::uint32_t word(const std::string& norm) const {
    auto it = words_.find(norm);
    return it == words_.end() ? kUnknown : it->second;
  }
  /// kRoot when there is no such edge.
  std::uint32_t child(std::uint32_t node, std::uint32_t word) const {
    if (word == kUnknown) return kRoot;
    auto it = edges_.find((std::uint64_t{node} << 32) | word);
    return it == edges_.end() ? kRoot : it->second;
  }

  absl::flat_hash_map<std::string, std::uint32_t> words_;
  absl::flat_hash_map<std::uint64_t, std::uint32_t> edges_;
  std::vector<std::size_t> terminal_{kNone};  // node -> sequence id
  std::vector<std::string> last_tokens_;      // previous insertion and its nodes
  std::vector<std::uint32_t> last_path_;
  std::size_t size_ = 0;
  std::size_t max_length_ = 0;
};

/// Occurrence counts of tracked sequences and per-length slot totals over a
/// set of utterances. A slot is a token position where a sequence of the
/// given length can start: an utterance of n tokens holds max(0, n - len + 1).
class CorpusCounts {
 public:
  CorpusCounts() = default;

  /// Counts the sequences in `tracked` over the given utterances.
  static CorpusCounts build(std::span<const Utterance* const> utterances, SequenceIndex tracked);
  /// Counts every n-gram of length 2..max_length. Quadratic; meant for small inputs.
  static CorpusCounts build_all(std::span<const Utterance* const> utterances, std::size_t max_length);

  std::size_t count(std::span<const std::string> tokens) const;
  /// count() of each element's `tokens`; fastest when they are sorted.
  template <typename Sequences>
  std::vector<std::size_t> count_each(const Sequences& sequences) const {
    std::vector<std::size_t> out;
    out.reserve(sequences.size());
    for (const auto& id : index_.find_each(sequences)) out.push_back(id ? counts_[*id] : 0);
    return out;
  }
  std::size_t slots(std::size_t length) const;
  std::size_t utterance_count() const;

 private:
  SequenceIndex index_;
  std::vector<std::size_t> counts_;  // by sequence id
  std::map<std::size_t, std::size_t> length_histogram_;  // tokens per utterance -> utterances
};

}  // namespace entrain

namespace entrain {

/// log2( (sample_count / sample_slots) / (corpus_count / corpus_slots) ).
/// Throws InvariantError when the sample or corpus probability is zero.
double pmi_bits(std::size_t sample_count, std::size_t sample_slots, std::size_t corpus_count,
                std::size_t corpus_slots);

}  // namespace entrain
