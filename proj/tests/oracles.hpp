#pragma once

// Brute-force reference implementations. Deliberately naive: they share no
// code with the library beyond the data types.

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "entrain/corpus.hpp"
#include "entrain/miner.hpp"

namespace oracle {

using entrain::Dialogue;
using entrain::Occurrence;
using entrain::Utterance;

struct Entry {
  std::vector<Occurrence> occurrences;
  std::set<std::string> speakers;
  bool maximal = false;
};

using Lexicon = std::map<std::vector<std::string>, Entry>;

inline bool alnum_text(const std::string& s) {
  for (unsigned char c : s) {
    if (std::isalnum(c) || c >= 0x80) return true;
  }
  return false;
}

inline bool keep(const std::vector<std::string>& seq, const entrain::PauseList& pauses) {
  std::size_t alnum = 0, pause = 0;
  for (const auto& t : seq) {
    if (alnum_text(t)) ++alnum;
    if (pauses.count(t)) ++pause;
    if (t == "." || t == "," || t == "?") return false;
  }
  return alnum >= 2 && 2 * pause <= seq.size();
}

/// Every contiguous n-gram (n >= 2) used by both speakers, filtered.
inline Lexicon mine(const Dialogue& d, const entrain::PauseList& pauses) {
  Lexicon all;
  for (std::size_t u = 0; u < d.utterances.size(); ++u) {
    const auto norms = d.utterances[u].norms();
    for (std::size_t i = 0; i < norms.size(); ++i) {
      for (std::size_t j = i + 2; j <= norms.size(); ++j) {
        std::vector<std::string> seq(norms.begin() + static_cast<long>(i), norms.begin() + static_cast<long>(j));
        auto& e = all[seq];
        e.occurrences.push_back({u, i, d.utterances[u].speaker});
        e.speakers.insert(d.utterances[u].speaker);
      }
    }
  }
  Lexicon out;
  for (auto& [seq, e] : all) {
    if (e.speakers.size() == 2 && keep(seq, pauses)) out.emplace(seq, e);
  }
  for (auto& [seq, e] : out) {
    for (const auto& o : e.occurrences) {
      bool covered = false;
      for (const auto& [other, oe] : out) {
        if (other.size() <= seq.size()) continue;
        for (const auto& oo : oe.occurrences) {
          if (oo.utterance_index == o.utterance_index && oo.token_offset <= o.token_offset &&
              o.token_offset + seq.size() <= oo.token_offset + other.size()) {
            covered = true;
          }
        }
      }
      if (!covered) e.maximal = true;
    }
  }
  return out;
}

inline std::size_t words(const Utterance& u) {
  std::size_t n = 0;
  for (const auto& t : u.tokens) n += t.is_punct ? 0 : 1;
  return n;
}

inline double vo(const Utterance& cur, const Utterance& prev) {
  std::set<std::string> seen;
  for (const auto& t : prev.tokens) {
    if (!t.is_punct) seen.insert(t.norm);
  }
  std::size_t hit = 0;
  for (const auto& t : cur.tokens) {
    if (!t.is_punct && seen.count(t.norm)) ++hit;
  }
  return words(cur) ? static_cast<double>(hit) / static_cast<double>(words(cur)) : 0.0;
}

inline std::size_t occurrences(const Utterance& u, const std::vector<std::string>& seq) {
  const auto norms = u.norms();
  std::size_t n = 0;
  for (std::size_t i = 0; i + seq.size() <= norms.size(); ++i) {
    if (std::equal(seq.begin(), seq.end(), norms.begin() + static_cast<long>(i))) ++n;
  }
  return n;
}

inline std::size_t slots(const std::vector<const Utterance*>& us, std::size_t len) {
  std::size_t n = 0;
  for (const auto* u : us) n += u->tokens.size() >= len ? u->tokens.size() - len + 1 : 0;
  return n;
}

struct PairMeasures {
  double vo = 0.0;
  double co = 0.0;
  bool has_pmi = false;
  double pmi = 0.0;
};

/// Measures for (prev, cur) of a sample, from raw tokens. `corpus` holds every
/// utterance of the corpus; `lexicon` is the dialogue's entry list.
inline PairMeasures pair(const std::vector<Utterance>& sample, std::size_t prev, std::size_t cur,
                         const std::vector<std::vector<std::string>>& lexicon,
                         const std::vector<const Utterance*>& corpus, bool tokens_mode = false) {
  const auto& c = sample[cur - 1];
  const auto& p = sample[prev - 1];
  PairMeasures m;
  m.vo = vo(c, p);
  std::vector<const Utterance*> in_sample;
  for (const auto& u : sample) in_sample.push_back(&u);
  std::size_t numerator = 0;
  double pmi_total = 0.0;
  std::size_t shared = 0;
  for (const auto& seq : lexicon) {
    const auto in_c = occurrences(c, seq);
    if (in_c == 0 || occurrences(p, seq) == 0) continue;
    numerator += tokens_mode ? in_c : 1;
    std::size_t sample_count = 0, corpus_count = 0;
    for (const auto* u : in_sample) sample_count += occurrences(*u, seq);
    for (const auto* u : corpus) corpus_count += occurrences(*u, seq);
    const double ps = static_cast<double>(sample_count) / static_cast<double>(slots(in_sample, seq.size()));
    const double pc = static_cast<double>(corpus_count) / static_cast<double>(slots(corpus, seq.size()));
    pmi_total += std::log2(ps / pc);
    ++shared;
  }
  m.co = words(c) ? static_cast<double>(numerator) / static_cast<double>(words(c)) : 0.0;
  if (shared) {
    m.has_pmi = true;
    m.pmi = pmi_total / static_cast<double>(shared);
  }
  return m;
}

/// Average ranks by counting: rank = 1 + #less + (#equal - 1) / 2.
inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      if (w < v[i]) ++less;
      if (w == v[i]) ++equal;
    }
    r[i] = 1.0 + less + (equal - 1.0) / 2.0;
  }
  return r;
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i] / n;
    my += ry[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

/// Random two-speaker dialogue: <= max_utts alternating turns, <= max_len
/// tokens each, drawn from a vocabulary of <= 20 types with punctuation and pauses.
inline Dialogue random_dialogue(std::mt19937_64& rng, std::size_t max_utts = 12, std::size_t max_len = 8) {
  static const std::vector<std::string> pool{"go", "the", "left", "side", "okay", "yes", "map", "a",
                                             "b",  "c",   "uh",   "um",   "mm-hmm", ".", ",", "?",
                                             "it's", "we", "up",  "down"};
  const std::size_t vocab = 4 + rng() % (pool.size() - 3);
  const std::size_t n = 2 + rng() % (max_utts - 1);
  Dialogue d;
  d.dialogue_id = "r";
  d.speakers = {"A", "B"};
  for (std::size_t u = 0; u < n; ++u) {
    Utterance utt;
    utt.index = u;
    utt.speaker = u % 2 ? "B" : "A";
    const std::size_t len = 1 + rng() % max_len;
    for (std::size_t k = 0; k < len; ++k) {
      utt.tokens.push_back(entrain::make_token(pool[rng() % vocab], entrain::pauses::map_task()));
    }
    d.utterances.push_back(std::move(utt));
  }
  return d;
}

}  // namespace oracle
