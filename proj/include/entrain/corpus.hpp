#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace entrain {

using PauseList = std::set<std::string, std::less<>>;

struct Token {
  std::string surface;
  std::string norm;  // surface lowercased
  bool is_alphanumeric = false;
  bool is_punct = false;
  bool is_filled_pause = false;
};

/// True when the text holds at least one letter or digit. Bytes outside
/// ASCII are counted as letters so UTF-8 words are never classed as punctuation.
bool has_alphanumeric(std::string_view text) noexcept;

std::string to_lower(std::string_view text);

Token make_token(std::string_view surface, const PauseList& pauses = {});

/// Whitespace split, then leading/trailing `.` `,` `?` `!` peeled into
/// single-character punctuation tokens. Internal hyphens and apostrophes stay.
std::vector<Token> tokenize(std::string_view text, const PauseList& pauses = {});

struct Utterance {
  std::size_t index = 0;
  std::string speaker;
  std::vector<Token> tokens;

  /// Number of non-punctuation tokens.
  std::size_t word_count() const noexcept;
  std::vector<std::string> norms() const;
  std::string text() const;
};

struct Dialogue {
  std::string dialogue_id;
  std::vector<Utterance> utterances;
  std::vector<std::string> speakers;  // exactly two, order of first appearance
};

struct ContextSample {
  std::string sample_id;
  std::string dialogue_id;
  std::size_t start = 0;  // index of the first utterance in the source dialogue
  std::vector<Utterance> utterances;
  std::string target_speaker;

  const Utterance& target() const { return utterances.back(); }
  /// 1-based window position of an utterance.
  const Utterance& at(std::size_t position) const { return utterances.at(position - 1); }
};

enum class CorpusFormat { kGenericJsonl, kSwdaLike, kMapTaskLike };

CorpusFormat parse_corpus_format(std::string_view name);
std::string_view to_string(CorpusFormat format) noexcept;

struct Corpus {
  std::string name;
  std::vector<Dialogue> dialogues;
  PauseList filled_pauses;
};

namespace pauses {
/// Filled-pause norms for the HCRC Map Task transcripts.
const PauseList& map_task();
/// Filled-pause norms for Switchboard.
const PauseList& switchboard();
}  // namespace pauses

/// Resolves "maptask", "switchboard", "none", or a path to a newline-separated
/// file of norms.
PauseList resolve_pauses(std::string_view spec);

struct LoadOptions {
  /// Overrides the list chosen from the format when set.
  std::optional<PauseList> pauses;
};

/// Reads a corpus. Raw turns are kept one utterance per row, in file order;
/// call normalize_turns() to merge same-speaker runs. Throws DataError naming
/// the offending line or dialogue.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   const LoadOptions& options = {});

/// Same as load_corpus(), reading from an in-memory buffer.
Corpus parse_corpus(std::string_view content, CorpusFormat format, std::string name,
                    const LoadOptions& options = {});

/// Merges consecutive same-speaker utterances and reindexes from 0.
Dialogue normalize_turns(const Dialogue& dialogue);
Dialogue normalize_turns(Dialogue&& dialogue);

/// Dense ids of the token norms of one dialogue, numbered in order of first
/// use. Views point into the dialogue, which must outlive this.
struct DialogueVocabulary {
  std::vector<std::string_view> words;
  std::vector<std::vector<std::uint32_t>> ids;  // per utterance, per token
};

DialogueVocabulary index_vocabulary(const Dialogue& dialogue);

/// Sliding windows with stride 1; sample_id is "<dialogue_id>:<start>".
/// Throws ConfigError when window < 2.
std::vector<ContextSample> extract_samples(const Dialogue& dialogue, std::size_t window = 10);

}  // namespace entrain
