#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "csum/ast.hpp"

namespace csum {

/// One raw (method, JavaDoc) pair as pulled from a project tree or TSV.
struct MethodRecord {
  long id = 0;
  std::string project_id;
  std::string file_text;      // full file, used by the auto-generated check
  std::string method_source;  // the method declaration itself
  std::string javadoc_raw;    // raw comment text, may be empty
};

/// Filtered and tokenized example ready for framing.
struct ProcessedExample {
  long id = 0;
  std::string project_id;
  std::vector<std::string> code_tokens;     // <= txtlen, includes <s> </s>
  std::vector<std::string> sbt_tokens;      // SBT with words, <= astlen
  std::vector<std::string> sbtao_tokens;    // SBT-AO, <= astlen
  std::vector<std::string> comment_tokens;  // <= comlen, includes delimiters
  bool train_only = false;                  // reinstated auto-generated example
};

struct CorpusConfig {
  int txtlen = 100;
  int astlen = 100;
  int comlen = 13;
  int txt_vocab = 10000;
  int ast_vocab = 10000;
  int com_vocab = 10000;
  double train_ratio = 0.90;
  double valid_ratio = 0.05;
  int min_comment_tokens = 2;   // quality filter
  int min_stopword_hits = 1;    // English heuristic
  double min_ascii_ratio = 0.8; // English heuristic
};

enum class Reject {
  kNone = 0,
  kNoSummary,      // missing or non-JavaDoc comment
  kNotEnglish,
  kTooShort,       // comment below the quality floor
  kBadFirstToken,  // first summary character is a non-word artifact
  kParseError,     // method outside the supported grammar subset
};

struct ProcessOutcome {
  std::optional<ProcessedExample> example;
  Reject reject = Reject::kNone;
};

struct PrepStats {
  long total = 0;
  long kept = 0;
  long autogen = 0;
  long reinstated = 0;
  long reinstated_dropped = 0;  // project landed outside train
  long no_summary = 0;
  long not_english = 0;
  long too_short = 0;
  long bad_first_token = 0;
  long parse_failed = 0;
};

struct SplitCorpus {
  std::vector<ProcessedExample> train, validation, test;
  std::uint64_t seed = 0;
};

/// Word/index bijection with the four reserved entries at fixed indices.
class Vocab {
public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kStart = 2;
  static constexpr int kEnd = 3;
  static const char* pad_word();    // "<pad>"
  static const char* unk_word();    // "<UNK>"
  static const char* start_word();  // "<s>"
  static const char* end_word();    // "</s>"

  Vocab();

  /// Frequency-ranked vocabulary (ties broken lexicographically) capped at
  /// max_size entries including the reserved four. Train-set sequences only.
  static Vocab build(const std::vector<const std::vector<std::string>*>& sequences,
                     int max_size);

  int size() const { return static_cast<int>(words_.size()); }
  int index_of(const std::string& word) const;  // kUnk when absent
  const std::string& word_of(int index) const;
  bool contains(const std::string& word) const { return index_.count(word) != 0; }

  void write(const std::string& path) const;  // word \t index, UTF-8, LF
  static Vocab read(const std::string& path);

private:
  std::vector<std::string> words_;          // index -> word
  std::map<std::string, int> index_;        // word -> index
  void push(const std::string& word);
};

// --- filtering and tokenization ---------------------------------------------

/// First sentence of a JavaDoc comment: markup stripped, then text up to the
/// first period, or the first newline if no period. Non-JavaDoc -> nullopt.
std::optional<std::string> extract_summary(std::string_view javadoc_raw);

/// Camel-case and underscore splitting, non-alphabetic characters acting as
/// separators, lowercase. Code and comments share the same rules.
std::vector<std::string> tokenize(std::string_view text);

/// Stopword-ratio heuristic: at least min_hits words from the stopword list
/// and at least min_ascii_ratio ASCII letters among non-space characters.
bool is_english(std::string_view text, const std::set<std::string>& stopwords,
                int min_hits = 1, double min_ascii_ratio = 0.8);

/// True iff any listed phrase occurs in the file, matched per line,
/// case-insensitively. Phrases must be lowercase.
bool is_autogenerated(std::string_view file_text, const std::vector<std::string>& phrases);

/// One representative per distinct (code_tokens, comment_tokens) pair,
/// flagged train-only. Input order decides representatives.
std::vector<ProcessedExample> reinstate_unique_autogen(
    const std::vector<ProcessedExample>& removed);

/// Full per-record path: summary extraction, quality filters, parsing,
/// flattening, tokenization, truncation to the configured lengths.
ProcessOutcome process_record(const MethodRecord& rec, const ApiWhitelist& wl,
                              const std::set<std::string>& stopwords, const CorpusConfig& cfg);

// --- framing and splitting ---------------------------------------------------

/// Words to indices (unknown -> UNK), right-padded with 0 / truncated to
/// exactly target_len.
std::vector<std::int32_t> frame_sequence(const std::vector<std::string>& tokens, int target_len,
                                         const Vocab& vocab);

/// Seeded project-level shuffle partitioned by ratio over the project count
/// (validation and test get at least one project each). Reinstated examples
/// join train when their project landed there, otherwise they are dropped
/// and counted in stats.
SplitCorpus split_by_project(const std::vector<ProcessedExample>& records,
                             const std::vector<ProcessedExample>& reinstated,
                             const CorpusConfig& cfg, std::uint64_t seed, PrepStats* stats);

// --- word lists and IO -------------------------------------------------------

/// One entry per line, `#` comments allowed.
std::set<std::string> read_word_list(const std::string& path);
std::vector<std::string> read_phrase_list(const std::string& path);
std::set<std::string> parse_word_list(std::string_view text);
std::vector<std::string> parse_phrase_list(std::string_view text);

/// Records from a project tree (<root>/<project>/**.java, one method per
/// file with an optional leading JavaDoc) or an input TSV with columns
/// id, project_id, method_source, javadoc (backslash-escaped \t \n \\).
std::vector<MethodRecord> load_records_from_dir(const std::string& root);
std::vector<MethodRecord> load_records_from_tsv(const std::string& path);

/// Dataset TSV: id, project_id, code_tokens, sbt_tokens, sbtao_tokens,
/// comment_tokens; token columns space-separated. UTF-8, LF line ends.
void write_examples_tsv(const std::string& path, const std::vector<ProcessedExample>& examples);
std::vector<ProcessedExample> read_examples_tsv(const std::string& path);

}  // namespace csum
