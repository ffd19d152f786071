#pragma once

#include <array>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "prdesc/ingest.hpp"

namespace prdesc {

/// Lowercase tokens; none empty, none containing whitespace.
using TokenSeq = std::vector<std::string>;

inline constexpr std::string_view kCommitSep = "[cm-sep]";
inline constexpr std::string_view kParaSep = "[para-sep]";

inline constexpr std::size_t kMaxSourceLen = 400;
inline constexpr std::size_t kMinTargetLen = 5;
inline constexpr std::size_t kMaxTargetLen = 100;
inline constexpr int kMinValidCommits = 2;
inline constexpr int kMaxValidCommits = 20;

struct CleanedText {
  std::vector<TokenSeq> sentences;
  bool non_ascii = false;  // more than half of the tokens were non-ASCII

  TokenSeq flatten() const;
};

/// The shared text-cleaning procedure for descriptions, commit messages and
/// comment paragraphs:
///  1. drop HTML comments;
///  2. lowercase and tokenize each line, removing non-ASCII tokens;
///  3. drop paragraphs headed "checklist";
///  4. split lines into sentences after ".", "!" or "?" tokens;
///  5. delete sentences containing a URL, an internal reference (`#123`), a
///     sign-off, an email address, an `@name` mention, or that open with a
///     markdown headline marker;
///  6. map hex digests to "sha", version strings to "version" and numbers
///     to "0".
/// Cleaning the detokenized result again gives the same tokens.
CleanedText clean_text(std::string_view raw);

/// Whitespace split after separating punctuation (no lowercasing or
/// normalization). Hyphens, underscores, and dots inside a word are kept.
TokenSeq tokenize(std::string_view sentence);

/// "sha" / "version" / "0" substitution for a single lowercase token.
std::string normalize_token(std::string_view token);

/// Tokens joined by single spaces.
std::string detokenize(std::span<const std::string> tokens);

enum class RejectReason {
  EmptyDesc,
  TrivialDesc,
  LongDesc,
  TooFewValidCommits,
  TooManyValidCommits,
  LongSource,
};
inline constexpr std::array kAllRejectReasons = {
    RejectReason::EmptyDesc,          RejectReason::TrivialDesc,
    RejectReason::LongDesc,           RejectReason::TooFewValidCommits,
    RejectReason::TooManyValidCommits, RejectReason::LongSource,
};
std::string_view to_string(RejectReason reason);

struct ProcessedExample {
  std::string pr_id;
  TokenSeq source;
  TokenSeq target;

  bool operator==(const ProcessedExample&) const = default;
};

/// Cleaned description, or EmptyDesc / TrivialDesc. Length limits are left to
/// filter_pr.
std::variant<TokenSeq, RejectReason> build_target(std::string_view description);

struct SourceSequence {
  TokenSeq tokens;
  int valid_commits = 0;
};

/// Drops copyright/license comments, Javadoc block-tag lines and
/// punctuation-only comments; unwraps inline tags such as `{@link Foo}`.
/// Returns std::nullopt when nothing is left.
std::optional<std::string> filter_comment(std::string_view comment);

/// Commit messages (ascending creation time, "[cm-sep]"-separated), followed by
/// each commit's comment paragraph prefixed with "[para-sep]".
SourceSequence build_source(std::span<const Commit> commits);

/// Runs the filtering gates in order: empty description, trivial description,
/// description length, valid-commit count, source length.
std::variant<ProcessedExample, RejectReason> filter_pr(const PullRequest& pr);

struct PreprocessStats {
  std::array<std::size_t, kAllRejectReasons.size()> rejected{};
  std::size_t accepted = 0;
  std::size_t total = 0;

  void record(const std::variant<ProcessedExample, RejectReason>& outcome);
  std::size_t count(RejectReason reason) const {
    return rejected[static_cast<std::size_t>(reason)];
  }
  std::string to_json() const;
  std::string to_text() const;
};

std::vector<ProcessedExample> preprocess_corpus(std::span<const PullRequest> prs,
                                                PreprocessStats* stats = nullptr);

std::string serialize_example(const ProcessedExample& ex);
ProcessedExample parse_example(std::string_view line);
std::vector<ProcessedExample> read_examples(std::istream& in);
void write_examples(std::ostream& out, std::span<const ProcessedExample> examples);

}  // namespace prdesc
