#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace prdesc {

struct Commit {
  std::int64_t created_at = 0;  // seconds since epoch, UTC
  std::string message;
  std::string patch;  // unified diff, may be empty

  bool operator==(const Commit&) const = default;
};

struct PullRequest {
  std::string id;
  std::string description;
  std::vector<Commit> commits;  // as received; ordering happens in preprocess

  bool operator==(const PullRequest&) const = default;
};

/// Parses one JSONL corpus line. Invalid UTF-8 is replaced with U+FFFD before
/// parsing. Throws ParseError naming the offending field.
PullRequest parse_pr_record(std::string_view line);

/// Serializes to a single JSON line (no trailing newline).
std::string serialize_pr_record(const PullRequest& pr);

/// Reads a whole JSONL corpus; blank lines are skipped. Errors carry the
/// 1-based line number.
std::vector<PullRequest> read_pr_corpus(std::istream& in);
void write_pr_corpus(std::ostream& out, const std::vector<PullRequest>& prs);

/// Comment text from the added (`+`) lines of a unified diff, in patch order.
///
/// Java comment grammar: `//` line comments, `/* */` blocks and `/** */` doc
/// blocks. Markers and leading `*` on continuation lines are stripped. A
/// multi-line block yields one entry whose lines are joined by '\n'; several
/// comments starting on the same added line are merged into one entry. A block
/// is only collected when its opening delimiter sits on an added line, and
/// only the text on added lines is returned. String literals are not lexed, so
/// `"http://x"` in code reads as a comment.
std::vector<std::string> extract_added_comments(std::string_view patch);

}  // namespace prdesc
