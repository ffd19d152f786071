#include "prdesc/ingest.hpp"

#include <optional>
#include <regex>

#include "json.hpp"
#include "prdesc/errors.hpp"
#include "prdesc/utf8.hpp"

namespace prdesc {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string required_string(const json& obj, const char* key, const std::string& field) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(field, "missing");
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<std::int64_t>());
  throw ParseError(field, "expected a string");
}

std::string optional_string(const json& obj, const char* key, const std::string& field) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string()) throw ParseError(field, "expected a string");
  return it->get<std::string>();
}

Commit parse_commit(const json& obj, std::size_t index) {
  const std::string prefix = "commits[" + std::to_string(index) + "]";
  if (!obj.is_object()) throw ParseError(prefix, "expected an object");
  Commit c;
  auto ts = obj.find("created_at");
  if (ts == obj.end()) throw ParseError(prefix + ".created_at", "missing");
  if (!ts->is_number_integer()) throw ParseError(prefix + ".created_at", "expected an integer");
  c.created_at = ts->get<std::int64_t>();
  c.message = optional_string(obj, "message", prefix + ".message");
  c.patch = optional_string(obj, "patch", prefix + ".patch");
  return c;
}

}  // namespace

PullRequest parse_pr_record(std::string_view line) {
  json doc;
  try {
    doc = json::parse(sanitize_utf8(line));
  } catch (const json::parse_error& e) {
    throw ParseError("record", std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("record", "expected a JSON object");

  PullRequest pr;
  pr.id = required_string(doc, "id", "id");
  pr.description = optional_string(doc, "description", "description");

  auto commits = doc.find("commits");
  if (commits == doc.end()) throw ParseError("commits", "missing");
  if (!commits->is_array()) throw ParseError("commits", "expected an array");
  if (commits->empty()) throw ParseError("commits", "must not be empty");
  pr.commits.reserve(commits->size());
  for (std::size_t i = 0; i < commits->size(); ++i) {
    pr.commits.push_back(parse_commit((*commits)[i], i));
  }
  return pr;
}

std::string serialize_pr_record(const PullRequest& pr) {
  ordered_json doc;
  doc["id"] = pr.id;
  doc["description"] = pr.description;
  doc["commits"] = ordered_json::array();
  for (const auto& c : pr.commits) {
    ordered_json cj;
    cj["created_at"] = c.created_at;
    cj["message"] = c.message;
    cj["patch"] = c.patch;
    doc["commits"].push_back(std::move(cj));
  }
  return doc.dump(-1, ' ', false, ordered_json::error_handler_t::replace);
}

std::vector<PullRequest> read_pr_corpus(std::istream& in) {
  std::vector<PullRequest> prs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      prs.push_back(parse_pr_record(line));
    } catch (const ParseError& e) {
      throw ParseError(e.field(), "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return prs;
}

void write_pr_corpus(std::ostream& out, const std::vector<PullRequest>& prs) {
  for (const auto& pr : prs) out << serialize_pr_record(pr) << '\n';
}

// ---------------------------------------------------------------------------
// Added-comment extraction

namespace {

enum class LineKind { Added, Removed, Context };
enum class BlockState { None, Added, Context };

std::string_view trim(std::string_view s) {
  const char* ws = " \t\r\f\v";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::string_view strip_leading_stars(std::string_view s) {
  s = trim(s);
  while (!s.empty() && s.front() == '*') s.remove_prefix(1);
  return trim(s);
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      if (start < text.size()) lines.push_back(text.substr(start));
      break;
    }
    std::string_view l = text.substr(start, nl - start);
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    lines.push_back(l);
    start = nl + 1;
  }
  return lines;
}

struct HunkHeader {
  long old_count = -1;
  long new_count = -1;
};

std::optional<HunkHeader> parse_hunk_header(std::string_view line) {
  static const std::regex re(R"(^@@ -\d+(?:,(\d+))? \+\d+(?:,(\d+))? @@)");
  std::cmatch m;
  if (!std::regex_search(line.data(), line.data() + line.size(), m, re)) return std::nullopt;
  HunkHeader h;
  h.old_count = m[1].matched ? std::stol(m[1].str()) : 1;
  h.new_count = m[2].matched ? std::stol(m[2].str()) : 1;
  return h;
}

class CommentScanner {
 public:
  void feed(std::string_view content, LineKind kind) {
    if (kind == LineKind::Removed) return;  // not part of the new file
    const bool added = kind == LineKind::Added;
    std::vector<std::string> pieces;  // complete comments that started on this line
    bool block_opened_here = false;
    std::size_t pos = 0;
    while (pos <= content.size()) {
      if (block_ != BlockState::None) {
        auto end = content.find("*/", pos);
        std::string_view seg =
            content.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
        if (block_ == BlockState::Added && added) {
          auto s = strip_leading_stars(seg);
          if (!s.empty()) block_lines_.emplace_back(s);
        }
        if (end == std::string_view::npos) break;
        pos = end + 2;
        if (block_ == BlockState::Added) {
          std::string text = join_block();
          if (block_opened_here) {
            if (!text.empty()) pieces.push_back(std::move(text));
          } else {
            emit(std::move(text));
          }
        }
        block_ = BlockState::None;
        block_opened_here = false;
        continue;
      }
      auto line_c = content.find("//", pos);
      auto block_c = content.find("/*", pos);
      if (line_c == std::string_view::npos && block_c == std::string_view::npos) break;
      if (line_c < block_c) {
        if (added) {
          auto s = trim(content.substr(line_c + 2));
          while (!s.empty() && s.front() == '/') s = trim(s.substr(1));  // "///" doc style
          if (!s.empty()) pieces.emplace_back(s);
        }
        break;
      }
      pos = block_c + 2;
      // "/**" opens a doc comment, but "/**/" is an empty block.
      if (pos < content.size() && content[pos] == '*' && content.substr(pos, 2) != "*/") ++pos;
      block_ = added ? BlockState::Added : BlockState::Context;
      block_lines_.clear();
      block_opened_here = true;
    }

    if (block_ == BlockState::Added && block_opened_here && !pieces.empty()) {
      // The open block started on this line too; it absorbs the earlier pieces.
      std::string prefix = join(pieces, " ");
      if (block_lines_.empty()) {
        block_lines_.push_back(std::move(prefix));
      } else {
        block_lines_.front() = prefix + " " + block_lines_.front();
      }
    } else if (!pieces.empty()) {
      emit(join(pieces, " "));
    }
  }

  /// Hunk boundary: emits an unterminated added block and resets state.
  void reset() {
    if (block_ == BlockState::Added) emit(join_block());
    block_ = BlockState::None;
    block_lines_.clear();
  }

  std::vector<std::string> take() { return std::move(entries_); }

 private:
  static std::string join(const std::vector<std::string>& parts, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (i) out += sep;
      out += parts[i];
    }
    return out;
  }

  std::string join_block() const { return join(block_lines_, "\n"); }

  void emit(std::string text) {
    if (!trim(text).empty()) entries_.push_back(std::move(text));
  }

  BlockState block_ = BlockState::None;
  std::vector<std::string> block_lines_;
  std::vector<std::string> entries_;
};

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

}  // namespace

std::vector<std::string> extract_added_comments(std::string_view patch) {
  const auto lines = split_lines(patch);
  CommentScanner scanner;

  // Before the first "@@" (and for header-less snippets) the body is read
  // with unknown hunk sizes.
  bool in_hunk = true;
  long old_left = -1;
  long new_left = -1;
  auto counted = [&] { return old_left >= 0 && new_left >= 0; };

  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = lines[i];

    if (starts_with(line, "@@")) {
      scanner.reset();
      in_hunk = true;
      if (auto h = parse_hunk_header(line)) {
        old_left = h->old_count;
        new_left = h->new_count;
      } else {
        old_left = new_left = -1;  // unparseable header: read until the next one
      }
      continue;
    }
    if (starts_with(line, "diff ")) {
      scanner.reset();
      in_hunk = false;
      continue;
    }
    const bool header_pair =
        (starts_with(line, "--- ") && i + 1 < lines.size() && starts_with(lines[i + 1], "+++ ")) ||
        (starts_with(line, "+++ ") && i > 0 && starts_with(lines[i - 1], "--- "));
    if (!counted() && header_pair) {
      scanner.reset();
      continue;
    }
    if (!in_hunk) continue;

    LineKind kind;
    if (line.empty()) {
      kind = LineKind::Context;  // some tools strip the space of empty context lines
    } else if (line[0] == '+') {
      kind = LineKind::Added;
    } else if (line[0] == '-') {
      kind = LineKind::Removed;
    } else if (line[0] == ' ') {
      kind = LineKind::Context;
    } else {
      continue;  // "\ No newline at end of file" and other noise
    }

    scanner.feed(line.empty() ? line : line.substr(1), kind);

    if (counted()) {
      if (kind != LineKind::Added) --old_left;
      if (kind != LineKind::Removed) --new_left;
      if (old_left <= 0 && new_left <= 0) {
        scanner.reset();
        in_hunk = false;
        old_left = new_left = -1;
      }
    }
  }
  scanner.reset();
  return scanner.take();
}

}  // namespace prdesc
