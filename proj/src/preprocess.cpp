#include "prdesc/preprocess.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "json.hpp"
#include "prdesc/errors.hpp"

namespace prdesc {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::EmptyDesc: return "empty_desc";
    case RejectReason::TrivialDesc: return "trivial_desc";
    case RejectReason::LongDesc: return "long_desc";
    case RejectReason::TooFewValidCommits: return "too_few_valid_commits";
    case RejectReason::TooManyValidCommits: return "too_many_valid_commits";
    case RejectReason::LongSource: return "long_source";
  }
  return "unknown";
}

namespace {

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

bool punctuation_only(const TokenSeq& tokens) {
  return std::all_of(tokens.begin(), tokens.end(), [](const std::string& t) {
    return std::all_of(t.begin(), t.end(), [](unsigned char c) { return std::ispunct(c); });
  });
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// "{@link Foo#bar label}" -> "Foo#bar label"
std::string unwrap_inline_tags(std::string_view s) {
  std::string out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    auto open = s.find("{@", pos);
    if (open == std::string_view::npos) break;
    auto close = s.find('}', open);
    if (close == std::string_view::npos) break;
    out.append(s.substr(pos, open - pos));
    std::string_view inner = s.substr(open + 2, close - open - 2);
    auto sp = inner.find_first_of(" \t");
    if (sp != std::string_view::npos) out.append(inner.substr(sp + 1));
    pos = close + 1;
  }
  out.append(s.substr(std::min(pos, s.size())));
  return out;
}

// Cuts a line at its first Javadoc block tag ("@param", "@return", ...): an '@'
// followed by a letter at the start of the line or after whitespace.
std::string_view cut_block_tag(std::string_view line) {
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    if (line[i] == '@' && std::isalpha(static_cast<unsigned char>(line[i + 1])) &&
        (i == 0 || std::isspace(static_cast<unsigned char>(line[i - 1])))) {
      return line.substr(0, i);
    }
  }
  return line;
}

}  // namespace

std::variant<TokenSeq, RejectReason> build_target(std::string_view description) {
  if (is_blank(description)) return RejectReason::EmptyDesc;
  CleanedText cleaned = clean_text(description);
  TokenSeq tokens = cleaned.flatten();
  if (cleaned.non_ascii || tokens.size() < kMinTargetLen || punctuation_only(tokens)) {
    return RejectReason::TrivialDesc;
  }
  return tokens;
}

std::optional<std::string> filter_comment(std::string_view comment) {
  const std::string lowered = lower(comment);
  // "(c)" and the sign itself mark copyright lines as well.
  for (std::string_view key : {"copyright", "license", "licensed under", "(c)", "\xC2\xA9"}) {
    if (lowered.find(key) != std::string::npos) return std::nullopt;
  }
  const std::string unwrapped = unwrap_inline_tags(comment);
  std::string kept;
  std::string_view rest = unwrapped;
  while (true) {
    auto nl = rest.find('\n');
    std::string_view line = cut_block_tag(rest.substr(0, nl));
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.remove_suffix(1);
    if (!is_blank(line)) {
      if (!kept.empty()) kept += '\n';
      kept.append(line);
    }
    if (nl == std::string_view::npos) break;
    rest.remove_prefix(nl + 1);
  }
  if (!std::any_of(kept.begin(), kept.end(), [](unsigned char c) { return std::isalnum(c); })) {
    return std::nullopt;
  }
  return kept;
}

SourceSequence build_source(std::span<const Commit> commits) {
  std::vector<const Commit*> ordered;
  ordered.reserve(commits.size());
  for (const auto& c : commits) ordered.push_back(&c);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const Commit* a, const Commit* b) { return a->created_at < b->created_at; });

  std::vector<TokenSeq> messages;
  std::vector<TokenSeq> paragraphs;
  SourceSequence out;
  for (const Commit* c : ordered) {
    TokenSeq message = clean_text(c->message).flatten();
    std::string paragraph_text;
    for (const auto& comment : extract_added_comments(c->patch)) {
      if (auto kept = filter_comment(comment)) {
        if (!paragraph_text.empty()) paragraph_text += '\n';
        paragraph_text += *kept;
      }
    }
    TokenSeq paragraph = clean_text(paragraph_text).flatten();
    if (message.empty() && paragraph.empty()) continue;
    ++out.valid_commits;
    if (!message.empty()) messages.push_back(std::move(message));
    if (!paragraph.empty()) paragraphs.push_back(std::move(paragraph));
  }

  for (std::size_t i = 0; i < messages.size(); ++i) {
    if (i) out.tokens.emplace_back(kCommitSep);
    out.tokens.insert(out.tokens.end(), messages[i].begin(), messages[i].end());
  }
  for (const auto& p : paragraphs) {
    out.tokens.emplace_back(kParaSep);
    out.tokens.insert(out.tokens.end(), p.begin(), p.end());
  }
  return out;
}

std::variant<ProcessedExample, RejectReason> filter_pr(const PullRequest& pr) {
  auto target = build_target(pr.description);
  if (auto* reason = std::get_if<RejectReason>(&target)) return *reason;
  auto& target_tokens = std::get<TokenSeq>(target);
  if (target_tokens.size() > kMaxTargetLen) return RejectReason::LongDesc;

  SourceSequence source = build_source(pr.commits);
  if (source.valid_commits < kMinValidCommits) return RejectReason::TooFewValidCommits;
  if (source.valid_commits > kMaxValidCommits) return RejectReason::TooManyValidCommits;
  if (source.tokens.size() > kMaxSourceLen) return RejectReason::LongSource;

  return ProcessedExample{pr.id, std::move(source.tokens), std::move(target_tokens)};
}

void PreprocessStats::record(const std::variant<ProcessedExample, RejectReason>& outcome) {
  ++total;
  if (const auto* reason = std::get_if<RejectReason>(&outcome)) {
    ++rejected[static_cast<std::size_t>(*reason)];
  } else {
    ++accepted;
  }
}

std::string PreprocessStats::to_json() const {
  ordered_json doc;
  for (RejectReason r : kAllRejectReasons) doc[std::string(to_string(r))] = count(r);
  doc["adequate"] = accepted;
  doc["total"] = total;
  return doc.dump(2);
}

std::string PreprocessStats::to_text() const {
  static constexpr std::array<const char*, kAllRejectReasons.size()> kLabels = {
      "empty description",
      "trivial description",
      "description over 100 tokens",
      "fewer than 2 valid commits",
      "more than 20 valid commits",
      "source over 400 tokens",
  };
  std::ostringstream out;
  for (std::size_t i = 0; i < kLabels.size(); ++i) {
    out << kLabels[i] << '\t' << rejected[i] << '\n';
  }
  out << "accepted\t" << accepted << '\n';
  out << "total\t" << total << '\n';
  return out.str();
}

std::vector<ProcessedExample> preprocess_corpus(std::span<const PullRequest> prs,
                                                PreprocessStats* stats) {
  std::vector<ProcessedExample> kept;
  for (const auto& pr : prs) {
    auto outcome = filter_pr(pr);
    if (stats) stats->record(outcome);
    if (auto* ex = std::get_if<ProcessedExample>(&outcome)) kept.push_back(std::move(*ex));
  }
  return kept;
}

std::string serialize_example(const ProcessedExample& ex) {
  ordered_json doc;
  doc["pr_id"] = ex.pr_id;
  doc["source"] = ex.source;
  doc["target"] = ex.target;
  return doc.dump(-1, ' ', false, ordered_json::error_handler_t::replace);
}

ProcessedExample parse_example(std::string_view line) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("record", std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("record", "expected a JSON object");
  ProcessedExample ex;
  auto field = [&](const char* key) -> const nlohmann::json& {
    auto it = doc.find(key);
    if (it == doc.end()) throw ParseError(key, "missing");
    return *it;
  };
  const auto& id = field("pr_id");
  if (!id.is_string()) throw ParseError("pr_id", "expected a string");
  ex.pr_id = id.get<std::string>();
  for (const char* key : {"source", "target"}) {
    const auto& arr = field(key);
    if (!arr.is_array()) throw ParseError(key, "expected an array of strings");
    TokenSeq& seq = std::string_view(key) == "source" ? ex.source : ex.target;
    for (const auto& tok : arr) {
      if (!tok.is_string()) throw ParseError(key, "expected an array of strings");
      seq.push_back(tok.get<std::string>());
    }
  }
  return ex;
}

std::vector<ProcessedExample> read_examples(std::istream& in) {
  std::vector<ProcessedExample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_example(line));
    } catch (const ParseError& e) {
      throw ParseError(e.field(), "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_examples(std::ostream& out, std::span<const ProcessedExample> examples) {
  for (const auto& ex : examples) out << serialize_example(ex) << '\n';
}

}  // namespace prdesc
