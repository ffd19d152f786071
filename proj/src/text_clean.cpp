#include <algorithm>
#include <cctype>
#include <utility>

#include "prdesc/preprocess.hpp"
#include "prdesc/utf8.hpp"

namespace prdesc {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_word(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string strip_html_comments(std::string_view text) {
  std::string out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto open = text.find("<!--", pos);
    if (open == std::string_view::npos) {
      out.append(text.substr(pos));
      break;
    }
    out.append(text.substr(pos, open - pos));
    auto close = text.find("-->", open + 4);
    if (close == std::string_view::npos) break;  // unterminated: drop the rest
    pos = close + 3;
  }
  return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

// ATX headline: up to six '#' then whitespace or end of line.
bool is_markdown_headline(std::string_view s) {
  s = trim(s);
  std::size_t hashes = 0;
  while (hashes < s.size() && s[hashes] == '#') ++hashes;
  return hashes >= 1 && hashes <= 6 && (hashes == s.size() || is_space(s[hashes]));
}

bool is_checklist_headline(std::string_view line) {
  std::string_view s = trim(line);
  bool marked = false;
  if (is_markdown_headline(s)) {
    marked = true;
  } else if (s.size() > 4 && s.substr(0, 2) == "**" && s.substr(s.size() - 2) == "**") {
    marked = true;
  }
  auto strip = [](std::string_view v) {
    const std::string_view junk = "#*: \t";
    while (!v.empty() && junk.find(v.front()) != std::string_view::npos) v.remove_prefix(1);
    while (!v.empty() && junk.find(v.back()) != std::string_view::npos) v.remove_suffix(1);
    return v;
  };
  const bool colon_label = !s.empty() && s.back() == ':';
  return (marked || colon_label) && ascii_lower(strip(s)) == "checklist";
}

// One input line as lowercase ASCII tokens.
struct Line {
  TokenSeq tokens;
  std::string text;  // tokens joined by spaces
};

// Lines with checklist paragraphs removed. A checklist paragraph runs from its
// headline to the next headline, or to the first blank line that follows some
// checklist content.
std::vector<const Line*> drop_checklists(const std::vector<Line>& lines) {
  std::vector<const Line*> kept;
  bool skipping = false;
  bool seen_content = false;
  for (const Line& line : lines) {
    if (skipping) {
      const bool blank = line.tokens.empty();
      if (is_markdown_headline(line.text) && !is_checklist_headline(line.text)) {
        skipping = false;
      } else if (blank && seen_content) {
        skipping = false;
        continue;
      } else {
        if (!blank) seen_content = true;
        continue;
      }
    }
    if (is_checklist_headline(line.text)) {
      skipping = true;
      seen_content = false;
      continue;
    }
    kept.push_back(&line);
  }
  return kept;
}

bool is_terminator(const std::string& token) {
  return !token.empty() && std::all_of(token.begin(), token.end(), [](char c) { return c == '.' || c == '!' || c == '?'; });
}

// Sentences end after a token made only of '.', '!' or '?'.
std::vector<TokenSeq> split_sentences(const TokenSeq& tokens) {
  std::vector<TokenSeq> out;
  TokenSeq current;
  for (const auto& t : tokens) {
    current.push_back(t);
    if (is_terminator(t)) out.push_back(std::exchange(current, {}));
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

bool has_url(std::string_view s) {
  return s.find("http://") != std::string_view::npos || s.find("https://") != std::string_view::npos ||
         s.find("ftp://") != std::string_view::npos || s.find("www.") != std::string_view::npos;
}

bool has_internal_reference(std::string_view s) {
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    if (s[i] == '#' && is_digit(s[i + 1])) return true;
  }
  return false;
}

bool has_signature(std::string_view s) { return s.find("signed-off-by") != std::string_view::npos; }

// local@domain.tld
bool has_email(std::string_view s) {
  auto local_char = [](char c) { return is_word(c) || c == '.' || c == '%' || c == '+' || c == '-'; };
  auto domain_char = [](char c) { return is_word(c) || c == '-'; };
  for (std::size_t at = s.find('@'); at != std::string_view::npos; at = s.find('@', at + 1)) {
    if (at == 0 || !local_char(s[at - 1])) continue;
    std::size_t i = at + 1;
    int labels = 0;
    bool ok = true;
    while (ok) {
      std::size_t start = i;
      while (i < s.size() && domain_char(s[i])) ++i;
      if (i == start) {
        ok = false;
        break;
      }
      ++labels;
      if (i + 1 < s.size() && s[i] == '.' && domain_char(s[i + 1])) {
        ++i;
      } else {
        break;
      }
    }
    if (ok && labels >= 2) return true;
  }
  return false;
}

// "@name" not glued to a preceding word character (that case is an email).
bool has_mention(std::string_view s) {
  for (std::size_t at = s.find('@'); at != std::string_view::npos; at = s.find('@', at + 1)) {
    if (at + 1 < s.size() && is_word(s[at + 1]) && (at == 0 || !is_word(s[at - 1]))) return true;
  }
  return false;
}

bool drop_sentence(std::string_view lowered) {
  return has_url(lowered) || has_internal_reference(lowered) || has_signature(lowered) ||
         has_email(lowered) || has_mention(lowered) || is_markdown_headline(lowered);
}

// Split anywhere.
bool is_hard_punct(char c) {
  return c == '(' || c == ')' || c == '[' || c == ']' || c == '{' || c == '}' || c == '"' || c == ';';
}

// Peeled off the edges of a word.
bool is_edge_punct(char c) {
  static constexpr std::string_view kEdge = ".,;:!?'\"`()[]{}<>*";
  return kEdge.find(c) != std::string_view::npos;
}

void split_word(std::string_view word, TokenSeq& out) {
  // Leading punctuation, runs of the same character grouped.
  std::size_t b = 0;
  while (b < word.size() && is_edge_punct(word[b])) {
    std::size_t e = b;
    while (e < word.size() && word[e] == word[b]) ++e;
    out.emplace_back(word.substr(b, e - b));
    b = e;
  }
  if (b == word.size()) return;
  std::size_t e = word.size();
  std::vector<std::string_view> trailing;
  while (e > b && is_edge_punct(word[e - 1])) {
    std::size_t s = e - 1;
    while (s > b && word[s - 1] == word[e - 1]) --s;
    trailing.push_back(word.substr(s, e - s));
    e = s;
  }
  out.emplace_back(word.substr(b, e - b));
  for (auto it = trailing.rbegin(); it != trailing.rend(); ++it) out.emplace_back(*it);
}

bool all_of(std::string_view s, bool (*pred)(char)) {
  return !s.empty() && std::all_of(s.begin(), s.end(), pred);
}

bool is_hex(char c) { return is_digit(c) || (c >= 'a' && c <= 'f'); }

bool looks_like_sha(std::string_view t) {
  if (t.size() < 7 || !all_of(t, is_hex)) return false;
  const bool digit = std::any_of(t.begin(), t.end(), is_digit);
  const bool letter = std::any_of(t.begin(), t.end(), [](char c) { return c >= 'a' && c <= 'f'; });
  return digit && letter;
}

// Two or more dot-separated integer groups, optional leading "v".
bool looks_like_version(std::string_view t) {
  if (!t.empty() && t.front() == 'v') t.remove_prefix(1);
  int groups = 0;
  std::size_t i = 0;
  while (true) {
    std::size_t start = i;
    while (i < t.size() && is_digit(t[i])) ++i;
    if (i == start) return false;
    ++groups;
    if (i == t.size()) break;
    if (t[i] != '.') return false;
    ++i;
  }
  return groups >= 2;
}

// Optional sign, digits, optional ",ddd" thousands groups.
bool looks_like_number(std::string_view t) {
  if (!t.empty() && (t.front() == '-' || t.front() == '+')) t.remove_prefix(1);
  std::size_t i = 0;
  while (i < t.size() && is_digit(t[i])) ++i;
  if (i == 0) return false;
  while (i < t.size()) {
    if (t[i] != ',' || i + 4 > t.size()) return false;
    if (!is_digit(t[i + 1]) || !is_digit(t[i + 2]) || !is_digit(t[i + 3])) return false;
    i += 4;
  }
  return true;
}

}  // namespace

TokenSeq tokenize(std::string_view sentence) {
  TokenSeq out;
  std::size_t i = 0;
  while (i < sentence.size()) {
    while (i < sentence.size() && is_space(sentence[i])) ++i;
    std::size_t start = i;
    while (i < sentence.size() && !is_space(sentence[i])) ++i;
    std::string_view chunk = sentence.substr(start, i - start);
    if (chunk.empty()) continue;

    // Hard punctuation (and commas not between digits) break the chunk.
    std::size_t piece = 0;
    for (std::size_t k = 0; k < chunk.size(); ++k) {
      const char c = chunk[k];
      const bool digit_comma =
          c == ',' && k > 0 && k + 1 < chunk.size() && is_digit(chunk[k - 1]) && is_digit(chunk[k + 1]);
      if (is_hard_punct(c) || (c == ',' && !digit_comma)) {
        if (k > piece) split_word(chunk.substr(piece, k - piece), out);
        std::size_t run = k;
        while (run < chunk.size() && chunk[run] == c) ++run;
        out.emplace_back(chunk.substr(k, run - k));
        k = run - 1;
        piece = run;
      }
    }
    if (piece < chunk.size()) split_word(chunk.substr(piece), out);
  }
  return out;
}

std::string normalize_token(std::string_view token) {
  if (looks_like_sha(token)) return "sha";
  if (looks_like_version(token)) return "version";
  if (looks_like_number(token)) return "0";
  return std::string(token);
}

std::string detokenize(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

TokenSeq CleanedText::flatten() const {
  TokenSeq out;
  for (const auto& s : sentences) out.insert(out.end(), s.begin(), s.end());
  return out;
}

CleanedText clean_text(std::string_view raw) {
  std::string text = strip_html_comments(raw);
  std::erase(text, '\r');

  // Sentence rules look at the ASCII tokens rather than the raw characters, so
  // that cleaning the detokenized output again sees the same sentences.
  CleanedText result;
  std::size_t total_tokens = 0;
  std::size_t non_ascii_tokens = 0;
  std::vector<Line> lines;
  for (std::string_view raw_line : split_lines(text)) {
    Line line;
    for (auto& tok : tokenize(ascii_lower(raw_line))) {
      ++total_tokens;
      if (!is_ascii(tok)) {
        ++non_ascii_tokens;
        continue;
      }
      line.tokens.push_back(std::move(tok));
    }
    line.text = detokenize(line.tokens);
    lines.push_back(std::move(line));
  }

  for (const Line* line : drop_checklists(lines)) {
    for (TokenSeq& sentence : split_sentences(line->tokens)) {
      if (drop_sentence(detokenize(sentence))) continue;
      for (auto& tok : sentence) tok = normalize_token(tok);
      result.sentences.push_back(std::move(sentence));
    }
  }
  result.non_ascii = total_tokens > 0 && 2 * non_ascii_tokens > total_tokens;
  return result;
}

}  // namespace prdesc
