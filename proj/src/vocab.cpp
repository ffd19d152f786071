#include "prdesc/vocab.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "prdesc/errors.hpp"

namespace prdesc {

namespace {

std::vector<std::string> reserved_tokens() {
  return {std::string(Vocab::kPadToken), std::string(Vocab::kUnkToken),
          std::string(Vocab::kBosToken), std::string(Vocab::kEosToken)};
}

bool is_reserved(std::string_view t) {
  return t == Vocab::kPadToken || t == Vocab::kUnkToken || t == Vocab::kBosToken ||
         t == Vocab::kEosToken;
}

}  // namespace

Vocab::Vocab() : Vocab(reserved_tokens()) {}

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.size() < kReserved || !std::equal(tokens_.begin(), tokens_.begin() + kReserved,
                                                reserved_tokens().begin())) {
    throw DataError("vocab must start with [PAD] [UNK] [BOS] [EOS]");
  }
  ids_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!ids_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw DataError("duplicate vocab token: " + tokens_[i]);
    }
  }
}

TokenId Vocab::id_of(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view token) const { return ids_.count(std::string(token)) > 0; }

void Vocab::save(std::ostream& out) const {
  for (const auto& t : tokens_) out << t << '\n';
}

Vocab Vocab::load(std::istream& in) {
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) throw DataError("vocab: empty line at id " + std::to_string(tokens.size()));
    tokens.push_back(std::move(line));
  }
  return Vocab(std::move(tokens));
}

Vocab build_vocab(std::span<const ProcessedExample> corpus, std::size_t cap) {
  if (corpus.empty()) throw std::invalid_argument("build_vocab: empty corpus");
  if (cap < Vocab::kReserved) throw std::invalid_argument("build_vocab: cap below reserved size");

  std::map<std::string, std::size_t> freq;  // ordered: ties resolve lexicographically
  for (const auto& ex : corpus) {
    for (const auto* seq : {&ex.source, &ex.target}) {
      for (const auto& t : *seq) {
        if (!is_reserved(t)) ++freq[t];
      }
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  std::vector<std::string> tokens = reserved_tokens();
  const std::size_t keep = std::min(ranked.size(), cap - Vocab::kReserved);
  for (std::size_t i = 0; i < keep; ++i) tokens.push_back(std::move(ranked[i].first));
  return Vocab(std::move(tokens));
}

std::vector<TokenId> EncodedExample::decoder_inputs() const {
  std::vector<TokenId> in;
  in.reserve(tgt_ids.size());
  in.push_back(Vocab::kBos);
  in.insert(in.end(), tgt_ids.begin(), tgt_ids.end() - 1);
  return in;
}

EncodedExample encode_with_extension(const ProcessedExample& ex, const Vocab& vocab) {
  EncodedExample out;
  out.target = ex.target;
  const auto base = static_cast<TokenId>(vocab.size());
  std::unordered_map<std::string, TokenId> oov_ids;

  out.src_ids.reserve(ex.source.size());
  out.src_ext_ids.reserve(ex.source.size());
  for (const auto& t : ex.source) {
    TokenId id = vocab.id_of(t);
    out.src_ids.push_back(id);
    if (id != Vocab::kUnk || t == Vocab::kUnkToken) {
      out.src_ext_ids.push_back(id);
      continue;
    }
    auto [it, inserted] = oov_ids.emplace(t, base + static_cast<TokenId>(out.oov_tokens.size()));
    if (inserted) out.oov_tokens.push_back(t);
    out.src_ext_ids.push_back(it->second);
  }

  for (const auto& t : ex.target) {
    TokenId id = vocab.id_of(t);
    out.tgt_ids.push_back(id);
    if (id == Vocab::kUnk) {
      auto it = oov_ids.find(t);
      out.tgt_ext_ids.push_back(it == oov_ids.end() ? Vocab::kUnk : it->second);
    } else {
      out.tgt_ext_ids.push_back(id);
    }
  }
  out.tgt_ids.push_back(Vocab::kEos);
  out.tgt_ext_ids.push_back(Vocab::kEos);
  return out;
}

const std::string& resolve_token(TokenId id, const Vocab& vocab, std::span<const std::string> oov_tokens) {
  const auto base = static_cast<TokenId>(vocab.size());
  if (id >= base) return oov_tokens[static_cast<std::size_t>(id - base)];
  return vocab.token_of(id);
}

}  // namespace prdesc
