#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "prdesc/preprocess.hpp"

namespace prdesc {

using TokenId = int;

/// Fixed vocabulary. Ids are dense; the reserved tokens come first.
class Vocab {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kBos = 2;
  static constexpr TokenId kEos = 3;
  static constexpr std::size_t kReserved = 4;
  static constexpr std::size_t kDefaultCap = 50000;

  static constexpr std::string_view kPadToken = "[PAD]";
  static constexpr std::string_view kUnkToken = "[UNK]";
  static constexpr std::string_view kBosToken = "[BOS]";
  static constexpr std::string_view kEosToken = "[EOS]";

  /// Reserved tokens only.
  Vocab();
  /// `tokens` must start with the four reserved tokens in id order and hold no
  /// duplicates.
  explicit Vocab(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  TokenId id_of(std::string_view token) const;  // kUnk when absent
  bool contains(std::string_view token) const;
  const std::string& token_of(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  void save(std::ostream& out) const;
  static Vocab load(std::istream& in);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

/// Counts source and target tokens over the training corpus and keeps the
/// (cap - 4) most frequent, ties broken lexicographically.
Vocab build_vocab(std::span<const ProcessedExample> corpus, std::size_t cap = Vocab::kDefaultCap);

/// An example mapped to ids, plus per-example extended ids for source OOVs.
struct EncodedExample {
  std::vector<TokenId> src_ids;      // OOV -> UNK
  std::vector<TokenId> src_ext_ids;  // OOV -> vocab.size() + index in oov_tokens
  std::vector<std::string> oov_tokens;
  std::vector<TokenId> tgt_ids;      // target tokens then EOS; OOV -> UNK
  std::vector<TokenId> tgt_ext_ids;  // copyable OOV -> extended id, else UNK; then EOS
  TokenSeq target;                   // reference tokens for reward/evaluation

  std::size_t ext_size(const Vocab& v) const { return v.size() + oov_tokens.size(); }
  /// Decoder inputs for teacher forcing: BOS followed by the target ids.
  std::vector<TokenId> decoder_inputs() const;
};

EncodedExample encode_with_extension(const ProcessedExample& ex, const Vocab& vocab);

/// Maps an extended id back to text using the example's OOV list.
const std::string& resolve_token(TokenId id, const Vocab& vocab, std::span<const std::string> oov_tokens);

}  // namespace prdesc
