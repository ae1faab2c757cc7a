#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace divforge {

enum class TokenizerKind { kBpeFile, kWhitespace };

using TokenId = std::uint32_t;

// Read-only after construction; safe to share across threads.
//
// bpe_file: byte-level BPE (GPT-2 family) loaded from a JSON definition
// holding "vocab" (piece -> id) and ordered "merges", either at top level
// or under "model" as in tokenizer.json files. Text is split with the GPT-2
// pre-tokenization pattern, bytes are mapped to printable code points, and
// merges apply lowest rank first, leftmost first.
//
// whitespace: lowercases, splits on Unicode whitespace, and emits every
// punctuation or symbol code point as its own token.
class Tokenizer {
 public:
  static Tokenizer whitespace();
  static Tokenizer from_file(const std::filesystem::path& path);
  static Tokenizer from_bpe_json(std::string_view definition);
  // "whitespace" or a path to a BPE definition file.
  static Tokenizer from_spec(std::string_view spec);

  TokenizerKind kind() const { return kind_; }
  // kind + sha256 of the definition bytes.
  const std::string& fingerprint() const { return fingerprint_; }

  std::vector<std::string> encode(std::string_view text) const;
  std::size_t count(std::string_view text) const;

  // bpe_file only.
  std::vector<TokenId> encode_ids(std::string_view text) const;
  std::string decode(std::span<const TokenId> ids) const;
  std::optional<TokenId> token_id(std::string_view piece) const;
  std::size_t vocab_size() const;

 private:
  struct Bpe;
  Tokenizer(TokenizerKind kind, std::string fingerprint, std::shared_ptr<const Bpe> bpe);

  TokenizerKind kind_ = TokenizerKind::kWhitespace;
  std::string fingerprint_;
  std::shared_ptr<const Bpe> bpe_;
};

// GPT-2 pre-tokenization ('s|'t|'re|'ve|'m|'ll|'d| ?\p{L}+| ?\p{N}+|
// ?[^\s\p{L}\p{N}]+|\s+(?!\S)|\s+), hand-rolled over Unicode categories.
std::vector<std::string_view> gpt2_pretokenize(std::string_view text);

// GPT-2 byte -> printable code point table, UTF-8 encoded.
std::string byte_level_encode(std::string_view bytes);

}  // namespace divforge
