#include "divforge/tokenizer.hpp"

#include <json.hpp>

#include <array>
#include <queue>
#include <unordered_map>

#include "divforge/common.hpp"
#include "divforge/text.hpp"

namespace divforge {

using nlohmann::json;

namespace {

struct ByteTables {
  std::array<std::string, 256> encoded;
  std::unordered_map<char32_t, unsigned char> decoded;
};

const ByteTables& byte_tables() {
  static const ByteTables tables = [] {
    ByteTables t;
    std::array<bool, 256> printable{};
    for (int b = '!'; b <= '~'; ++b) printable[b] = true;
    for (int b = 0xA1; b <= 0xAC; ++b) printable[b] = true;
    for (int b = 0xAE; b <= 0xFF; ++b) printable[b] = true;
    char32_t extra = 256;
    for (int b = 0; b < 256; ++b) {
      const char32_t cp = printable[b] ? static_cast<char32_t>(b) : extra++;
      text::append_utf8(t.encoded[b], cp);
      t.decoded.emplace(cp, static_cast<unsigned char>(b));
    }
    return t;
  }();
  return tables;
}

enum class CharClass { kSpace, kLetter, kNumber, kOther };

CharClass classify(char32_t cp) {
  if (text::is_whitespace(cp)) return CharClass::kSpace;
  if (text::is_letter(cp)) return CharClass::kLetter;
  if (text::is_number(cp)) return CharClass::kNumber;
  return CharClass::kOther;
}

std::string merge_key(std::string_view left, std::string_view right) {
  std::string key;
  key.reserve(left.size() + right.size() + 1);
  key.append(left);
  key.push_back('\0');
  key.append(right);
  return key;
}

}  // namespace

std::string byte_level_encode(std::string_view bytes) {
  const auto& t = byte_tables();
  std::string out;
  out.reserve(bytes.size() * 2);
  for (unsigned char b : bytes) out += t.encoded[b];
  return out;
}

std::vector<std::string_view> gpt2_pretokenize(std::string_view s) {
  // Decode once so lookahead is cheap.
  std::vector<std::size_t> offsets;
  std::vector<CharClass> cls;
  std::vector<char32_t> cps;
  for (std::size_t pos = 0; pos < s.size();) {
    offsets.push_back(pos);
    const char32_t cp = text::next_code_point(s, pos);
    cps.push_back(cp);
    cls.push_back(classify(cp));
  }
  const std::size_t n = cps.size();
  offsets.push_back(s.size());
  auto slice = [&](std::size_t a, std::size_t b) { return s.substr(offsets[a], offsets[b] - offsets[a]); };

  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < n) {
    if (cps[i] == U'\'') {
      static constexpr std::array<std::u32string_view, 7> kSuffixes = {U"s", U"t", U"re", U"ve", U"m", U"ll", U"d"};
      std::size_t matched = 0;
      for (auto suf : kSuffixes) {
        if (i + 1 + suf.size() > n) continue;
        bool ok = true;
        for (std::size_t k = 0; k < suf.size(); ++k) ok &= cps[i + 1 + k] == suf[k];
        if (ok) {
          matched = suf.size();
          break;
        }
      }
      if (matched > 0) {
        out.push_back(slice(i, i + 1 + matched));
        i += 1 + matched;
        continue;
      }
    }
    const bool lead_space = cps[i] == U' ' && i + 1 < n && cls[i + 1] != CharClass::kSpace;
    const std::size_t body = lead_space ? i + 1 : i;
    if (cls[body] != CharClass::kSpace) {
      const CharClass run = cls[body];
      std::size_t j = body + 1;
      while (j < n && cls[j] == run) ++j;
      out.push_back(slice(i, j));
      i = j;
      continue;
    }
    std::size_t j = i;
    while (j < n && cls[j] == CharClass::kSpace) ++j;
    if (j == n || j - i == 1) {
      out.push_back(slice(i, j));
      i = j;
    } else {
      // Leave the last space for the following token.
      out.push_back(slice(i, j - 1));
      i = j - 1;
    }
  }
  return out;
}

struct Tokenizer::Bpe {
  std::unordered_map<std::string, TokenId> vocab;
  std::vector<std::string> pieces;  // id -> piece (empty for gaps)
  std::unordered_map<std::string, std::uint32_t> merge_rank;
  std::optional<TokenId> unk;

  std::vector<std::string> merge_word(std::string_view word) const;
};

std::vector<std::string> Tokenizer::Bpe::merge_word(std::string_view word) const {
  const auto& bt = byte_tables();
  struct Sym {
    std::string text;
    int prev;
    int next;
    bool alive;
  };
  std::vector<Sym> syms;
  syms.reserve(word.size());
  for (std::size_t k = 0; k < word.size(); ++k) {
    syms.push_back({bt.encoded[static_cast<unsigned char>(word[k])], static_cast<int>(k) - 1,
                    k + 1 < word.size() ? static_cast<int>(k + 1) : -1, true});
  }
  using Candidate = std::pair<std::uint32_t, int>;  // (rank, left position)
  std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> heap;
  auto push_pair = [&](int left) {
    if (left < 0 || syms[left].next < 0) return;
    auto it = merge_rank.find(merge_key(syms[left].text, syms[syms[left].next].text));
    if (it != merge_rank.end()) heap.emplace(it->second, left);
  };
  for (int k = 0; k + 1 < static_cast<int>(syms.size()); ++k) push_pair(k);

  while (!heap.empty()) {
    const auto [rank, left] = heap.top();
    heap.pop();
    if (!syms[left].alive || syms[left].next < 0) continue;
    const int right = syms[left].next;
    auto it = merge_rank.find(merge_key(syms[left].text, syms[right].text));
    if (it == merge_rank.end() || it->second != rank) continue;  // stale
    syms[left].text += syms[right].text;
    syms[right].alive = false;
    syms[left].next = syms[right].next;
    if (syms[right].next >= 0) syms[syms[right].next].prev = left;
    push_pair(syms[left].prev);
    push_pair(left);
  }
  std::vector<std::string> out;
  for (int k = syms.empty() ? -1 : 0; k >= 0; k = syms[k].next) out.push_back(std::move(syms[k].text));
  return out;
}

Tokenizer::Tokenizer(TokenizerKind kind, std::string fingerprint, std::shared_ptr<const Bpe> bpe)
    : kind_(kind), fingerprint_(std::move(fingerprint)), bpe_(std::move(bpe)) {}

Tokenizer Tokenizer::whitespace() { return Tokenizer(TokenizerKind::kWhitespace, "whitespace:v1", nullptr); }

Tokenizer Tokenizer::from_file(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw IoError("cannot read tokenizer file " + path.string());
  return from_bpe_json(read_file(path));
}

Tokenizer Tokenizer::from_spec(std::string_view spec) {
  if (spec == "whitespace") return whitespace();
  return from_file(std::filesystem::path(spec));
}

Tokenizer Tokenizer::from_bpe_json(std::string_view definition) {
  const json doc = json::parse(definition, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw PreconditionError("tokenizer definition is not JSON");
  const json* model = &doc;
  if (!doc.contains("vocab") && doc.contains("model") && doc["model"].is_object()) model = &doc["model"];
  if (!model->contains("vocab") || !(*model)["vocab"].is_object() || !model->contains("merges") ||
      !(*model)["merges"].is_array()) {
    throw PreconditionError("tokenizer definition needs a 'vocab' object and a 'merges' array");
  }
  auto bpe = std::make_shared<Bpe>();
  for (const auto& [piece, id] : (*model)["vocab"].items()) {
    if (!id.is_number_integer() || id.get<long long>() < 0) {
      throw PreconditionError("vocab id for '" + piece + "' is not a non-negative integer");
    }
    const auto tid = id.get<TokenId>();
    if (!bpe->vocab.emplace(piece, tid).second) throw PreconditionError("repeated vocab piece '" + piece + "'");
    if (bpe->pieces.size() <= tid) bpe->pieces.resize(tid + 1);
    if (!bpe->pieces[tid].empty()) throw PreconditionError("vocab id " + std::to_string(tid) + " used twice");
    bpe->pieces[tid] = piece;
  }
  std::uint32_t rank = 0;
  for (const auto& m : (*model)["merges"]) {
    std::string left;
    std::string right;
    if (m.is_string()) {
      const auto s = m.get<std::string>();
      const auto sp = s.find(' ');
      if (sp == std::string::npos || sp == 0 || sp + 1 == s.size()) {
        throw PreconditionError("malformed merge rule '" + s + "'");
      }
      left = s.substr(0, sp);
      right = s.substr(sp + 1);
    } else if (m.is_array() && m.size() == 2 && m[0].is_string() && m[1].is_string()) {
      left = m[0].get<std::string>();
      right = m[1].get<std::string>();
    } else {
      throw PreconditionError("merge rule must be \"a b\" or [\"a\", \"b\"]");
    }
    // Earlier rules win when a pair is listed twice.
    bpe->merge_rank.emplace(merge_key(left, right), rank++);
  }
  if (auto it = model->find("unk_token"); it != model->end() && it->is_string()) {
    if (auto v = bpe->vocab.find(it->get<std::string>()); v != bpe->vocab.end()) bpe->unk = v->second;
  }
  return Tokenizer(TokenizerKind::kBpeFile, "bpe_file:" + sha256_hex(definition), std::move(bpe));
}

std::vector<std::string> Tokenizer::encode(std::string_view text) const {
  std::vector<std::string> out;
  if (kind_ == TokenizerKind::kWhitespace) {
    std::string word;
    std::size_t pos = 0;
    while (pos < text.size()) {
      const char32_t cp = text::next_code_point(text, pos);
      if (text::is_whitespace(cp)) {
        if (!word.empty()) out.push_back(std::move(word));
        word.clear();
      } else if (text::is_punct_or_symbol(cp)) {
        if (!word.empty()) out.push_back(std::move(word));
        word.clear();
        std::string p;
        text::append_utf8(p, cp);
        out.push_back(std::move(p));
      } else {
        text::append_utf8(word, text::simple_lower(cp));
      }
    }
    if (!word.empty()) out.push_back(std::move(word));
    return out;
  }
  for (std::string_view word : gpt2_pretokenize(text)) {
    for (auto& piece : bpe_->merge_word(word)) {
      if (!bpe_->vocab.count(piece)) {
        if (!bpe_->unk) throw PreconditionError("piece '" + piece + "' is not in the vocabulary and no unk_token is set");
        piece = bpe_->pieces[*bpe_->unk];
      }
      out.push_back(std::move(piece));
    }
  }
  return out;
}

std::size_t Tokenizer::count(std::string_view text) const {
  if (kind_ != TokenizerKind::kWhitespace) return encode(text).size();
  std::size_t n = 0;
  bool in_word = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const char32_t cp = text::next_code_point(text, pos);
    if (text::is_whitespace(cp)) {
      in_word = false;
    } else if (text::is_punct_or_symbol(cp)) {
      in_word = false;
      ++n;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

std::vector<TokenId> Tokenizer::encode_ids(std::string_view text) const {
  if (!bpe_) throw PreconditionError("token ids are only defined for bpe_file tokenizers");
  std::vector<TokenId> ids;
  for (const auto& piece : encode(text)) ids.push_back(bpe_->vocab.at(piece));
  return ids;
}

std::string Tokenizer::decode(std::span<const TokenId> ids) const {
  if (!bpe_) throw PreconditionError("decode is only defined for bpe_file tokenizers");
  const auto& bt = byte_tables();
  std::string out;
  for (TokenId id : ids) {
    if (id >= bpe_->pieces.size() || bpe_->pieces[id].empty()) {
      throw PreconditionError("token id " + std::to_string(id) + " is not in the vocabulary");
    }
    const std::string& piece = bpe_->pieces[id];
    std::size_t pos = 0;
    while (pos < piece.size()) {
      const std::size_t start = pos;
      const char32_t cp = text::next_code_point(piece, pos);
      auto it = bt.decoded.find(cp);
      if (it != bt.decoded.end()) {
        out.push_back(static_cast<char>(it->second));
      } else {
        out.append(piece, start, pos - start);  // added/special tokens
      }
    }
  }
  return out;
}

std::optional<TokenId> Tokenizer::token_id(std::string_view piece) const {
  if (!bpe_) return std::nullopt;
  auto it = bpe_->vocab.find(std::string(piece));
  if (it == bpe_->vocab.end()) return std::nullopt;
  return it->second;
}

std::size_t Tokenizer::vocab_size() const { return bpe_ ? bpe_->vocab.size() : 0; }

}  // namespace divforge
