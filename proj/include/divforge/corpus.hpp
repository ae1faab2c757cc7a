#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "divforge/common.hpp"

namespace divforge {

class Tokenizer;

struct Sample {
  std::string id;
  std::string instruction;
  std::string response;

  const std::string& text(Component c) const {
    return c == Component::kInstruction ? instruction : response;
  }
  bool operator==(const Sample&) const = default;
};

// Record counts from one ingest pass.
struct CleaningStats {
  std::size_t records = 0;  // non-blank lines seen
  std::size_t malformed = 0;
  std::size_t invalid_encoding = 0;
  std::size_t duplicates = 0;
  std::size_t duplicate_ids = 0;
  std::size_t kept = 0;

  std::size_t dropped() const { return malformed + invalid_encoding + duplicates + duplicate_ids; }
};

struct Provenance {
  std::string source_digest;  // sha256 of the ingested bytes
  std::map<std::string, std::string> cleaning;
  CleaningStats stats;
};

// Ordered, deduplicated collection of samples. Immutable once built.
class Corpus {
 public:
  Corpus() = default;
  // Throws PreconditionError on an empty id or a repeated id.
  Corpus(std::vector<Sample> samples, Provenance provenance);

  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  const std::vector<Sample>& samples() const { return samples_; }
  const Provenance& provenance() const { return provenance_; }

  std::optional<std::size_t> find(std::string_view id) const;
  std::vector<std::string_view> texts(Component c) const;
  std::vector<std::string_view> texts(Component c, std::span<const std::size_t> positions) const;

  // Keeps the listed positions in the given order; provenance carries over.
  Corpus subset(std::span<const std::size_t> positions) const;

 private:
  std::vector<Sample> samples_;
  std::unordered_map<std::string, std::size_t> by_id_;
  Provenance provenance_;
};

// Cleaning parameters recorded in every corpus provenance.
std::map<std::string, std::string> default_cleaning_parameters();

// Reads JSONL with string fields "instruction", "response" and optional
// "id". Drops malformed records, records that are not clean UTF-8 (or that
// carry control characters other than tab/newline), and duplicate
// (instruction, response) pairs under NFC + trim. Throws IoError when the
// file cannot be read and PreconditionError when nothing survives.
Corpus ingest(const std::filesystem::path& path);
Corpus ingest_jsonl(std::string_view contents);

// Serializes in the ingest format, one object per line with id first.
std::string to_jsonl(const Corpus& corpus);
std::string to_jsonl(const Corpus& corpus, std::span<const std::size_t> positions);

// Corpus store: <dir>/corpus.jsonl plus <dir>/manifest.json.
void save_store(const Corpus& corpus, const std::filesystem::path& dir);
Corpus load_store(const std::filesystem::path& dir);

inline constexpr std::size_t kUnboundedLength = std::numeric_limits<std::size_t>::max();

// Positions whose component token length lies in [lo, hi].
std::vector<std::size_t> length_window_filter(const Corpus& corpus, Component component,
                                              std::size_t lo, std::size_t hi,
                                              const Tokenizer& tokenizer);

}  // namespace divforge
