#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "divforge/common.hpp"

namespace divforge {

class Corpus;
class Tokenizer;

enum class Band { kLow, kMid, kHigh };

std::string_view to_string(Band b);

// low: count < low_max; high: count > high_min; mid otherwise (inclusive).
struct BandThresholds {
  std::uint64_t low_max = 10;
  std::uint64_t high_min = 500;
};

Band classify_band(std::uint64_t count, BandThresholds thresholds);

// Corpus-wide token counts over one component, with band labels.
class FrequencyTable {
 public:
  FrequencyTable() = default;
  FrequencyTable(std::vector<std::string> tokens, std::vector<std::uint64_t> counts,
                 BandThresholds thresholds, Component component, std::string tokenizer_fingerprint,
                 std::size_t sample_count);

  std::size_t size() const { return tokens_.size(); }
  // Sorted by byte order; index i pairs with counts()[i].
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::span<const std::uint64_t> counts() const { return counts_; }
  std::optional<std::size_t> index_of(std::string_view token) const;
  std::uint64_t count(std::string_view token) const;
  Band band(std::size_t index) const { return classify_band(counts_[index], thresholds_); }
  std::optional<Band> band_of(std::string_view token) const;

  std::uint64_t total_tokens() const { return total_; }
  std::size_t sample_count() const { return sample_count_; }
  BandThresholds thresholds() const { return thresholds_; }
  Component component() const { return component_; }
  const std::string& tokenizer_fingerprint() const { return fingerprint_; }

  // Number of distinct tokens per band, indexed by Band.
  std::array<std::size_t, 3> band_sizes() const;

 private:
  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, std::size_t> lookup_;
  BandThresholds thresholds_;
  Component component_ = Component::kResponse;
  std::string fingerprint_;
  std::size_t sample_count_ = 0;
  std::uint64_t total_ = 0;
};

// Counts over every sample, or over the listed positions only. Counting is
// split across workers and merged by addition, so the result does not depend
// on the worker count.
FrequencyTable build_frequency_table(const Corpus& corpus, Component component, const Tokenizer& tokenizer,
                                     BandThresholds thresholds = {});
FrequencyTable build_frequency_table(const Corpus& corpus, Component component, const Tokenizer& tokenizer,
                                     BandThresholds thresholds, std::span<const std::size_t> positions);

// CSV "token,count,band", rows by descending count then token.
std::string to_csv(const FrequencyTable& table);

// Per-sample sets of mid-band ("important") tokens plus the inverted index.
// Samples and tokens are dense integers: sample i is corpus position i,
// tokens number the mid-band entries of the frequency table in its order.
class TokenSetIndex {
 public:
  TokenSetIndex() = default;
  // Sets may be unsorted or hold repeats; they are normalized. Token ids must
  // be < token_names.size().
  static TokenSetIndex from_sets(std::vector<std::string> sample_ids,
                                 std::vector<std::vector<std::uint32_t>> sets,
                                 std::vector<std::string> token_names);

  std::size_t sample_count() const { return forward_.size(); }
  std::size_t token_count() const { return inverted_.size(); }
  std::span<const std::uint32_t> tokens_of(std::size_t sample) const { return forward_[sample]; }
  std::span<const std::uint32_t> samples_with(std::uint32_t token) const { return inverted_[token]; }
  const std::string& sample_id(std::size_t sample) const { return sample_ids_[sample]; }
  const std::string& token_name(std::uint32_t token) const { return token_names_[token]; }
  double mean_set_size() const;

  std::string tokenizer_fingerprint;
  std::optional<Component> component;

 private:
  std::vector<std::string> sample_ids_;
  std::vector<std::string> token_names_;
  std::vector<std::vector<std::uint32_t>> forward_;
  std::vector<std::vector<std::uint32_t>> inverted_;
};

// Throws PreconditionError if the table was built with another tokenizer or
// component.
TokenSetIndex build_token_set_index(const Corpus& corpus, Component component, const FrequencyTable& table,
                                    const Tokenizer& tokenizer);

}  // namespace divforge
