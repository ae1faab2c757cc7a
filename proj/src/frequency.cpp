#include "divforge/frequency.hpp"

#include <algorithm>
#include <numeric>

#include "divforge/corpus.hpp"
#include "divforge/tokenizer.hpp"

namespace divforge {

std::string_view to_string(Band b) {
  switch (b) {
    case Band::kLow:
      return "low";
    case Band::kMid:
      return "mid";
    case Band::kHigh:
      return "high";
  }
  return "mid";
}

Band classify_band(std::uint64_t count, BandThresholds t) {
  if (count > t.high_min) return Band::kHigh;
  if (count < t.low_max) return Band::kLow;
  return Band::kMid;
}

FrequencyTable::FrequencyTable(std::vector<std::string> tokens, std::vector<std::uint64_t> counts,
                               BandThresholds thresholds, Component component, std::string tokenizer_fingerprint,
                               std::size_t sample_count)
    : tokens_(std::move(tokens)),
      counts_(std::move(counts)),
      thresholds_(thresholds),
      component_(component),
      fingerprint_(std::move(tokenizer_fingerprint)),
      sample_count_(sample_count) {
  if (tokens_.size() != counts_.size()) throw PreconditionError("frequency table: tokens/counts length mismatch");
  if (thresholds_.low_max > thresholds_.high_min + 1) {
    throw PreconditionError("band thresholds need low_max <= high_min + 1");
  }
  lookup_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) lookup_.emplace(tokens_[i], i);
  total_ = std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::optional<std::size_t> FrequencyTable::index_of(std::string_view token) const {
  auto it = lookup_.find(std::string(token));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t FrequencyTable::count(std::string_view token) const {
  auto i = index_of(token);
  return i ? counts_[*i] : 0;
}

std::optional<Band> FrequencyTable::band_of(std::string_view token) const {
  auto i = index_of(token);
  if (!i) return std::nullopt;
  return band(*i);
}

std::array<std::size_t, 3> FrequencyTable::band_sizes() const {
  std::array<std::size_t, 3> sizes{};
  for (std::size_t i = 0; i < counts_.size(); ++i) ++sizes[static_cast<std::size_t>(band(i))];
  return sizes;
}

namespace {

FrequencyTable count_positions(const Corpus& corpus, Component component, const Tokenizer& tokenizer,
                               BandThresholds thresholds, std::span<const std::size_t> positions) {
  std::vector<std::unordered_map<std::string, std::uint64_t>> partial(worker_count());
  parallel_for(positions.size(), [&](std::size_t w, std::size_t begin, std::size_t end) {
    auto& local = partial[w];
    for (std::size_t i = begin; i < end; ++i) {
      for (auto& tok : tokenizer.encode(corpus[positions[i]].text(component))) ++local[std::move(tok)];
    }
  });
  std::unordered_map<std::string, std::uint64_t> merged = std::move(partial[0]);
  for (std::size_t w = 1; w < partial.size(); ++w) {
    for (auto& [tok, c] : partial[w]) merged[tok] += c;
  }
  std::vector<std::pair<std::string, std::uint64_t>> rows(std::make_move_iterator(merged.begin()),
                                                          std::make_move_iterator(merged.end()));
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::string> tokens;
  std::vector<std::uint64_t> counts;
  tokens.reserve(rows.size());
  counts.reserve(rows.size());
  for (auto& [tok, c] : rows) {
    tokens.push_back(std::move(tok));
    counts.push_back(c);
  }
  return FrequencyTable(std::move(tokens), std::move(counts), thresholds, component, tokenizer.fingerprint(),
                        positions.size());
}

}  // namespace

FrequencyTable build_frequency_table(const Corpus& corpus, Component component, const Tokenizer& tokenizer,
                                     BandThresholds thresholds) {
  std::vector<std::size_t> all(corpus.size());
  std::iota(all.begin(), all.end(), 0);
  return count_positions(corpus, component, tokenizer, thresholds, all);
}

FrequencyTable build_frequency_table(const Corpus& corpus, Component component, const Tokenizer& tokenizer,
                                     BandThresholds thresholds, std::span<const std::size_t> positions) {
  for (std::size_t p : positions) {
    if (p >= corpus.size()) throw PreconditionError("subset position out of range");
  }
  return count_positions(corpus, component, tokenizer, thresholds, positions);
}

namespace {

std::string csv_field(std::string_view s) {
  const bool quote = s.empty() || s.find_first_of(",\"\n\r") != std::string_view::npos || s.front() == ' ' ||
                     s.back() == ' ';
  if (!quote) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::string to_csv(const FrequencyTable& table) {
  std::vector<std::size_t> order(table.size());
  std::iota(order.begin(), order.end(), 0);
  const auto counts = table.counts();
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
  std::string out = "token,count,band\n";
  for (std::size_t i : order) {
    out += csv_field(table.tokens()[i]);
    out.push_back(',');
    out += std::to_string(counts[i]);
    out.push_back(',');
    out += to_string(table.band(i));
    out.push_back('\n');
  }
  return out;
}

TokenSetIndex TokenSetIndex::from_sets(std::vector<std::string> sample_ids,
                                       std::vector<std::vector<std::uint32_t>> sets,
                                       std::vector<std::string> token_names) {
  if (sample_ids.size() != sets.size()) throw PreconditionError("token set index: ids/sets length mismatch");
  TokenSetIndex idx;
  idx.sample_ids_ = std::move(sample_ids);
  idx.token_names_ = std::move(token_names);
  idx.forward_ = std::move(sets);
  idx.inverted_.assign(idx.token_names_.size(), {});
  for (std::size_t d = 0; d < idx.forward_.size(); ++d) {
    auto& s = idx.forward_[d];
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    for (std::uint32_t t : s) {
      if (t >= idx.inverted_.size()) throw PreconditionError("token id out of range in token set");
      idx.inverted_[t].push_back(static_cast<std::uint32_t>(d));
    }
  }
  return idx;
}

double TokenSetIndex::mean_set_size() const {
  if (forward_.empty()) return 0.0;
  std::size_t total = 0;
  for (const auto& s : forward_) total += s.size();
  return static_cast<double>(total) / static_cast<double>(forward_.size());
}

TokenSetIndex build_token_set_index(const Corpus& corpus, Component component, const FrequencyTable& table,
                                    const Tokenizer& tokenizer) {
  if (table.tokenizer_fingerprint() != tokenizer.fingerprint()) {
    throw PreconditionError("frequency table was built with tokenizer " + table.tokenizer_fingerprint() +
                            ", not " + tokenizer.fingerprint());
  }
  if (table.component() != component) {
    throw PreconditionError("frequency table was built over the " + std::string(to_string(table.component())) +
                            " component");
  }
  // Dense ids for mid-band tokens, in table order.
  std::vector<std::int64_t> mid_id(table.size(), -1);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (table.band(i) == Band::kMid) {
      mid_id[i] = static_cast<std::int64_t>(names.size());
      names.push_back(table.tokens()[i]);
    }
  }
  std::vector<std::vector<std::uint32_t>> sets(corpus.size());
  parallel_for(corpus.size(), [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t d = begin; d < end; ++d) {
      for (const auto& tok : tokenizer.encode(corpus[d].text(component))) {
        if (auto i = table.index_of(tok); i && mid_id[*i] >= 0) sets[d].push_back(static_cast<std::uint32_t>(mid_id[*i]));
      }
    }
  });
  std::vector<std::string> ids;
  ids.reserve(corpus.size());
  for (const auto& s : corpus.samples()) ids.push_back(s.id);
  TokenSetIndex idx = TokenSetIndex::from_sets(std::move(ids), std::move(sets), std::move(names));
  idx.tokenizer_fingerprint = tokenizer.fingerprint();
  idx.component = component;
  return idx;
}

}  // namespace divforge
