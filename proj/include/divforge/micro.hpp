#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "divforge/common.hpp"
#include "divforge/frequency.hpp"
#include "divforge/manifest.hpp"

namespace divforge {

class Corpus;
class Tokenizer;

// Work counters for inverse greedy pruning. With the incremental index,
// token_updates equals the summed set sizes of removed samples, and heap
// traffic is bounded by the pool size plus total set size.
struct PruneStats {
  std::size_t removals = 0;
  std::size_t token_updates = 0;
  std::size_t heap_pushes = 0;
  std::size_t heap_pops = 0;
};

struct PruneResult {
  std::vector<std::uint32_t> survivors;  // ascending sample index
  std::vector<std::uint32_t> tokens;     // covered tokens, ascending
  std::vector<std::uint32_t> removed;    // in removal order
  std::vector<std::size_t> coverage_after;  // covered-token count after each removal
  PruneStats stats;
};

// Inverse greedy pruning. While more than `target_tokens` tokens are
// covered, removes the sample holding the most tokens no other survivor
// holds (ties: smallest sample index). The default pool is every sample.
PruneResult inverse_greedy_prune(const TokenSetIndex& index, std::size_t target_tokens);
PruneResult inverse_greedy_prune(const TokenSetIndex& index, std::span<const std::uint32_t> pool,
                                 std::size_t target_tokens);

struct TokenAwareOptions {
  double alpha = 1.0;
  std::size_t batch = 64;
};

enum class SelectionPhase { kCoverage, kScore };

struct SampleResult {
  std::vector<std::uint32_t> selected;   // admission order
  std::vector<SelectionPhase> phases;    // phase that admitted selected[i]
  std::vector<std::uint32_t> counts;     // per token: selected samples holding it
};

// s(d) = sum over candidate tokens t of d of 1 / (counts[t] + alpha), summed
// in ascending token order.
double token_score(std::span<const std::uint32_t> tokens, std::span<const std::uint32_t> counts,
                   std::span<const char> is_candidate, double alpha);

// Integrated token-aware sampling over `pool` with candidate tokens
// `candidates`. While a candidate is uncovered, admits one sample maximizing
// newly covered candidates; afterwards admits batches of the top
// min(batch, n - |S|) samples by s(d). Ties: smallest sample index. Returns
// every pool sample (with a warning) when n exceeds the pool.
SampleResult token_aware_sample(const TokenSetIndex& index, std::span<const std::uint32_t> pool,
                                std::span<const std::uint32_t> candidates, std::size_t n,
                                const TokenAwareOptions& options);

// Coverage-minimizing greedy: repeatedly admits the sample adding the fewest
// not-yet-covered tokens (ties: smallest index) until n are chosen.
std::vector<std::uint32_t> min_coverage_select(const TokenSetIndex& index, std::span<const std::uint32_t> pool,
                                               std::size_t n);

std::size_t distinct_tokens(const TokenSetIndex& index, std::span<const std::uint32_t> samples);

struct MicroSeriesOptions {
  std::size_t size = 0;
  std::size_t points = 7;
  double alpha = 1.0;
  std::size_t batch = 64;
  std::uint64_t seed = 0;
  BandThresholds thresholds;
};

// Token-type series. The 0% point is the coverage-minimizing subset (its
// distinct important-token count is K_min), the 100% point is token-aware
// sampling over the whole corpus (K_max). Interior points target K values
// spaced linearly in between: prune to the target (raised to the smallest
// value that leaves at least `size` samples when needed), then sample.
SeriesManifest build_micro_series(const TokenSetIndex& index, Component component,
                                  const MicroSeriesOptions& options);
SeriesManifest build_micro_series(const Corpus& corpus, Component component, const Tokenizer& tokenizer,
                                  const MicroSeriesOptions& options);

}  // namespace divforge
