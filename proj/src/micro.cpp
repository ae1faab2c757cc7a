#include "divforge/micro.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

#include "divforge/corpus.hpp"
#include "divforge/tokenizer.hpp"

namespace divforge {

namespace {

// Max-heap entry ordered by key, then by smaller sample index.
struct Entry {
  std::uint32_t key;
  std::uint32_t sample;
};
struct EntryLess {
  bool operator()(const Entry& a, const Entry& b) const {
    if (a.key != b.key) return a.key < b.key;
    return a.sample > b.sample;
  }
};
using MaxHeap = std::priority_queue<Entry, std::vector<Entry>, EntryLess>;

std::vector<std::uint32_t> all_samples(const TokenSetIndex& index) {
  std::vector<std::uint32_t> pool(index.sample_count());
  std::iota(pool.begin(), pool.end(), 0u);
  return pool;
}

void check_pool(const TokenSetIndex& index, std::span<const std::uint32_t> pool) {
  std::vector<char> seen(index.sample_count(), 0);
  for (std::uint32_t d : pool) {
    if (d >= index.sample_count()) throw PreconditionError("pool sample index out of range");
    if (seen[d]) throw PreconditionError("pool lists a sample twice");
    seen[d] = 1;
  }
}

}  // namespace

PruneResult inverse_greedy_prune(const TokenSetIndex& index, std::size_t target_tokens) {
  const auto pool = all_samples(index);
  return inverse_greedy_prune(index, pool, target_tokens);
}

PruneResult inverse_greedy_prune(const TokenSetIndex& index, std::span<const std::uint32_t> pool,
                                 std::size_t target_tokens) {
  check_pool(index, pool);
  PruneResult result;
  std::vector<char> alive(index.sample_count(), 0);
  std::vector<std::uint32_t> holders(index.token_count(), 0);
  // XOR of the indices of alive holders: identifies the last holder in O(1).
  std::vector<std::uint32_t> holder_xor(index.token_count(), 0);
  for (std::uint32_t d : pool) {
    alive[d] = 1;
    for (std::uint32_t t : index.tokens_of(d)) {
      ++holders[t];
      holder_xor[t] ^= d;
    }
  }
  std::size_t covered = 0;
  for (std::uint32_t h : holders) covered += h > 0;
  std::vector<std::uint32_t> unique(index.sample_count(), 0);
  MaxHeap heap;
  for (std::uint32_t d : pool) {
    for (std::uint32_t t : index.tokens_of(d)) unique[d] += holders[t] == 1;
    heap.push({unique[d], d});
    ++result.stats.heap_pushes;
  }
  std::size_t remaining = pool.size();

  while (covered > target_tokens && remaining > 0) {
    Entry top = heap.top();
    heap.pop();
    ++result.stats.heap_pops;
    // Unique counts only grow; an entry below the current value is stale.
    if (!alive[top.sample] || top.key != unique[top.sample]) continue;
    const std::uint32_t d = top.sample;
    alive[d] = 0;
    --remaining;
    result.removed.push_back(d);
    for (std::uint32_t t : index.tokens_of(d)) {
      ++result.stats.token_updates;
      --holders[t];
      holder_xor[t] ^= d;
      if (holders[t] == 0) {
        --covered;
      } else if (holders[t] == 1) {
        const std::uint32_t last = holder_xor[t];
        ++unique[last];
        heap.push({unique[last], last});
        ++result.stats.heap_pushes;
      }
    }
    result.coverage_after.push_back(covered);
  }
  result.stats.removals = result.removed.size();
  for (std::uint32_t d : pool) {
    if (alive[d]) result.survivors.push_back(d);
  }
  std::sort(result.survivors.begin(), result.survivors.end());
  for (std::uint32_t t = 0; t < index.token_count(); ++t) {
    if (holders[t] > 0) result.tokens.push_back(t);
  }
  return result;
}

double token_score(std::span<const std::uint32_t> tokens, std::span<const std::uint32_t> counts,
                   std::span<const char> is_candidate, double alpha) {
  double s = 0.0;
  for (std::uint32_t t : tokens) {
    if (is_candidate[t]) s += 1.0 / (static_cast<double>(counts[t]) + alpha);
  }
  return s;
}

SampleResult token_aware_sample(const TokenSetIndex& index, std::span<const std::uint32_t> pool,
                                std::span<const std::uint32_t> candidates, std::size_t n,
                                const TokenAwareOptions& options) {
  if (n == 0) throw PreconditionError("token-aware sampling needs n >= 1");
  if (!(options.alpha > 0.0) || !std::isfinite(options.alpha)) {
    throw PreconditionError("token-aware sampling needs alpha > 0");
  }
  if (options.batch == 0) throw PreconditionError("token-aware sampling needs batch >= 1");
  check_pool(index, pool);
  if (n > pool.size()) {
    warn("requested " + std::to_string(n) + " samples from a pool of " + std::to_string(pool.size()) +
         "; returning the whole pool");
  }

  SampleResult result;
  result.counts.assign(index.token_count(), 0);
  auto& counts = result.counts;
  std::vector<char> is_candidate(index.token_count(), 0);
  std::size_t uncovered = 0;
  for (std::uint32_t t : candidates) {
    if (t >= index.token_count()) throw PreconditionError("candidate token out of range");
    if (!is_candidate[t]) ++uncovered;
    is_candidate[t] = 1;
  }
  std::vector<char> remaining(index.sample_count(), 0);
  std::vector<std::uint32_t> gain(index.sample_count(), 0);
  MaxHeap heap;
  for (std::uint32_t d : pool) {
    remaining[d] = 1;
    for (std::uint32_t t : index.tokens_of(d)) gain[d] += is_candidate[t];
    heap.push({gain[d], d});
  }
  std::size_t remaining_count = pool.size();

  auto admit = [&](std::uint32_t d, SelectionPhase phase) {
    result.selected.push_back(d);
    result.phases.push_back(phase);
    remaining[d] = 0;
    --remaining_count;
    for (std::uint32_t t : index.tokens_of(d)) {
      if (!is_candidate[t]) continue;
      if (counts[t]++ == 0) {
        --uncovered;
        for (std::uint32_t other : index.samples_with(t)) {
          if (remaining[other]) --gain[other];
        }
      }
    }
  };

  std::vector<std::pair<double, std::uint32_t>> scored;
  while (result.selected.size() < n && remaining_count > 0) {
    if (uncovered > 0) {
      // Gains only shrink, so a popped entry above the current gain is stale.
      while (true) {
        const Entry top = heap.top();
        heap.pop();
        if (!remaining[top.sample]) continue;
        if (top.key != gain[top.sample]) {
          heap.push({gain[top.sample], top.sample});
          continue;
        }
        admit(top.sample, SelectionPhase::kCoverage);
        break;
      }
      continue;
    }
    scored.clear();
    for (std::uint32_t d : pool) {
      if (remaining[d]) scored.emplace_back(0.0, d);
    }
    parallel_for(scored.size(), [&](std::size_t, std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        scored[i].first = token_score(index.tokens_of(scored[i].second), counts, is_candidate, options.alpha);
      }
    });
    const std::size_t k = std::min({options.batch, n - result.selected.size(), scored.size()});
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(),
                      [](const auto& a, const auto& b) {
                        if (a.first != b.first) return a.first > b.first;
                        return a.second < b.second;
                      });
    for (std::size_t i = 0; i < k; ++i) admit(scored[i].second, SelectionPhase::kScore);
  }
  return result;
}

std::vector<std::uint32_t> min_coverage_select(const TokenSetIndex& index, std::span<const std::uint32_t> pool,
                                               std::size_t n) {
  check_pool(index, pool);
  if (n > pool.size()) throw PreconditionError("coverage-minimizing selection: pool smaller than n");
  std::vector<char> open(index.sample_count(), 0);
  std::vector<std::uint32_t> fresh(index.sample_count(), 0);
  std::set<std::pair<std::uint32_t, std::uint32_t>> queue;  // (new tokens, sample)
  for (std::uint32_t d : pool) {
    open[d] = 1;
    fresh[d] = static_cast<std::uint32_t>(index.tokens_of(d).size());
    queue.emplace(fresh[d], d);
  }
  std::vector<char> covered(index.token_count(), 0);
  std::vector<std::uint32_t> chosen;
  chosen.reserve(n);
  while (chosen.size() < n) {
    const auto [cost, d] = *queue.begin();
    queue.erase(queue.begin());
    open[d] = 0;
    chosen.push_back(d);
    for (std::uint32_t t : index.tokens_of(d)) {
      if (covered[t]) continue;
      covered[t] = 1;
      for (std::uint32_t other : index.samples_with(t)) {
        if (!open[other]) continue;
        queue.erase({fresh[other], other});
        --fresh[other];
        queue.emplace(fresh[other], other);
      }
    }
  }
  return chosen;
}

std::size_t distinct_tokens(const TokenSetIndex& index, std::span<const std::uint32_t> samples) {
  std::vector<char> seen(index.token_count(), 0);
  std::size_t n = 0;
  for (std::uint32_t d : samples) {
    for (std::uint32_t t : index.tokens_of(d)) {
      if (!seen[t]) {
        seen[t] = 1;
        ++n;
      }
    }
  }
  return n;
}

namespace {

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::vector<std::string> ids_of(const TokenSetIndex& index, std::vector<std::uint32_t> samples) {
  std::sort(samples.begin(), samples.end());
  std::vector<std::string> ids;
  ids.reserve(samples.size());
  for (std::uint32_t d : samples) ids.push_back(index.sample_id(d));
  return ids;
}

}  // namespace

SeriesManifest build_micro_series(const TokenSetIndex& index, Component component,
                                  const MicroSeriesOptions& options) {
  if (options.points < 2) throw PreconditionError("a series needs at least 2 points");
  if (options.size == 0) throw PreconditionError("series size must be positive");
  if (index.sample_count() < options.size) {
    throw PreconditionError("corpus has " + std::to_string(index.sample_count()) + " samples, fewer than size " +
                            std::to_string(options.size));
  }
  const TokenAwareOptions sampling{options.alpha, options.batch};
  const std::vector<std::uint32_t> pool = all_samples(index);
  std::vector<std::uint32_t> all_tokens(index.token_count());
  std::iota(all_tokens.begin(), all_tokens.end(), 0u);

  const SampleResult top = token_aware_sample(index, pool, all_tokens, options.size, sampling);
  const std::vector<std::uint32_t> bottom = min_coverage_select(index, pool, options.size);
  const std::size_t k_max = distinct_tokens(index, top.selected);
  const std::size_t k_min = distinct_tokens(index, bottom);
  if (k_max <= k_min) {
    throw PreconditionError("degenerate micro series: K_max (" + std::to_string(k_max) + ") <= K_min (" +
                            std::to_string(k_min) + ")");
  }

  // Full removal trace; a prune to any target is a prefix of it.
  const PruneResult trace = inverse_greedy_prune(index, pool, 0);
  const std::size_t initial_tokens = distinct_tokens(index, pool);
  const std::size_t max_removals = pool.size() - options.size;
  const std::size_t floor_tokens =
      max_removals == 0 ? initial_tokens
                        : (max_removals <= trace.coverage_after.size() ? trace.coverage_after[max_removals - 1] : 0);

  SeriesManifest m;
  m.strategy = Strategy::kMicro;
  m.component = component;
  m.size = options.size;
  m.seed = options.seed;
  auto& p = m.parameters;
  p["alpha"] = fmt_double(options.alpha);
  p["batch"] = std::to_string(options.batch);
  p["points"] = std::to_string(options.points);
  p["band_low_max"] = std::to_string(options.thresholds.low_max);
  p["band_high_min"] = std::to_string(options.thresholds.high_min);
  p["tokenizer_fingerprint"] = index.tokenizer_fingerprint;
  p["important_token_types"] = std::to_string(index.token_count());
  p["mean_important_tokens_per_sample"] = fmt_double(index.mean_set_size());
  p["k_min"] = std::to_string(k_min);
  p["k_max"] = std::to_string(k_max);
  p["k_min_rule"] = "coverage-minimizing greedy (fewest new important tokens, ties by corpus order)";
  p["k_max_rule"] = "token-aware sampling over the full corpus";
  p["target_spacing"] = "linear";
  p["tie_rule"] = "smallest corpus position";
  p["prune_floor_tokens"] = std::to_string(floor_tokens);

  for (std::size_t i = 0; i < options.points; ++i) {
    const std::string key = "point." + std::to_string(i) + ".";
    std::vector<std::uint32_t> chosen;
    if (i == 0) {
      chosen = bottom;
      p[key + "source"] = "coverage-minimizing subset";
    } else if (i + 1 == options.points) {
      chosen = top.selected;
      p[key + "source"] = "token-aware sampling, unpruned";
    } else {
      const double exact = static_cast<double>(k_min) + static_cast<double>(i) *
                                                            static_cast<double>(k_max - k_min) /
                                                            static_cast<double>(options.points - 1);
      const auto target = static_cast<std::size_t>(std::llround(exact));
      const std::size_t effective = std::max(target, floor_tokens);
      const PruneResult pruned = inverse_greedy_prune(index, pool, effective);
      chosen = token_aware_sample(index, pruned.survivors, pruned.tokens, options.size, sampling).selected;
      p[key + "source"] = "prune then token-aware sampling";
      p[key + "target"] = std::to_string(target);
      p[key + "effective_target"] = std::to_string(effective);
      p[key + "pruned_pool"] = std::to_string(pruned.survivors.size());
      p[key + "pruned_tokens"] = std::to_string(pruned.tokens.size());
      if (effective != target) p[key + "relaxed"] = "true";
    }
    const std::size_t achieved = distinct_tokens(index, chosen);
    p[key + "achieved_tokens"] = std::to_string(achieved);
    SeriesPoint point;
    point.diversity_value = static_cast<double>(achieved);
    point.diversity_percent =
        diversity_percent(static_cast<double>(achieved), static_cast<double>(k_min), static_cast<double>(k_max));
    point.sample_ids = ids_of(index, std::move(chosen));
    m.points.push_back(std::move(point));
  }
  return m;
}

SeriesManifest build_micro_series(const Corpus& corpus, Component component, const Tokenizer& tokenizer,
                                  const MicroSeriesOptions& options) {
  const FrequencyTable table = build_frequency_table(corpus, component, tokenizer, options.thresholds);
  const TokenSetIndex index = build_token_set_index(corpus, component, table, tokenizer);
  SeriesManifest m = build_micro_series(index, component, options);
  m.parameters["corpus_digest"] = corpus.provenance().source_digest;
  m.parameters["rng"] = std::string(Rng::kName);
  m.parameters["seed_use"] = "recorded only; selection is fully determined by the tie rules";
  return m;
}

}  // namespace divforge
