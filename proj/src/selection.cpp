#include "divforge/selection.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "divforge/common.hpp"

namespace divforge {

namespace {

// Class indices by descending size, then ascending id.
std::vector<std::size_t> rank_classes(std::span<const SampleClass> classes) {
  std::vector<std::size_t> order(classes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (classes[a].members.size() != classes[b].members.size()) {
      return classes[a].members.size() > classes[b].members.size();
    }
    return classes[a].id < classes[b].id;
  });
  for (std::size_t r = 1; r < order.size(); ++r) {
    if (classes[order[r]].id == classes[order[r - 1]].id) {
      throw PreconditionError("duplicate class id " + std::to_string(classes[order[r]].id));
    }
  }
  return order;
}

}  // namespace

std::vector<std::size_t> class_quotas(std::span<const SampleClass> classes, std::size_t n) {
  if (classes.empty()) throw PreconditionError("uniform selection needs at least one class");
  const std::vector<std::size_t> order = rank_classes(classes);
  std::vector<std::size_t> quota(classes.size(), 0);
  // Classes too small for an even share give everything; the rest split
  // what is left evenly, extras going to the higher ranked.
  std::vector<std::size_t> active = order;
  std::size_t remaining = n;
  for (bool capped = true; capped && !active.empty();) {
    capped = false;
    const std::size_t share = remaining / active.size();
    std::vector<std::size_t> keep;
    for (std::size_t c : active) {
      const std::size_t size = classes[c].members.size();
      if (size <= share) {
        quota[c] = size;
        remaining -= size;
        capped = true;
      } else {
        keep.push_back(c);
      }
    }
    active = std::move(keep);
  }
  for (std::size_t r = 0; r < active.size(); ++r) {
    quota[active[r]] = remaining / active.size() + (r < remaining % active.size() ? 1 : 0);
  }
  return quota;
}

std::vector<std::size_t> uniform_select(std::span<const SampleClass> classes, std::size_t n,
                                        std::uint64_t seed) {
  if (classes.empty()) throw PreconditionError("uniform selection needs at least one class");
  {
    std::unordered_set<std::size_t> pool;
    for (const auto& c : classes) pool.insert(c.members.begin(), c.members.end());
    if (pool.size() < n) {
      throw PreconditionError("class union has " + std::to_string(pool.size()) +
                              " samples, fewer than the requested " + std::to_string(n));
    }
  }
  const std::vector<std::size_t> order = rank_classes(classes);
  const std::vector<std::size_t> quota = class_quotas(classes, n);

  std::vector<std::vector<std::size_t>> draws(classes.size());
  for (std::size_t c = 0; c < classes.size(); ++c) {
    auto& d = draws[c];
    d = classes[c].members;
    std::sort(d.begin(), d.end());
    d.erase(std::unique(d.begin(), d.end()), d.end());
    Rng rng(derive_seed(seed, classes[c].id));
    rng.shuffle(d);
  }
  std::vector<std::size_t> cursor(classes.size(), 0);
  std::unordered_set<std::size_t> chosen;
  chosen.reserve(n);
  std::vector<std::size_t> out;
  out.reserve(n);

  auto draw_one = [&](std::size_t c) {
    auto& d = draws[c];
    while (cursor[c] < d.size()) {
      const std::size_t m = d[cursor[c]++];
      if (chosen.insert(m).second) {
        out.push_back(m);
        return true;
      }
    }
    return false;
  };

  for (std::size_t c : order) {
    for (std::size_t taken = 0; taken < quota[c] && out.size() < n; ++taken) {
      if (!draw_one(c)) break;
    }
  }
  // Overlap can leave a shortfall; refill one per class in rank order.
  while (out.size() < n) {
    bool progress = false;
    for (std::size_t c : order) {
      if (out.size() == n) break;
      progress |= draw_one(c);
    }
    if (!progress) throw PreconditionError("uniform selection exhausted its classes");
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace divforge
