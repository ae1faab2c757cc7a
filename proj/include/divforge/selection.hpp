#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace divforge {

// One candidate pool for uniform selection: a topic, a tag category, ...
// Class identity (not its position in the input) fixes its quota and its
// random stream.
struct SampleClass {
  std::uint64_t id = 0;
  std::vector<std::size_t> members;  // corpus positions
};

// Per-class quotas in input order. Classes are ranked by descending size
// then ascending id. A class no larger than an even share of what is left
// gives all its members; the remaining classes split the rest evenly, the
// higher ranked taking one extra, so their quotas differ by at most one.
std::vector<std::size_t> class_quotas(std::span<const SampleClass> classes, std::size_t n);

// Draws exactly n distinct positions, balanced across classes. Within a
// class the draw is a seeded shuffle of its sorted members. Overlapping
// classes are allowed: an already chosen position is skipped and the class
// draws its next member instead; any remaining shortfall is refilled
// round-robin. Result is sorted ascending.
//
// Throws PreconditionError if classes is empty or their union is smaller
// than n.
std::vector<std::size_t> uniform_select(std::span<const SampleClass> classes, std::size_t n,
                                        std::uint64_t seed);

}  // namespace divforge
