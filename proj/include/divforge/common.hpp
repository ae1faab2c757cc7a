#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace divforge {

// Base of every error the library throws. The CLI maps IoError to exit
// code 1 and everything else to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Input violates an operation's precondition (bad parameters, empty
// corpus, id mismatch, malformed definition file...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

enum class Component { kInstruction, kResponse };

std::string_view to_string(Component c);
Component parse_component(std::string_view s);

// Warnings go to stderr unless silenced (tests silence them).
void set_warnings_enabled(bool enabled);
void warn(std::string_view message);

// Worker count for data-parallel maps: hardware concurrency, capped by
// DIVFORGE_THREADS when set.
std::size_t worker_count();

// Splits [0, n) into contiguous chunks, one per worker. The callback gets
// (worker index, begin, end). Runs inline when a single worker suffices.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

// Deterministic generator pinned for manifests: std::mt19937_64 (its output
// sequence is fixed by the standard) with our own bounded-integer reduction,
// since std::uniform_int_distribution differs across standard libraries.
class Rng {
 public:
  static constexpr std::string_view kName = "mt19937_64/lemire-bounded/v1";

  explicit Rng(std::uint64_t seed);
  std::uint64_t next();
  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);
  // Uniform real in [0, 1) with 53 random bits.
  double unit();
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key);
std::uint64_t fnv1a64(std::string_view bytes);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace divforge
