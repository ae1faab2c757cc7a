#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "divforge/clustering.hpp"
#include "divforge/common.hpp"

namespace divforge {

class Tokenizer;

using TokenizedTexts = std::vector<std::vector<std::string>>;

// Tokenizes every text (in parallel); order is preserved.
TokenizedTexts tokenize_all(std::span<const std::string_view> texts, const Tokenizer& tokenizer);

// Unique n-grams over total n-grams, pooled across texts. N-grams never
// cross text boundaries.
double ngram_ratio(const TokenizedTexts& texts, std::size_t n);

enum class DistanceNormalizer {
  kPairMean,  // sum over unordered pairs / (N (N-1) / 2)
  kLiteral,   // (1/N) * sum over ordered pairs a != b
};

double embedding_distance(const EmbeddingMatrix& e, DistanceNormalizer normalizer = DistanceNormalizer::kPairMean);

double mean_sequence_length(const TokenizedTexts& texts);

// Fixed raw deflate settings; CR is only comparable under one codec.
struct DeflateSettings {
  int level = 6;
  int window_bits = 15;
  int mem_level = 8;
};
std::string deflate_description();
std::size_t deflate_size(std::string_view bytes);

// Texts are sorted bytewise and joined with '\n' (so the value does not
// depend on dataset order), then compressed with raw deflate level 6.
// Returns original bytes / compressed bytes.
double compression_ratio(std::span<const std::string_view> texts);

struct SelfBleuOptions {
  std::size_t max_n = 4;
  std::size_t sample_limit = 2000;
  std::uint64_t seed = 0;
};

struct SelfBleuResult {
  double value = 0.0;
  bool sampled = false;
  std::size_t references_per_hypothesis = 0;
};

// BLEU of one hypothesis against a reference set: brevity penalty (closest
// reference length, ties to the shorter) times the geometric mean of
// clipped n-gram precisions p_n = (matches + 1e-9) / (total + 1e-9). An
// empty hypothesis scores 0.
double sentence_bleu(const std::vector<std::string>& hypothesis,
                     const std::vector<const std::vector<std::string>*>& references, std::size_t max_n);

// Mean over texts of BLEU(text | every other text). Above sample_limit
// texts, each hypothesis is scored against sample_limit references: the
// ones with the smallest hash of (seed, hypothesis key, reference key).
// Keys are the given ids, or the text content when ids is empty.
SelfBleuResult self_bleu(const TokenizedTexts& texts, const SelfBleuOptions& options,
                         std::span<const std::string> ids = {});

// Per distinct token, its number of occurrences (ascending token order).
std::vector<std::uint64_t> token_counts(const TokenizedTexts& texts);

// Natural-log Shannon entropy of the empirical token distribution.
double information_entropy(std::span<const std::uint64_t> counts);
double gini_index(std::span<const std::uint64_t> counts);
// Excess kurtosis (population moments) of the count values. Throws
// PreconditionError when all counts are equal.
double distribution_kurtosis(std::span<const std::uint64_t> counts);

double pearson(std::span<const double> xs, std::span<const double> ys);
// Least-squares slope of ys on xs, in units of ys per unit of xs.
double ols_slope(std::span<const double> xs, std::span<const double> ys);

inline const std::vector<std::string> kAllMetrics = {"nr", "ed", "sl", "cr", "bleu", "ie", "kurt", "gini"};

struct MetricOptions {
  std::vector<std::string> metrics = kAllMetrics;
  std::vector<std::size_t> ngram_orders = {1, 2, 3};
  SelfBleuOptions bleu;
  DistanceNormalizer distance = DistanceNormalizer::kPairMean;
};

struct MetricReport {
  std::string dataset;  // name used to join with scores
  std::string component;
  std::string dataset_digest;
  std::string tokenizer_fingerprint;
  std::map<std::string, double> values;  // "nr_1", "ed", "sl", "cr", "self_bleu", "ie", "kurtosis", "gini"
  std::map<std::string, std::string> parameters;
};

// Computes the requested metrics over the texts; "ed" needs embeddings whose
// rows match the texts.
MetricReport compute_metrics(std::span<const std::string_view> texts, const Tokenizer& tokenizer,
                             const MetricOptions& options, const EmbeddingMatrix* embeddings = nullptr,
                             std::span<const std::string> ids = {});

std::string to_json(const MetricReport& report);
MetricReport metric_report_from_json(std::string_view json);
std::string to_csv(const MetricReport& report);

struct CorrelationReport {
  struct Row {
    std::string metric;
    std::optional<double> pearson;  // empty when either series is constant
    std::size_t n = 0;
  };
  struct Slope {
    std::string strategy;
    double slope_e2 = 0.0;  // raw slope x 100, i.e. in units of 1e-2
    std::size_t n = 0;
  };
  std::vector<Row> correlations;
  std::vector<Slope> slopes;
};

// Joins reports with scores by dataset name. Pearson is computed per metric
// over all reports holding it; slopes group reports by their "strategy"
// parameter and regress score on "diversity_percent". Throws
// PreconditionError listing ids present on one side only.
CorrelationReport correlate(const std::vector<MetricReport>& reports, const std::map<std::string, double>& scores);

std::string to_json(const CorrelationReport& report);
std::string to_csv(const CorrelationReport& report);

}  // namespace divforge
