#include "divforge/metrics.hpp"

#include <json.hpp>
#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "divforge/tokenizer.hpp"

namespace divforge {

using json = nlohmann::json;

namespace {

constexpr double kBleuEpsilon = 1e-9;

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Interns tokens as dense ids so n-grams can be keyed by fixed-width bytes.
class Vocabulary {
 public:
  std::vector<std::uint32_t> encode(const std::vector<std::string>& tokens) {
    std::vector<std::uint32_t> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) {
      auto [it, inserted] = ids_.try_emplace(t, static_cast<std::uint32_t>(ids_.size()));
      ids.push_back(it->second);
    }
    return ids;
  }

 private:
  std::unordered_map<std::string, std::uint32_t> ids_;
};

std::string gram_key(const std::uint32_t* first, std::size_t n) {
  std::string key(n * sizeof(std::uint32_t), '\0');
  std::memcpy(key.data(), first, key.size());
  return key;
}

using GramCounts = std::unordered_map<std::string, std::uint32_t>;

GramCounts count_grams(const std::vector<std::uint32_t>& ids, std::size_t n) {
  GramCounts counts;
  if (ids.size() < n) return counts;
  for (std::size_t i = 0; i + n <= ids.size(); ++i) ++counts[gram_key(ids.data() + i, n)];
  return counts;
}

// Closest length to h in `sorted`, optionally ignoring one copy of h (the
// hypothesis itself). Ties go to the shorter length. Returns nullopt when
// nothing is left.
std::optional<std::size_t> closest_length(const std::vector<std::size_t>& sorted, std::size_t h, bool exclude_self) {
  const auto lo = std::lower_bound(sorted.begin(), sorted.end(), h);
  const auto hi = std::upper_bound(sorted.begin(), sorted.end(), h);
  const auto equal = static_cast<std::size_t>(hi - lo) - (exclude_self ? 1 : 0);
  if (equal > 0) return h;
  std::optional<std::size_t> below, above;
  if (lo != sorted.begin()) below = *(lo - 1);
  if (hi != sorted.end()) above = *hi;
  if (below && above) return (h - *below <= *above - h) ? below : above;
  return below ? below : above;
}

double combine_bleu(std::size_t hyp_len, std::size_t ref_len, const std::vector<std::size_t>& matches,
                    std::size_t max_n) {
  if (hyp_len == 0) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    const double total = hyp_len >= n ? static_cast<double>(hyp_len - n + 1) : 0.0;
    log_sum += std::log((static_cast<double>(matches[n - 1]) + kBleuEpsilon) / (total + kBleuEpsilon));
  }
  const double bp =
      hyp_len > ref_len ? 1.0 : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
  return bp * std::exp(log_sum / static_cast<double>(max_n));
}

std::vector<double> pairwise_row_sums(const EmbeddingMatrix& e) {
  const std::size_t n = e.rows();
  std::vector<double> row_sum(n, 0.0);
  parallel_for(n, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t a = begin; a < end; ++a) {
      double s = 0.0;
      for (std::size_t b = a + 1; b < n; ++b) {
        s += (e.vectors.row(static_cast<Eigen::Index>(a)) - e.vectors.row(static_cast<Eigen::Index>(b))).norm();
      }
      row_sum[a] = s;
    }
  });
  return row_sum;
}

}  // namespace

TokenizedTexts tokenize_all(std::span<const std::string_view> texts, const Tokenizer& tokenizer) {
  TokenizedTexts out(texts.size());
  parallel_for(texts.size(), [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = tokenizer.encode(texts[i]);
  });
  return out;
}

double ngram_ratio(const TokenizedTexts& texts, std::size_t n) {
  if (n == 0) throw PreconditionError("n-gram order must be >= 1");
  Vocabulary vocab;
  std::unordered_map<std::string, std::uint32_t> seen;
  std::size_t total = 0;
  for (const auto& t : texts) {
    const auto ids = vocab.encode(t);
    if (ids.size() < n) continue;
    for (std::size_t i = 0; i + n <= ids.size(); ++i) {
      seen.try_emplace(gram_key(ids.data() + i, n), 0);
      ++total;
    }
  }
  if (total == 0) throw PreconditionError("no text has " + std::to_string(n) + " or more tokens");
  return static_cast<double>(seen.size()) / static_cast<double>(total);
}

double embedding_distance(const EmbeddingMatrix& e, DistanceNormalizer normalizer) {
  const std::size_t n = e.rows();
  if (n < 2) throw PreconditionError("embedding distance needs at least 2 rows");
  const std::vector<double> rows = pairwise_row_sums(e);
  double sum = 0.0;
  for (double r : rows) sum += r;
  const double nd = static_cast<double>(n);
  if (normalizer == DistanceNormalizer::kLiteral) return 2.0 * sum / nd;
  return sum / (nd * (nd - 1.0) / 2.0);
}

double mean_sequence_length(const TokenizedTexts& texts) {
  if (texts.empty()) throw PreconditionError("sequence length of an empty dataset");
  std::size_t total = 0;
  for (const auto& t : texts) total += t.size();
  return static_cast<double>(total) / static_cast<double>(texts.size());
}

std::string deflate_description() {
  const DeflateSettings s;
  return "raw deflate (zlib " + std::string(zlibVersion()) + "), level " + std::to_string(s.level) +
         ", windowBits " + std::to_string(s.window_bits) + ", memLevel " + std::to_string(s.mem_level) +
         ", default strategy";
}

std::size_t deflate_size(std::string_view bytes) {
  const DeflateSettings s;
  z_stream zs{};
  if (deflateInit2(&zs, s.level, Z_DEFLATED, -s.window_bits, s.mem_level, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw Error("deflateInit2 failed");
  }
  std::vector<unsigned char> buf(1 << 16);
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(bytes.data()));
  zs.avail_in = static_cast<uInt>(bytes.size());
  std::size_t out = 0;
  int rc = Z_OK;
  do {
    zs.next_out = buf.data();
    zs.avail_out = static_cast<uInt>(buf.size());
    rc = deflate(&zs, Z_FINISH);
    out += buf.size() - zs.avail_out;
  } while (rc == Z_OK || (rc == Z_BUF_ERROR && zs.avail_out == 0));
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw Error("deflate failed");
  return out;
}

double compression_ratio(std::span<const std::string_view> texts) {
  std::vector<std::string_view> sorted(texts.begin(), texts.end());
  std::sort(sorted.begin(), sorted.end());
  std::string joined;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i) joined.push_back('\n');
    joined += sorted[i];
  }
  if (joined.empty()) throw PreconditionError("compression ratio of empty data");
  return static_cast<double>(joined.size()) / static_cast<double>(deflate_size(joined));
}

double sentence_bleu(const std::vector<std::string>& hypothesis,
                     const std::vector<const std::vector<std::string>*>& references, std::size_t max_n) {
  if (max_n == 0) throw PreconditionError("BLEU order must be >= 1");
  if (references.empty()) throw PreconditionError("BLEU needs at least one reference");
  Vocabulary vocab;
  const auto hyp = vocab.encode(hypothesis);
  std::vector<std::vector<std::uint32_t>> refs;
  std::vector<std::size_t> lengths;
  for (const auto* r : references) {
    refs.push_back(vocab.encode(*r));
    lengths.push_back(r->size());
  }
  std::sort(lengths.begin(), lengths.end());
  std::vector<std::size_t> matches(max_n, 0);
  for (std::size_t n = 1; n <= max_n; ++n) {
    const GramCounts h = count_grams(hyp, n);
    GramCounts best;
    for (const auto& r : refs) {
      for (const auto& [g, c] : count_grams(r, n)) {
        if (h.count(g)) best[g] = std::max(best[g], c);
      }
    }
    for (const auto& [g, c] : h) {
      auto it = best.find(g);
      if (it != best.end()) matches[n - 1] += std::min(c, it->second);
    }
  }
  return combine_bleu(hyp.size(), *closest_length(lengths, hyp.size(), false), matches, max_n);
}

SelfBleuResult self_bleu(const TokenizedTexts& texts, const SelfBleuOptions& options, std::span<const std::string> ids) {
  const std::size_t n_texts = texts.size();
  if (n_texts < 2) throw PreconditionError("Self-BLEU needs at least 2 texts");
  if (options.max_n == 0) throw PreconditionError("BLEU order must be >= 1");
  if (!ids.empty() && ids.size() != n_texts) throw PreconditionError("Self-BLEU ids/texts length mismatch");
  const std::size_t max_n = options.max_n;

  Vocabulary vocab;
  std::vector<std::vector<std::uint32_t>> docs;
  docs.reserve(n_texts);
  for (const auto& t : texts) docs.push_back(vocab.encode(t));
  // grams[n-1][d]: n-gram counts of document d.
  std::vector<std::vector<GramCounts>> grams(max_n, std::vector<GramCounts>(n_texts));
  parallel_for(n_texts, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t d = begin; d < end; ++d) {
      for (std::size_t n = 1; n <= max_n; ++n) grams[n - 1][d] = count_grams(docs[d], n);
    }
  });

  SelfBleuResult result;
  std::vector<double> scores(n_texts, 0.0);
  if (n_texts - 1 <= options.sample_limit) {
    // The best count of a gram among "everyone but d" is the top count,
    // unless d holds it, in which case it is the runner-up.
    struct Top {
      std::uint32_t first = 0;
      std::uint32_t second = 0;
      std::size_t holder = 0;
    };
    std::vector<std::unordered_map<std::string, Top>> tops(max_n);
    for (std::size_t n = 0; n < max_n; ++n) {
      for (std::size_t d = 0; d < n_texts; ++d) {
        for (const auto& [g, c] : grams[n][d]) {
          Top& t = tops[n][g];
          if (c > t.first) {
            t.second = t.first;
            t.first = c;
            t.holder = d;
          } else if (c > t.second) {
            t.second = c;
          }
        }
      }
    }
    std::vector<std::size_t> lengths;
    for (const auto& d : docs) lengths.push_back(d.size());
    std::sort(lengths.begin(), lengths.end());
    parallel_for(n_texts, [&](std::size_t, std::size_t begin, std::size_t end) {
      for (std::size_t d = begin; d < end; ++d) {
        std::vector<std::size_t> matches(max_n, 0);
        for (std::size_t n = 0; n < max_n; ++n) {
          for (const auto& [g, c] : grams[n][d]) {
            const Top& t = tops[n].at(g);
            const std::uint32_t other = t.holder == d ? t.second : t.first;
            matches[n] += std::min(c, other);
          }
        }
        scores[d] = combine_bleu(docs[d].size(), *closest_length(lengths, docs[d].size(), true), matches, max_n);
      }
    });
    result.references_per_hypothesis = n_texts - 1;
  } else {
    std::vector<std::uint64_t> key_hash(n_texts);
    std::vector<std::string> keys(n_texts);
    for (std::size_t d = 0; d < n_texts; ++d) {
      if (!ids.empty()) {
        keys[d] = ids[d];
      } else {
        for (const auto& tok : texts[d]) {
          keys[d] += tok;
          keys[d].push_back('\0');
        }
      }
      key_hash[d] = fnv1a64(keys[d]);
    }
    const std::size_t limit = options.sample_limit;
    if (limit == 0) throw PreconditionError("Self-BLEU sample limit must be positive");
    parallel_for(n_texts, [&](std::size_t, std::size_t begin, std::size_t end) {
      std::vector<std::pair<std::uint64_t, std::size_t>> ranked;
      for (std::size_t d = begin; d < end; ++d) {
        const std::uint64_t hyp_seed = derive_seed(options.seed, key_hash[d]);
        ranked.clear();
        for (std::size_t r = 0; r < n_texts; ++r) {
          if (r != d) ranked.emplace_back(derive_seed(hyp_seed, key_hash[r]), r);
        }
        auto by_hash = [&](const auto& a, const auto& b) {
          if (a.first != b.first) return a.first < b.first;
          return keys[a.second] < keys[b.second];
        };
        std::nth_element(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(limit - 1), ranked.end(),
                         by_hash);
        std::vector<std::size_t> lengths;
        std::vector<std::size_t> matches(max_n, 0);
        for (std::size_t n = 0; n < max_n; ++n) {
          for (const auto& [g, c] : grams[n][d]) {
            std::uint32_t best = 0;
            for (std::size_t j = 0; j < limit && best < c; ++j) {
              const auto& rc = grams[n][ranked[j].second];
              auto it = rc.find(g);
              if (it != rc.end()) best = std::max(best, it->second);
            }
            matches[n] += std::min(c, best);
          }
        }
        for (std::size_t j = 0; j < limit; ++j) lengths.push_back(docs[ranked[j].second].size());
        std::sort(lengths.begin(), lengths.end());
        scores[d] = combine_bleu(docs[d].size(), *closest_length(lengths, docs[d].size(), false), matches, max_n);
      }
    });
    result.sampled = true;
    result.references_per_hypothesis = limit;
  }
  double sum = 0.0;
  for (double s : scores) sum += s;
  result.value = sum / static_cast<double>(n_texts);
  return result;
}

std::vector<std::uint64_t> token_counts(const TokenizedTexts& texts) {
  std::map<std::string, std::uint64_t> counts;
  for (const auto& t : texts) {
    for (const auto& tok : t) ++counts[tok];
  }
  std::vector<std::uint64_t> out;
  out.reserve(counts.size());
  for (const auto& [tok, c] : counts) out.push_back(c);
  return out;
}

namespace {

std::uint64_t checked_total(std::span<const std::uint64_t> counts) {
  const std::uint64_t total = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  if (total == 0) throw PreconditionError("distribution needs at least one token");
  return total;
}

}  // namespace

double information_entropy(std::span<const std::uint64_t> counts) {
  const double total = static_cast<double>(checked_total(counts));
  double e = 0.0;
  for (std::uint64_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    e -= p * std::log(p);
  }
  return e;
}

double gini_index(std::span<const std::uint64_t> counts) {
  const double total = static_cast<double>(checked_total(counts));
  double s = 0.0;
  for (std::uint64_t c : counts) {
    const double p = static_cast<double>(c) / total;
    s += p * p;
  }
  return 1.0 - s;
}

double distribution_kurtosis(std::span<const std::uint64_t> counts) {
  if (counts.size() < 2) throw PreconditionError("kurtosis needs at least 2 token counts");
  const double n = static_cast<double>(counts.size());
  double mean = 0.0;
  for (std::uint64_t c : counts) mean += static_cast<double>(c);
  mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (std::uint64_t c : counts) {
    const double d = static_cast<double>(c) - mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m4 /= n;
  if (m2 == 0.0) throw PreconditionError("kurtosis is undefined when all token counts are equal");
  return m4 / (m2 * m2) - 3.0;
}

namespace {

void check_pairs(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw PreconditionError("xs and ys differ in length");
  if (xs.size() < 2) throw PreconditionError("need at least 2 points");
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

double pearson(std::span<const double> xs, std::span<const double> ys) {
  check_pairs(xs, ys);
  const double mx = mean_of(xs), my = mean_of(ys);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw PreconditionError("pearson needs nonzero variance in both series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double ols_slope(std::span<const double> xs, std::span<const double> ys) {
  check_pairs(xs, ys);
  const double mx = mean_of(xs), my = mean_of(ys);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (sxx == 0.0) throw PreconditionError("slope needs nonzero variance in x");
  return sxy / sxx;
}

MetricReport compute_metrics(std::span<const std::string_view> texts, const Tokenizer& tokenizer,
                             const MetricOptions& options, const EmbeddingMatrix* embeddings,
                             std::span<const std::string> ids) {
  if (texts.empty()) throw PreconditionError("metrics over an empty dataset");
  auto wants = [&](std::string_view m) {
    return std::find(options.metrics.begin(), options.metrics.end(), m) != options.metrics.end();
  };
  for (const auto& m : options.metrics) {
    if (std::find(kAllMetrics.begin(), kAllMetrics.end(), m) == kAllMetrics.end()) {
      throw PreconditionError("unknown metric '" + m + "'");
    }
  }
  MetricReport r;
  r.tokenizer_fingerprint = tokenizer.fingerprint();
  auto& p = r.parameters;
  p["samples"] = std::to_string(texts.size());

  const TokenizedTexts tokens = tokenize_all(texts, tokenizer);
  if (wants("nr")) {
    for (std::size_t n : options.ngram_orders) r.values["nr_" + std::to_string(n)] = ngram_ratio(tokens, n);
  }
  if (wants("ed")) {
    if (!embeddings) throw PreconditionError("metric 'ed' needs embeddings (--embeddings)");
    if (embeddings->rows() != texts.size()) throw PreconditionError("embedding rows do not match the dataset");
    r.values["ed"] = embedding_distance(*embeddings, options.distance);
    p["ed_normalizer"] = options.distance == DistanceNormalizer::kPairMean ? "mean over unordered pairs"
                                                                          : "(1/N) sum over ordered pairs a!=b";
    p["ed_fingerprint"] = embeddings->fingerprint;
  }
  if (wants("sl")) r.values["sl"] = mean_sequence_length(tokens);
  if (wants("cr")) {
    r.values["cr"] = compression_ratio(texts);
    p["cr_codec"] = deflate_description();
    p["cr_join"] = "texts sorted bytewise, joined with newline";
  }
  if (wants("bleu")) {
    const SelfBleuResult b = self_bleu(tokens, options.bleu, ids);
    r.values["self_bleu"] = b.value;
    p["bleu_max_n"] = std::to_string(options.bleu.max_n);
    p["bleu_smoothing"] = "additive epsilon 1e-9";
    p["bleu_mode"] = b.sampled ? "sampled" : "exact";
    p["bleu_references_per_hypothesis"] = std::to_string(b.references_per_hypothesis);
    if (b.sampled) {
      p["bleu_sample_limit"] = std::to_string(options.bleu.sample_limit);
      p["bleu_seed"] = std::to_string(options.bleu.seed);
      p["bleu_reference_key"] = ids.empty() ? "text content" : "sample id";
    }
  }
  if (wants("ie") || wants("gini") || wants("kurt")) {
    const std::vector<std::uint64_t> counts = token_counts(tokens);
    p["distinct_tokens"] = std::to_string(counts.size());
    if (wants("ie")) {
      r.values["ie"] = information_entropy(counts);
      p["ie_log_base"] = "e";
    }
    if (wants("gini")) r.values["gini"] = gini_index(counts);
    if (wants("kurt")) {
      try {
        r.values["kurtosis"] = distribution_kurtosis(counts);
      } catch (const PreconditionError& e) {
        p["kurtosis"] = std::string("undefined: ") + e.what();
      }
      p["kurtosis_over"] = "per-token count values, excess, population moments";
    }
  }
  return r;
}

std::string to_json(const MetricReport& report) {
  json j;
  j["dataset"] = report.dataset;
  j["component"] = report.component;
  j["dataset_digest"] = report.dataset_digest;
  j["tokenizer_fingerprint"] = report.tokenizer_fingerprint;
  j["values"] = report.values;
  j["parameters"] = report.parameters;
  return j.dump(2) + "\n";
}

MetricReport metric_report_from_json(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw PreconditionError("metric report is not a JSON object");
  MetricReport r;
  try {
    r.dataset = j.at("dataset").get<std::string>();
    r.component = j.value("component", "");
    r.dataset_digest = j.value("dataset_digest", "");
    r.tokenizer_fingerprint = j.value("tokenizer_fingerprint", "");
    r.values = j.at("values").get<std::map<std::string, double>>();
    if (j.contains("parameters")) r.parameters = j["parameters"].get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw PreconditionError(std::string("malformed metric report: ") + e.what());
  }
  return r;
}

std::string to_csv(const MetricReport& report) {
  std::string out = "dataset,metric,value\n";
  for (const auto& [k, v] : report.values) out += report.dataset + "," + k + "," + fmt_double(v) + "\n";
  return out;
}

CorrelationReport correlate(const std::vector<MetricReport>& reports, const std::map<std::string, double>& scores) {
  std::vector<std::string> missing;
  std::map<std::string, const MetricReport*> by_name;
  for (const auto& r : reports) {
    if (!by_name.emplace(r.dataset, &r).second) throw PreconditionError("two reports for dataset '" + r.dataset + "'");
    if (!scores.count(r.dataset)) missing.push_back("no score for report '" + r.dataset + "'");
  }
  for (const auto& [name, s] : scores) {
    if (!by_name.count(name)) missing.push_back("no report for score '" + name + "'");
  }
  if (!missing.empty()) {
    std::string msg = "reports and scores do not match:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw PreconditionError(msg);
  }
  CorrelationReport out;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> per_metric;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> per_strategy;
  for (const auto& [name, r] : by_name) {
    const double score = scores.at(name);
    for (const auto& [metric, v] : r->values) {
      per_metric[metric].first.push_back(v);
      per_metric[metric].second.push_back(score);
    }
    auto st = r->parameters.find("strategy");
    auto pct = r->parameters.find("diversity_percent");
    if (st != r->parameters.end() && pct != r->parameters.end()) {
      per_strategy[st->second].first.push_back(std::stod(pct->second));
      per_strategy[st->second].second.push_back(score);
    }
  }
  for (const auto& [metric, xy] : per_metric) {
    CorrelationReport::Row row{metric, std::nullopt, xy.first.size()};
    if (xy.first.size() < 2) throw PreconditionError("correlation needs at least 2 datasets");
    try {
      row.pearson = pearson(xy.first, xy.second);
    } catch (const PreconditionError&) {
      // constant metric or constant scores: no correlation defined
    }
    out.correlations.push_back(std::move(row));
  }
  for (const auto& [strategy, xy] : per_strategy) {
    out.slopes.push_back({strategy, 100.0 * ols_slope(xy.first, xy.second), xy.first.size()});
  }
  return out;
}

std::string to_json(const CorrelationReport& report) {
  json j;
  j["pearson"] = json::array();
  for (const auto& r : report.correlations) j["pearson"].push_back({{"metric", r.metric}, {"r", r.pearson ? json(*r.pearson) : json(nullptr)}, {"n", r.n}});
  j["slopes"] = json::array();
  for (const auto& s : report.slopes) {
    j["slopes"].push_back({{"strategy", s.strategy}, {"slope_e-2", s.slope_e2}, {"n", s.n}});
  }
  return j.dump(2) + "\n";
}

std::string to_csv(const CorrelationReport& report) {
  std::string out = "kind,name,value,n\n";
  for (const auto& r : report.correlations) {
    out += "pearson," + r.metric + "," + (r.pearson ? fmt_double(*r.pearson) : std::string()) + "," +
           std::to_string(r.n) + "\n";
  }
  for (const auto& s : report.slopes) {
    out += "slope_e-2," + s.strategy + "," + fmt_double(s.slope_e2) + "," + std::to_string(s.n) + "\n";
  }
  return out;
}

}  // namespace divforge
