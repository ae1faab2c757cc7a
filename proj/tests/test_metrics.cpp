#include <doctest.h>

#include <cmath>
#include <random>

#include "divforge/metrics.hpp"
#include "divforge/tokenizer.hpp"
#include "oracles.hpp"

using namespace divforge;

namespace {

TokenizedTexts random_texts(std::mt19937_64& rng, std::size_t n, std::size_t vocab, std::size_t max_len) {
  TokenizedTexts out(n);
  for (auto& t : out) {
    const std::size_t len = 1 + rng() % max_len;
    for (std::size_t k = 0; k < len; ++k) t.push_back("w" + std::to_string(rng() % vocab));
  }
  return out;
}

std::vector<std::uint64_t> zipf_counts(std::size_t n) {
  std::vector<std::uint64_t> c;
  for (std::size_t i = 1; i <= n; ++i) c.push_back(static_cast<std::uint64_t>(10000.0 / static_cast<double>(i)) + 1);
  return c;
}

}  // namespace

TEST_CASE("n-gram ratio") {
  CHECK(ngram_ratio({{"a", "b", "c", "d"}}, 1) == 1.0);
  CHECK(ngram_ratio({{"a", "a", "a", "a"}}, 1) == 0.25);
  CHECK_THROWS_AS(ngram_ratio({{"a"}}, 2), PreconditionError);
  std::mt19937_64 rng(1);
  const auto texts = random_texts(rng, 100, 30, 12);
  for (std::size_t n = 1; n <= 3; ++n) CHECK(ngram_ratio(texts, n) == doctest::Approx(oracle::ngram_ratio(texts, n)).epsilon(1e-15));
  auto doubled = texts;
  doubled.insert(doubled.end(), texts.begin(), texts.end());
  CHECK(ngram_ratio(doubled, 2) == ngram_ratio(texts, 2) / 2.0);
}

TEST_CASE("embedding distance") {
  EmbeddingMatrix e;
  e.vectors.resize(2, 2);
  e.vectors << 0, 0, 3, 4;
  e.ids = {"a", "b"};
  CHECK(embedding_distance(e) == 5.0);
  CHECK(embedding_distance(e, DistanceNormalizer::kLiteral) == 5.0);
  e.vectors << 1, 1, 1, 1;
  CHECK(embedding_distance(e) == 0.0);

  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  EmbeddingMatrix r;
  r.vectors.resize(50, 7);
  for (int i = 0; i < 50; ++i) {
    r.ids.push_back(std::to_string(i));
    for (int k = 0; k < 7; ++k) r.vectors(i, k) = g(rng);
  }
  double sum = 0;
  for (int a = 0; a < 50; ++a) {
    for (int b = 0; b < 50; ++b) {
      if (a != b) sum += (r.vectors.row(a) - r.vectors.row(b)).norm();
    }
  }
  CHECK(std::abs(embedding_distance(r) - sum / (50.0 * 49.0)) <= 1e-9);
  CHECK(std::abs(embedding_distance(r, DistanceNormalizer::kLiteral) - sum / 50.0) <= 1e-9);
  e.vectors.resize(1, 2);
  e.ids = {"a"};
  CHECK_THROWS_AS(embedding_distance(e), PreconditionError);
}

TEST_CASE("mean sequence length") {
  CHECK(mean_sequence_length({{"a", "b"}, {"a", "b", "c", "d"}}) == 3.0);
  CHECK(mean_sequence_length({std::vector<std::string>(7, "x")}) == 7.0);
  std::mt19937_64 rng(3);
  const auto texts = random_texts(rng, 1000, 50, 40);
  double total = 0;
  for (const auto& t : texts) total += static_cast<double>(t.size());
  CHECK(mean_sequence_length(texts) == doctest::Approx(total / 1000.0).epsilon(1e-15));
}

TEST_CASE("compression ratio") {
  const std::string as(10000, 'a');
  std::vector<std::string_view> one{as};
  CHECK(compression_ratio(one) >= 100.0);

  std::mt19937_64 rng(4);
  std::string noise(10000, '\0');
  for (auto& ch : noise) ch = static_cast<char>(rng() & 0xFF);
  std::vector<std::string_view> random{noise};
  CHECK(compression_ratio(random) <= 1.05);

  std::vector<std::string> texts;
  for (int i = 0; i < 50; ++i) texts.push_back("sample number " + std::to_string(rng() % 100000) + " text");
  std::vector<std::string_view> a(texts.begin(), texts.end());
  std::vector<std::string_view> aa = a;
  aa.insert(aa.end(), a.begin(), a.end());
  CHECK(compression_ratio(aa) > compression_ratio(a));
  std::vector<std::string_view> reversed(a.rbegin(), a.rend());
  CHECK(compression_ratio(reversed) == compression_ratio(a));
  CHECK(deflate_description().find("level 6") != std::string::npos);
}

TEST_CASE("self-BLEU extremes and oracle agreement") {
  const TokenizedTexts same(5, {"the", "cat", "sat", "on", "the", "mat"});
  CHECK(self_bleu(same, {}).value == doctest::Approx(1.0).epsilon(1e-12));

  TokenizedTexts disjoint;
  for (int i = 0; i < 6; ++i) {
    std::vector<std::string> t;
    for (int k = 0; k < 8; ++k) t.push_back("v" + std::to_string(i) + "_" + std::to_string(k));
    disjoint.push_back(t);
  }
  CHECK(self_bleu(disjoint, {}).value <= 1e-3);
  CHECK_THROWS_AS(self_bleu(TokenizedTexts{{"a"}}, {}), PreconditionError);

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const auto texts = random_texts(rng, 20, 6, 9);
    CHECK(std::abs(self_bleu(texts, {}).value - oracle::self_bleu(texts)) <= 1e-6);
  }
}

TEST_CASE("sentence BLEU agrees with the oracle") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    const auto texts = random_texts(rng, 5, 5, 10);
    std::vector<const std::vector<std::string>*> refs{&texts[1], &texts[2], &texts[3], &texts[4]};
    const std::vector<std::vector<std::string>> ref_copy(texts.begin() + 1, texts.end());
    CHECK(std::abs(sentence_bleu(texts[0], refs, 4) - oracle::bleu(texts[0], ref_copy)) <= 1e-12);
  }
}

TEST_CASE("sampled self-BLEU is reproducible and order-independent") {
  std::mt19937_64 rng(7);
  const auto texts = random_texts(rng, 60, 8, 10);
  SelfBleuOptions o;
  o.sample_limit = 20;
  o.seed = 11;
  const SelfBleuResult a = self_bleu(texts, o);
  CHECK(a.sampled);
  CHECK(a.references_per_hypothesis == 20);
  auto reversed = texts;
  std::reverse(reversed.begin(), reversed.end());
  CHECK(self_bleu(reversed, o).value == doctest::Approx(a.value).epsilon(1e-12));
  CHECK(self_bleu(texts, o).value == a.value);
  o.sample_limit = 100;
  CHECK(self_bleu(texts, o).value == doctest::Approx(oracle::self_bleu(texts)).epsilon(1e-9));
}

TEST_CASE("entropy, Gini and kurtosis") {
  const std::vector<std::uint64_t> uniform4{3, 3, 3, 3};
  CHECK(std::abs(information_entropy(uniform4) - std::log(4.0)) <= 1e-9);
  CHECK(std::abs(gini_index(uniform4) - 0.75) <= 1e-12);
  const std::vector<std::uint64_t> single{42};
  CHECK(information_entropy(single) == 0.0);
  CHECK(gini_index(single) == 0.0);
  CHECK_THROWS_AS(distribution_kurtosis(uniform4), PreconditionError);

  const std::vector<std::uint64_t> sym{1, 2, 2, 3};
  // mean 2, m2 = 1/2, m4 = 1/2: 0.5 / 0.25 - 3 = -1.
  CHECK(distribution_kurtosis(sym) == doctest::Approx(-1.0).epsilon(1e-12));

  const std::vector<std::uint64_t> spike{1, 1, 1, 1, 100};
  const double mean = 104.0 / 5.0;
  double m2 = 0, m4 = 0;
  for (auto c : spike) {
    m2 += std::pow(c - mean, 2) / 5.0;
    m4 += std::pow(c - mean, 4) / 5.0;
  }
  CHECK(distribution_kurtosis(spike) == doctest::Approx(m4 / (m2 * m2) - 3.0).epsilon(1e-12));
  CHECK(distribution_kurtosis(spike) > 0.0);

  const auto z = zipf_counts(300);
  double total = 0;
  for (auto c : z) total += static_cast<double>(c);
  double e = 0, s = 0;
  for (auto c : z) {
    const double p = static_cast<double>(c) / total;
    e -= p * std::log(p);
    s += p * p;
  }
  CHECK(std::abs(information_entropy(z) - e) <= 1e-9);
  CHECK(std::abs(gini_index(z) - (1.0 - s)) <= 1e-12);
  // Uniform maximizes both at fixed support.
  CHECK(information_entropy(z) < std::log(300.0));
  CHECK(gini_index(z) < 1.0 - 1.0 / 300.0);
}

TEST_CASE("count-based metrics ignore token names") {
  const TokenizedTexts a{{"x", "y", "x", "z"}, {"x", "q"}};
  const TokenizedTexts b{{"1", "2", "1", "3"}, {"1", "4"}};
  auto ca = token_counts(a), cb = token_counts(b);
  std::sort(ca.begin(), ca.end());
  std::sort(cb.begin(), cb.end());
  CHECK(ca == cb);
  CHECK(information_entropy(token_counts(a)) == doctest::Approx(information_entropy(token_counts(b))).epsilon(1e-15));
}

TEST_CASE("pearson and OLS slope") {
  const std::vector<double> xs{1, 2, 3, 4, 5};
  std::vector<double> ys;
  for (double x : xs) ys.push_back(2 * x);
  CHECK(std::abs(pearson(xs, ys) - 1.0) <= 1e-12);
  for (auto& y : ys) y = -y;
  CHECK(std::abs(pearson(xs, ys) + 1.0) <= 1e-12);

  const std::vector<double> px{0, 100}, py{50, 55};
  CHECK(ols_slope(px, py) * 100.0 == doctest::Approx(5.0).epsilon(1e-12));
  const std::vector<double> flat{3, 3};
  CHECK(ols_slope(px, flat) == 0.0);

  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  std::vector<double> a(30), b(30);
  for (int i = 0; i < 30; ++i) {
    a[i] = g(rng);
    b[i] = 0.5 * a[i] + g(rng);
  }
  // Textbook single-pass formulas.
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (int i = 0; i < 30; ++i) {
    sx += a[i];
    sy += b[i];
    sxx += a[i] * a[i];
    syy += b[i] * b[i];
    sxy += a[i] * b[i];
  }
  const double n = 30;
  const double r = (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(std::abs(pearson(a, b) - r) <= 1e-12);
  CHECK(std::abs(ols_slope(a, b) - slope) <= 1e-12);
  // Affine invariance.
  std::vector<double> scaled;
  for (double y : b) scaled.push_back(3.0 * y + 7.0);
  CHECK(std::abs(pearson(a, scaled) - pearson(a, b)) <= 1e-12);
  for (auto& y : scaled) y = -y;
  CHECK(std::abs(pearson(a, scaled) + pearson(a, b)) <= 1e-12);
  CHECK_THROWS_AS(pearson(xs, std::vector<double>{1, 2}), PreconditionError);
}

TEST_CASE("metric report and correlation") {
  const Tokenizer ws = Tokenizer::whitespace();
  const std::vector<std::string> texts{"a b c", "a b d", "x y z a"};
  const std::vector<std::string_view> views(texts.begin(), texts.end());
  MetricOptions o;
  o.metrics = {"nr", "sl", "cr", "bleu", "ie", "kurt", "gini"};
  MetricReport r = compute_metrics(views, ws, o);
  CHECK(r.values.count("nr_1"));
  CHECK(r.values.count("self_bleu"));
  CHECK(r.parameters.at("ie_log_base") == "e");
  r.dataset = "d1";
  const MetricReport back = metric_report_from_json(to_json(r));
  CHECK(back.values == r.values);
  o.metrics = {"ed"};
  CHECK_THROWS_AS(compute_metrics(views, ws, o), PreconditionError);

  std::vector<MetricReport> reports;
  std::map<std::string, double> scores;
  for (int i = 0; i < 7; ++i) {
    MetricReport m;
    m.dataset = "p" + std::to_string(i);
    m.values["ie"] = 1.0 + i;
    m.parameters["strategy"] = "micro";
    m.parameters["diversity_percent"] = std::to_string(10 * i);
    reports.push_back(m);
    scores[m.dataset] = 40.0 + 2.0 * i;
  }
  const CorrelationReport c = correlate(reports, scores);
  REQUIRE(c.correlations.size() == 1);
  CHECK(*c.correlations[0].pearson == doctest::Approx(1.0).epsilon(1e-12));
  REQUIRE(c.slopes.size() == 1);
  // Two score points per ten percent.
  CHECK(c.slopes[0].slope_e2 == doctest::Approx(20.0).epsilon(1e-12));

  for (auto& [k, v] : scores) v = 50.0;
  const CorrelationReport flat = correlate(reports, scores);
  CHECK(flat.slopes[0].slope_e2 == 0.0);
  CHECK_FALSE(flat.correlations[0].pearson.has_value());

  scores.erase("p3");
  CHECK_THROWS_AS(correlate(reports, scores), PreconditionError);
}
