#include <doctest.h>
#include <json.hpp>

#include <map>
#include <random>
#include <set>

#include "divforge/corpus.hpp"
#include "divforge/macro.hpp"
#include "divforge/meso.hpp"
#include "oracles.hpp"

using namespace divforge;
using nlohmann::json;

namespace {

Corpus plain_corpus(std::size_t n) {
  std::string data;
  for (std::size_t i = 0; i < n; ++i) {
    data += json{{"id", "s" + std::to_string(i)}, {"instruction", "q" + std::to_string(i)}, {"response", "r"}}.dump() + "\n";
  }
  return ingest_jsonl(data);
}

// Embeddings with `topics` planted Gaussian topics in 8 dimensions; topic
// t holds sizes[t] samples. Returns the topic of each sample.
EmbeddingMatrix topic_embeddings(std::mt19937_64& rng, const std::vector<std::size_t>& sizes, std::vector<int>& topic) {
  std::normal_distribution<double> g(0.0, 1.0);
  EmbeddingMatrix e;
  std::size_t total = 0;
  for (auto s : sizes) total += s;
  e.vectors.resize(static_cast<Eigen::Index>(total), 8);
  std::vector<Eigen::RowVectorXd> centers;
  for (std::size_t t = 0; t < sizes.size(); ++t) {
    Eigen::RowVectorXd c(8);
    for (int k = 0; k < 8; ++k) c(k) = 40.0 * g(rng);
    centers.push_back(c);
  }
  std::size_t row = 0;
  for (std::size_t t = 0; t < sizes.size(); ++t) {
    for (std::size_t i = 0; i < sizes[t]; ++i, ++row) {
      for (int k = 0; k < 8; ++k) e.vectors(static_cast<Eigen::Index>(row), k) = centers[t](k) + 0.5 * g(rng);
      e.ids.push_back("s" + std::to_string(row));
      topic.push_back(static_cast<int>(t));
    }
  }
  return e;
}

}  // namespace

TEST_CASE("spaced targets") {
  CHECK(spaced_targets(2, 8, 4, Spacing::kLinear) == std::vector<std::size_t>{2, 4, 6, 8});
  CHECK(spaced_targets(1, 100, 3, Spacing::kLog) == std::vector<std::size_t>{1, 10, 100});
  CHECK(spaced_targets(3, 5, 2, Spacing::kLinear) == std::vector<std::size_t>{3, 5});
  const auto tight = spaced_targets(1, 4, 4, Spacing::kLog);
  CHECK(tight == std::vector<std::size_t>{1, 2, 3, 4});
}

TEST_CASE("topic model recovers two planted topics") {
  std::mt19937_64 rng(1);
  std::vector<int> topic;
  const EmbeddingMatrix e = topic_embeddings(rng, {60, 60}, topic);
  const Corpus c = plain_corpus(120);
  const TopicModel m = build_topic_model(c, Component::kResponse, e, 20);
  CHECK(m.assignment.k == 2);
  CHECK(oracle::same_partition(m.assignment.labels, topic));
  CHECK_THROWS_AS(build_topic_model(plain_corpus(121), Component::kResponse, e, 20), PreconditionError);
}

TEST_CASE("topic model on identical embeddings is one cluster") {
  EmbeddingMatrix e;
  e.vectors = RowMatrix::Constant(40, 6, 1.0);
  for (int i = 0; i < 40; ++i) e.ids.push_back("s" + std::to_string(i));
  const TopicModel m = build_topic_model(plain_corpus(40), Component::kResponse, e, 20);
  CHECK(m.assignment.k == 1);
}

TEST_CASE("topic model recovers about 40 planted topics") {
  std::mt19937_64 rng(2);
  std::vector<int> topic;
  const EmbeddingMatrix e = topic_embeddings(rng, std::vector<std::size_t>(40, 125), topic);
  const TopicModel m = build_topic_model(plain_corpus(5000), Component::kResponse, e, 20);
  CHECK(m.assignment.k >= 36);
  CHECK(m.assignment.k <= 44);
}

TEST_CASE("macro series: endpoints, membership, increasing topic counts") {
  std::mt19937_64 rng(3);
  std::vector<int> topic;
  const EmbeddingMatrix e = topic_embeddings(rng, {300, 250, 200, 150, 120, 100, 80, 60, 50, 40}, topic);
  const Corpus c = plain_corpus(topic.size());
  const TopicModel model = build_topic_model(c, Component::kResponse, e, 20);
  REQUIRE(model.assignment.k == 10);

  MacroSeriesOptions o;
  o.size = 500;
  o.points = 5;
  o.seed = 9;
  const SeriesManifest m = build_macro_series(model, c, o);
  CHECK(validate_manifest(m, c).empty());
  CHECK(m.points.front().diversity_value == 2.0);  // 300 + 250 >= 500
  CHECK(m.points.back().diversity_value == 10.0);
  std::size_t prev_topics = 0;
  const auto order = model.cluster_order();
  for (const auto& p : m.points) {
    const auto k = static_cast<std::size_t>(p.diversity_value);
    std::set<int> allowed(order.begin(), order.begin() + static_cast<long>(k));
    std::set<int> seen;
    std::map<int, std::size_t> per;
    for (const auto& id : p.sample_ids) {
      const int label = model.assignment.labels[*c.find(id)];
      CHECK(allowed.count(label) == 1);
      seen.insert(label);
      ++per[label];
    }
    CHECK(seen.size() > prev_topics);
    prev_topics = seen.size();
    // Quotas: clusters that still have unused members differ by at most
    // one, and no cluster gets more than those.
    const auto members = model.assignment.members();
    std::size_t lo = SIZE_MAX, hi = 0;
    for (const auto& [l, n] : per) {
      hi = std::max(hi, n);
      if (n < members[static_cast<std::size_t>(l)].size()) lo = std::min(lo, n);
    }
    if (lo != SIZE_MAX) CHECK(hi - lo <= 1);
  }
  CHECK(to_json(build_macro_series(model, c, o)) == to_json(m));

  o.points = 2;
  const SeriesManifest two = build_macro_series(model, c, o);
  CHECK(two.points[0].diversity_value == 2.0);
  CHECK(two.points[1].diversity_value == 10.0);

  o.size = 5000;
  CHECK_THROWS_AS(build_macro_series(model, c, o), PreconditionError);
}

TEST_CASE("macro series with one giant cluster starts from a single topic") {
  std::mt19937_64 rng(4);
  std::vector<int> topic;
  const EmbeddingMatrix e = topic_embeddings(rng, {400, 50, 50}, topic);
  const Corpus c = plain_corpus(topic.size());
  const TopicModel model = build_topic_model(c, Component::kResponse, e, 20);
  MacroSeriesOptions o;
  o.size = 100;
  o.points = 3;
  o.seed = 1;
  const SeriesManifest m = build_macro_series(model, c, o);
  CHECK(m.points[0].diversity_value == 1.0);
  std::set<int> labels;
  for (const auto& id : m.points[0].sample_ids) labels.insert(model.assignment.labels[*c.find(id)]);
  CHECK(labels.size() == 1);
}

TEST_CASE("tag ingest and filtering") {
  const Corpus c = plain_corpus(3);
  const std::string data =
      R"({"id":"s0","tags":["Cosplay"]})" "\n"
      R"({"id":"s1","tags":[]})" "\n"
      R"({"id":"s2","tags":[{"tag":"Spelling and Grammar Check","explanation":"x"},"1234","  Cosplay  ","cosplay"]})" "\n"
      R"({"id":"zz","tags":["a"]})" "\n"
      "oops\n";
  const TagIngestResult r = ingest_tags_jsonl(data, c);
  CHECK(r.lines == 5);
  CHECK(r.records.size() == 3);
  CHECK(r.unknown_ids == 1);
  CHECK(r.malformed == 1);
  CHECK(r.empty == 1);
  CHECK(r.records.size() + r.unknown_ids + r.malformed == r.lines);
  CHECK(r.records[0].tags == std::vector<std::string>{"Cosplay"});
  const auto f = filter_tags(r.records);
  CHECK(f[0].tags == std::vector<std::string>{"cosplay"});
  CHECK(f[1].tags.empty());
  CHECK(f[2].tags == std::vector<std::string>{"spelling and grammar check", "cosplay"});
  CHECK_FALSE(is_word_tag("..."));
  CHECK_FALSE(is_word_tag(std::string(65, 'a')));
  CHECK(is_word_tag(std::string(64, 'a')));
}

TEST_CASE("tag ingest line accounting on a large file") {
  const Corpus c = plain_corpus(500);
  std::mt19937_64 rng(5);
  std::string data;
  for (int i = 0; i < 1000; ++i) {
    const auto r = rng() % 10;
    if (r == 0) {
      data += "{broken\n";
    } else {
      data += json{{"id", "s" + std::to_string(rng() % 700)}, {"tags", {"t"}}}.dump() + "\n";
    }
  }
  const TagIngestResult res = ingest_tags_jsonl(data, c);
  CHECK(res.lines == 1000);
  CHECK(res.records.size() + res.unknown_ids + res.malformed == 1000);
}

namespace {

EmbeddingMatrix tag_vectors(const std::map<std::string, std::vector<double>>& m) {
  EmbeddingMatrix e;
  e.vectors.resize(static_cast<Eigen::Index>(m.size()), static_cast<Eigen::Index>(m.begin()->second.size()));
  Eigen::Index r = 0;
  for (const auto& [tag, v] : m) {
    e.ids.push_back(tag);
    for (std::size_t k = 0; k < v.size(); ++k) e.vectors(r, static_cast<Eigen::Index>(k)) = v[k];
    ++r;
  }
  return e;
}

}  // namespace

TEST_CASE("tag catalog merges synonyms and keeps isolated tags apart") {
  std::vector<TagRecord> recs{{"s0", 0, {"grammar check", "cooking"}}, {"s1", 1, {"grammar checking"}},
                              {"s2", 2, {"astronomy"}}};
  const EmbeddingMatrix e = tag_vectors(
      {{"Grammar Check", {1.0, 0.0}}, {"grammar checking", {1.01, 0.0}}, {"cooking", {0.0, 1.0}}, {"astronomy", {5.0, 5.0}}});
  const TagCatalog cat = build_tag_catalog(recs, 3, e);
  CHECK(cat.category_count() == 3);
  CHECK(cat.category_of.at("grammar check") == cat.category_of.at("grammar checking"));
  CHECK(cat.category_of.at("cooking") != cat.category_of.at("astronomy"));
  // The representative is a member of its category.
  for (std::size_t c = 0; c < cat.category_count(); ++c) CHECK(cat.category_of.at(cat.representatives[c]) == c);
  CHECK(cat.sample_categories[0].size() == 2);
  CHECK(cat.sample_tag_counts[0] == 2);
  // Deterministic.
  CHECK(build_tag_catalog(recs, 3, e).category_of == cat.category_of);

  std::vector<TagRecord> missing{{"s0", 0, {"unknown tag"}}};
  CHECK_THROWS_AS(build_tag_catalog(missing, 3, e), PreconditionError);
}

TEST_CASE("tag catalog recovers planted synonym groups") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0.0, 1.0);
  std::map<std::string, std::vector<double>> vecs;
  std::vector<TagRecord> recs;
  for (int grp = 0; grp < 100; ++grp) {
    std::vector<double> center(16);
    for (auto& x : center) x = g(rng);
    double norm = 0;
    for (double x : center) norm += x * x;
    for (auto& x : center) x *= 3.0 / std::sqrt(norm);
    for (int k = 0; k < 5; ++k) {
      std::vector<double> v = center;
      for (auto& x : v) x += 0.01 * g(rng);
      const std::string tag = "group" + std::to_string(grp) + " variant" + std::to_string(k);
      vecs[tag] = v;
      recs.push_back({"s" + std::to_string(recs.size()), recs.size(), {tag}});
    }
  }
  const TagCatalog cat = build_tag_catalog(recs, recs.size(), tag_vectors(vecs));
  CHECK(cat.category_count() >= 95);
  CHECK(cat.category_count() <= 105);
}

TEST_CASE("meso series: selects once, ratio matches a recount, categories grow") {
  // 400 samples, 12 categories (one tag each) with overlapping memberships.
  std::mt19937_64 rng(7);
  const std::size_t n = 400;
  const Corpus c = plain_corpus(n);
  std::map<std::string, std::vector<double>> vecs;
  for (int t = 0; t < 12; ++t) vecs["topic" + std::to_string(t)] = {10.0 * t, 0.0};
  std::vector<TagRecord> recs;
  for (std::size_t i = 0; i < n; ++i) {
    TagRecord r{"s" + std::to_string(i), i, {}};
    const std::size_t k = 1 + rng() % 3;
    std::set<std::string> tags;
    while (tags.size() < k) tags.insert("topic" + std::to_string(std::min<std::uint64_t>(rng() % 14, rng() % 14) % 12));
    r.tags.assign(tags.begin(), tags.end());
    recs.push_back(r);
  }
  const TagCatalog cat = build_tag_catalog(recs, n, tag_vectors(vecs));
  REQUIRE(cat.category_count() == 12);
  MesoSeriesOptions o;
  o.size = 150;
  o.points = 5;
  o.seed = 3;
  const SeriesManifest m = build_meso_series(cat, c, o);
  CHECK(validate_manifest(m, c).empty());
  std::size_t prev = 0;
  for (std::size_t i = 0; i < m.points.size(); ++i) {
    const auto& p = m.points[i];
    CHECK(std::set<std::string>(p.sample_ids.begin(), p.sample_ids.end()).size() == p.sample_ids.size());
    std::set<std::size_t> present;
    std::size_t instances = 0;
    for (const auto& id : p.sample_ids) {
      const auto pos = *c.find(id);
      for (const auto& t : recs[pos].tags) present.insert(cat.category_of.at(t));
      instances += recs[pos].tags.size();
    }
    CHECK(p.diversity_value == doctest::Approx(static_cast<double>(present.size()) / instances).epsilon(1e-12));
    const auto chosen = std::stoul(m.parameters.at("point." + std::to_string(i) + ".chosen_categories_present"));
    CHECK(chosen >= prev);
    prev = chosen;
  }
  CHECK(to_json(build_meso_series(cat, c, o)) == to_json(m));
}

TEST_CASE("meso series where each sample has one category covers every category") {
  const std::size_t n = 60;
  const Corpus c = plain_corpus(n);
  std::vector<TagRecord> recs;
  for (std::size_t i = 0; i < n; ++i) recs.push_back({"s" + std::to_string(i), i, {"cat" + std::to_string(i % 6)}});
  std::map<std::string, std::vector<double>> vecs;
  for (int t = 0; t < 6; ++t) vecs["cat" + std::to_string(t)] = {10.0 * t};
  const TagCatalog cat = build_tag_catalog(recs, n, tag_vectors(vecs));
  MesoSeriesOptions o;
  o.size = 12;
  o.points = 2;
  const SeriesManifest m = build_meso_series(cat, c, o);
  std::set<std::size_t> present;
  for (const auto& id : m.points.back().sample_ids) present.insert(*c.find(id) % 6);
  CHECK(present.size() == 6);
  o.size = 61;
  CHECK_THROWS_AS(build_meso_series(cat, c, o), PreconditionError);
}
