#include "divforge/cli.hpp"

#include <CLI11.hpp>
#include <glob.h>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

#include "divforge/clustering.hpp"
#include "divforge/common.hpp"
#include "divforge/corpus.hpp"
#include "divforge/frequency.hpp"
#include "divforge/macro.hpp"
#include "divforge/manifest.hpp"
#include "divforge/meso.hpp"
#include "divforge/metrics.hpp"
#include "divforge/micro.hpp"
#include "divforge/text.hpp"
#include "divforge/tokenizer.hpp"

namespace divforge {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

// Each command owns a CLI11 app whose --config file holds the same keys as
// its flags (flags win over file values).
std::unique_ptr<CLI::App> command_app(const std::string& name, const std::string& description) {
  auto app = std::make_unique<CLI::App>(description, "divforge " + name);
  app->set_config("--config", "", "TOML-style key = value file mirroring the flags");
  app->option_defaults()->always_capture_default();
  return app;
}

// False when the command should stop after printing help.
bool parse_args(CLI::App& app, std::vector<std::string> args, Streams io) {
  try {
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp&) {
    io.out << app.help();
    return false;
  }
  return true;
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string require_input(const std::string& value, const std::string& flag, const std::string& why) {
  if (value.empty()) throw PreconditionError(why + " needs " + flag + " <file>");
  return value;
}

std::string point_file_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "point_%02zu.jsonl", i);
  return buf;
}

std::vector<std::size_t> positions_of(const Corpus& corpus, const std::vector<std::string>& ids) {
  std::vector<std::size_t> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto p = corpus.find(id);
    if (!p) throw PreconditionError("manifest id '" + id + "' is not in the corpus");
    out.push_back(*p);
  }
  return out;
}

void write_points(const Corpus& corpus, const SeriesManifest& m, const fs::path& dir) {
  for (std::size_t i = 0; i < m.points.size(); ++i) {
    write_file(dir / point_file_name(i), to_jsonl(corpus, positions_of(corpus, m.points[i].sample_ids)));
  }
}

// ---------------------------------------------------------------- ingest

int cmd_ingest(std::vector<std::string> args, Streams io) {
  auto app = command_app("ingest", "Clean a JSONL corpus into a corpus store");
  std::string input, out_dir;
  app->add_option("--input", input, "JSONL with instruction/response[/id]")->required();
  app->add_option("--out", out_dir, "store directory")->required();
  if (!parse_args(*app, std::move(args), io)) return 0;

  const Corpus corpus = ingest(input);
  save_store(corpus, out_dir);
  const auto& st = corpus.provenance().stats;
  io.out << "kept " << st.kept << " of " << st.records << " records (malformed " << st.malformed
         << ", invalid encoding " << st.invalid_encoding << ", duplicates " << st.duplicates << ", repeated ids "
         << st.duplicate_ids << ")\n";
  return 0;
}

// ------------------------------------------------------------ tokenstats

int cmd_tokenstats(std::vector<std::string> args, Streams io) {
  auto app = command_app("tokenstats", "Token frequency table with low/mid/high bands");
  std::string store, tokenizer_spec, component = "response", out;
  BandThresholds th;
  app->add_option("--corpus", store, "corpus store directory")->required();
  app->add_option("--tokenizer", tokenizer_spec, "'whitespace' or a BPE definition file")->required();
  app->add_option("--component", component, "instruction or response");
  app->add_option("--low-max", th.low_max, "counts below this are low band");
  app->add_option("--high-min", th.high_min, "counts above this are high band");
  app->add_option("--out", out, "CSV output (token,count,band)")->required();
  std::string manifest_path;
  std::optional<std::size_t> point;
  app->add_option("--manifest", manifest_path, "count only the samples of one series point");
  app->add_option("--point", point, "point index within --manifest");
  if (!parse_args(*app, std::move(args), io)) return 0;
  if (manifest_path.empty() != !point) throw PreconditionError("--manifest and --point go together");

  const Corpus corpus = load_store(store);
  const Tokenizer tok = Tokenizer::from_spec(tokenizer_spec);
  std::vector<std::size_t> positions;
  if (point) {
    const SeriesManifest m = load_manifest(manifest_path);
    if (*point >= m.points.size()) {
      throw PreconditionError("manifest has " + std::to_string(m.points.size()) + " points");
    }
    positions = positions_of(corpus, m.points[*point].sample_ids);
  } else {
    positions.resize(corpus.size());
    std::iota(positions.begin(), positions.end(), std::size_t{0});
  }
  const FrequencyTable table = build_frequency_table(corpus, parse_component(component), tok, th, positions);
  write_file(out, to_csv(table));
  const auto sizes = table.band_sizes();
  json summary = {{"component", component},
                  {"scope", point ? manifest_path + "#" + std::to_string(*point) : std::string("corpus")},
                  {"tokenizer_fingerprint", tok.fingerprint()},
                  {"samples", table.sample_count()},
                  {"total_tokens", table.total_tokens()},
                  {"distinct_tokens", table.size()},
                  {"band_low_max", th.low_max},
                  {"band_high_min", th.high_min},
                  {"low", sizes[0]},
                  {"mid", sizes[1]},
                  {"high", sizes[2]}};
  io.out << summary.dump(2) << "\n";
  return 0;
}

// ----------------------------------------------------------------- build

int cmd_build(std::vector<std::string> args, Streams io) {
  auto app = command_app("build", "Build a diversity series and export its subsets");
  std::string store, strategy_name, component = "response", out_dir, tokenizer_spec;
  std::optional<std::uint64_t> seed;
  std::size_t size = 0, points = 7;
  std::size_t min_length = 0, max_length = kUnboundedLength;
  double alpha = 1.0;
  std::size_t batch = 64;
  BandThresholds th;
  std::string embeddings_path, spacing = "linear";
  std::size_t min_cluster_size = 20;
  std::string tags_path, tag_embeddings_path;
  double eps = 0.15;
  std::size_t min_samples = 2;

  app->add_option("--corpus", store, "corpus store directory")->required();
  app->add_option("--strategy", strategy_name, "macro, meso or micro")->required();
  app->add_option("--component", component, "instruction or response");
  app->add_option("--size", size, "samples per subset")->required();
  app->add_option("--points", points, "subsets in the series");
  app->add_option("--seed", seed, "seed for every random choice");
  app->add_option("--out", out_dir, "output directory")->required();
  app->add_option("--tokenizer", tokenizer_spec, "'whitespace' or a BPE definition file");
  app->add_option("--min-length", min_length, "keep samples with at least this many tokens");
  app->add_option("--max-length", max_length, "keep samples with at most this many tokens");
  app->add_option("--alpha", alpha, "micro: score smoothing");
  app->add_option("--batch", batch, "micro: samples admitted per score batch");
  app->add_option("--low-max", th.low_max, "micro: counts below this are low band");
  app->add_option("--high-min", th.high_min, "micro: counts above this are high band");
  app->add_option("--embeddings", embeddings_path, "macro: sample embeddings");
  app->add_option("--min-cluster-size", min_cluster_size, "macro: smallest topic cluster");
  app->add_option("--spacing", spacing, "macro: linear or log cluster-count spacing");
  app->add_option("--tags", tags_path, "meso: tags JSONL");
  app->add_option("--tag-embeddings", tag_embeddings_path, "meso: tag embeddings");
  app->add_option("--eps", eps, "meso: tag clustering radius");
  app->add_option("--min-samples", min_samples, "meso: tag clustering density");
  if (!parse_args(*app, std::move(args), io)) return 0;

  const Strategy strategy = parse_strategy(strategy_name);
  const Component comp = parse_component(component);
  if (!seed) throw PreconditionError("build needs --seed");
  // Check strategy inputs before any heavy work.
  switch (strategy) {
    case Strategy::kMicro:
      require_input(tokenizer_spec, "--tokenizer", "the micro strategy");
      break;
    case Strategy::kMacro:
      require_input(embeddings_path, "--embeddings", "the macro strategy");
      break;
    case Strategy::kMeso:
      require_input(tags_path, "--tags", "the meso strategy");
      require_input(tag_embeddings_path, "--tag-embeddings", "the meso strategy");
      break;
  }
  const bool windowed = min_length > 0 || max_length != kUnboundedLength;
  if (windowed) require_input(tokenizer_spec, "--tokenizer", "a length window");
  if (min_length > max_length) throw PreconditionError("--min-length exceeds --max-length");

  Corpus corpus = load_store(store);
  std::optional<Tokenizer> tok;
  if (!tokenizer_spec.empty()) tok = Tokenizer::from_spec(tokenizer_spec);
  if (windowed) {
    const auto keep = length_window_filter(corpus, comp, min_length, max_length, *tok);
    if (keep.size() < size) {
      throw PreconditionError("length window keeps " + std::to_string(keep.size()) + " samples, fewer than --size " +
                              std::to_string(size));
    }
    corpus = corpus.subset(keep);
  }

  SeriesManifest m;
  std::map<std::string, std::string> echo;
  switch (strategy) {
    case Strategy::kMicro: {
      MicroSeriesOptions o;
      o.size = size;
      o.points = points;
      o.alpha = alpha;
      o.batch = batch;
      o.seed = *seed;
      o.thresholds = th;
      m = build_micro_series(corpus, comp, *tok, o);
      break;
    }
    case Strategy::kMacro: {
      const EmbeddingMatrix e = load_embeddings(embeddings_path);
      const TopicModel model = build_topic_model(corpus, comp, e, min_cluster_size);
      MacroSeriesOptions o;
      o.size = size;
      o.points = points;
      o.seed = *seed;
      o.spacing = parse_spacing(spacing);
      m = build_macro_series(model, corpus, o);
      break;
    }
    case Strategy::kMeso: {
      const TagIngestResult tags = ingest_tags(tags_path, corpus);
      const auto records = filter_tags(tags.records);
      const EmbeddingMatrix e = load_embeddings(tag_embeddings_path);
      const TagCatalog catalog = build_tag_catalog(records, corpus.size(), e, eps, min_samples);
      MesoSeriesOptions o;
      o.size = size;
      o.points = points;
      o.seed = *seed;
      m = build_meso_series(catalog, corpus, o);
      m.component = comp;
      echo["tags_lines"] = std::to_string(tags.lines);
      echo["tags_unknown_ids"] = std::to_string(tags.unknown_ids);
      echo["tags_malformed"] = std::to_string(tags.malformed);
      echo["tags_empty"] = std::to_string(tags.empty);
      break;
    }
  }

  // Echo every effective setting, defaults included.
  echo["size"] = std::to_string(size);
  echo["points"] = std::to_string(points);
  echo["seed"] = std::to_string(*seed);
  echo["component"] = component;
  echo["strategy"] = strategy_name;
  echo["min_length"] = std::to_string(min_length);
  echo["max_length"] = max_length == kUnboundedLength ? "unbounded" : std::to_string(max_length);
  echo["window_samples"] = std::to_string(corpus.size());
  echo["alpha"] = fmt_double(alpha);
  echo["batch"] = std::to_string(batch);
  echo["low_max"] = std::to_string(th.low_max);
  echo["high_min"] = std::to_string(th.high_min);
  echo["min_cluster_size"] = std::to_string(min_cluster_size);
  echo["spacing"] = spacing;
  echo["eps"] = fmt_double(eps);
  echo["min_samples"] = std::to_string(min_samples);
  if (tok) echo["tokenizer"] = tok->fingerprint();
  if (!embeddings_path.empty()) echo["embeddings_sha256"] = sha256_file(embeddings_path);
  if (!tags_path.empty()) echo["tags_sha256"] = sha256_file(tags_path);
  if (!tag_embeddings_path.empty()) echo["tag_embeddings_sha256"] = sha256_file(tag_embeddings_path);
  for (const auto& [k, v] : echo) m.parameters["run." + k] = v;

  const auto problems = validate_manifest(m, corpus);
  if (!problems.empty()) {
    std::string msg = "built manifest is invalid:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw Error(msg);
  }
  write_file(fs::path(out_dir) / "manifest.json", to_json(m));
  write_points(corpus, m, out_dir);
  for (std::size_t i = 0; i < m.points.size(); ++i) {
    io.out << point_file_name(i) << "  value " << fmt_double(m.points[i].diversity_value) << "  percent "
           << fmt_double(m.points[i].diversity_percent) << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------- export

int cmd_export(std::vector<std::string> args, Streams io) {
  auto app = command_app("export", "Write manifest subsets as JSONL");
  std::string store, manifest_path, out;
  std::optional<std::size_t> point;
  app->add_option("--corpus", store, "corpus store directory")->required();
  app->add_option("--manifest", manifest_path, "series manifest")->required();
  app->add_option("--point", point, "single point index (default: all, into a directory)");
  app->add_option("--out", out, "output file (--point) or directory")->required();
  if (!parse_args(*app, std::move(args), io)) return 0;

  const Corpus corpus = load_store(store);
  const SeriesManifest m = load_manifest(manifest_path);
  if (point) {
    if (*point >= m.points.size()) {
      throw PreconditionError("manifest has " + std::to_string(m.points.size()) + " points");
    }
    write_file(out, to_jsonl(corpus, positions_of(corpus, m.points[*point].sample_ids)));
    io.out << "wrote " << m.points[*point].sample_ids.size() << " samples to " << out << "\n";
  } else {
    write_points(corpus, m, out);
    io.out << "wrote " << m.points.size() << " subsets to " << out << "\n";
  }
  return 0;
}

// --------------------------------------------------------------- metrics

struct Dataset {
  std::string name;
  std::string digest;
  std::vector<std::string> ids;
  std::vector<std::string> texts;
  std::map<std::string, std::string> parameters;
};

// Plain JSONL reader for metric inputs: no deduplication, so the metrics see
// the dataset exactly as written.
Dataset read_jsonl_dataset(const fs::path& path, Component comp) {
  if (!fs::is_regular_file(path)) throw IoError("cannot read " + path.string());
  const std::string contents = read_file(path);
  Dataset d;
  d.name = path.stem().string();
  d.digest = sha256_hex(contents);
  std::istringstream in(contents);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json rec = json::parse(line, nullptr, false);
    const char* field = comp == Component::kInstruction ? "instruction" : "response";
    if (rec.is_discarded() || !rec.is_object() || !rec.contains(field) || !rec[field].is_string()) {
      throw PreconditionError(path.string() + ":" + std::to_string(line_no) + ": record lacks a string \"" + field +
                              "\"");
    }
    std::string id;
    if (rec.contains("id") && rec["id"].is_string()) id = rec["id"].get<std::string>();
    else if (rec.contains("id") && rec["id"].is_number_integer()) id = std::to_string(rec["id"].get<long long>());
    d.ids.push_back(id.empty() ? std::to_string(line_no) : id);
    d.texts.push_back(rec[field].get<std::string>());
  }
  if (d.texts.empty()) throw PreconditionError(path.string() + " holds no records");
  return d;
}

Dataset manifest_dataset(const std::string& spec, const std::string& store, Component comp) {
  const auto hash = spec.rfind('#');
  const fs::path manifest_path = spec.substr(0, hash);
  std::size_t index = 0;
  try {
    std::size_t used = 0;
    index = std::stoul(spec.substr(hash + 1), &used);
    if (used != spec.size() - hash - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw PreconditionError("dataset '" + spec + "': expected manifest.json#<point index>");
  }
  if (store.empty()) throw PreconditionError("a manifest point dataset needs --corpus <store>");
  const SeriesManifest m = load_manifest(manifest_path);
  if (index >= m.points.size()) {
    throw PreconditionError("manifest has " + std::to_string(m.points.size()) + " points, no point " +
                            std::to_string(index));
  }
  const Corpus corpus = load_store(store);
  const auto& point = m.points[index];
  Dataset d;
  d.name = manifest_path.parent_path().filename().string();
  if (d.name.empty()) d.name = manifest_path.stem().string();
  d.name += "#" + std::to_string(index);
  d.digest = sha256_file(manifest_path) + "#" + std::to_string(index);
  for (std::size_t p : positions_of(corpus, point.sample_ids)) {
    d.ids.push_back(corpus[p].id);
    d.texts.push_back(corpus[p].text(comp));
  }
  d.parameters["strategy"] = std::string(to_string(m.strategy));
  d.parameters["diversity_percent"] = fmt_double(point.diversity_percent);
  d.parameters["diversity_value"] = fmt_double(point.diversity_value);
  return d;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = text::trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int cmd_metrics(std::vector<std::string> args, Streams io) {
  auto app = command_app("metrics", "Diversity metrics of one dataset");
  std::string dataset_spec, store, component = "response", tokenizer_spec = "whitespace", metric_list = "all";
  std::string ngrams = "1,2,3", embeddings_path, out, name;
  std::size_t bleu_sample_limit = 2000, bleu_max_n = 4;
  std::optional<std::uint64_t> seed;
  bool ed_literal = false;
  app->add_option("--dataset", dataset_spec, "subset JSONL, or manifest.json#<point>")->required();
  app->add_option("--corpus", store, "corpus store (for manifest points)");
  app->add_option("--component", component, "instruction or response");
  app->add_option("--tokenizer", tokenizer_spec, "'whitespace' or a BPE definition file");
  app->add_option("--metrics", metric_list, "comma list of nr,ed,sl,cr,bleu,ie,kurt,gini, or all");
  app->add_option("--ngram", ngrams, "n-gram orders for nr");
  app->add_option("--embeddings", embeddings_path, "sample embeddings (needed by ed)");
  app->add_flag("--ed-literal", ed_literal, "ed as (1/N) times the ordered pair sum");
  app->add_option("--bleu-sample-limit", bleu_sample_limit, "exact Self-BLEU up to this many references");
  app->add_option("--bleu-max-n", bleu_max_n, "largest BLEU n-gram order");
  app->add_option("--seed", seed, "seed for sampled Self-BLEU");
  app->add_option("--name", name, "dataset name used to join with scores");
  app->add_option("--out", out, "report path prefix (.json and .csv)")->required();
  if (!parse_args(*app, std::move(args), io)) return 0;

  const Component comp = parse_component(component);
  Dataset d = dataset_spec.find('#') != std::string::npos ? manifest_dataset(dataset_spec, store, comp)
                                                          : read_jsonl_dataset(dataset_spec, comp);
  if (!name.empty()) d.name = name;

  MetricOptions opts;
  if (metric_list != "all") opts.metrics = split_list(metric_list);
  opts.ngram_orders.clear();
  for (const auto& n : split_list(ngrams)) {
    try {
      opts.ngram_orders.push_back(std::stoul(n));
    } catch (const std::exception&) {
      throw PreconditionError("bad n-gram order '" + n + "'");
    }
  }
  opts.bleu.sample_limit = bleu_sample_limit;
  opts.bleu.max_n = bleu_max_n;
  opts.distance = ed_literal ? DistanceNormalizer::kLiteral : DistanceNormalizer::kPairMean;
  const bool wants_bleu = std::find(opts.metrics.begin(), opts.metrics.end(), "bleu") != opts.metrics.end();
  if (wants_bleu && d.texts.size() - 1 > bleu_sample_limit) {
    if (!seed) throw PreconditionError("sampled Self-BLEU (" + std::to_string(d.texts.size()) + " texts) needs --seed");
    opts.bleu.seed = *seed;
  }
  std::optional<EmbeddingMatrix> emb;
  if (std::find(opts.metrics.begin(), opts.metrics.end(), "ed") != opts.metrics.end()) {
    require_input(embeddings_path, "--embeddings", "metric ed");
    emb = load_embeddings(embeddings_path).select(d.ids);
  }
  const Tokenizer tok = Tokenizer::from_spec(tokenizer_spec);
  std::vector<std::string_view> views(d.texts.begin(), d.texts.end());
  MetricReport r = compute_metrics(views, tok, opts, emb ? &*emb : nullptr, d.ids);
  r.dataset = d.name;
  r.component = component;
  r.dataset_digest = d.digest;
  for (const auto& [k, v] : d.parameters) r.parameters[k] = v;
  r.parameters["metrics"] = metric_list;
  r.parameters["ngram"] = ngrams;
  write_file(out + ".json", to_json(r));
  write_file(out + ".csv", to_csv(r));
  io.out << to_csv(r);
  return 0;
}

// ------------------------------------------------------------- correlate

std::map<std::string, double> read_scores(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw IoError("cannot read " + path.string());
  std::istringstream in(read_file(path));
  std::map<std::string, double> scores;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) throw PreconditionError(path.string() + ":" + std::to_string(line_no) + ": expected id,score");
    const std::string id = text::trim(line.substr(0, comma));
    const std::string value = text::trim(line.substr(comma + 1));
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      if (line_no == 1) continue;  // header row
      throw PreconditionError(path.string() + ":" + std::to_string(line_no) + ": score is not a number");
    }
    if (!scores.emplace(id, v).second) throw PreconditionError("score for '" + id + "' given twice");
  }
  return scores;
}

int cmd_correlate(std::vector<std::string> args, Streams io) {
  auto app = command_app("correlate", "Correlate metric reports with benchmark scores");
  std::string pattern, scores_path, out;
  app->add_option("--reports", pattern, "glob of metric report JSON files")->required();
  app->add_option("--scores", scores_path, "CSV of id,score")->required();
  app->add_option("--out", out, "report path prefix (.json and .csv)")->required();
  if (!parse_args(*app, std::move(args), io)) return 0;

  glob_t g{};
  const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
  std::vector<std::string> files;
  if (rc == 0) files.assign(g.gl_pathv, g.gl_pathv + g.gl_pathc);
  globfree(&g);
  if (files.empty()) throw IoError("no reports match " + pattern);
  std::vector<MetricReport> reports;
  for (const auto& f : files) reports.push_back(metric_report_from_json(read_file(f)));
  const CorrelationReport c = correlate(reports, read_scores(scores_path));
  write_file(out + ".json", to_json(c));
  write_file(out + ".csv", to_csv(c));
  io.out << to_csv(c);
  return 0;
}

using Command = std::function<int(std::vector<std::string>, Streams)>;

const std::map<std::string, std::pair<Command, std::string>>& commands() {
  static const std::map<std::string, std::pair<Command, std::string>> table = {
      {"ingest", {cmd_ingest, "clean a JSONL corpus into a store"}},
      {"tokenstats", {cmd_tokenstats, "token frequency bands"}},
      {"build", {cmd_build, "build a macro, meso or micro diversity series"}},
      {"export", {cmd_export, "write manifest subsets as JSONL"}},
      {"metrics", {cmd_metrics, "diversity metrics of one dataset"}},
      {"correlate", {cmd_correlate, "Pearson and slope reports against scores"}},
  };
  return table;
}

void usage(std::ostream& os) {
  os << "usage: divforge <command> [options]   (divforge <command> --help)\n\ncommands:\n";
  for (const auto& [name, entry] : commands()) os << "  " << name << std::string(12 - name.size(), ' ') << entry.second << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty() || args[0] == "--help" || args[0] == "-h") {
    usage(args.empty() ? err : out);
    return args.empty() ? 2 : 0;
  }
  const auto it = commands().find(args[0]);
  if (it == commands().end()) {
    err << "divforge: unknown command '" << args[0] << "'\n";
    usage(err);
    return 2;
  }
  // CLI11 consumes argument vectors back to front.
  std::vector<std::string> rest(args.rbegin(), args.rend() - 1);
  try {
    return it->second.first(std::move(rest), Streams{out, err});
  } catch (const CLI::Success&) {
    return 0;
  } catch (const CLI::FileError& e) {
    err << "divforge " << args[0] << ": " << e.what() << "\n";
    return 1;
  } catch (const CLI::ParseError& e) {
    err << "divforge " << args[0] << ": " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    err << "divforge " << args[0] << ": " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "divforge " << args[0] << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "divforge " << args[0] << ": " << e.what() << "\n";
    return 2;
  }
}

int run_cli(const std::vector<std::string>& args) { return run_cli(args, std::cout, std::cerr); }

}  // namespace divforge
