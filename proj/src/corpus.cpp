#include "divforge/corpus.hpp"

#include <json.hpp>

#include <cstdio>
#include <sstream>
#include <unordered_set>

#include "divforge/text.hpp"
#include "divforge/tokenizer.hpp"

namespace divforge {

using nlohmann::json;

Corpus::Corpus(std::vector<Sample> samples, Provenance provenance)
    : samples_(std::move(samples)), provenance_(std::move(provenance)) {
  by_id_.reserve(samples_.size());
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (samples_[i].id.empty()) throw PreconditionError("sample with empty id");
    if (!by_id_.emplace(samples_[i].id, i).second) {
      throw PreconditionError("duplicate sample id '" + samples_[i].id + "'");
    }
  }
}

std::optional<std::size_t> Corpus::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string_view> Corpus::texts(Component c) const {
  std::vector<std::string_view> out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) out.emplace_back(s.text(c));
  return out;
}

std::vector<std::string_view> Corpus::texts(Component c, std::span<const std::size_t> positions) const {
  std::vector<std::string_view> out;
  out.reserve(positions.size());
  for (std::size_t p : positions) out.emplace_back(samples_.at(p).text(c));
  return out;
}

Corpus Corpus::subset(std::span<const std::size_t> positions) const {
  std::vector<Sample> picked;
  picked.reserve(positions.size());
  for (std::size_t p : positions) picked.push_back(samples_.at(p));
  return Corpus(std::move(picked), provenance_);
}

std::map<std::string, std::string> default_cleaning_parameters() {
  return {
      {"dedup_key", "nfc+trim(instruction,response)"},
      {"encoding_filter", "strict-utf8;no-control-except-tab-newline"},
      {"id_fallback", "zero-padded record ordinal (9 digits)"},
  };
}

namespace {

constexpr std::size_t kMaxWarnings = 10;

std::string ordinal_id(std::size_t ordinal) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%09zu", ordinal);
  return buf;
}

}  // namespace

Corpus ingest_jsonl(std::string_view contents) {
  Provenance prov;
  prov.source_digest = sha256_hex(contents);
  prov.cleaning = default_cleaning_parameters();
  CleaningStats& st = prov.stats;

  std::vector<Sample> samples;
  std::unordered_set<std::string> seen_pairs;
  std::unordered_set<std::string> seen_ids;
  std::size_t warnings = 0;
  auto note = [&](const std::string& msg) {
    if (warnings++ < kMaxWarnings) warn(msg);
  };

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < contents.size()) {
    std::size_t end = contents.find('\n', start);
    if (end == std::string_view::npos) end = contents.size();
    std::string_view line = contents.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    const std::size_t ordinal = st.records++;
    if (!text::is_valid_utf8(line)) {
      ++st.invalid_encoding;
      note("line " + std::to_string(line_no) + ": invalid UTF-8, dropped");
      continue;
    }
    json rec = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (rec.is_discarded() || !rec.is_object() || !rec.contains("instruction") ||
        !rec.contains("response") || !rec["instruction"].is_string() || !rec["response"].is_string()) {
      ++st.malformed;
      note("line " + std::to_string(line_no) + ": malformed record, skipped");
      continue;
    }
    Sample s;
    s.instruction = rec["instruction"].get<std::string>();
    s.response = rec["response"].get<std::string>();
    if (text::has_forbidden_control(s.instruction) || text::has_forbidden_control(s.response) ||
        !text::is_valid_utf8(s.instruction) || !text::is_valid_utf8(s.response)) {
      ++st.invalid_encoding;
      note("line " + std::to_string(line_no) + ": control characters, dropped");
      continue;
    }
    if (auto it = rec.find("id"); it != rec.end() && !it->is_null()) {
      if (it->is_string()) {
        s.id = it->get<std::string>();
      } else if (it->is_number_integer()) {
        s.id = std::to_string(it->get<long long>());
      } else {
        ++st.malformed;
        note("line " + std::to_string(line_no) + ": id is not a string, skipped");
        continue;
      }
    }
    if (s.id.empty()) s.id = ordinal_id(ordinal);

    std::string key = text::nfc(text::trim(s.instruction));
    key.push_back('\0');
    key += text::nfc(text::trim(s.response));
    if (!seen_pairs.insert(std::move(key)).second) {
      ++st.duplicates;
      continue;
    }
    if (!seen_ids.insert(s.id).second) {
      ++st.duplicate_ids;
      note("line " + std::to_string(line_no) + ": repeated id '" + s.id + "', dropped");
      continue;
    }
    samples.push_back(std::move(s));
  }
  if (warnings > kMaxWarnings) {
    warn(std::to_string(warnings - kMaxWarnings) + " further record warnings suppressed");
  }
  st.kept = samples.size();
  if (samples.empty()) throw PreconditionError("no samples survived ingest");
  return Corpus(std::move(samples), std::move(prov));
}

Corpus ingest(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw IoError("cannot read " + path.string());
  return ingest_jsonl(read_file(path));
}

namespace {

void append_record(std::string& out, const Sample& s) {
  json j;
  j["id"] = s.id;
  j["instruction"] = s.instruction;
  j["response"] = s.response;
  // nlohmann sorts keys; "id" < "instruction" < "response" already.
  out += j.dump();
  out.push_back('\n');
}

}  // namespace

std::string to_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& s : corpus.samples()) append_record(out, s);
  return out;
}

std::string to_jsonl(const Corpus& corpus, std::span<const std::size_t> positions) {
  std::string out;
  for (std::size_t p : positions) append_record(out, corpus[p]);
  return out;
}

void save_store(const Corpus& corpus, const std::filesystem::path& dir) {
  const std::string payload = to_jsonl(corpus);
  const auto& prov = corpus.provenance();
  json m;
  m["source_digest"] = prov.source_digest;
  m["payload"] = "corpus.jsonl";
  m["payload_digest"] = sha256_hex(payload);
  m["cleaning"] = prov.cleaning;
  m["counts"] = {{"records", prov.stats.records},
                 {"malformed", prov.stats.malformed},
                 {"invalid_encoding", prov.stats.invalid_encoding},
                 {"duplicates", prov.stats.duplicates},
                 {"duplicate_ids", prov.stats.duplicate_ids},
                 {"kept", prov.stats.kept},
                 {"dropped", prov.stats.dropped()}};
  write_file(dir / "corpus.jsonl", payload);
  write_file(dir / "manifest.json", m.dump(2) + "\n");
}

Corpus load_store(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  const auto payload_path = dir / "corpus.jsonl";
  if (!std::filesystem::is_regular_file(manifest_path) || !std::filesystem::is_regular_file(payload_path)) {
    throw IoError("not a corpus store: " + dir.string());
  }
  const json m = json::parse(read_file(manifest_path), nullptr, false);
  if (m.is_discarded() || !m.is_object()) throw PreconditionError("corrupt store manifest in " + dir.string());
  const std::string payload = read_file(payload_path);
  if (m.value("payload_digest", std::string{}) != sha256_hex(payload)) {
    throw PreconditionError("corpus store payload does not match its manifest digest");
  }
  Corpus reread = ingest_jsonl(payload);
  Provenance prov;
  prov.source_digest = m.value("source_digest", std::string{});
  prov.cleaning = m.value("cleaning", std::map<std::string, std::string>{});
  const json& c = m["counts"];
  prov.stats.records = c.value("records", std::size_t{0});
  prov.stats.malformed = c.value("malformed", std::size_t{0});
  prov.stats.invalid_encoding = c.value("invalid_encoding", std::size_t{0});
  prov.stats.duplicates = c.value("duplicates", std::size_t{0});
  prov.stats.duplicate_ids = c.value("duplicate_ids", std::size_t{0});
  prov.stats.kept = c.value("kept", std::size_t{0});
  std::vector<Sample> samples = reread.samples();
  return Corpus(std::move(samples), std::move(prov));
}

std::vector<std::size_t> length_window_filter(const Corpus& corpus, Component component,
                                              std::size_t lo, std::size_t hi,
                                              const Tokenizer& tokenizer) {
  if (lo > hi) throw PreconditionError("length window requires lo <= hi");
  std::vector<char> keep(corpus.size(), 0);
  parallel_for(corpus.size(), [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t len = tokenizer.count(corpus[i].text(component));
      keep[i] = (len >= lo && len <= hi) ? 1 : 0;
    }
  });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i]) out.push_back(i);
  }
  return out;
}

}  // namespace divforge
