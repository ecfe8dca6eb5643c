#include "lacon/curation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <json.hpp>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include "lacon/digest.hpp"
#include "lacon/png_io.hpp"
#include "lacon/synth.hpp"

namespace lacon {
namespace {

using json = nlohmann::json;

constexpr std::array<FilterPreset, 5> kPresets{{
    {"ratio5", {5.0, 0.3, 800.0, 6.0, 0.1, 0.9}},
    {"ratio30", {4.0, 0.5, 600.0, 4.0, 0.1, 0.9}},
    {"ratio50", {3.5, 0.6, 500.0, 3.0, 0.1, 0.9}},
    {"ratio65", {3.0, 0.7, 400.0, 2.0, 0.1, 0.9}},
    {"ratio80", {3.0, 0.8, 200.0, 2.0, 0.1, 0.9}},
}};

// Serializes calls to scorers that are not safe to share across threads.
class GuardedScorer final : public Scorer {
 public:
  GuardedScorer(const Scorer& inner, std::mutex& mu) : inner_(inner), mu_(mu) {}
  std::string_view name() const override { return inner_.name(); }
  double score(const RgbImage& image, std::string_view id) const override {
    if (inner_.concurrent_safe()) return inner_.score(image, id);
    std::lock_guard lock(mu_);
    return inner_.score(image, id);
  }

 private:
  const Scorer& inner_;
  std::mutex& mu_;
};

std::string format_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::filesystem::path provenance_path(const std::filesystem::path& manifest_path) {
  return manifest_path.string() + ".provenance";
}

void sort_and_check_ids(std::vector<SampleRecord>& records) {
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].id == records[i - 1].id) throw std::invalid_argument("duplicate sample id: " + records[i].id);
  }
}

}  // namespace

std::vector<CorpusItem> directory_corpus(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw std::runtime_error("corpus directory does not exist: " + dir.string());

  std::unordered_map<std::string, int> labels;
  const fs::path index = dir / "index.csv";
  if (fs::exists(index)) {
    std::ifstream in(index);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto comma = line.find(',');
      if (comma == std::string::npos) continue;
      const std::string file = line.substr(0, comma);
      if (file == "file") continue;
      try {
        labels[file] = std::stoi(line.substr(comma + 1));
      } catch (const std::exception&) {
        throw std::runtime_error("bad class label in " + index.string() + ": " + line);
      }
    }
  }

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<CorpusItem> items;
  items.reserve(files.size());
  for (const auto& f : files) {
    const auto it = labels.find(f.filename().string());
    items.push_back({f.stem().string(), f.string(), it == labels.end() ? 0 : it->second});
  }
  return items;
}

std::vector<CorpusItem> synthetic_corpus(std::size_t n, std::uint64_t seed) {
  std::vector<CorpusItem> items;
  items.reserve(n);
  char id[32];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(id, sizeof id, "synth-%06zu", i);
    items.push_back({id, synth_ref(seed, i), draw_synth_params(seed, i).class_label});
  }
  return items;
}

RgbImage load_image_ref(std::string_view ref) {
  if (const auto s = parse_synth_ref(ref)) return synthesize_one(s->seed, s->index).image;
  return read_png(std::filesystem::path(std::string(ref)));
}

std::string labeling_digest(const LabelConfig& config) {
  json j;
  j["target_long_side"] = config.target_long_side;
  j["aes_scorer"] = config.aes_scorer ? std::string(config.aes_scorer->name()) : "";
  j["wat_scorer"] = config.wat_scorer ? std::string(config.wat_scorer->name()) : "";
  j["grayscale"] = "bt601";
  j["clarity_scale"] = kClarityScale;
  j["entropy_bins"] = 256;
  return sha256_hex(j.dump());
}

BuildResult build_manifest(std::span<const CorpusItem> items, const LabelConfig& config, int workers) {
  if (!config.aes_scorer || !config.wat_scorer) throw std::invalid_argument("label config is missing a scorer");
  {
    std::set<std::string_view> seen;
    for (const CorpusItem& item : items) {
      if (!seen.insert(item.id).second) throw std::invalid_argument("duplicate sample id: " + item.id);
    }
  }

  std::mutex aes_mu;
  std::mutex wat_mu;
  const GuardedScorer aes(*config.aes_scorer, aes_mu);
  const GuardedScorer wat(*config.wat_scorer, wat_mu);

  std::vector<std::optional<SampleRecord>> results(items.size());
  std::vector<std::string> skip_reason(items.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mu;

  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= items.size()) return;
      const CorpusItem& item = items[i];
      try {
        const RgbImage image = load_image_ref(item.image_ref);
        results[i] = SampleRecord{item.id, item.image_ref, item.class_label,
                                  label_sample(image, aes, wat, config.target_long_side, item.id)};
      } catch (const ScorerError&) {
        std::lock_guard lock(fatal_mu);
        if (!fatal) fatal = std::current_exception();
        next.store(items.size());
      } catch (const std::exception& e) {
        skip_reason[i] = e.what();
      }
    }
  };

  int n_workers = workers > 0 ? workers : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  n_workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(n_workers), std::max<std::size_t>(items.size(), 1)));
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < n_workers; ++w) pool.emplace_back(work);
    work();
  }
  if (fatal) std::rethrow_exception(fatal);

  BuildResult out;
  out.manifest.provenance = labeling_digest(config);
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (results[i]) {
      out.manifest.records.push_back(std::move(*results[i]));
    } else {
      out.skipped.push_back({items[i].id, items[i].image_ref, skip_reason[i]});
    }
  }
  sort_and_check_ids(out.manifest.records);
  return out;
}

std::string manifest_to_jsonl(const Manifest& manifest) {
  std::string out;
  for (const SampleRecord& r : manifest.records) {
    out += "{\"id\":" + json(r.id).dump();
    out += ",\"image_ref\":" + json(r.image_ref).dump();
    out += ",\"class_label\":" + std::to_string(r.class_label);
    out += ",\"s_aes\":" + format_score(r.quality.s_aes);
    out += ",\"s_wat\":" + format_score(r.quality.s_wat);
    out += ",\"s_cla\":" + format_score(r.quality.s_cla);
    out += ",\"s_ent\":" + format_score(r.quality.s_ent);
    out += ",\"s_luma\":" + format_score(r.quality.s_luma);
    out += "}\n";
  }
  return out;
}

Manifest manifest_from_jsonl(std::string_view text) {
  static const std::set<std::string> kFields{"id", "image_ref", "class_label", "s_aes", "s_wat", "s_cla", "s_ent", "s_luma"};
  Manifest m;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = "manifest line " + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error(where + ": " + e.what());
    }
    if (!j.is_object()) throw std::runtime_error(where + ": not an object");
    for (const auto& [key, _] : j.items()) {
      if (!kFields.contains(key)) throw std::runtime_error(where + ": unknown field '" + key + "'");
    }
    try {
      SampleRecord r;
      r.id = j.at("id").get<std::string>();
      r.image_ref = j.at("image_ref").get<std::string>();
      r.class_label = j.at("class_label").get<int>();
      r.quality.s_aes = j.at("s_aes").get<double>();
      r.quality.s_wat = j.at("s_wat").get<double>();
      r.quality.s_cla = j.at("s_cla").get<double>();
      r.quality.s_ent = j.at("s_ent").get<double>();
      r.quality.s_luma = j.at("s_luma").get<double>();
      if (!within_declared_ranges(r.quality)) throw std::runtime_error("score outside its declared range");
      m.records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw std::runtime_error(where + ": " + e.what());
    } catch (const std::runtime_error& e) {
      throw std::runtime_error(where + ": " + e.what());
    }
  }
  sort_and_check_ids(m.records);
  return m;
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write manifest '" + path.string() + "'");
    out << manifest_to_jsonl(manifest);
    if (!out) throw std::runtime_error("failed writing manifest '" + path.string() + "'");
  }
  std::ofstream prov(provenance_path(path), std::ios::binary | std::ios::trunc);
  if (!prov) throw std::runtime_error("cannot write manifest provenance for '" + path.string() + "'");
  prov << manifest.provenance << '\n';
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read manifest '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  Manifest m = manifest_from_jsonl(buffer.str());
  std::ifstream prov(provenance_path(path));
  if (prov) std::getline(prov, m.provenance);
  return m;
}

void FilterThresholds::validate() const {
  if (!(luma_min < luma_max)) throw std::invalid_argument("filter thresholds require luma_min < luma_max");
}

bool FilterThresholds::keeps(const QualityVector& q) const {
  return q.s_aes >= aes_min && q.s_wat <= wat_max && q.s_cla >= cla_min && q.s_ent >= ent_min &&
         q.s_luma >= luma_min && q.s_luma <= luma_max;
}

std::span<const FilterPreset> filter_presets() { return kPresets; }

FilterThresholds filter_preset(std::string_view name) {
  for (const FilterPreset& p : kPresets) {
    if (p.name == name) return p.thresholds;
  }
  std::string valid;
  for (const FilterPreset& p : kPresets) valid += (valid.empty() ? "" : ", ") + std::string(p.name);
  throw std::invalid_argument("unknown filter preset '" + std::string(name) + "' (valid: " + valid + ")");
}

Manifest apply_filter(const Manifest& manifest, const FilterThresholds& thresholds) {
  thresholds.validate();
  Manifest out;
  out.provenance = manifest.provenance;
  std::copy_if(manifest.records.begin(), manifest.records.end(), std::back_inserter(out.records),
               [&](const SampleRecord& r) { return thresholds.keeps(r.quality); });
  return out;
}

ValueRange histogram_range(Attribute a) {
  if (a == Attribute::cla) return {0.0, 3000.0};
  return declared_range(a);
}

HistogramTable score_histograms(std::span<const QualityVector> scores, const std::array<int, kNumAttributes>& bins) {
  HistogramTable table;
  for (Attribute a : kAllAttributes) {
    const int n_bins = bins[index_of(a)];
    if (n_bins < 1) throw std::invalid_argument("histogram needs at least one bin");
    const ValueRange range = histogram_range(a);
    AttributeHistogram& h = table[index_of(a)];
    h.attribute = a;
    h.counts.assign(static_cast<std::size_t>(n_bins), 0);
    h.proportions.assign(static_cast<std::size_t>(n_bins), 0.0);
    h.edges.resize(static_cast<std::size_t>(n_bins) + 1);
    const double width = (range.hi - range.lo) / n_bins;
    for (int i = 0; i <= n_bins; ++i) h.edges[static_cast<std::size_t>(i)] = range.lo + i * width;
    for (const QualityVector& q : scores) {
      const double pos = std::floor((q[a] - range.lo) / width);
      const int bin = static_cast<int>(std::clamp(pos, 0.0, static_cast<double>(n_bins - 1)));
      h.counts[static_cast<std::size_t>(bin)]++;
    }
    if (!scores.empty()) {
      for (std::size_t i = 0; i < h.counts.size(); ++i) {
        h.proportions[i] = static_cast<double>(h.counts[i]) / static_cast<double>(scores.size());
      }
    }
  }
  return table;
}

HistogramTable score_histograms(const Manifest& manifest, const std::array<int, kNumAttributes>& bins) {
  std::vector<QualityVector> scores;
  scores.reserve(manifest.size());
  for (const SampleRecord& r : manifest.records) scores.push_back(r.quality);
  return score_histograms(scores, bins);
}

HistogramTable score_histograms(const Manifest& manifest, int bins) {
  std::array<int, kNumAttributes> all{};
  all.fill(bins);
  return score_histograms(manifest, all);
}

std::string histograms_to_csv(const HistogramTable& table) {
  std::string out = "attribute,bin_lo,bin_hi,count,proportion\n";
  for (const AttributeHistogram& h : table) {
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      out += std::string(attribute_name(h.attribute)) + "," + format_score(h.edges[i]) + "," +
             format_score(h.edges[i + 1]) + "," + std::to_string(h.counts[i]) + "," + format_score(h.proportions[i]) + "\n";
    }
  }
  return out;
}

QualityVector attribute_medians(const Manifest& manifest) {
  if (manifest.empty()) throw std::invalid_argument("cannot take medians of an empty manifest");
  QualityVector med;
  std::vector<double> values(manifest.size());
  for (Attribute a : kAllAttributes) {
    for (std::size_t i = 0; i < manifest.size(); ++i) values[i] = manifest.records[i].quality[a];
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    med[a] = n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  }
  return med;
}

}  // namespace lacon
