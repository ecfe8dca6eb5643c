#include "lacon/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "lacon/checkpoint.hpp"
#include "lacon/curation.hpp"
#include "lacon/digest.hpp"
#include "lacon/png_io.hpp"
#include "lacon/scorers.hpp"
#include "lacon/synth.hpp"
#include "lacon/trainer.hpp"

namespace lacon {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void reject_unknown(const json& j, std::initializer_list<std::string_view> known, std::string_view where) {
  if (!j.is_object()) throw std::invalid_argument(std::string(where) + ": expected a JSON object");
  const std::set<std::string_view> allowed(known);
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw std::invalid_argument(std::string(where) + ": unknown key '" + key + "'");
  }
}

PartialQuality partial_from_json(const json& j, std::string_view where) {
  reject_unknown(j, {"aes", "wat", "cla", "ent", "luma"}, where);
  PartialQuality p;
  for (Attribute a : kAllAttributes) {
    const std::string key(attribute_name(a));
    if (j.contains(key)) p[index_of(a)] = j.at(key).get<double>();
  }
  return p;
}

json partial_to_json(const PartialQuality& p) {
  json out = json::object();
  for (Attribute a : kAllAttributes) {
    if (p[index_of(a)]) out[std::string(attribute_name(a))] = *p[index_of(a)];
  }
  return out;
}

json quality_json(const QualityVector& q) {
  json out = json::object();
  for (Attribute a : kAllAttributes) out[std::string(attribute_name(a))] = q[a];
  return out;
}

json omega_json(const std::array<double, kNumAttributes>& omega) {
  json out = json::object();
  for (Attribute a : kAllAttributes) out[std::string(attribute_name(a))] = omega[index_of(a)];
  return out;
}

void write_text(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create directory " + dir.string());
}

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::uint64_t require_seed(const std::optional<std::uint64_t>& flag, const RunConfig& config, std::string_view cmd) {
  if (flag) return *flag;
  if (config.seed) return *config.seed;
  throw std::invalid_argument("--seed is required for '" + std::string(cmd) + "'");
}

std::vector<int> alternating_classes(int count, int num_classes) {
  std::vector<int> classes(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) classes[static_cast<std::size_t>(i)] = i % num_classes;
  return classes;
}

using Grid = std::vector<std::pair<Attribute, std::vector<double>>>;

// "luma=0.3,0.5,0.8;ent=3,7"
Grid parse_grid(std::string_view text) {
  Grid grid;
  std::stringstream ss{std::string(text)};
  std::string part;
  while (std::getline(ss, part, ';')) {
    if (part.empty()) continue;
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("grid entry '" + part + "' must look like attr=v1,v2");
    const Attribute a = parse_attribute(part.substr(0, eq));
    std::vector<double> values;
    std::stringstream vs(part.substr(eq + 1));
    std::string v;
    while (std::getline(vs, v, ',')) values.push_back(std::stod(v));
    if (values.empty()) throw std::invalid_argument("grid entry '" + part + "' lists no targets");
    grid.emplace_back(a, std::move(values));
  }
  if (grid.empty()) throw std::invalid_argument("evaluation grid is empty");
  return grid;
}

constexpr const char* kDefaultGrid = "aes=3,5,7;wat=0.05,0.95;cla=200,500,1500,2500;ent=3,5,7;luma=0.3,0.5,0.8";

struct Options {
  std::optional<fs::path> config_path;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;

  // synth
  long long n = 0;
  // shared paths
  fs::path in;
  fs::path out;
  fs::path checkpoint;
  std::optional<fs::path> manifest;
  std::optional<fs::path> loss_csv;
  // label
  std::optional<std::string> aes_scorer;
  std::optional<std::string> wat_scorer;
  std::optional<int> long_side;
  // filter
  std::optional<std::string> preset;
  std::optional<double> aes_min, wat_max, cla_min, ent_min, luma_min, luma_max;
  // train
  std::optional<int> train_steps;
  std::optional<int> batch_size;
  std::optional<double> lr;
  std::optional<double> p_drop;
  std::optional<std::string> strategy;
  int log_every = 500;
  // sample / eval
  std::optional<int> sample_steps;
  std::optional<int> count;
  std::optional<std::string> mode;
  std::optional<double> omega_c;
  std::optional<std::string> omega;
  std::optional<std::string> targets;
  std::optional<std::string> s_base;
  std::optional<int> class_label;
  std::optional<std::string> grid;
  double omega_attr = 1.5;
  int bins = 20;
};

RunConfig load_config(const Options& o) {
  RunConfig c = o.config_path ? load_run_config(*o.config_path) : RunConfig{};
  if (o.workers) c.workers = o.workers;
  return c;
}

void apply_label_flags(const Options& o, LabelSettings& s) {
  if (o.aes_scorer) s.aes_scorer = *o.aes_scorer;
  if (o.wat_scorer) s.wat_scorer = *o.wat_scorer;
  if (o.long_side) s.target_long_side = *o.long_side;
}

int cmd_synth(const Options& o, std::ostream& out) {
  const RunConfig config = load_config(o);
  const std::uint64_t seed = require_seed(o.seed, config, "synth");
  if (o.n < 1) throw std::invalid_argument("n must be >= 1");
  ensure_directory(o.out);
  std::string index = "file,class_label\n";
  char name[32];
  for (long long i = 0; i < o.n; ++i) {
    const auto idx = static_cast<std::uint64_t>(i);
    const SyntheticSample s = synthesize_one(seed, idx);
    std::snprintf(name, sizeof name, "synth-%06llu.png", static_cast<unsigned long long>(idx));
    write_png(o.out / name, s.image);
    index += std::string(name) + "," + std::to_string(s.class_label) + "\n";
  }
  write_text(o.out / "index.csv", index);
  out << "wrote " << o.n << " images to " << o.out.string() << " (seed " << seed << ")\n";
  return 0;
}

int cmd_label(const Options& o, std::ostream& out, std::ostream& err) {
  RunConfig config = load_config(o);
  apply_label_flags(o, config.label);
  const LabelConfig label = config.label.resolve();
  const int workers = resolve_workers(config.workers);
  const std::vector<CorpusItem> items = directory_corpus(fs::absolute(o.in));
  const BuildResult result = build_manifest(items, label, workers);
  for (const SkippedItem& s : result.skipped) err << "skipped " << s.image_ref << ": " << s.reason << "\n";
  write_manifest(o.out, result.manifest);
  out << "labeled " << result.manifest.size() << " images, skipped " << result.skipped.size() << " (workers "
      << workers << ", provenance " << result.manifest.provenance << ")\n";
  return 0;
}

int cmd_filter(const Options& o, std::ostream& out) {
  FilterThresholds t = o.preset ? filter_preset(*o.preset) : FilterThresholds::permissive();
  if (o.aes_min) t.aes_min = *o.aes_min;
  if (o.wat_max) t.wat_max = *o.wat_max;
  if (o.cla_min) t.cla_min = *o.cla_min;
  if (o.ent_min) t.ent_min = *o.ent_min;
  if (o.luma_min) t.luma_min = *o.luma_min;
  if (o.luma_max) t.luma_max = *o.luma_max;
  t.validate();
  out << "thresholds" << (o.preset ? " (" + *o.preset + ")" : std::string()) << ": aes_min=" << fmt_g(t.aes_min)
      << " wat_max=" << fmt_g(t.wat_max) << " cla_min=" << fmt_g(t.cla_min) << " ent_min=" << fmt_g(t.ent_min)
      << " luma_min=" << fmt_g(t.luma_min) << " luma_max=" << fmt_g(t.luma_max) << "\n";

  const Manifest in = read_manifest(o.in);
  const Manifest kept = apply_filter(in, t);
  write_manifest(o.out, kept);
  const double fraction =
      in.empty() ? 1.0 : static_cast<double>(kept.size()) / static_cast<double>(in.size());
  out << "retained " << kept.size() << "/" << in.size() << " records (fraction " << fmt_g(fraction) << ")\n";
  return 0;
}

int cmd_train(const Options& o, std::ostream& out) {
  RunConfig config = load_config(o);
  config.train.seed = require_seed(o.seed, config, "train");
  config.seed = config.train.seed;
  if (o.train_steps) config.train.steps = *o.train_steps;
  if (o.batch_size) config.train.batch_size = *o.batch_size;
  if (o.lr) config.train.adam.learning_rate = *o.lr;
  if (o.p_drop) config.train.p_drop = *o.p_drop;
  if (o.strategy) config.strategy = parse_injection(*o.strategy);
  config.train.validate();

  const Manifest manifest = read_manifest(o.in);
  out << "training " << injection_name(config.strategy) << " for " << config.train.steps << " steps on "
      << manifest.size() << " records (run config " << config.digest() << ")\n";
  const int every = std::max(o.log_every, 1);
  const TrainResult result = train(manifest, config.train, config.strategy, config.anchors, [&](int step, double loss) {
    if (step % every == 0) out << "step " << step << " loss " << fmt_g(loss) << "\n";
  });

  save_checkpoint(o.out, result.checkpoint);
  fs::path curve_path = o.loss_csv.value_or(fs::path(o.out.string() + ".loss.csv"));
  write_text(curve_path, loss_curve_csv(result.loss_curve));
  out << "wrote checkpoint " << o.out.string() << " (config digest " << result.checkpoint.config_digest
      << ") and loss curve " << curve_path.string() << "\n";
  return 0;
}

SamplerSettings sampler_settings(const Options& o, const RunConfig& config) {
  SamplerSettings s = config.sampler;
  if (o.sample_steps) s.steps = *o.sample_steps;
  if (o.count) s.count = *o.count;
  if (o.mode) s.mode = parse_mode(*o.mode);
  if (o.omega_c) s.omega_c = *o.omega_c;
  if (o.omega) {
    const PartialQuality p = parse_attribute_list(*o.omega);
    for (Attribute a : kAllAttributes) {
      if (p[index_of(a)]) s.omega[index_of(a)] = *p[index_of(a)];
    }
  }
  if (o.targets) s.targets = apply_partial(s.targets, parse_attribute_list(*o.targets));
  if (o.s_base) {
    const PartialQuality p = parse_attribute_list(*o.s_base);
    for (Attribute a : kAllAttributes) {
      if (p[index_of(a)]) s.s_base[index_of(a)] = p[index_of(a)];
    }
  }
  if (o.class_label) s.class_label = o.class_label;
  return s;
}

int cmd_sample(const Options& o, std::ostream& out) {
  RunConfig config = load_config(o);
  apply_label_flags(o, config.label);
  const std::uint64_t seed = require_seed(o.seed, config, "sample");
  const SamplerSettings s = sampler_settings(o, config);
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  const int num_classes = ckpt.config.net.num_classes;
  const int side = ckpt.config.net.side;

  const QualityVector s_base = apply_partial(ckpt.s_base_default, s.s_base);
  const GuidanceSpec g = GuidanceSpec::with_targets(s.omega_c, s.omega, s_base, s.targets);
  g.validate();
  // LACON-S holds s at the target vector itself.
  const QualityVector lacon_s_target = s.targets;
  const SamplerConfig cfg{s.steps, seed, s.count, s.mode};
  const std::vector<int> classes =
      s.class_label ? std::vector<int>(static_cast<std::size_t>(s.count), *s.class_label)
                    : alternating_classes(s.count, num_classes);

  const Eigen::MatrixXd samples = sample(ckpt.net, classes, g, lacon_s_target, cfg);
  const std::vector<QualityVector> measured = measure_outputs(samples, side, config.label.resolve());

  ensure_directory(o.out);
  json guidance{{"omega_c", s.omega_c},
                {"omega", omega_json(s.omega)},
                {"s_base", quality_json(s_base)},
                {"targets", quality_json(s.targets)},
                {"steps", s.steps}};
  std::string sidecar;
  char name[32];
  for (int i = 0; i < s.count; ++i) {
    std::snprintf(name, sizeof name, "sample-%06d", i);
    write_png(o.out / (std::string(name) + ".png"), column_to_image(samples.col(i), side));
    json row{{"sample_id", name},
             {"seed", seed},
             {"mode", mode_name(s.mode)},
             {"class_label", classes[static_cast<std::size_t>(i)]},
             {"guidance", guidance},
             {"measured", quality_json(measured[static_cast<std::size_t>(i)])}};
    sidecar += row.dump() + "\n";
  }
  write_text(o.out / "samples.jsonl", sidecar);
  out << "wrote " << s.count << " " << mode_name(s.mode) << " samples to " << o.out.string() << "\n";
  return 0;
}

int cmd_eval(const Options& o, std::ostream& out) {
  RunConfig config = load_config(o);
  apply_label_flags(o, config.label);
  const std::uint64_t seed = require_seed(o.seed, config, "eval");
  SamplerSettings s = sampler_settings(o, config);
  // Sweeps default to 256 samples per setting unless a count was given.
  if (!o.count && config.sampler.count == SamplerSettings{}.count) s.count = 256;
  if (s.mode == GuidanceMode::cfg) throw std::invalid_argument("eval sweeps targets; use mode lacon-s or lacon-a");
  const Grid grid = parse_grid(o.grid.value_or(kDefaultGrid));
  if (o.bins < 1) throw std::invalid_argument("--bins must be >= 1");

  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  const QualityVector s_base = apply_partial(ckpt.s_base_default, s.s_base);
  const LabelConfig label = config.label.resolve();
  const SamplerConfig cfg{s.steps, seed, s.count, s.mode};

  ensure_directory(o.out);
  std::string csv = "attribute,target,mode,omega_c,n,mean,std\n";
  for (const auto& [attr, targets] : grid) {
    for (double target : targets) {
      const SweepResult r = sweep_setting(ckpt.net, ckpt.config.net.num_classes, ckpt.config.net.side, s_base, attr,
                                          target, cfg, s.omega_c, o.omega_attr, label);
      csv += std::string(attribute_name(attr)) + "," + fmt_g(target) + "," + std::string(mode_name(s.mode)) + "," +
             fmt_g(s.omega_c) + "," + std::to_string(r.measured.size()) + "," + fmt_g(r.mean()) + "," +
             fmt_g(r.stddev()) + "\n";
      out << attribute_name(attr) << " target " << fmt_g(target) << ": measured mean " << fmt_g(r.mean()) << " (std "
          << fmt_g(r.stddev()) << ")\n";
      std::array<int, kNumAttributes> bins;
      bins.fill(o.bins);
      write_text(o.out / ("hist_" + std::string(attribute_name(attr)) + "_" + fmt_g(target) + ".csv"),
                 histograms_to_csv(score_histograms(r.measured, bins)));
    }
  }
  write_text(o.out / "eval.csv", csv);
  if (o.manifest) {
    write_text(o.out / "hist_manifest.csv", histograms_to_csv(score_histograms(read_manifest(*o.manifest), o.bins)));
  }
  out << "wrote " << (o.out / "eval.csv").string() << "\n";
  return 0;
}

}  // namespace

LabelConfig LabelSettings::resolve() const {
  return LabelConfig{target_long_side, make_scorer(aes_scorer), make_scorer(wat_scorer)};
}

QualityVector apply_partial(QualityVector base, const PartialQuality& patch) {
  for (Attribute a : kAllAttributes) {
    if (patch[index_of(a)]) base[a] = *patch[index_of(a)];
  }
  return base;
}

PartialQuality parse_attribute_list(std::string_view text) {
  PartialQuality p;
  std::stringstream ss{std::string(text)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("expected attr=value, got '" + item + "'");
    const Attribute a = parse_attribute(item.substr(0, eq));
    try {
      p[index_of(a)] = std::stod(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad value in '" + item + "'");
    }
  }
  return p;
}

RunConfig RunConfig::from_json(const json& j) {
  reject_unknown(j, {"seed", "workers", "train", "strategy", "anchors", "label", "sampler"}, "run config");
  RunConfig c;
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("workers")) c.workers = j.at("workers").get<int>();
  if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
  if (j.contains("strategy")) c.strategy = parse_injection(j.at("strategy").get<std::string>());
  if (j.contains("anchors")) {
    const json& a = j.at("anchors");
    reject_unknown(a, {"aes", "wat", "cla", "ent", "luma"}, "anchors");
    for (const auto& [key, spec] : a.items()) {
      reject_unknown(spec, {"first", "spacing", "count", "clip_max"}, "anchors." + key);
      const Attribute attr = parse_attribute(key);
      std::optional<double> clip;
      if (spec.contains("clip_max") && !spec.at("clip_max").is_null()) clip = spec.at("clip_max").get<double>();
      c.anchors[index_of(attr)] = AttributeAnchorSpec::uniform(attr, spec.at("first").get<double>(),
                                                               spec.at("spacing").get<double>(),
                                                               spec.at("count").get<int>(), clip);
    }
  }
  if (j.contains("label")) {
    const json& l = j.at("label");
    reject_unknown(l, {"target_long_side", "aes_scorer", "wat_scorer"}, "label");
    if (l.contains("target_long_side")) c.label.target_long_side = l.at("target_long_side").get<int>();
    if (l.contains("aes_scorer")) c.label.aes_scorer = l.at("aes_scorer").get<std::string>();
    if (l.contains("wat_scorer")) c.label.wat_scorer = l.at("wat_scorer").get<std::string>();
    if (c.label.target_long_side < 3) throw std::invalid_argument("label.target_long_side must be >= 3");
  }
  if (j.contains("sampler")) {
    const json& s = j.at("sampler");
    reject_unknown(s, {"steps", "count", "mode", "omega_c", "omega", "targets", "s_base", "class_label"}, "sampler");
    if (s.contains("steps")) c.sampler.steps = s.at("steps").get<int>();
    if (s.contains("count")) c.sampler.count = s.at("count").get<int>();
    if (s.contains("mode")) c.sampler.mode = parse_mode(s.at("mode").get<std::string>());
    if (s.contains("omega_c")) c.sampler.omega_c = s.at("omega_c").get<double>();
    if (s.contains("omega")) {
      const PartialQuality p = partial_from_json(s.at("omega"), "sampler.omega");
      for (Attribute a : kAllAttributes) {
        if (p[index_of(a)]) c.sampler.omega[index_of(a)] = *p[index_of(a)];
      }
    }
    if (s.contains("targets")) {
      c.sampler.targets = apply_partial(c.sampler.targets, partial_from_json(s.at("targets"), "sampler.targets"));
    }
    if (s.contains("s_base")) c.sampler.s_base = partial_from_json(s.at("s_base"), "sampler.s_base");
    if (s.contains("class_label")) c.sampler.class_label = s.at("class_label").get<int>();
    SamplerConfig{c.sampler.steps, 0, c.sampler.count, c.sampler.mode}.validate();
  }
  if (c.workers && *c.workers < 1) throw std::invalid_argument("workers must be >= 1");
  return c;
}

json RunConfig::to_json() const {
  json anchors = json::object();
  for (const AttributeAnchorSpec& spec : this->anchors) {
    anchors[std::string(attribute_name(spec.attribute))] = {
        {"first", spec.anchors.front()},
        {"spacing", spec.spacing},
        {"count", spec.size()},
        {"clip_max", spec.clip_max ? json(*spec.clip_max) : json(nullptr)}};
  }
  json j{{"train", lacon::to_json(train)},
         {"strategy", injection_name(strategy)},
         {"anchors", anchors},
         {"label",
          {{"target_long_side", label.target_long_side},
           {"aes_scorer", label.aes_scorer},
           {"wat_scorer", label.wat_scorer}}},
         {"sampler",
          {{"steps", sampler.steps},
           {"count", sampler.count},
           {"mode", mode_name(sampler.mode)},
           {"omega_c", sampler.omega_c},
           {"omega", omega_json(sampler.omega)},
           {"targets", quality_json(sampler.targets)},
           {"s_base", partial_to_json(sampler.s_base)}}}};
  if (sampler.class_label) j["sampler"]["class_label"] = *sampler.class_label;
  if (seed) j["seed"] = *seed;
  if (workers) j["workers"] = *workers;
  return j;
}

std::string RunConfig::digest() const {
  json j = to_json();
  j.erase("workers");  // parallelism does not change results
  return sha256_hex(j.dump());
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return RunConfig::from_json(j);
}

int resolve_workers(std::optional<int> flag) {
  if (flag) {
    if (*flag < 1) throw std::invalid_argument("--workers must be >= 1");
    return *flag;
  }
  if (const char* env = std::getenv("LACON_WORKERS"); env && *env) {
    int v = 0;
    try {
      v = std::stoi(env);
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string("LACON_WORKERS is not an integer: ") + env);
    }
    if (v < 1) throw std::invalid_argument("LACON_WORKERS must be >= 1");
    return v;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quality-signal labeling, conditioned flow-matching training and guided sampling.", "lacon"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config_path, "JSON run configuration (flags override it)");
  app.add_option("--workers", o.workers, "worker threads (fallback: LACON_WORKERS, then core count)");

  auto* synth = app.add_subcommand("synth", "generate a procedural 16x16 corpus as PNG files");
  synth->add_option("--n", o.n, "number of images")->required();
  synth->add_option("--seed", o.seed, "generator seed");
  synth->add_option("--out", o.out, "output directory")->required();

  auto* label = app.add_subcommand("label", "score every PNG in a directory into a JSONL manifest");
  label->add_option("--in", o.in, "image directory")->required();
  label->add_option("--out", o.out, "manifest path")->required();
  label->add_option("--aes-scorer", o.aes_scorer, "heuristic | corner_tag | const:<v> | sidecar:<csv>");
  label->add_option("--wat-scorer", o.wat_scorer, "heuristic | corner_tag | const:<v> | sidecar:<csv>");
  label->add_option("--long-side", o.long_side, "scale-normalization target for clarity");

  auto* filter = app.add_subcommand("filter", "apply threshold filtering to a manifest");
  filter->add_option("--in", o.in, "input manifest")->required();
  filter->add_option("--out", o.out, "output manifest")->required();
  filter->add_option("--preset", o.preset, "ratio5 | ratio30 | ratio50 | ratio65 | ratio80");
  filter->add_option("--aes-min", o.aes_min);
  filter->add_option("--wat-max", o.wat_max);
  filter->add_option("--cla-min", o.cla_min);
  filter->add_option("--ent-min", o.ent_min);
  filter->add_option("--luma-min", o.luma_min);
  filter->add_option("--luma-max", o.luma_max);

  auto* train_cmd = app.add_subcommand("train", "train the conditioned velocity network");
  train_cmd->add_option("--manifest", o.in, "training manifest")->required();
  train_cmd->add_option("--out", o.out, "checkpoint path")->required();
  train_cmd->add_option("--loss-csv", o.loss_csv, "loss curve path (default <out>.loss.csv)");
  train_cmd->add_option("--seed", o.seed, "training seed");
  train_cmd->add_option("--steps", o.train_steps, "optimizer steps");
  train_cmd->add_option("--batch-size", o.batch_size);
  train_cmd->add_option("--lr", o.lr, "Adam learning rate");
  train_cmd->add_option("--p-drop", o.p_drop, "class-drop probability");
  train_cmd->add_option("--strategy", o.strategy, "gcc | linear | binning | fourier");
  train_cmd->add_option("--log-every", o.log_every, "log the loss every N steps");

  auto add_sampling = [&](CLI::App* cmd) {
    cmd->add_option("--checkpoint", o.checkpoint)->required();
    cmd->add_option("--out", o.out, "output directory")->required();
    cmd->add_option("--seed", o.seed, "sampling seed");
    cmd->add_option("--steps", o.sample_steps, "Euler steps");
    cmd->add_option("--count", o.count, "samples (per setting for eval)");
    cmd->add_option("--mode", o.mode, "cfg | lacon-s | lacon-a");
    cmd->add_option("--omega-c", o.omega_c, "class guidance scale");
    cmd->add_option("--s-base", o.s_base, "base vector overrides, e.g. wat=0.95");
    cmd->add_option("--long-side", o.long_side, "scale-normalization target used when measuring outputs");
  };
  auto* sample_cmd = app.add_subcommand("sample", "generate guided samples from a checkpoint");
  add_sampling(sample_cmd);
  sample_cmd->add_option("--omega", o.omega, "per-attribute scales, e.g. wat=7,aes=1.5");
  sample_cmd->add_option("--targets", o.targets, "target overrides, e.g. luma=0.8");
  sample_cmd->add_option("--class", o.class_label, "class label for every sample (default: alternate)");

  auto* eval = app.add_subcommand("eval", "sweep conditioning targets and measure the outputs");
  add_sampling(eval);
  eval->add_option("--grid", o.grid, std::string("targets per attribute (default ") + kDefaultGrid + ")");
  eval->add_option("--omega-attr", o.omega_attr, "lacon-a scale for the swept attribute");
  eval->add_option("--manifest", o.manifest, "also write histograms of this manifest");
  eval->add_option("--bins", o.bins, "histogram bins");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*synth) return cmd_synth(o, out);
    if (*label) return cmd_label(o, out, err);
    if (*filter) return cmd_filter(o, out);
    if (*train_cmd) return cmd_train(o, out);
    if (*sample_cmd) return cmd_sample(o, out);
    if (*eval) return cmd_eval(o, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace lacon
