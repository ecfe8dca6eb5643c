#include "lacon/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "lacon/digest.hpp"

namespace lacon {

namespace {

using nlohmann::json;

constexpr std::string_view kMagic = "LACONCKP";

static_assert(std::endian::native == std::endian::little, "checkpoint tensors are stored little-endian");

void reject_unknown(const json& j, std::initializer_list<std::string_view> known, std::string_view where) {
  if (!j.is_object()) throw std::invalid_argument(std::string(where) + ": expected a JSON object");
  std::set<std::string_view> allowed(known);
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw std::invalid_argument(std::string(where) + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

template <typename T>
void put_raw(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get_raw(std::string_view bytes, std::size_t& pos) {
  if (pos + sizeof(T) > bytes.size()) throw std::runtime_error("checkpoint is truncated");
  T value;
  std::memcpy(&value, bytes.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

}  // namespace

json to_json(const TrainConfig& c) {
  return json{{"seed", c.seed},
              {"batch_size", c.batch_size},
              {"steps", c.steps},
              {"learning_rate", c.adam.learning_rate},
              {"beta1", c.adam.beta1},
              {"beta2", c.adam.beta2},
              {"epsilon", c.adam.epsilon},
              {"p_drop", c.p_drop},
              {"net",
               {{"side", c.net.side},
                {"cond_dim", c.net.cond_dim},
                {"class_dim", c.net.class_dim},
                {"hidden", c.net.hidden},
                {"num_classes", c.net.num_classes},
                {"data_std", c.net.data_std}}}};
}

TrainConfig train_config_from_json(const json& j) {
  reject_unknown(j, {"seed", "batch_size", "steps", "learning_rate", "beta1", "beta2", "epsilon", "p_drop", "net"},
                 "train config");
  TrainConfig c;
  read_opt(j, "seed", c.seed);
  read_opt(j, "batch_size", c.batch_size);
  read_opt(j, "steps", c.steps);
  read_opt(j, "learning_rate", c.adam.learning_rate);
  read_opt(j, "beta1", c.adam.beta1);
  read_opt(j, "beta2", c.adam.beta2);
  read_opt(j, "epsilon", c.adam.epsilon);
  read_opt(j, "p_drop", c.p_drop);
  if (j.contains("net")) {
    const json& n = j.at("net");
    reject_unknown(n, {"side", "cond_dim", "class_dim", "hidden", "num_classes", "data_std"}, "net config");
    read_opt(n, "side", c.net.side);
    read_opt(n, "cond_dim", c.net.cond_dim);
    read_opt(n, "class_dim", c.net.class_dim);
    read_opt(n, "hidden", c.net.hidden);
    read_opt(n, "num_classes", c.net.num_classes);
    read_opt(n, "data_std", c.net.data_std);
  }
  c.validate();
  return c;
}

json to_json(const AnchorSpecs& specs) {
  json out = json::array();
  for (const AttributeAnchorSpec& s : specs) {
    json entry{{"attribute", attribute_name(s.attribute)},
               {"anchors", s.anchors},
               {"spacing", s.spacing},
               {"sigma", s.sigma}};
    entry["clip_max"] = s.clip_max ? json(*s.clip_max) : json(nullptr);
    out.push_back(std::move(entry));
  }
  return out;
}

AnchorSpecs anchor_specs_from_json(const json& j) {
  if (!j.is_array() || j.size() != kNumAttributes) {
    throw std::invalid_argument("anchor specs: expected an array of five entries");
  }
  AnchorSpecs specs;
  for (std::size_t i = 0; i < kNumAttributes; ++i) {
    const json& e = j[i];
    reject_unknown(e, {"attribute", "anchors", "spacing", "sigma", "clip_max"}, "anchor spec");
    AttributeAnchorSpec& s = specs[i];
    s.attribute = parse_attribute(e.at("attribute").get<std::string>());
    s.anchors = e.at("anchors").get<std::vector<double>>();
    s.spacing = e.at("spacing").get<double>();
    s.sigma = e.at("sigma").get<double>();
    if (e.contains("clip_max") && !e.at("clip_max").is_null()) s.clip_max = e.at("clip_max").get<double>();
  }
  validate_specs(specs);
  return specs;
}

json to_json(const QualityVector& q) {
  json out = json::object();
  for (Attribute a : kAllAttributes) out[std::string(attribute_name(a))] = q[a];
  return out;
}

QualityVector quality_from_json(const json& j) {
  reject_unknown(j, {"aes", "wat", "cla", "ent", "luma"}, "quality vector");
  QualityVector q;
  for (Attribute a : kAllAttributes) {
    const std::string key(attribute_name(a));
    if (!j.contains(key)) throw std::invalid_argument("quality vector: missing '" + key + "'");
    q[a] = j.at(key).get<double>();
  }
  return q;
}

std::string train_config_digest(const TrainConfig& config, InjectionKind strategy, const AnchorSpecs& specs) {
  const json canon{{"train", to_json(config)}, {"strategy", injection_name(strategy)}, {"anchors", to_json(specs)}};
  return sha256_hex(canon.dump());
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  json tensors = json::array();
  std::string payload;
  for (const nn::Param* p : ckpt.net.parameters()) {
    tensors.push_back({{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}});
    payload.append(reinterpret_cast<const char*>(p->value.data()),
                   static_cast<std::size_t>(p->value.size()) * sizeof(double));
  }
  const json header{{"version", kCheckpointVersion},
                    {"config", to_json(ckpt.config)},
                    {"strategy", injection_name(ckpt.net.strategy())},
                    {"anchors", to_json(ckpt.specs)},
                    {"step", ckpt.step},
                    {"config_digest", ckpt.config_digest},
                    {"s_base_default", to_json(ckpt.s_base_default)},
                    {"tensors", tensors}};
  const std::string head = header.dump();

  std::string out(kMagic);
  put_raw<std::uint32_t>(out, kCheckpointVersion);
  put_raw<std::uint64_t>(out, head.size());
  out += head;
  out += payload;
  return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  if (bytes.substr(0, kMagic.size()) != kMagic) throw std::runtime_error("not a checkpoint file (bad magic)");
  std::size_t pos = kMagic.size();
  const auto version = get_raw<std::uint32_t>(bytes, pos);
  if (version != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  const auto head_len = get_raw<std::uint64_t>(bytes, pos);
  if (pos + head_len > bytes.size()) throw std::runtime_error("checkpoint is truncated");
  const json header = json::parse(bytes.substr(pos, head_len));
  pos += head_len;

  const TrainConfig config = train_config_from_json(header.at("config"));
  const AnchorSpecs specs = anchor_specs_from_json(header.at("anchors"));
  const InjectionKind strategy = parse_injection(header.at("strategy").get<std::string>());
  Checkpoint ckpt{config,
                  specs,
                  header.at("step").get<std::int64_t>(),
                  header.at("config_digest").get<std::string>(),
                  quality_from_json(header.at("s_base_default")),
                  VelocityNet(config.net, strategy, specs, 0)};

  const json& tensors = header.at("tensors");
  std::vector<nn::Param*> params = ckpt.net.parameters();
  if (tensors.size() != params.size()) throw std::runtime_error("checkpoint tensor count does not match the network");
  for (std::size_t i = 0; i < params.size(); ++i) {
    nn::Param& p = *params[i];
    const json& t = tensors[i];
    if (t.at("name").get<std::string>() != p.name || t.at("rows").get<Eigen::Index>() != p.value.rows() ||
        t.at("cols").get<Eigen::Index>() != p.value.cols()) {
      throw std::runtime_error("checkpoint tensor '" + t.at("name").get<std::string>() +
                               "' does not match network parameter '" + p.name + "'");
    }
    const std::size_t n = static_cast<std::size_t>(p.value.size()) * sizeof(double);
    if (pos + n > bytes.size()) throw std::runtime_error("checkpoint is truncated");
    std::memcpy(p.value.data(), bytes.data() + pos, n);
    pos += n;
  }
  if (pos != bytes.size()) throw std::runtime_error("checkpoint has trailing bytes");
  return ckpt;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_atomic(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str());
}

}  // namespace lacon
