#include "interedit/checkpoint.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>

namespace interedit {

namespace {

using nlohmann::json;

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw Error("unexpected end of checkpoint");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void put_str(std::ostream& os, const std::string& s) {
  put_u64(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_str(std::istream& is) {
  const std::uint64_t n = get_u64(is);
  if (n > (1ULL << 32)) throw Error("checkpoint: implausible string length");
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  if (!is) throw Error("unexpected end of checkpoint");
  return s;
}

void put_arrays(std::ostream& os, const std::vector<NamedArray>& arrays) {
  put_u64(os, arrays.size());
  for (const auto& a : arrays) {
    put_str(os, a.name);
    put_u64(os, static_cast<std::uint64_t>(a.value.rows()));
    put_u64(os, static_cast<std::uint64_t>(a.value.cols()));
    for (Eigen::Index i = 0; i < a.value.size(); ++i) put_u64(os, std::bit_cast<std::uint64_t>(a.value.data()[i]));
  }
}

std::vector<NamedArray> get_arrays(std::istream& is) {
  const std::uint64_t n = get_u64(is);
  std::vector<NamedArray> out;
  for (std::uint64_t k = 0; k < n; ++k) {
    NamedArray a;
    a.name = get_str(is);
    const auto rows = static_cast<Eigen::Index>(get_u64(is));
    const auto cols = static_cast<Eigen::Index>(get_u64(is));
    a.value.resize(rows, cols);
    for (Eigen::Index i = 0; i < a.value.size(); ++i) a.value.data()[i] = std::bit_cast<double>(get_u64(is));
    out.push_back(std::move(a));
  }
  return out;
}

Mat as_row(const Vec& v) { return v.transpose(); }

}  // namespace

std::string config_to_json(const ModelConfig& c) {
  json j = {{"joint_count", c.joint_count},   {"blocks", c.blocks},         {"heads", c.heads},
            {"embed_dim", c.embed_dim},       {"plan_tokens", c.plan_tokens}, {"freq_tokens", c.freq_tokens},
            {"plan_tap", c.plan_tap},         {"freq_tap", c.freq_tap},     {"freq_dropout", c.freq_dropout},
            {"max_length", c.max_length},     {"ffn_mult", c.ffn_mult},     {"source_layers", c.source_layers},
            {"timesteps", c.timesteps}};
  return j.dump();
}

ModelConfig config_from_json(const std::string& text) {
  const json j = json::parse(text);
  ModelConfig c;
  c.joint_count = j.at("joint_count");
  c.blocks = j.at("blocks");
  c.heads = j.at("heads");
  c.embed_dim = j.at("embed_dim");
  c.plan_tokens = j.at("plan_tokens");
  c.freq_tokens = j.at("freq_tokens");
  c.plan_tap = j.at("plan_tap");
  c.freq_tap = j.at("freq_tap");
  c.freq_dropout = j.at("freq_dropout");
  c.max_length = j.at("max_length");
  c.ffn_mult = j.at("ffn_mult");
  c.source_layers = j.at("source_layers");
  c.timesteps = j.at("timesteps");
  c.validate();
  return c;
}

void save_checkpoint(const std::string& path, const CheckpointData& data) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  os.write("IECK", 4);
  put_u64(os, kCheckpointVersion);
  put_str(os, config_to_json(data.config));
  put_str(os, data.meta);
  put_u64(os, static_cast<std::uint64_t>(data.step));
  put_arrays(os, {{"stats.mean", as_row(data.stats.mean)}, {"stats.std", as_row(data.stats.std)}});
  put_arrays(os, data.params);
  put_arrays(os, data.adam_m);
  put_arrays(os, data.adam_v);
  if (!os) throw Error("write failed for '" + path + "'");
}

CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open checkpoint '" + path + "'");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "IECK", 4) != 0) throw Error(path + ": not a checkpoint");
  const std::uint64_t version = get_u64(is);
  if (version != kCheckpointVersion) throw Error(path + ": unsupported checkpoint version " + std::to_string(version));
  CheckpointData d;
  d.config = config_from_json(get_str(is));
  d.meta = get_str(is);
  d.step = static_cast<std::int64_t>(get_u64(is));
  const auto stats = get_arrays(is);
  require(stats.size() == 2, path + ": missing dataset statistics");
  d.stats.mean = stats[0].value.row(0).transpose();
  d.stats.std = stats[1].value.row(0).transpose();
  d.params = get_arrays(is);
  d.adam_m = get_arrays(is);
  d.adam_v = get_arrays(is);
  return d;
}

std::vector<NamedArray> snapshot(const nn::ParameterStore& store) {
  std::vector<NamedArray> out;
  for (const auto& p : store.all()) out.push_back({p->name, p->value});
  return out;
}

void restore(nn::ParameterStore& store, const std::vector<NamedArray>& arrays) {
  require(arrays.size() == store.all().size(), "checkpoint: parameter count mismatch");
  for (const auto& a : arrays) {
    nn::Parameter* p = store.find(a.name);
    require(p != nullptr, "checkpoint: unknown parameter '" + a.name + "'");
    require_shape(p->value.rows() == a.value.rows() && p->value.cols() == a.value.cols(),
                  "checkpoint: shape mismatch for '" + a.name + "'");
    p->value = a.value;
  }
}

}  // namespace interedit
