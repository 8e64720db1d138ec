#include "interedit/motion_io.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>

namespace interedit::motion {

namespace {

using nlohmann::json;

void put_u32(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw Error("unexpected end of motion file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& os, double v) { put_u32(os, std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
double get_f32(std::istream& is) { return std::bit_cast<float>(get_u32(is)); }

void put_str(std::ostream& os, const std::string& s) {
  put_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_str(std::istream& is) {
  const std::uint32_t n = get_u32(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw Error("unexpected end of motion file");
  return s;
}

void put_magic(std::ostream& os, const char* magic) { os.write(magic, 4); }

void expect_magic(std::istream& is, const char* magic, const std::string& path) {
  char m[4];
  is.read(m, 4);
  if (!is || std::memcmp(m, magic, 4) != 0) throw Error(path + ": bad magic, expected " + std::string(magic, 4));
  const std::uint32_t version = get_u32(is);
  if (version != kMotionFormatVersion) throw Error(path + ": unsupported format version " + std::to_string(version));
}

void put_sequence(std::ostream& os, const TwoPersonSequence& seq) {
  const Mat flat = flatten(seq);
  put_u32(os, static_cast<std::uint32_t>(seq.joint_count()));
  put_u32(os, static_cast<std::uint32_t>(seq.length()));
  put_f32(os, seq.fps);
  put_str(os, seq.scenario_id);
  put_str(os, seq.clip_id);
  for (Eigen::Index i = 0; i < flat.size(); ++i) put_f32(os, flat.data()[i]);
}

TwoPersonSequence get_sequence(std::istream& is) {
  const int nj = static_cast<int>(get_u32(is));
  const int length = static_cast<int>(get_u32(is));
  const double fps = get_f32(is);
  std::string scenario = get_str(is);
  std::string clip = get_str(is);
  require(nj > 0 && length > 0, "motion file: empty sequence header");
  Mat flat(length, 2 * FeatureLayout{nj}.person_width());
  for (Eigen::Index i = 0; i < flat.size(); ++i) flat.data()[i] = get_f32(is);
  TwoPersonSequence seq = unflatten(flat, nj, fps);
  seq.scenario_id = std::move(scenario);
  seq.clip_id = std::move(clip);
  return seq;
}

json window_json(const WindowRef& w) {
  return {{"clip_id", w.clip_id}, {"window_index", w.window_index}, {"start_frame", w.start_frame},
          {"end_frame", w.end_frame}};
}

WindowRef window_from(const json& j) {
  return {j.at("clip_id").get<std::string>(), j.at("window_index").get<int>(), j.at("start_frame").get<int>(),
          j.at("end_frame").get<int>()};
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open '" + path + "'");
  return is;
}

}  // namespace

std::string provenance_to_json(const Provenance& p) {
  json j = {{"kind", p.kind},
            {"scenario_id", p.scenario_id},
            {"group", p.group},
            {"source", window_json(p.source)},
            {"target", window_json(p.target)},
            {"similarity", p.similarity}};
  return j.dump();
}

Provenance provenance_from_json(const std::string& text) {
  const json j = json::parse(text);
  Provenance p;
  p.kind = j.at("kind").get<std::string>();
  p.scenario_id = j.at("scenario_id").get<std::string>();
  p.group = j.at("group").get<std::string>();
  p.source = window_from(j.at("source"));
  p.target = window_from(j.at("target"));
  p.similarity = j.at("similarity").get<double>();
  return p;
}

void save_triplets(const std::string& path, const std::vector<EditTriplet>& triplets) {
  auto os = open_out(path);
  put_magic(os, "IETR");
  put_u32(os, kMotionFormatVersion);
  put_u32(os, static_cast<std::uint32_t>(triplets.size()));
  for (const auto& t : triplets) {
    put_str(os, t.instruction);
    put_str(os, provenance_to_json(t.provenance));
    put_sequence(os, t.source);
    put_sequence(os, t.target);
  }
  if (!os) throw Error("write failed for '" + path + "'");
}

std::vector<EditTriplet> load_triplets(const std::string& path) {
  auto is = open_in(path);
  expect_magic(is, "IETR", path);
  const std::uint32_t count = get_u32(is);
  std::vector<EditTriplet> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    EditTriplet t;
    t.instruction = get_str(is);
    t.provenance = provenance_from_json(get_str(is));
    t.source = get_sequence(is);
    t.target = get_sequence(is);
    out.push_back(std::move(t));
  }
  return out;
}

void save_sequence(const std::string& path, const TwoPersonSequence& seq) {
  auto os = open_out(path);
  put_magic(os, "IESQ");
  put_u32(os, kMotionFormatVersion);
  put_sequence(os, seq);
  if (!os) throw Error("write failed for '" + path + "'");
}

TwoPersonSequence load_sequence(const std::string& path) {
  auto is = open_in(path);
  expect_magic(is, "IESQ", path);
  return get_sequence(is);
}

}  // namespace interedit::motion
