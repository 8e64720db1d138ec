#include "interedit/synth.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace interedit::synth {

namespace {

constexpr double kPi = std::numbers::pi;

// Per-frame pose of one person. Angles in radians, body frame +x left, +y up, +z forward.
struct Pose {
  double x = 0.0;
  double z = 0.0;
  double yaw = 0.0;
  double bob = 0.0;
  double walk_phase = 0.0;
  double walk_amp = 0.0;
  double bow = 0.0;
  double left_elev = 0.15, left_az = kPi / 2;
  double right_elev = 0.15, right_az = kPi / 2;
};

struct Body {
  double scale = 1.0;
};

Eigen::Vector3d arm_dir(double elev, double az, double side) {
  return {side * std::sin(elev) * std::sin(az), -std::cos(elev), std::sin(elev) * std::cos(az)};
}

Eigen::Vector3d leg_dir(double flex) { return {0.0, -std::cos(flex), std::sin(flex)}; }

motion::JointPositions render(const Pose& p, const Body& b) {
  const double s = b.scale;
  motion::JointPositions local(22, 3);
  auto set = [&](int j, const Eigen::Vector3d& v) { local.row(j) = v.transpose(); };
  auto get = [&](int j) -> Eigen::Vector3d { return local.row(j).transpose(); };

  const Eigen::Matrix3d torso = Eigen::AngleAxisd(p.bow, Eigen::Vector3d::UnitX()).toRotationMatrix();
  set(0, Eigen::Vector3d(0.0, 0.93 * s + p.bob, 0.0));
  set(1, get(0) + s * Eigen::Vector3d(0.09, -0.07, 0.0));
  set(2, get(0) + s * Eigen::Vector3d(-0.09, -0.07, 0.0));

  const double swing = p.walk_amp * std::sin(p.walk_phase);
  const double flex_l = swing;
  const double flex_r = -swing;
  const double knee_l = p.walk_amp * std::max(0.0, std::sin(p.walk_phase + kPi / 2)) * 1.2;
  const double knee_r = p.walk_amp * std::max(0.0, -std::sin(p.walk_phase + kPi / 2)) * 1.2;
  set(4, get(1) + 0.40 * s * leg_dir(flex_l));
  set(5, get(2) + 0.40 * s * leg_dir(flex_r));
  set(7, get(4) + 0.39 * s * leg_dir(flex_l - knee_l));
  set(8, get(5) + 0.39 * s * leg_dir(flex_r - knee_r));
  set(10, get(7) + s * Eigen::Vector3d(0.0, -0.05, 0.12));
  set(11, get(8) + s * Eigen::Vector3d(0.0, -0.05, 0.12));

  set(3, get(0) + torso * (s * Eigen::Vector3d(0.0, 0.11, 0.0)));
  set(6, get(3) + torso * (s * Eigen::Vector3d(0.0, 0.13, 0.0)));
  set(9, get(6) + torso * (s * Eigen::Vector3d(0.0, 0.06, 0.0)));
  set(12, get(9) + torso * (s * Eigen::Vector3d(0.0, 0.21, 0.0)));
  set(13, get(9) + torso * (s * Eigen::Vector3d(0.07, 0.12, 0.0)));
  set(14, get(9) + torso * (s * Eigen::Vector3d(-0.07, 0.12, 0.0)));
  set(15, get(12) + torso * (s * Eigen::Vector3d(0.0, 0.10, 0.03)));
  set(16, get(13) + torso * (s * Eigen::Vector3d(0.10, 0.02, 0.0)));
  set(17, get(14) + torso * (s * Eigen::Vector3d(-0.10, 0.02, 0.0)));
  const Eigen::Vector3d dl = torso * arm_dir(p.left_elev, p.left_az, 1.0);
  const Eigen::Vector3d dr = torso * arm_dir(p.right_elev, p.right_az, -1.0);
  set(18, get(16) + 0.27 * s * dl);
  set(19, get(17) + 0.27 * s * dr);
  set(20, get(18) + 0.25 * s * dl);
  set(21, get(19) + 0.25 * s * dr);

  const Eigen::Matrix3d yaw = Eigen::AngleAxisd(p.yaw, Eigen::Vector3d::UnitY()).toRotationMatrix();
  motion::JointPositions world(22, 3);
  const Eigen::Vector3d root(p.x, 0.0, p.z);
  for (int j = 0; j < 22; ++j) {
    world.row(j) = (yaw * local.row(j).transpose() + root).transpose();
  }
  return world;
}

double smoothstep(double u, double a, double b) {
  if (b <= a) return u >= a ? 1.0 : 0.0;
  const double x = std::clamp((u - a) / (b - a), 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

// Bump rising over [a, a+r] and falling over [b-r, b].
double plateau(double u, double a, double b, double r) {
  return smoothstep(u, a, a + r) * (1.0 - smoothstep(u, b - r, b));
}

// Yaw facing from `from` towards `to` in the XZ plane.
double facing(double fx, double fz, double tx, double tz) { return std::atan2(tx - fx, tz - fz); }

struct Instance {
  double cx, cz, heading, dist, scale_a, scale_b, tempo, amp, shift;
};

Instance draw_instance(const std::string& scenario, std::uint64_t seed) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : scenario) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
  std::mt19937_64 rng(h ^ (seed * 0x9E3779B97F4A7C15ULL));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Instance in;
  in.cx = -2.0 + 4.0 * u(rng);
  in.cz = -2.0 + 4.0 * u(rng);
  in.heading = 2.0 * kPi * u(rng);
  in.dist = 0.8 + 0.6 * u(rng);
  in.scale_a = 0.92 + 0.16 * u(rng);
  in.scale_b = 0.92 + 0.16 * u(rng);
  in.tempo = 0.065 + 0.02 * u(rng);  // gesture cycles per frame
  in.amp = 0.8 + 0.4 * u(rng);
  in.shift = -0.06 + 0.12 * u(rng);
  return in;
}

// Walk bookkeeping: advance gait phase by distance covered.
void apply_gait(std::vector<Pose>& poses, double scale) {
  double phase = 0.0;
  for (std::size_t l = 0; l < poses.size(); ++l) {
    if (l > 0) {
      const double step = std::hypot(poses[l].x - poses[l - 1].x, poses[l].z - poses[l - 1].z);
      phase += step / (0.12 * scale);
    }
    const double moving = l > 0 ? std::hypot(poses[l].x - poses[l - 1].x, poses[l].z - poses[l - 1].z) : 0.0;
    poses[l].walk_phase = phase;
    poses[l].walk_amp = std::min(0.45, moving * 20.0);
    poses[l].bob = 0.015 * poses[l].walk_amp * std::cos(2.0 * phase);
  }
}

struct Rendered {
  std::vector<Pose> a, b;
};

Rendered choreograph(const std::string& id, const std::string& label, int length, const Instance& in) {
  Rendered r;
  r.a.resize(length);
  r.b.resize(length);
  const double hx = std::sin(in.heading), hz = std::cos(in.heading);
  // Lateral axis (person's left when facing `heading`).
  const double lx = std::cos(in.heading), lz = -std::sin(in.heading);
  for (int l = 0; l < length; ++l) {
    const double u = length > 1 ? static_cast<double>(l) / (length - 1) : 0.0;
    Pose& a = r.a[l];
    Pose& b = r.b[l];
    // Default: face each other along heading, B at the center.
    b.x = in.cx;
    b.z = in.cz;
    a.x = in.cx + hx * (in.dist + 0.4);
    a.z = in.cz + hz * (in.dist + 0.4);
    a.yaw = facing(a.x, a.z, b.x, b.z);
    b.yaw = facing(b.x, b.z, a.x, a.z);
    const double gesture = 2.0 * kPi * in.tempo * l;

    if (id == "rotate_pair") {
      const double dir = label == "cw" ? -1.0 : 1.0;
      a.yaw = a.yaw + dir * 2.0 * kPi * smoothstep(u, 0.1 + in.shift, 0.9 + in.shift);
      b.left_elev = b.right_elev = 0.3;
    } else if (id == "approach") {
      const double dir = label == "approach" ? -1.0 : 1.0;
      const double d = in.dist + 0.8 + dir * 0.7 * smoothstep(u, 0.15 + in.shift, 0.85 + in.shift);
      a.x = in.cx + hx * d;
      a.z = in.cz + hz * d;
      a.yaw = facing(a.x, a.z, b.x, b.z);
    } else if (id == "wave") {
      // Side by side, both facing the heading direction.
      b.yaw = a.yaw = in.heading;
      a.x = in.cx + lx * 1.0;
      a.z = in.cz + lz * 1.0;
      const double phase = label == "sync_wave" ? 0.0 : kPi;
      b.right_elev = 2.3 + 0.45 * in.amp * std::sin(gesture);
      a.right_elev = 2.3 + 0.45 * in.amp * std::sin(gesture + phase);
      a.right_az = b.right_az = kPi / 2;
    } else if (id == "handshake") {
      const double close = 0.45 + 0.1 * in.amp;
      a.x = in.cx + hx * (2.0 * close);
      a.z = in.cz + hz * (2.0 * close);
      a.yaw = facing(a.x, a.z, b.x, b.z);
      const double hold_b = plateau(u, 0.2, 0.8, 0.1);
      const double hold_a = label == "short_hold" ? plateau(u, 0.3 + in.shift, 0.55 + in.shift, 0.08)
                                                  : plateau(u, 0.15 + in.shift, 0.85 + in.shift, 0.08);
      b.right_elev = 0.15 + 1.2 * hold_b;
      b.right_az = 0.15;
      a.right_elev = 0.15 + 1.2 * hold_a;
      a.right_az = 0.15;
    } else if (id == "side_arm") {
      b.yaw = a.yaw = in.heading;
      a.x = in.cx + lx * 1.2;
      a.z = in.cz + lz * 1.2;
      const double hold = plateau(u, 0.2 + in.shift, 0.8 + in.shift, 0.12);
      b.left_elev = 0.15 + 1.4 * plateau(u, 0.25, 0.75, 0.12);
      if (label == "left") {
        a.left_elev = 0.15 + 1.45 * hold * in.amp;
      } else {
        a.right_elev = 0.15 + 1.45 * hold * in.amp;
      }
    } else if (id == "circle_walk") {
      const double turns = label == "full" ? 1.0 : 0.5;
      const double radius = in.dist + 0.6;
      const double ang = in.heading + 2.0 * kPi * turns * smoothstep(u, 0.05, 0.95);
      a.x = in.cx + std::sin(ang) * radius;
      a.z = in.cz + std::cos(ang) * radius;
      a.yaw = ang + kPi / 2;  // walking tangentially
      b.yaw = in.heading;
    } else if (id == "high_five") {
      const double close = 0.4 + 0.1 * in.amp;
      a.x = in.cx + hx * (2.0 * close);
      a.z = in.cz + hz * (2.0 * close);
      a.yaw = facing(a.x, a.z, b.x, b.z);
      const double up = plateau(u, 0.3 + in.shift, 0.7 + in.shift, 0.12);
      b.right_elev = 0.15 + 1.6 * plateau(u, 0.3, 0.7, 0.12);
      b.right_az = 0.3;
      a.right_elev = 0.15 + (label == "high" ? 2.55 : 1.05) * up;
      a.right_az = 0.3;
    } else if (id == "bow") {
      const double dip = plateau(u, 0.25 + in.shift, 0.75 + in.shift, 0.2);
      b.bow = 0.45 * plateau(u, 0.3, 0.7, 0.2);
      a.bow = (label == "shallow" ? 0.3 : 0.95) * in.amp * dip;
    }
  }
  return r;
}

std::vector<std::string> templates(const std::string& id, const std::string& label) {
  if (id == "rotate_pair") {
    const std::string d = label == "cw" ? "clockwise" : "counterclockwise";
    return {"make the first person spin " + d, "have person A turn around " + d + " while B watches",
            "rotate the first person " + d + " instead"};
  }
  if (id == "approach") {
    if (label == "approach")
      return {"make the first person walk closer to the second", "have person A move closer to person B",
              "let A step closer toward B"};
    return {"make the first person back away from the second", "have person A back away from person B",
            "let A retreat and back away from B"};
  }
  if (id == "wave") {
    if (label == "sync_wave")
      return {"wave in sync with the other person", "make both people wave together in sync",
              "have A wave in sync with B"};
    return {"wave alternately with the other person", "make the two people alternate their waves",
            "have A wave alternately against B"};
  }
  if (id == "handshake") {
    if (label == "short_hold")
      return {"keep the handshake brief", "make the handshake short and brief",
              "let go of the hand quickly, brief shake"};
    return {"hold the handshake much longer", "make the handshake long", "keep shaking hands for a long time"};
  }
  if (id == "side_arm") {
    const std::string side = label == "left" ? "left" : "right";
    return {"point the " + side + " arm out to the side", "raise the " + side + " arm sideways instead",
            "have A lift the " + side + " arm"};
  }
  if (id == "circle_walk") {
    if (label == "full")
      return {"walk a full circle around the partner", "make A circle all the way around B, full loop",
              "complete a full circle around the other person"};
    return {"walk only half a circle around the partner", "make A circle halfway around B",
            "stop after half a circle around the other person"};
  }
  if (id == "high_five") {
    if (label == "high")
      return {"give a high five above the head", "raise the hand high for the high five",
              "make the high five high overhead"};
    return {"give a low five at waist height", "keep the hand low for the five",
            "make the five low near the waist"};
  }
  if (label == "shallow")
    return {"bow only slightly", "make the bow shallow", "give a small shallow nod instead of a deep bow"};
  return {"bow deeply", "make the bow deep and low", "give a deep bow instead of a slight one"};
}

// Rigid XZ transform that puts B's first-frame root at the origin facing +z. B follows the same
// trajectory in both variants of a seed, so source and target share the transform.
void canonicalize(Rendered& r) {
  const Pose b0 = r.b.front();
  const double c = std::cos(b0.yaw), s = std::sin(b0.yaw);
  for (auto* track : {&r.a, &r.b}) {
    for (Pose& p : *track) {
      const double dx = p.x - b0.x, dz = p.z - b0.z;
      p.x = dx * c - dz * s;
      p.z = dx * s + dz * c;
      p.yaw -= b0.yaw;
    }
  }
}

motion::TwoPersonSequence to_sequence(const std::vector<Pose>& pa, const std::vector<Pose>& pb,
                                      const Instance& in, const SynthOptions& opt) {
  const auto sk = motion::Skeleton::interhuman22();
  std::vector<motion::JointPositions> fa, fb;
  fa.reserve(pa.size());
  fb.reserve(pb.size());
  for (const Pose& p : pa) fa.push_back(render(p, Body{in.scale_a}));
  for (const Pose& p : pb) fb.push_back(render(p, Body{in.scale_b}));
  motion::TwoPersonSequence seq;
  seq.fps = opt.fps;
  seq.person_a = motion::build_motion_state(fa, sk, opt.fps, opt.contact);
  seq.person_b = motion::build_motion_state(fb, sk, opt.fps, opt.contact);
  return seq;
}

}  // namespace

const std::vector<Scenario>& catalog() {
  static const std::vector<Scenario> kCatalog = {
      {"rotate_pair", "cw", "ccw"},
      {"approach", "approach", "retreat"},
      {"wave", "sync_wave", "alt_wave"},
      {"handshake", "short_hold", "long_hold"},
      {"side_arm", "left", "right"},
      {"circle_walk", "full", "half"},
      {"high_five", "high", "low"},
      {"bow", "shallow", "deep"},
  };
  return kCatalog;
}

const Scenario& find_scenario(const std::string& id) {
  for (const auto& s : catalog())
    if (s.id == id) return s;
  throw Error("unknown scenario '" + id + "'");
}

motion::TwoPersonSequence synth_clip(const std::string& scenario_id, const std::string& label, int length,
                                     std::uint64_t seed, const SynthOptions& options) {
  const Scenario& sc = find_scenario(scenario_id);
  require(label == sc.first_label || label == sc.second_label,
          "unknown label '" + label + "' for scenario '" + scenario_id + "'");
  require(length >= 2, "synthetic clip needs at least 2 frames");
  const Instance in = draw_instance(scenario_id, seed);
  Rendered r = choreograph(scenario_id, label, length, in);
  canonicalize(r);
  apply_gait(r.a, in.scale_a);
  apply_gait(r.b, in.scale_b);
  auto seq = to_sequence(r.a, r.b, in, options);
  seq.scenario_id = scenario_id;
  seq.clip_id = scenario_id + "_" + label + "_" + std::to_string(seed);
  return seq;
}

motion::EditTriplet synth_generate(const std::string& scenario_id, const std::string& edit_label, int length,
                                   std::uint64_t seed, const SynthOptions& options) {
  const Scenario& sc = find_scenario(scenario_id);
  require(edit_label == sc.first_label || edit_label == sc.second_label,
          "unknown label '" + edit_label + "' for scenario '" + scenario_id + "'");
  const std::string source_label = edit_label == sc.first_label ? sc.second_label : sc.first_label;
  motion::EditTriplet t;
  t.source = synth_clip(scenario_id, source_label, length, seed, options);
  t.target = synth_clip(scenario_id, edit_label, length, seed, options);
  t.instruction = instruction(scenario_id, edit_label, seed);
  t.provenance.kind = "synthetic";
  t.provenance.scenario_id = scenario_id;
  t.provenance.group = scenario_id + ":" + std::to_string(seed);
  t.provenance.source = {t.source.clip_id, 0, 0, length};
  t.provenance.target = {t.target.clip_id, 0, 0, length};
  t.provenance.similarity = 0.0;
  return t;
}

std::string instruction(const std::string& scenario_id, const std::string& label, std::uint64_t seed) {
  const auto texts = templates(scenario_id, label);
  return texts[static_cast<std::size_t>(seed % texts.size())];
}

motion::JointPositions rest_pose(double scale) { return render(Pose{}, Body{scale}); }

}  // namespace interedit::synth
