#include "pianomime/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "pianomime/midi_writer.hpp"

namespace pianomime {
namespace {

// Press/hover targets. A pressed fingertip sits just above full key travel;
// hovering fingertips rest at the demo hover height. White keys are pressed
// near the front of the footprint, black keys just inside theirs, reached by
// extending the finger (the hands have no forward slide). The vertical slide
// drops a little extra for black keys so the longer reach stays inside the
// finger workspace.
constexpr double kPressZ = 0.0005;
constexpr double kWhitePressX = 0.045;
constexpr double kBlackPressX = 0.080;
constexpr double kVertWhite = -0.030;
constexpr double kVertBlack = -0.038;
// Distal joint curls at this fraction of the middle joint: one curl scalar
// poses a whole finger.
constexpr double kCurlRatio = 0.7;

struct FingerCurl {
  double theta1 = 0.0;  // flex1
  double c = 0.0;       // flex2; flex3 = kCurlRatio * c
};

struct PlanarChain {
  double pre = 0.0;
  double L1 = 0.0, L2 = 0.0, L3 = 0.0;
  const JointSpec* j1 = nullptr;
  const JointSpec* j2 = nullptr;
  const JointSpec* j3 = nullptr;
};

PlanarChain chain_of(const FingerSpec& finger) {
  PlanarChain ch;
  for (const auto& j : finger.joints) {
    if (j.name == "flex1") {
      ch.pre = j.pre_pitch;
      ch.L1 = j.trans_after.x();
      ch.j1 = &j;
    } else if (j.name == "flex2") {
      ch.L2 = j.trans_after.x();
      ch.j2 = &j;
    } else if (j.name == "flex3") {
      ch.L3 = j.trans_after.x();
      ch.j3 = &j;
    }
  }
  if (!ch.j1 || !ch.j2 || !ch.j3)
    throw std::runtime_error("finger '" + finger.name + "' lacks flex1/flex2/flex3 joints");
  return ch;
}

Eigen::Vector2d chain_xz(const PlanarChain& ch, double theta1, double c) {
  const double p1 = ch.pre + theta1;
  const double p2 = p1 + c;
  const double p3 = p2 + kCurlRatio * c;
  return {ch.L1 * std::cos(p1) + ch.L2 * std::cos(p2) + ch.L3 * std::cos(p3),
          -(ch.L1 * std::sin(p1) + ch.L2 * std::sin(p2) + ch.L3 * std::sin(p3))};
}

// Newton iteration for the planar two-unknown problem from one initial guess.
// Returns true with (theta1, c) updated in place when the residual converges.
bool newton_curl(const PlanarChain& ch, const Eigen::Vector2d& target, double& theta1, double& c) {
  Eigen::Vector2d r = chain_xz(ch, theta1, c) - target;
  for (int it = 0; it < 100 && r.norm() > 1e-12; ++it) {
    const double p1 = ch.pre + theta1;
    const double p2 = p1 + c;
    const double p3 = p2 + kCurlRatio * c;
    Eigen::Matrix2d J;
    J(0, 0) = -(ch.L1 * std::sin(p1) + ch.L2 * std::sin(p2) + ch.L3 * std::sin(p3));
    J(0, 1) = -(ch.L2 * std::sin(p2) + (1.0 + kCurlRatio) * ch.L3 * std::sin(p3));
    J(1, 0) = -(ch.L1 * std::cos(p1) + ch.L2 * std::cos(p2) + ch.L3 * std::cos(p3));
    J(1, 1) = -(ch.L2 * std::cos(p2) + (1.0 + kCurlRatio) * ch.L3 * std::cos(p3));
    if (std::abs(J.determinant()) < 1e-14) return false;
    const Eigen::Vector2d step = J.partialPivLu().solve(r);
    double scale = 1.0;
    bool improved = false;
    for (int bt = 0; bt < 12; ++bt) {
      const Eigen::Vector2d rn =
          chain_xz(ch, theta1 - scale * step.x(), c - scale * step.y()) - target;
      if (rn.norm() < r.norm()) {
        theta1 -= scale * step.x();
        c -= scale * step.y();
        r = rn;
        improved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!improved) break;
  }
  return r.norm() <= 1e-9;
}

// Two-unknown solve for the fingertip offset from the knuckle in the finger's
// sagittal plane (abduction and roll held at zero, so the chain is planar and
// y is decoupled). The planar problem has two elbow branches; Newton runs
// from several starts and the first converged solution inside the joint
// limits wins, so the limit-feasible branch is found whenever one exists.
FingerCurl solve_finger_curl(const FingerSpec& finger, double dx, double dz) {
  const PlanarChain ch = chain_of(finger);
  const Eigen::Vector2d target(dx, dz);
  if (target.norm() > 0.995 * (ch.L1 + ch.L2 + ch.L3))
    throw std::runtime_error("finger '" + finger.name + "': target out of reach");

  const double margin = 1e-6;
  auto in_limits = [&](const JointSpec& j, double v) {
    return v >= j.lo + margin && v <= j.hi - margin;
  };
  constexpr std::array<std::array<double, 2>, 6> kStarts = {
      {{-0.2, 1.2}, {0.3, 0.6}, {0.0, 1.0}, {-0.4, 1.4}, {0.5, 0.3}, {0.2, 0.8}}};
  bool converged_any = false;
  for (const auto& start : kStarts) {
    double theta1 = start[0], c = start[1];
    if (!newton_curl(ch, target, theta1, c)) continue;
    converged_any = true;
    if (in_limits(*ch.j1, theta1) && in_limits(*ch.j2, c) && in_limits(*ch.j3, kCurlRatio * c))
      return {theta1, c};
  }
  throw std::runtime_error("finger '" + finger.name + "': pose solve " +
                           (converged_any ? "left joint limits" : "did not converge"));
}

struct HandPose {
  double s_lat = 0.0;
  double s_vert = 0.0;
  std::array<FingerCurl, 5> curls{};
};

Eigen::VectorXd hand_pose_q(const HandSpec& hand, const HandPose& pose) {
  Eigen::VectorXd q(hand.dof());
  Eigen::Index qi = 0;
  auto set = [&](const JointSpec& j, double v) {
    if (v < j.lo || v > j.hi)
      throw std::runtime_error("pose puts joint '" + j.name + "' outside its limits");
    q[qi++] = v;
  };
  for (const auto& j : hand.root_joints) {
    if (j.name == "slide_lat") set(j, pose.s_lat);
    else if (j.name == "slide_vert") set(j, pose.s_vert);
    else throw std::runtime_error("unsupported root joint '" + j.name + "'");
  }
  for (std::size_t f = 0; f < hand.fingers.size(); ++f) {
    const FingerCurl& curl = pose.curls[f];
    for (const auto& j : hand.fingers[f].joints) {
      if (j.name == "abd" || j.name == "roll") set(j, 0.0);
      else if (j.name == "flex1") set(j, curl.theta1);
      else if (j.name == "flex2") set(j, curl.c);
      else if (j.name == "flex3") set(j, kCurlRatio * curl.c);
      else throw std::runtime_error("unsupported finger joint '" + j.name + "'");
    }
  }
  return q;
}

// Stage pose: hand slid over the note's key, the playing finger hovering
// above its press point, all other fingers hovering at the white rest reach.
// The press pose differs only in the playing finger's height.
HandPose make_pose(const HandSpec& hand, const KeyGeometry& geom, const SynthNote& note,
                   bool pressing) {
  const Key& key = geom.keys[static_cast<std::size_t>(note.key)];
  HandPose pose;
  pose.s_vert = key.black ? kVertBlack : kVertWhite;
  pose.s_lat = key.center_y - hand.base.y() -
               hand.fingers[static_cast<std::size_t>(note.finger)].knuckle.y();
  const double knuckle_z = hand.base.z() + pose.s_vert;
  for (int f = 0; f < 5; ++f) {
    const FingerSpec& finger = hand.fingers[static_cast<std::size_t>(f)];
    const double knuckle_x = hand.base.x() + finger.knuckle.x();
    double x = kWhitePressX, z = geom.hover_z();
    if (f == note.finger) {
      x = key.black ? kBlackPressX : kWhitePressX;
      if (pressing) z = kPressZ;
    }
    pose.curls[static_cast<std::size_t>(f)] = solve_finger_curl(finger, x - knuckle_x, z - knuckle_z);
  }
  return pose;
}

std::vector<SynthNote> make_melody(int hand, int key_lo, int key_hi, const SynthConfig& cfg,
                                   Rng& rng) {
  std::vector<SynthNote> notes;
  int key = key_lo + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(key_hi - key_lo + 1)));
  long cursor = cfg.first_on;
  for (int n = 0; n < cfg.notes_per_hand; ++n) {
    int k = key;
    if (is_black_key(k) && rng.uniform() >= cfg.black_prob)
      k = (k - 1 >= key_lo) ? k - 1 : k + 1;  // neighbors of a black key are white
    SynthNote note;
    note.hand = hand;
    note.key = k;
    note.finger = is_black_key(k)
                      ? 1 + static_cast<int>(rng.uniform_int(3))  // index/middle/ring
                      : static_cast<int>(rng.uniform_int(5));
    const int len = cfg.min_len + static_cast<int>(rng.uniform_int(
                                      static_cast<std::uint64_t>(cfg.max_len - cfg.min_len + 1)));
    note.on = cursor;
    note.off = cursor + len;
    notes.push_back(note);

    const int gap = cfg.min_gap + static_cast<int>(rng.uniform_int(
                                      static_cast<std::uint64_t>(cfg.max_gap - cfg.min_gap + 1)));
    cursor = note.off + gap;
    const int step = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(2 * cfg.max_step + 1))) -
                     cfg.max_step;
    key = std::clamp(key + step, key_lo, key_hi);
  }
  return notes;
}

// Fills every frame by cosine interpolation between consecutive keyframes;
// poses are held before the first and after the last keyframe.
std::vector<Eigen::VectorXd> interpolate_keyframes(const std::map<long, Eigen::VectorXd>& kf,
                                                   long frames) {
  std::vector<Eigen::VectorXd> out(static_cast<std::size_t>(frames));
  auto it = kf.begin();
  auto next = std::next(it);
  for (long t = 0; t < frames; ++t) {
    while (next != kf.end() && next->first <= t) {
      it = next;
      ++next;
    }
    if (t <= it->first || next == kf.end()) {
      out[static_cast<std::size_t>(t)] = it->second;
    } else {
      const double u = static_cast<double>(t - it->first) /
                       static_cast<double>(next->first - it->first);
      const double w = 0.5 * (1.0 - std::cos(M_PI * u));
      out[static_cast<std::size_t>(t)] = (1.0 - w) * it->second + w * next->second;
    }
  }
  return out;
}

}  // namespace

void SynthConfig::validate() const {
  if (rate_hz <= 0.0) throw std::invalid_argument("synth: rate_hz must be positive");
  if (notes_per_hand < 1) throw std::invalid_argument("synth: notes_per_hand must be >= 1");
  if (first_on < 1) throw std::invalid_argument("synth: first_on must be >= 1");
  if (min_len < 2 || max_len < min_len) throw std::invalid_argument("synth: bad note length range");
  if (min_gap < 2 || max_gap < min_gap) throw std::invalid_argument("synth: bad gap range");
  if (max_step < 1) throw std::invalid_argument("synth: max_step must be >= 1");
  if (left_lo < 0 || left_hi < left_lo || right_lo <= left_hi || right_hi < right_lo ||
      right_hi >= kNumKeys)
    throw std::invalid_argument("synth: bad key ranges");
  if (right_lo - left_hi < 10)
    throw std::invalid_argument("synth: hand ranges must be at least 10 keys apart");
  if (black_prob < 0.0 || black_prob > 1.0) throw std::invalid_argument("synth: bad black_prob");
  if (jitter_y < 0.0 || jitter_y > 0.005) throw std::invalid_argument("synth: bad jitter_y");
  if (tail_frames < 0) throw std::invalid_argument("synth: bad tail_frames");
}

SynthSong synthesize_song(const HandModelSpec& spec, const KeyGeometry& geom,
                          const SynthConfig& cfg, const std::string& id) {
  cfg.validate();
  Rng rng(cfg.seed);
  Rng rng_left = rng.split(0);
  Rng rng_right = rng.split(1);
  Rng rng_jitter = rng.split(2);

  SynthSong song;
  song.id = id;
  song.notes = make_melody(0, cfg.left_lo, cfg.left_hi, cfg, rng_left);
  const auto right = make_melody(1, cfg.right_lo, cfg.right_hi, cfg, rng_right);
  song.notes.insert(song.notes.end(), right.begin(), right.end());
  std::sort(song.notes.begin(), song.notes.end(), [](const SynthNote& a, const SynthNote& b) {
    return std::tie(a.on, a.key) < std::tie(b.on, b.key);
  });

  // Goal trajectory through the same discretization the pipeline uses.
  std::vector<NoteEvent> events;
  for (const auto& n : song.notes)
    events.push_back({n.key, static_cast<double>(n.on) / cfg.rate_hz,
                      static_cast<double>(n.off) / cfg.rate_hz});
  song.song = discretize(events, {}, cfg.rate_hz, cfg.tail_frames);
  const long T = static_cast<long>(song.song.frames.size());

  // MIDI file; at the defaults one frame is exactly 48 ticks.
  const int division = 480;
  const int us_per_qn = 500000;
  const double ticks_per_frame = division * (1e6 / cfg.rate_hz) / us_per_qn;
  std::vector<TickNote> ticks;
  for (const auto& n : song.notes)
    ticks.push_back({n.key,
                     static_cast<long>(std::llround(static_cast<double>(n.on) * ticks_per_frame)),
                     static_cast<long>(std::llround(static_cast<double>(n.off) * ticks_per_frame))});
  const TickTempo tempo{0, us_per_qn};
  song.midi = write_midi(ticks, {&tempo, 1}, {}, division, 0);

  // Keyframes per hand, interpolated in joint space.
  std::array<std::vector<Eigen::VectorXd>, 2> hand_q;
  for (int h = 0; h < 2; ++h) {
    const HandSpec& hand = spec.hands[static_cast<std::size_t>(h)];
    std::map<long, Eigen::VectorXd> kf;
    for (const auto& n : song.notes) {
      if (n.hand != h) continue;
      const Eigen::VectorXd stage = hand_pose_q(hand, make_pose(hand, geom, n, false));
      const Eigen::VectorXd press = hand_pose_q(hand, make_pose(hand, geom, n, true));
      if (kf.empty()) kf.emplace(0, stage);
      kf.insert_or_assign(n.on - 1, stage);
      kf.insert_or_assign(n.on, press);
      kf.insert_or_assign(n.off - 1, press);
      kf.insert_or_assign(n.off, stage);
    }
    if (kf.empty()) kf.emplace(0, Eigen::VectorXd::Zero(hand.dof()));
    hand_q[static_cast<std::size_t>(h)] = interpolate_keyframes(kf, T);
  }

  song.q.resize(static_cast<std::size_t>(T));
  song.demo.resize(static_cast<std::size_t>(T));
  for (long t = 0; t < T; ++t) {
    Eigen::VectorXd q(spec.total_dof());
    q << hand_q[0][static_cast<std::size_t>(t)], hand_q[1][static_cast<std::size_t>(t)], 0.0;
    song.q[static_cast<std::size_t>(t)] = q;

    FingertipFrame frame;
    frame.t = static_cast<double>(t) / cfg.rate_hz;
    frame.tips = forward_kinematics(spec, q);
    for (auto& tip : frame.tips) tip.y() += rng_jitter.uniform(-cfg.jitter_y, cfg.jitter_y);
    song.demo[static_cast<std::size_t>(t)] = frame;
  }
  return song;
}

PixelScene make_pixel_scene(const KeyGeometry& geom, const std::vector<FingertipFrame>& demo) {
  PixelScene scene;
  // A mildly perspective camera over the keyboard; w stays positive on the
  // whole key plane.
  scene.plane_to_pixel.H << 500.0, 40.0, 120.0,
                           -30.0, 760.0, 80.0,
                            0.15, 0.02, 1.0;

  for (int k : {0, 22, 44, 66, 87}) {
    const Key& key = geom.keys[static_cast<std::size_t>(k)];
    for (double x : {key.x_front, key.x_back}) {
      for (double s : {-0.5, 0.5}) {
        const Eigen::Vector2d plane(x, key.center_y + s * key.y_extent);
        scene.correspondences.push_back({scene.plane_to_pixel.apply(plane), plane});
      }
    }
  }

  scene.pixel_frames.reserve(demo.size());
  for (const auto& f : demo) {
    FingertipFrame pf;
    pf.t = f.t;
    for (int i = 0; i < kNumFingers; ++i) {
      const Eigen::Vector2d uv =
          scene.plane_to_pixel.apply(f.tips[static_cast<std::size_t>(i)].head<2>());
      pf.tips[static_cast<std::size_t>(i)] = Eigen::Vector3d(uv.x(), uv.y(), 0.0);
    }
    scene.pixel_frames.push_back(pf);
  }
  return scene;
}

void write_correspondences_csv(const std::string& path,
                               const std::vector<Correspondence>& corr) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "# u,v,x,y\n";
  char buf[160];
  for (const auto& c : corr) {
    std::snprintf(buf, sizeof buf, "%.9f,%.9f,%.9f,%.9f\n", c.pixel.x(), c.pixel.y(),
                  c.plane.x(), c.plane.y());
    out << buf;
  }
}

std::vector<Correspondence> read_correspondences_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<Correspondence> corr;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    Correspondence c;
    if (!(ss >> c.pixel.x() >> c.pixel.y() >> c.plane.x() >> c.plane.y()))
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected four comma-separated numbers");
    corr.push_back(c);
  }
  return corr;
}

}  // namespace pianomime
