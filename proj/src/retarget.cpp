#include "pianomime/retarget.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace pianomime {

std::vector<FingertipFrame> apply_homography_frames(const std::vector<FingertipFrame>& frames,
                                                    const Homography& pixel_to_plane) {
  std::vector<FingertipFrame> out(frames);
  for (auto& f : out) {
    for (auto& tip : f.tips) {
      const Eigen::Vector2d p = pixel_to_plane.apply(Eigen::Vector2d(tip.x(), tip.y()));
      tip.x() = p.x();
      tip.y() = p.y();
      tip.z() = 0.0;
    }
  }
  return out;
}

FrameAlignment align_frame(const std::array<Eigen::Vector3d, kNumFingers>& tips,
                           const PianoState& goal, const KeyGeometry& geom) {
  FrameAlignment out;
  out.tips = tips;

  struct Candidate {
    double dist;
    int key;
    int finger;
  };
  std::vector<Candidate> cands;
  for (int k = 0; k < kNumKeys; ++k) {
    if (!goal.keys[static_cast<std::size_t>(k)]) continue;
    // Eligibility window: the y-span of keys k-2 .. k+2.
    double lo = 1e30, hi = -1e30;
    for (int j = std::max(0, k - 2); j <= std::min(kNumKeys - 1, k + 2); ++j) {
      const Key& kj = geom.keys[static_cast<std::size_t>(j)];
      lo = std::min(lo, kj.center_y - 0.5 * kj.y_extent);
      hi = std::max(hi, kj.center_y + 0.5 * kj.y_extent);
    }
    const double cy = geom.keys[static_cast<std::size_t>(k)].center_y;
    for (int f = 0; f < kNumFingers; ++f) {
      const double y = tips[static_cast<std::size_t>(f)].y();
      if (y >= lo - 1e-9 && y <= hi + 1e-9) cands.push_back({std::abs(y - cy), k, f});
    }
  }

  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.dist, a.key, a.finger) < std::tie(b.dist, b.key, b.finger);
  });

  std::array<bool, kNumKeys> key_served{};
  std::array<bool, kNumFingers> finger_used{};
  for (const auto& c : cands) {
    if (key_served[static_cast<std::size_t>(c.key)] || finger_used[static_cast<std::size_t>(c.finger)])
      continue;
    key_served[static_cast<std::size_t>(c.key)] = true;
    finger_used[static_cast<std::size_t>(c.finger)] = true;
    out.tips[static_cast<std::size_t>(c.finger)].y() =
        geom.keys[static_cast<std::size_t>(c.key)].center_y;
    out.assignment[static_cast<std::size_t>(c.finger)] = c.key;
  }
  for (int k = 0; k < kNumKeys; ++k) {
    if (goal.keys[static_cast<std::size_t>(k)] && !key_served[static_cast<std::size_t>(k)])
      out.unserved.push_back(k);
  }
  return out;
}

AlignResult align_fingertips(const std::vector<FingertipFrame>& frames,
                             const PianoStateTrajectory& traj,
                             const KeyGeometry& geom) {
  if (frames.size() != traj.frames.size())
    throw std::invalid_argument("align_fingertips: " + std::to_string(frames.size()) +
                                " fingertip frames vs " + std::to_string(traj.frames.size()) +
                                " goal frames");

  AlignResult result;
  result.frames = frames;

  for (std::size_t i = 0; i < frames.size(); ++i) {
    const FrameAlignment fa = align_frame(frames[i].tips, traj.frames[i], geom);
    result.frames[i].tips = fa.tips;
    result.frames[i].press_assignment = fa.assignment;
    for (int k : fa.unserved) result.unserved.push_back({i, k});
  }
  return result;
}

std::vector<FingertipFrame> assign_z(const std::vector<FingertipFrame>& frames,
                                     const KeyGeometry& geom) {
  std::vector<FingertipFrame> out(frames);
  for (auto& f : out) {
    for (int i = 0; i < kNumFingers; ++i) {
      f.tips[static_cast<std::size_t>(i)].z() =
          f.press_assignment[static_cast<std::size_t>(i)] ? 0.0 : geom.hover_z();
    }
  }
  return out;
}

std::vector<FingertipFrame> read_fingertips_csv(const std::string& path, bool has_z) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);

  // Timestamps keyed by their printed form so grouping is exact.
  std::map<std::string, std::size_t> order;
  std::vector<FingertipFrame> frames;
  std::vector<std::array<bool, kNumFingers>> seen;

  std::string line;
  std::size_t lineno = 0;
  const std::size_t want = has_z ? 5 : 4;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != want)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected " +
                               std::to_string(want) + " columns, got " + std::to_string(cells.size()));
    const int finger = std::stoi(cells[1]);
    if (finger < 0 || finger >= kNumFingers)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": finger index out of range");

    auto [it, inserted] = order.try_emplace(cells[0], frames.size());
    if (inserted) {
      FingertipFrame f;
      f.t = std::stod(cells[0]);
      frames.push_back(f);
      seen.push_back({});
    }
    const std::size_t idx = it->second;
    if (seen[idx][static_cast<std::size_t>(finger)])
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": duplicate finger row");
    seen[idx][static_cast<std::size_t>(finger)] = true;
    auto& tip = frames[idx].tips[static_cast<std::size_t>(finger)];
    tip.x() = std::stod(cells[2]);
    tip.y() = std::stod(cells[3]);
    tip.z() = has_z ? std::stod(cells[4]) : 0.0;
  }
  for (std::size_t i = 0; i < frames.size(); ++i) {
    for (int f = 0; f < kNumFingers; ++f) {
      if (!seen[i][static_cast<std::size_t>(f)])
        throw std::runtime_error(path + ": frame at t=" + std::to_string(frames[i].t) +
                                 " missing finger " + std::to_string(f));
    }
  }
  std::stable_sort(frames.begin(), frames.end(),
                   [](const FingertipFrame& a, const FingertipFrame& b) { return a.t < b.t; });
  return frames;
}

void write_fingertips_csv(const std::string& path, const std::vector<FingertipFrame>& frames,
                          bool with_z) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  char buf[160];
  for (const auto& f : frames) {
    for (int i = 0; i < kNumFingers; ++i) {
      const auto& tip = f.tips[static_cast<std::size_t>(i)];
      if (with_z) {
        std::snprintf(buf, sizeof(buf), "%.6f,%d,%.9f,%.9f,%.9f\n", f.t, i, tip.x(), tip.y(), tip.z());
      } else {
        std::snprintf(buf, sizeof(buf), "%.6f,%d,%.9f,%.9f\n", f.t, i, tip.x(), tip.y());
      }
      out << buf;
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace pianomime
