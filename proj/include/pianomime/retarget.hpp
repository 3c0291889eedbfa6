#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "pianomime/geometry.hpp"
#include "pianomime/homography.hpp"
#include "pianomime/piano_state.hpp"

namespace pianomime {

inline constexpr int kNumFingers = 10;

// One time sample of all ten fingertips, ordered left thumb..pinky then
// right thumb..pinky. press_assignment[i] holds the key index fingertip i is
// committed to pressing at this frame, if any.
struct FingertipFrame {
  double t = 0.0;
  std::array<Eigen::Vector3d, kNumFingers> tips{};
  std::array<std::optional<int>, kNumFingers> press_assignment{};
};

// Maps pixel-space fingertip tracks (u, v in tips x/y, z ignored) onto the
// keyboard plane.
std::vector<FingertipFrame> apply_homography_frames(const std::vector<FingertipFrame>& frames,
                                                    const Homography& pixel_to_plane);

struct UnservedKey {
  std::size_t frame = 0;
  int key = 0;
};

struct AlignResult {
  std::vector<FingertipFrame> frames;
  std::vector<UnservedKey> unserved;  // pressed keys no fingertip could serve
};

struct FrameAlignment {
  std::array<Eigen::Vector3d, kNumFingers> tips{};
  std::array<std::optional<int>, kNumFingers> assignment{};
  std::vector<int> unserved;
};

// Single-frame lateral alignment (the rule described at align_fingertips):
// snaps the y coordinate of the serving fingertip to each pressed key's
// center. x and z are left untouched.
FrameAlignment align_frame(const std::array<Eigen::Vector3d, kNumFingers>& tips,
                           const PianoState& goal, const KeyGeometry& geom);

// Lateral alignment heuristic: for every frame and every key pressed in the
// goal trajectory, the nearest eligible fingertip (by |y - key center|) is
// snapped to the key center. A fingertip is eligible when its y coordinate
// falls inside the footprint of any key within two key indices of the goal
// key. Each fingertip serves at most one key per frame; ties break toward
// the lower key then the lower finger index. Keys left unserved are
// reported, never silently dropped. frames and traj must be time-aligned at
// the same rate (equal lengths).
AlignResult align_fingertips(const std::vector<FingertipFrame>& frames,
                             const PianoStateTrajectory& traj,
                             const KeyGeometry& geom);

// Height assignment: fingertips committed to a key descend to the pressed
// height z = 0, all others hold the hover height 2 * h_key.
std::vector<FingertipFrame> assign_z(const std::vector<FingertipFrame>& frames,
                                     const KeyGeometry& geom);

// CSV row format: t,finger,x,y[,z]. Rows for one timestamp must cover all
// ten fingers.
std::vector<FingertipFrame> read_fingertips_csv(const std::string& path, bool has_z);
void write_fingertips_csv(const std::string& path, const std::vector<FingertipFrame>& frames,
                          bool with_z);

}  // namespace pianomime
