#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "pianomime/geometry.hpp"
#include "pianomime/hand_model.hpp"
#include "pianomime/homography.hpp"
#include "pianomime/piano_state.hpp"
#include "pianomime/retarget.hpp"

namespace pianomime {

// Corpus generator: seeded two-hand melodies rendered as (a) a Standard MIDI
// File, (b) the matching discretized goal trajectory, and (c) a fingertip
// demonstration obtained by posing the kinematic hand model over the keys
// and taking forward kinematics, so every demonstration is reachable by
// construction. Each hand plays one note at a time; the hands may overlap.

struct SynthNote {
  int hand = 0;    // 0 left, 1 right
  int key = 0;     // 0..87
  int finger = 0;  // 0..4 within the hand
  long on = 0;     // frames
  long off = 0;    // frames, exclusive
};

struct SynthConfig {
  double rate_hz = 20.0;
  int notes_per_hand = 6;
  long first_on = 2;     // frame of the earliest possible note start
  int min_len = 2;       // note length range in frames
  int max_len = 5;
  int min_gap = 2;       // frames between a note's release and the next start
  int max_gap = 6;
  int max_step = 5;      // random-walk step between consecutive keys
  int left_lo = 18, left_hi = 38;   // key ranges per hand, kept apart so
  int right_lo = 48, right_hi = 68; // fingers never contest the same keys
  double black_prob = 0.35;  // chance to keep a black key drawn by the walk
  double jitter_y = 0.0005;  // lateral measurement noise on demo fingertips
  int tail_frames = 2;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthSong {
  std::string id;
  std::vector<SynthNote> notes;
  std::vector<std::uint8_t> midi;
  PianoStateTrajectory song;
  std::vector<FingertipFrame> demo;  // keyboard-space fingertips, y-jittered
  std::vector<Eigen::VectorXd> q;    // ground-truth configuration per frame
};

SynthSong synthesize_song(const HandModelSpec& spec, const KeyGeometry& geom,
                          const SynthConfig& cfg, const std::string& id);

// Camera view of a demonstration: the keyboard plane seen through a fixed
// projective map, for exercising the homography path end to end.
struct PixelScene {
  Homography plane_to_pixel;
  std::vector<Correspondence> correspondences;  // pixel -> plane, key corners
  std::vector<FingertipFrame> pixel_frames;     // z dropped
};

PixelScene make_pixel_scene(const KeyGeometry& geom, const std::vector<FingertipFrame>& demo);

void write_correspondences_csv(const std::string& path,
                               const std::vector<Correspondence>& corr);
std::vector<Correspondence> read_correspondences_csv(const std::string& path);

}  // namespace pianomime
