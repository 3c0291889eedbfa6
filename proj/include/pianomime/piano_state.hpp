#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace pianomime {

inline constexpr int kNumKeys = 88;

// Key index k covers MIDI note k + 21 (A0..C8).
inline constexpr int kMidiBase = 21;

struct NoteEvent {
  int key = 0;        // 0..87
  double on = 0.0;    // seconds
  double off = 0.0;   // seconds
};

struct PedalEvent {
  double t = 0.0;
  bool down = false;
};

// Instantaneous piano state: one flag per key plus the sustain pedal.
struct PianoState {
  std::array<std::uint8_t, kNumKeys> keys{};
  std::uint8_t pedal = 0;

  bool any_pressed() const {
    for (auto k : keys)
      if (k) return true;
    return false;
  }

  bool operator==(const PianoState&) const = default;
};

struct PianoStateTrajectory {
  double rate_hz = 20.0;
  std::vector<PianoState> frames;

  std::size_t size() const { return frames.size(); }
  double time_of(std::size_t i) const { return static_cast<double>(i) / rate_hz; }
};

// Samples note and pedal events onto a fixed-rate grid. A key flag is 1 iff a
// note on that key is sounding at the frame start instant i / rate_hz, i.e.
// on <= t < off. Frame count is floor(last_event_time * rate_hz) + 1 plus the
// requested tail of empty frames.
PianoStateTrajectory discretize(const std::vector<NoteEvent>& events,
                                const std::vector<PedalEvent>& pedal,
                                double rate_hz, int tail_frames = 0);

// Goal window for frame t: states t+1 .. t+length, zero-padded past the end.
// t = -1 yields the window before the first frame (states 0 .. length-1).
std::vector<PianoState> goal_window(const PianoStateTrajectory& traj,
                                    long t, int length);

void write_trajectory_csv(const std::string& path, const PianoStateTrajectory& traj);
PianoStateTrajectory read_trajectory_csv(const std::string& path);

void write_trajectory_json(const std::string& path, const PianoStateTrajectory& traj);
PianoStateTrajectory read_trajectory_json(const std::string& path);

}  // namespace pianomime
