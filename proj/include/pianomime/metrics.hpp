#pragma once

#include <string>

#include "pianomime/piano_state.hpp"

namespace pianomime {

// Frame-level key press counts and derived scores. The pedal is excluded.
// Conventions for empty denominators: precision is 1 when no key was played,
// recall is 1 when no key was asked for, and F1 is 1 when both precision and
// recall are 1, else 0 when their sum is 0.
struct Metrics {
  long true_positives = 0;
  long false_positives = 0;
  long false_negatives = 0;
  double precision = 1.0;
  double recall = 1.0;
  double f1 = 1.0;
};

// Compares a played trajectory against the goal cell by cell (frame x key).
// The trajectories must have equal frame counts.
Metrics compute_metrics(const PianoStateTrajectory& played, const PianoStateTrajectory& goal);

void write_metrics_json(const std::string& path, const Metrics& m);

}  // namespace pianomime
