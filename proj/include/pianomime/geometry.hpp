#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pianomime/common.hpp"
#include "pianomime/piano_state.hpp"

namespace pianomime {

// Coordinate frame: x points away from the player along the key length,
// y runs laterally along the keyboard (key 0 at low y), z points up.
// Key tops rest at top_z and travel down to z = 0 when fully depressed.

inline bool is_black_key(int key) {
  const int pc = (key + kMidiBase) % 12;
  return pc == 1 || pc == 3 || pc == 6 || pc == 8 || pc == 10;
}

struct Key {
  double center_y = 0.0;
  double y_extent = 0.0;  // full width of the pressable zone
  double x_front = 0.0;
  double x_back = 0.0;
  double top_z = 0.0;     // rest height of the key top
  bool black = false;

  // Pressable footprint. Zones of neighboring keys are disjoint so a
  // fingertip rests on at most one key.
  bool contains_xy(double x, double y) const {
    return x >= x_front && x <= x_back && std::abs(y - center_y) <= 0.5 * y_extent;
  }
};

struct KeyGeometry {
  std::vector<Key> keys;    // size 88, index order
  double h_key = 0.01;      // key cap height; demo hover height is 2 * h_key
  double white_pitch = 0.0235;

  double hover_z() const { return 2.0 * h_key; }

  // Axis-aligned box around all key footprints, used for spatial queries.
  BBox bounding_box() const;

  // Keys whose y-interval could contain the given y (at any x).
  std::vector<int> keys_near_y(double y, double slack) const;

  static KeyGeometry standard_piano();
};

}  // namespace pianomime
