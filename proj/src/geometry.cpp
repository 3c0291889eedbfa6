#include "pianomime/geometry.hpp"

#include <algorithm>

namespace pianomime {

KeyGeometry KeyGeometry::standard_piano() {
  KeyGeometry g;
  g.h_key = 0.01;
  g.white_pitch = 0.0235;
  g.keys.resize(kNumKeys);

  // White keys tile the y axis; a black key is centered on the boundary
  // between its two neighboring whites. The x zones keep white and black
  // footprints disjoint: whites are pressed near the front of the key,
  // blacks further back.
  int white_index = 0;
  for (int k = 0; k < kNumKeys; ++k) {
    Key& key = g.keys[static_cast<std::size_t>(k)];
    key.black = is_black_key(k);
    key.top_z = 0.008;
    if (key.black) {
      key.center_y = static_cast<double>(white_index) * g.white_pitch;
      key.y_extent = 0.011;
      key.x_front = 0.075;
      key.x_back = 0.115;
    } else {
      key.center_y = (static_cast<double>(white_index) + 0.5) * g.white_pitch;
      key.y_extent = 0.0225;
      key.x_front = 0.02;
      key.x_back = 0.07;
      ++white_index;
    }
  }
  return g;
}

BBox KeyGeometry::bounding_box() const {
  BBox box;
  box.lo = Eigen::Vector3d(1e30, 1e30, 0.0);
  box.hi = Eigen::Vector3d(-1e30, -1e30, 0.0);
  for (const auto& k : keys) {
    box.lo.x() = std::min(box.lo.x(), k.x_front);
    box.hi.x() = std::max(box.hi.x(), k.x_back);
    box.lo.y() = std::min(box.lo.y(), k.center_y - 0.5 * k.y_extent);
    box.hi.y() = std::max(box.hi.y(), k.center_y + 0.5 * k.y_extent);
    box.hi.z() = std::max(box.hi.z(), k.top_z);
  }
  return box;
}

std::vector<int> KeyGeometry::keys_near_y(double y, double slack) const {
  std::vector<int> out;
  for (int k = 0; k < static_cast<int>(keys.size()); ++k) {
    const Key& key = keys[static_cast<std::size_t>(k)];
    if (std::abs(y - key.center_y) <= 0.5 * key.y_extent + slack) out.push_back(k);
  }
  return out;
}

}  // namespace pianomime
