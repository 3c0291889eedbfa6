#include "pianomime/sdf.hpp"

#include <cmath>
#include <stdexcept>

#include "pianomime/parallel.hpp"

namespace pianomime {

Eigen::Vector3d key_site(const KeyGeometry& geom, int key) {
  if (key < 0 || key >= static_cast<int>(geom.keys.size()))
    throw std::invalid_argument("key_site: key index out of range");
  const Key& k = geom.keys[static_cast<std::size_t>(key)];
  return Eigen::Vector3d(0.5 * (k.x_front + k.x_back), k.center_y, k.top_z);
}

double piano_sdf(const Eigen::Vector3d& x, const PianoState& state, const KeyGeometry& geom,
                 double d_empty, bool* empty) {
  double best = d_empty;
  bool any = false;
  for (int k = 0; k < kNumKeys; ++k) {
    if (!state.keys[static_cast<std::size_t>(k)]) continue;
    any = true;
    best = std::min(best, (x - key_site(geom, k)).norm());
  }
  if (empty) *empty = !any;
  return best;
}

std::vector<double> piano_sdf_batch(std::span<const Eigen::Vector3d> queries,
                                    const PianoState& state, const KeyGeometry& geom,
                                    double d_empty, int jobs) {
  std::vector<double> out(queries.size());
  parallel_for(queries.size(), jobs,
               [&](std::size_t i) { out[i] = piano_sdf(queries[i], state, geom, d_empty); });
  return out;
}

Eigen::VectorXd positional_encoding(const Eigen::Vector3d& x, int n_freq, const BBox& box) {
  if (n_freq < 1) throw std::invalid_argument("positional_encoding: n_freq must be >= 1");
  Eigen::VectorXd out(6 * n_freq);
  int at = 0;
  for (int d = 0; d < 3; ++d) {
    const double span = box.hi[d] - box.lo[d];
    const double xn = span > 0 ? 2.0 * (x[d] - box.lo[d]) / span - 1.0 : 0.0;
    for (int k = 0; k < n_freq; ++k) {
      const double arg = std::ldexp(1.0, k) * M_PI * xn;
      out[at++] = std::sin(arg);
      out[at++] = std::cos(arg);
    }
  }
  return out;
}

}  // namespace pianomime
