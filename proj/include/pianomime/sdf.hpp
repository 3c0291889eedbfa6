#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "pianomime/geometry.hpp"
#include "pianomime/piano_state.hpp"

namespace pianomime {

// Representative point of a key: the center of its pressable footprint at
// rest height.
Eigen::Vector3d key_site(const KeyGeometry& geom, int key);

// Distance from x to the nearest pressed key site. States with no pressed
// key return d_empty (and set *empty if given); the distance is capped at
// d_empty so the function stays 1-Lipschitz across all states.
double piano_sdf(const Eigen::Vector3d& x, const PianoState& state, const KeyGeometry& geom,
                 double d_empty = 2.0, bool* empty = nullptr);

// Batch evaluation; results are written to indexed slots so the output is
// identical for any thread count.
std::vector<double> piano_sdf_batch(std::span<const Eigen::Vector3d> queries,
                                    const PianoState& state, const KeyGeometry& geom,
                                    double d_empty, int jobs);

// Sinusoidal positional features of a 3D point: per dimension d (normalized
// to [-1, 1] by the box), [sin(2^k pi x_d), cos(2^k pi x_d)] for
// k = 0..n_freq-1. Output size 6 * n_freq, ordered dimension-major.
Eigen::VectorXd positional_encoding(const Eigen::Vector3d& x, int n_freq, const BBox& box);

}  // namespace pianomime
