#pragma once

#include <Eigen/Dense>
#include <span>
#include <stdexcept>
#include <vector>

namespace pianomime {

struct Correspondence {
  Eigen::Vector2d pixel;
  Eigen::Vector2d plane;
};

class HomographyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Plane-projective map. apply() throws HomographyError when the point maps
// to infinity (vanishing homogeneous coordinate).
struct Homography {
  Eigen::Matrix3d H = Eigen::Matrix3d::Identity();

  Eigen::Vector2d apply(const Eigen::Vector2d& p) const;
  Homography inverse() const;
};

struct HomographyEstimate {
  Homography map;                        // pixel -> plane
  double mean_reprojection_error = 0.0;  // in plane units
};

// Direct linear transform with Hartley normalization; least squares via SVD
// when more than four correspondences are given. Throws HomographyError for
// fewer than four correspondences or a degenerate configuration. The result
// is scaled so H(2,2) = 1 when that entry is well separated from zero, else
// to unit Frobenius norm with a deterministic sign.
HomographyEstimate estimate_homography(std::span<const Correspondence> corr);

}  // namespace pianomime
