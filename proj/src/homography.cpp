#include "pianomime/homography.hpp"

#include <cmath>

namespace pianomime {
namespace {

// Similarity transform moving the points to centroid zero and mean distance
// sqrt(2) from the origin (Hartley normalization).
Eigen::Matrix3d normalizer(std::span<const Correspondence> corr, bool pixel_side) {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& c : corr) centroid += pixel_side ? c.pixel : c.plane;
  centroid /= static_cast<double>(corr.size());

  double mean_dist = 0.0;
  for (const auto& c : corr) mean_dist += ((pixel_side ? c.pixel : c.plane) - centroid).norm();
  mean_dist /= static_cast<double>(corr.size());

  const double s = mean_dist > 1e-15 ? std::sqrt(2.0) / mean_dist : 1.0;
  Eigen::Matrix3d T = Eigen::Matrix3d::Identity();
  T(0, 0) = s;
  T(1, 1) = s;
  T(0, 2) = -s * centroid.x();
  T(1, 2) = -s * centroid.y();
  return T;
}

}  // namespace

Eigen::Vector2d Homography::apply(const Eigen::Vector2d& p) const {
  const Eigen::Vector3d q = H * Eigen::Vector3d(p.x(), p.y(), 1.0);
  const double scale = std::abs(H(2, 0) * p.x()) + std::abs(H(2, 1) * p.y()) + std::abs(H(2, 2));
  if (std::abs(q.z()) <= 1e-12 * (scale + 1e-300))
    throw HomographyError("point maps to infinity under homography");
  return Eigen::Vector2d(q.x() / q.z(), q.y() / q.z());
}

Homography Homography::inverse() const {
  if (std::abs(H.determinant()) < 1e-14 * std::pow(H.norm(), 3) + 1e-300)
    throw HomographyError("homography is not invertible");
  return Homography{H.inverse()};
}

HomographyEstimate estimate_homography(std::span<const Correspondence> corr) {
  const std::size_t n = corr.size();
  if (n < 4)
    throw HomographyError("need at least 4 correspondences, got " + std::to_string(n));

  const Eigen::Matrix3d Tp = normalizer(corr, true);
  const Eigen::Matrix3d Tq = normalizer(corr, false);

  Eigen::MatrixXd A(2 * n, 9);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d p = Tp * Eigen::Vector3d(corr[i].pixel.x(), corr[i].pixel.y(), 1.0);
    const Eigen::Vector3d q = Tq * Eigen::Vector3d(corr[i].plane.x(), corr[i].plane.y(), 1.0);
    const double u = p.x() / p.z(), v = p.y() / p.z();
    const double x = q.x() / q.z(), y = q.y() / q.z();
    A.row(2 * i) << -u, -v, -1, 0, 0, 0, u * x, v * x, x;
    A.row(2 * i + 1) << 0, 0, 0, -u, -v, -1, u * y, v * y, y;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  // With eight independent constraints the eighth singular value is well away
  // from zero; collinear or coincident points collapse it.
  if (sv(7) <= 1e-9 * sv(0))
    throw HomographyError("degenerate correspondence configuration");

  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d Hn;
  Hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);

  Eigen::Matrix3d H = Tq.inverse() * Hn * Tp;
  if (std::abs(H(2, 2)) > 1e-9 * H.norm()) {
    H /= H(2, 2);
  } else {
    H /= H.norm();
    // Fix the overall sign by making the largest-magnitude entry positive.
    Eigen::Index r, c;
    H.cwiseAbs().maxCoeff(&r, &c);
    if (H(r, c) < 0) H = -H;
  }

  HomographyEstimate est;
  est.map.H = H;
  double err = 0.0;
  for (const auto& cr : corr) err += (est.map.apply(cr.pixel) - cr.plane).norm();
  est.mean_reprojection_error = err / static_cast<double>(n);
  return est;
}

}  // namespace pianomime
