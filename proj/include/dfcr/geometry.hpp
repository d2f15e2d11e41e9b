#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include <Eigen/Dense>

namespace dfcr {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

/// Invertible 3x3 projective map between two planes.
///
/// Stored normalized so that h33 == 1 whenever h33 is not (numerically) zero.
class Homography {
 public:
  Homography();  // identity
  explicit Homography(const Mat3& h);

  static Homography identity() { return Homography(); }

  const Mat3& matrix() const { return h_; }
  double operator()(int row, int col) const { return h_(row, col); }

  Homography inverse() const;

 private:
  Mat3 h_;
};

/// Maps homogeneous p = (x, y, 1) through H and rescales so the third
/// coordinate is 1. Throws PointAtInfinity when |w| < 1e-12.
Vec3 project_point(const Homography& hom, const Vec3& p);

/// Convenience overload on inhomogeneous points.
Vec2 project_point(const Homography& hom, const Vec2& p);

struct PointCorrespondence {
  Vec2 source;
  Vec2 target;
};

struct HomographyEstimate {
  Homography homography;
  double reprojection_rms = 0.0;  // in target units
};

/// Normalized DLT (Hartley isotropic scaling on both point sets).
/// Throws DegenerateConfiguration for fewer than 4 pairs or a rank-deficient
/// design matrix.
HomographyEstimate estimate_homography(std::span<const PointCorrespondence> pairs);

/// Two-dimensional Gaussian agreement gate. The covariance is expressed in the
/// units of the frame that positions are compared in.
class GaussianGate {
 public:
  GaussianGate(const Mat2& covariance, double accept_threshold);

  /// Isotropic gate with standard deviation sigma along both axes.
  static GaussianGate isotropic(double sigma, double accept_threshold);

  const Mat2& covariance() const { return covariance_; }
  const Mat2& information() const { return information_; }
  double accept_threshold() const { return accept_threshold_; }

 private:
  Mat2 covariance_;
  Mat2 information_;
  double accept_threshold_;
};

/// Peak-normalized Gaussian: exp(-1/2 d^T S^-1 d), d = observed - expected.
/// Returns 1 at coincidence.
double position_likelihood(const Vec2& expected, const Vec2& observed, const GaussianGate& gate);

inline bool position_accepted(const Vec2& expected, const Vec2& observed, const GaussianGate& gate) {
  return position_likelihood(expected, observed, gate) >= gate.accept_threshold();
}

/// Regular rows x cols partition of an axis-aligned frame [x0,x1] x [y0,y1].
struct SectorGrid {
  int rows = 6;
  int cols = 8;
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 1.0;
  double y1 = 1.0;
};

/// Row-major sector index. Points on an internal boundary belong to the
/// lower-index sector. Throws OutOfFrame outside the closed frame.
std::size_t sector_map(const Vec2& point, const SectorGrid& grid);

/// Pinhole camera mounted above the sea surface, looking along +North and
/// pitched down. Maps local ENU sea-plane points (E, N) to image pixels.
struct CameraModel {
  int image_width = 1920;
  int image_height = 1080;
  double horizontal_fov_deg = 90.0;
  double mount_height_m = 20.0;
  double pitch_down_deg = 5.0;

  double focal_px() const;
  /// Exact sea-plane-to-image homography of this camera.
  Mat3 sea_to_image() const;
  bool in_frame(const Vec2& pixel) const;
};

/// Homography between the chart plane (local ENU meters) and the optical
/// image, with the side of the vanishing line that holds visible sea points.
///
/// Projection through a homography is only meaningful for points on the same
/// side of the vanishing line as the calibration data; the optional-returning
/// methods reject the rest.
class ChartImageMap {
 public:
  ChartImageMap(const Homography& chart_to_image, const Vec2& reference_chart_point);

  const Homography& chart_to_image() const { return forward_; }
  const Homography& image_to_chart() const { return backward_; }

  std::optional<Vec2> to_image(const Vec2& chart) const;
  std::optional<Vec2> to_chart(const Vec2& pixel) const;

 private:
  Homography forward_;
  Homography backward_;
  double forward_sign_;
  double backward_sign_;
};

}  // namespace dfcr
