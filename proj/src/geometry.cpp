#include "dfcr/geometry.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "dfcr/error.hpp"

namespace dfcr {

namespace {

constexpr double kInfinityTolerance = 1e-12;

Mat3 normalize_h33(const Mat3& h) {
  if (std::abs(h(2, 2)) > 1e-14) return h / h(2, 2);
  return h / h.norm();
}

// Isotropic normalization: centroid to origin, mean distance sqrt(2).
Mat3 hartley_transform(std::span<const Vec2> points) {
  Vec2 centroid = Vec2::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  double mean_dist = 0.0;
  for (const auto& p : points) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(points.size());
  if (mean_dist < 1e-15) {
    throw Error(ErrorCode::DegenerateConfiguration, "all points coincide");
  }
  const double s = std::sqrt(2.0) / mean_dist;
  Mat3 t;
  t << s, 0, -s * centroid.x(),
       0, s, -s * centroid.y(),
       0, 0, 1;
  return t;
}

}  // namespace

Homography::Homography() : h_(Mat3::Identity()) {}

Homography::Homography(const Mat3& h) {
  if (!h.allFinite()) throw Error(ErrorCode::InvalidArgument, "homography has non-finite entries");
  const double scale = h.cwiseAbs().maxCoeff();
  if (scale == 0.0 || std::abs((h / scale).determinant()) < 1e-14) {
    throw Error(ErrorCode::DegenerateConfiguration, "homography is singular");
  }
  h_ = normalize_h33(h);
}

Homography Homography::inverse() const { return Homography(h_.inverse()); }

Vec3 project_point(const Homography& hom, const Vec3& p) {
  const Vec3 q = hom.matrix() * p;
  if (std::abs(q.z()) < kInfinityTolerance) {
    throw Error(ErrorCode::PointAtInfinity, "projected point lies at infinity");
  }
  return q / q.z();
}

Vec2 project_point(const Homography& hom, const Vec2& p) {
  return project_point(hom, Vec3(p.x(), p.y(), 1.0)).head<2>();
}

HomographyEstimate estimate_homography(std::span<const PointCorrespondence> pairs) {
  if (pairs.size() < 4) {
    throw Error(ErrorCode::DegenerateConfiguration, "at least 4 correspondences are required");
  }
  std::vector<Vec2> src, dst;
  src.reserve(pairs.size());
  dst.reserve(pairs.size());
  for (const auto& c : pairs) {
    src.push_back(c.source);
    dst.push_back(c.target);
  }
  const Mat3 ts = hartley_transform(src);
  const Mat3 td = hartley_transform(dst);

  const auto n = static_cast<Eigen::Index>(pairs.size());
  Eigen::MatrixXd a(2 * n, 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec3 p = ts * Vec3(src[i].x(), src[i].y(), 1.0);
    const Vec3 q = td * Vec3(dst[i].x(), dst[i].y(), 1.0);
    const double x = p.x() / p.z(), y = p.y() / p.z();
    const double u = q.x() / q.z(), v = q.y() / q.z();
    a.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    a.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > 1e-10 * sv(0)) ++rank;
  }
  if (rank < 8) {
    throw Error(ErrorCode::DegenerateConfiguration, "design matrix is rank deficient");
  }
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Mat3 hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);

  HomographyEstimate est{Homography(td.inverse() * hn * ts), 0.0};
  double sq = 0.0;
  for (const auto& c : pairs) {
    sq += (project_point(est.homography, c.source) - c.target).squaredNorm();
  }
  est.reprojection_rms = std::sqrt(sq / static_cast<double>(pairs.size()));
  return est;
}

GaussianGate::GaussianGate(const Mat2& covariance, double accept_threshold)
    : covariance_(covariance), accept_threshold_(accept_threshold) {
  if (!covariance.allFinite() || std::abs(covariance(0, 1) - covariance(1, 0)) > 1e-12 * covariance.norm()) {
    throw Error(ErrorCode::InvalidArgument, "gate covariance must be finite and symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat2> eig(covariance);
  if (eig.eigenvalues().minCoeff() <= 0.0) {
    throw Error(ErrorCode::InvalidArgument, "gate covariance must be positive definite");
  }
  if (!(accept_threshold > 0.0 && accept_threshold < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "accept threshold must lie in (0,1)");
  }
  information_ = covariance.inverse();
}

GaussianGate GaussianGate::isotropic(double sigma, double accept_threshold) {
  return GaussianGate(Mat2::Identity() * sigma * sigma, accept_threshold);
}

double position_likelihood(const Vec2& expected, const Vec2& observed, const GaussianGate& gate) {
  const Vec2 d = observed - expected;
  return std::exp(-0.5 * d.dot(gate.information() * d));
}

std::size_t sector_map(const Vec2& point, const SectorGrid& grid) {
  if (grid.rows <= 0 || grid.cols <= 0 || !(grid.x1 > grid.x0) || !(grid.y1 > grid.y0)) {
    throw Error(ErrorCode::InvalidArgument, "sector grid is empty");
  }
  if (!(point.x() >= grid.x0 && point.x() <= grid.x1 && point.y() >= grid.y0 && point.y() <= grid.y1)) {
    throw Error(ErrorCode::OutOfFrame, "point lies outside the sector frame");
  }
  auto cell = [](double v, double lo, double hi, int count) {
    const double t = (v - lo) / (hi - lo) * count;
    // ceil(t) - 1 puts boundary values into the lower cell.
    int idx = static_cast<int>(std::ceil(t)) - 1;
    if (idx < 0) idx = 0;
    if (idx >= count) idx = count - 1;
    return idx;
  };
  const int col = cell(point.x(), grid.x0, grid.x1, grid.cols);
  const int row = cell(point.y(), grid.y0, grid.y1, grid.rows);
  return static_cast<std::size_t>(row * grid.cols + col);
}

double CameraModel::focal_px() const {
  const double half_fov = horizontal_fov_deg * std::numbers::pi / 360.0;
  return 0.5 * image_width / std::tan(half_fov);
}

Mat3 CameraModel::sea_to_image() const {
  const double f = focal_px();
  const double cx = 0.5 * image_width;
  const double cy = 0.5 * image_height;
  const double th = pitch_down_deg * std::numbers::pi / 180.0;
  const double c = std::cos(th), s = std::sin(th);
  const double h = mount_height_m;
  Mat3 m;
  m << f, cx * c, cx * h * s,
       0, -f * s + cy * c, f * h * c + cy * h * s,
       0, c, h * s;
  return m;
}

bool CameraModel::in_frame(const Vec2& pixel) const {
  return pixel.x() >= 0.0 && pixel.x() <= image_width && pixel.y() >= 0.0 && pixel.y() <= image_height;
}

ChartImageMap::ChartImageMap(const Homography& chart_to_image, const Vec2& reference_chart_point)
    : forward_(chart_to_image), backward_(chart_to_image.inverse()) {
  const Vec3 q = forward_.matrix() * Vec3(reference_chart_point.x(), reference_chart_point.y(), 1.0);
  if (std::abs(q.z()) < kInfinityTolerance) {
    throw Error(ErrorCode::PointAtInfinity, "reference point lies on the vanishing line");
  }
  forward_sign_ = q.z() > 0 ? 1.0 : -1.0;
  const Vec3 p = backward_.matrix() * (q / q.z());
  backward_sign_ = p.z() > 0 ? 1.0 : -1.0;
}

std::optional<Vec2> ChartImageMap::to_image(const Vec2& chart) const {
  const Vec3 q = forward_.matrix() * Vec3(chart.x(), chart.y(), 1.0);
  if (q.z() * forward_sign_ < kInfinityTolerance) return std::nullopt;
  return Vec2(q.x() / q.z(), q.y() / q.z());
}

std::optional<Vec2> ChartImageMap::to_chart(const Vec2& pixel) const {
  const Vec3 p = backward_.matrix() * Vec3(pixel.x(), pixel.y(), 1.0);
  if (p.z() * backward_sign_ < kInfinityTolerance) return std::nullopt;
  return Vec2(p.x() / p.z(), p.y() / p.z());
}

}  // namespace dfcr
