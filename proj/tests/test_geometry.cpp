#include <cmath>

#include "doctest.h"
#include "dfcr/core_model.hpp"
#include "dfcr/error.hpp"
#include "dfcr/geometry.hpp"
#include "dfcr/random.hpp"

using namespace dfcr;

namespace {

Mat3 random_invertible(Rng& rng) {
  Mat3 h;
  do {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) h(i, j) = (i == j ? 1.0 : 0.0) + uniform(rng, -0.3, 0.3);
  } while (std::abs(h.determinant()) < 0.2);
  return h;
}

// Plain multiply-and-normalize.
Vec3 oracle_project(const Mat3& h, const Vec3& p) {
  double q[3];
  for (int i = 0; i < 3; ++i) q[i] = h(i, 0) * p[0] + h(i, 1) * p[1] + h(i, 2) * p[2];
  return {q[0] / q[2], q[1] / q[2], 1.0};
}

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("identity and scaling") {
    const Vec3 p(3, 4, 1);
    CHECK((project_point(Homography::identity(), p) - p).norm() == 0.0);
    Mat3 s = Mat3::Identity();
    s(0, 0) = 2;
    s(1, 1) = 2;
    CHECK((project_point(Homography(s), p) - Vec3(6, 8, 1)).norm() == 0.0);
  }

  TEST_CASE("projection matches a direct multiply") {
    Rng rng(11);
    for (int t = 0; t < 200; ++t) {
      const Mat3 h = random_invertible(rng);
      const Vec3 p(uniform(rng, -5, 5), uniform(rng, -5, 5), 1.0);
      const Vec3 a = project_point(Homography(h), p);
      const Vec3 b = oracle_project(h, p);
      CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, b.norm()));
    }
  }

  TEST_CASE("point at infinity is reported") {
    // invertible, but (-1, 0) lands on w = 0
    Mat3 h = Mat3::Identity();
    h(2, 0) = 1.0;
    CHECK_THROWS_AS(project_point(Homography(h), Vec3(-1.0, 0.0, 1.0)), Error);
    try {
      project_point(Homography(h), Vec3(-1.0, 0.0, 1.0));
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::PointAtInfinity);
    }
  }

  TEST_CASE("inverse round trip") {
    Rng rng(12);
    for (int t = 0; t < 200; ++t) {
      const Homography h(random_invertible(rng));
      const Vec2 p(uniform(rng, -3, 3), uniform(rng, -3, 3));
      CHECK((project_point(h, project_point(h.inverse(), p)) - p).norm() < 1e-9);
    }
  }

  TEST_CASE("unit square identity estimate") {
    std::vector<PointCorrespondence> pairs{{{0, 0}, {0, 0}}, {{1, 0}, {1, 0}}, {{1, 1}, {1, 1}}, {{0, 1}, {0, 1}}};
    const auto est = estimate_homography(pairs);
    CHECK(est.reprojection_rms < 1e-9);
    CHECK((est.homography.matrix() / est.homography(2, 2) - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
  }

  TEST_CASE("known homography recovered up to scale") {
    Rng rng(13);
    for (int t = 0; t < 50; ++t) {
      const Mat3 h = random_invertible(rng);
      std::vector<PointCorrespondence> pairs;
      const int n = 4 + t % 5;
      for (int i = 0; i < n; ++i) {
        const Vec2 p(uniform(rng, -2, 2), uniform(rng, -2, 2));
        pairs.push_back({p, project_point(Homography(h), p)});
      }
      const auto est = estimate_homography(pairs);
      const Mat3 a = est.homography.matrix() / est.homography(2, 2);
      const Mat3 b = h / h(2, 2);
      CHECK((a - b).cwiseAbs().maxCoeff() < 1e-6);
      double worst = 0.0;
      for (const auto& c : pairs) worst = std::max(worst, (project_point(est.homography, c.source) - c.target).norm());
      CHECK(worst < 1e-6);
    }
  }

  TEST_CASE("too few or collinear correspondences are degenerate") {
    std::vector<PointCorrespondence> three{{{0, 0}, {0, 0}}, {{1, 0}, {1, 0}}, {{0, 1}, {0, 1}}};
    try {
      estimate_homography(three);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DegenerateConfiguration);
    }
    std::vector<PointCorrespondence> line{{{0, 0}, {0, 0}}, {{1, 1}, {1, 1}}, {{2, 2}, {2, 2}}, {{3, 3}, {3, 3}}};
    CHECK_THROWS_AS(estimate_homography(line), Error);
  }

  TEST_CASE("gaussian likelihood") {
    const GaussianGate unit(Mat2::Identity(), 0.2);
    CHECK(position_likelihood({1, 1}, {1, 1}, unit) == 1.0);
    CHECK(position_likelihood({0, 0}, {1, 0}, unit) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));

    Rng rng(14);
    for (int t = 0; t < 100; ++t) {
      const double sx = uniform(rng, 1, 60), sy = uniform(rng, 1, 60), r = uniform(rng, -0.8, 0.8);
      const double cov_xy = r * sx * sy;
      Mat2 cov;
      cov << sx * sx, cov_xy, cov_xy, sy * sy;
      const GaussianGate g(cov, 0.2);
      const double dx = uniform(rng, -50, 50), dy = uniform(rng, -50, 50);
      // explicit 2x2 inverse
      const double det = sx * sx * sy * sy - cov_xy * cov_xy;
      const double q = (sy * sy * dx * dx - 2 * cov_xy * dx * dy + sx * sx * dy * dy) / det;
      const double expect = std::exp(-0.5 * q);
      CHECK(std::abs(position_likelihood({0, 0}, {dx, dy}, g) - expect) < 1e-12);
      CHECK(position_likelihood({dx, dy}, {0, 0}, g) == doctest::Approx(expect).epsilon(1e-12));
    }
  }

  TEST_CASE("likelihood decreases along a ray") {
    const auto g = GaussianGate::isotropic(50.0, 0.2);
    Rng rng(15);
    for (int t = 0; t < 50; ++t) {
      const double a = uniform(rng, 0, 2 * std::numbers::pi);
      const Vec2 dir(std::cos(a), std::sin(a));
      double prev = 2.0;
      for (double k = 0.0; k < 200.0; k += 7.0) {
        const double l = position_likelihood({0, 0}, k * dir, g);
        CHECK(l < prev);
        prev = l;
      }
    }
  }

  TEST_CASE("gate boundary uses >=") {
    const auto g = GaussianGate::isotropic(50.0, 0.2);
    const double d = 50.0 * std::sqrt(-2.0 * std::log(0.2));
    CHECK(position_accepted({0, 0}, {std::nextafter(d, 0.0), 0}, g));
    CHECK_FALSE(position_accepted({0, 0}, {d * (1 + 1e-9), 0}, g));
    // exact boundary likelihood value is accepted
    const GaussianGate at(Mat2::Identity(), std::exp(-0.5));
    CHECK(position_accepted({0, 0}, {1, 0}, at));
  }

  TEST_CASE("sector examples and tie rule") {
    const SectorGrid g{2, 2, 0, 0, 1, 1};
    CHECK(sector_map({0.1, 0.1}, g) == 0);
    CHECK(sector_map({0.9, 0.9}, g) == 3);
    CHECK(sector_map({0.5, 0.5}, g) == 0);
    // boundary points go to the lowest-index closed cell that contains them
    for (double x : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      for (double y : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        std::size_t lowest = 99;
        for (int r = 1; r >= 0; --r)
          for (int c = 1; c >= 0; --c)
            if (x >= c * 0.5 && x <= (c + 1) * 0.5 && y >= r * 0.5 && y <= (r + 1) * 0.5)
              lowest = static_cast<std::size_t>(r * 2 + c);
        CHECK(sector_map({x, y}, g) == lowest);
      }
    }
    CHECK_THROWS_AS(sector_map({1.5, 0.5}, g), Error);
  }

  TEST_CASE("sectors partition the frame") {
    const SectorGrid g{6, 8, -100, 0, 100, 300};
    Rng rng(16);
    for (int t = 0; t < 2000; ++t) {
      const Vec2 p(uniform(rng, -100, 100), uniform(rng, 0, 300));
      const auto s = sector_map(p, g);
      REQUIRE(s < 48u);
      const int r = static_cast<int>(s) / 8, c = static_cast<int>(s) % 8;
      CHECK(p.x() >= -100 + c * 25.0);
      CHECK(p.x() <= -100 + (c + 1) * 25.0);
      CHECK(p.y() >= r * 50.0);
      CHECK(p.y() <= (r + 1) * 50.0);
    }
  }

  TEST_CASE("calibrated chart map agrees with the camera") {
    const SensorConfig cfg;
    const auto map = calibrate_chart_image_map(cfg);
    Rng rng(17);
    for (int t = 0; t < 100; ++t) {
      const Vec2 p(uniform(rng, -400, 400), uniform(rng, 100, 1000));
      const auto px = map.to_image(p);
      REQUIRE(px);
      const Vec3 q = cfg.camera.sea_to_image() * Vec3(p.x(), p.y(), 1.0);
      CHECK((*px - Vec2(q.x() / q.z(), q.y() / q.z())).norm() < 1e-6);
      const auto back = map.to_chart(*px);
      REQUIRE(back);
      CHECK((*back - p).norm() < 1e-6);
    }
    // behind the camera has no image point
    CHECK_FALSE(map.to_image({0, -300}).has_value());
    // above the horizon has no chart point
    CHECK_FALSE(map.to_chart({960, 100}).has_value());
  }
}
