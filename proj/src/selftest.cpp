#include "dfcr/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "dfcr/ais_wire.hpp"
#include "dfcr/confidence.hpp"
#include "dfcr/detector_sim.hpp"
#include "dfcr/error.hpp"
#include "dfcr/geometry.hpp"
#include "dfcr/random.hpp"
#include "dfcr/stats.hpp"

namespace dfcr {

namespace {

bool check_confidence() {
  const DeltaConfig d{{0.4, 0.3, 0.3}};
  for (int i = 0; i <= 10; ++i) {
    for (int code = 0; code < 27; ++code) {
      const std::array<int, 3> s{code % 3 - 1, code / 3 % 3 - 1, code / 9 - 1};
      double c = i / 10.0;
      for (int k = 0; k < 3; ++k) {
        c += d.delta[k] * s[k];
        if (c > 1.0) c = 1.0;
        if (c < 0.0) c = 0.0;
      }
      if (adjust_confidence(i / 10.0, s, d).final_score != c) return false;
    }
  }
  return true;
}

bool check_gradient(Rng& rng) {
  ToyDetectorParams p;
  p.window_w = 4;
  p.window_h = 3;
  p.weights.resize(12);
  for (auto& w : p.weights) w = normal(rng, 0.0, 2.0);
  p.bias = normal(rng);
  RasterImage img(8, 6);
  for (auto& v : img.data()) v = uniform(rng, 0.0, 255.0);
  const WindowId t{1, 1};
  const RasterImage g = toy_optical_gradient(img, p, t);
  const double h = 1e-4;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      RasterImage a = img, b = img;
      a.at(x, y) += h;
      b.at(x, y) -= h;
      const double fd = (toy_optical_forward(a, p).at(t.row, t.col) - toy_optical_forward(b, p).at(t.row, t.col)) / (2 * h);
      const double an = g.at(x, y);
      if (std::abs(an - fd) > 1e-5 * std::max(std::abs(fd), 1e-8) + 1e-12) return false;
    }
  }
  return true;
}

bool check_homography(Rng& rng) {
  Mat3 h;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) h(i, j) = (i == j ? 1.0 : 0.0) + uniform(rng, -0.2, 0.2);
  const Homography truth(h);
  std::vector<PointCorrespondence> pairs;
  for (int i = 0; i < 6; ++i) {
    const Vec2 p(uniform(rng, -10, 10), uniform(rng, -10, 10));
    pairs.push_back({p, project_point(truth, p)});
  }
  const auto est = estimate_homography(pairs);
  return est.reprojection_rms < 1e-6 && (est.homography.matrix() - truth.matrix()).cwiseAbs().maxCoeff() < 1e-6;
}

bool check_wilcoxon(Rng& rng) {
  for (int n = 1; n <= 10; ++n) {
    std::vector<double> a(n), b(n, 0.0);
    for (auto& v : a) v = static_cast<double>(uniform_int(rng, -4, 4)) + (uniform01(rng) < 0.5 ? 0.5 : 0.0);
    for (auto& v : a)
      if (v == 0.0) v = 1.0;
    const auto w = wilcoxon_signed_rank(a, b, WilcoxonMethod::Exact);
    // brute force over sign patterns of |a| with the same midranks
    std::vector<double> mag(n);
    for (int i = 0; i < n; ++i) mag[i] = std::abs(a[i]);
    std::vector<double> rank(n);
    for (int i = 0; i < n; ++i) {
      double less = 0, equal = 0;
      for (int j = 0; j < n; ++j) {
        if (mag[j] < mag[i]) ++less;
        if (mag[j] == mag[i]) ++equal;
      }
      rank[i] = less + (equal + 1) / 2.0;
    }
    double lo = 0, hi = 0;
    for (int m = 0; m < (1 << n); ++m) {
      double wp = 0;
      for (int i = 0; i < n; ++i)
        if (m >> i & 1) wp += rank[i];
      if (wp <= w.w_plus + 1e-9) ++lo;
      if (wp >= w.w_plus - 1e-9) ++hi;
    }
    const double p = std::min(1.0, 2.0 * std::min(lo, hi) / (1 << n));
    if (std::abs(p - w.p_value) > 1e-12) return false;
  }
  return true;
}

bool check_ais(Rng& rng) {
  for (int i = 0; i < 100; ++i) {
    ais::AisMessage m;
    m.mmsi = static_cast<std::uint32_t>(uniform_int(rng, 0, 999999999));
    if (i % 2) {
      m.msg_type = 5;
      m.ship_type = static_cast<int>(uniform_int(rng, 0, 99));
      m.dim_to_bow = static_cast<int>(uniform_int(rng, 0, 511));
      m.dim_to_stern = static_cast<int>(uniform_int(rng, 0, 511));
      m.dim_to_port = static_cast<int>(uniform_int(rng, 0, 63));
      m.dim_to_starboard = static_cast<int>(uniform_int(rng, 0, 63));
      m.name = "TEST " + std::to_string(i);
    } else {
      m.msg_type = 1;
      m.latitude_deg = uniform(rng, -90, 90);
      m.longitude_deg = uniform(rng, -180, 180);
      m.sog_knots = uniform(rng, 0, 100);
      m.cog_deg = uniform(rng, 0, 359.9);
    }
    const auto q = ais::quantized(m);
    auto sentences = ais::synthesize_spoof(q);
    if (!(ais::parse_aivdm(sentences) == q)) return false;
    sentences[0].armored_payload[0] = sentences[0].armored_payload[0] == '0' ? '1' : '0';
    try {
      (void)ais::parse_aivdm(sentences);
      return false;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ChecksumMismatch) return false;
    }
  }
  return true;
}

}  // namespace

bool run_self_test(std::ostream& out, std::uint64_t seed) {
  Rng rng(seed);
  struct Check {
    const char* name;
    std::function<bool()> fn;
  };
  const std::vector<Check> checks{
      {"confidence update vs transcription", check_confidence},
      {"toy gradient vs finite differences", [&] { return check_gradient(rng); }},
      {"homography recovery", [&] { return check_homography(rng); }},
      {"signed-rank exact p vs enumeration", [&] { return check_wilcoxon(rng); }},
      {"AIS round trip and checksum", [&] { return check_ais(rng); }},
  };
  bool all = true;
  for (const auto& c : checks) {
    bool ok = false;
    try {
      ok = c.fn();
    } catch (const std::exception& e) {
      out << "  error: " << e.what() << '\n';
    }
    out << (ok ? "PASS " : "FAIL ") << c.name << '\n';
    all = all && ok;
  }
  return all;
}

}  // namespace dfcr
