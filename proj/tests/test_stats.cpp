#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "dfcr/error.hpp"
#include "dfcr/random.hpp"
#include "dfcr/stats.hpp"

using namespace dfcr;

namespace {

// Two-sided p over all 2^n sign patterns of the nonzero differences.
double enumerate_p(const std::vector<double>& a, const std::vector<double>& b, double* w_plus_out = nullptr) {
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) d.push_back(a[i] - b[i]);
  const std::size_t n = d.size();
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    double less = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(d[j]) < std::abs(d[i])) ++less;
      if (std::abs(d[j]) == std::abs(d[i])) ++equal;
    }
    rank[i] = less + (equal + 1) / 2.0;
  }
  double w = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (d[i] > 0) w += rank[i];
  if (w_plus_out) *w_plus_out = w;
  double lo = 0, hi = 0;
  for (std::uint32_t m = 0; m < (1u << n); ++m) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (m >> i & 1u) s += rank[i];
    if (s <= w + 1e-9) ++lo;
    if (s >= w - 1e-9) ++hi;
  }
  return std::min(1.0, 2.0 * std::min(lo, hi) / static_cast<double>(1u << n));
}

}  // namespace

TEST_SUITE("stats") {
  TEST_CASE("metric examples") {
    const std::vector<double> p{0.5, 0.5}, t{1, 1};
    const auto m = compute_metrics(p, t);
    CHECK(m.mse == 0.25);
    CHECK(m.mae == 0.5);
    CHECK(m.rmse == 0.5);
    const auto z = compute_metrics(t, t);
    CHECK(z.mse == 0.0);
    CHECK(z.rmse == 0.0);
    CHECK(z.mae == 0.0);
    CHECK(z.median_diff == 0.0);
    CHECK(z.range_diff == 0.0);
    CHECK(z.std_diff == 0.0);
    CHECK_THROWS_AS(compute_metrics(std::vector<double>{}, std::vector<double>{}), Error);
    CHECK_THROWS_AS(compute_metrics(p, std::vector<double>{1}), Error);
  }

  TEST_CASE("metrics match a two-pass reference") {
    Rng rng(81);
    for (int t = 0; t < 50; ++t) {
      std::vector<double> p(100), y(100);
      for (std::size_t i = 0; i < 100; ++i) {
        p[i] = uniform01(rng);
        y[i] = uniform01(rng) < 0.5 ? 0.0 : 1.0;
      }
      std::vector<double> ad(100);
      double se = 0, ae = 0;
      for (std::size_t i = 0; i < 100; ++i) {
        ad[i] = std::abs(p[i] - y[i]);
        se += ad[i] * ad[i];
        ae += ad[i];
      }
      const double mean = ae / 100.0;
      double var = 0;
      for (double v : ad) var += (v - mean) * (v - mean);
      var /= 100.0;
      auto sorted = ad;
      std::sort(sorted.begin(), sorted.end());
      const auto m = compute_metrics(p, y);
      CHECK(std::abs(m.mse - se / 100.0) < 1e-12);
      CHECK(std::abs(m.mae - mean) < 1e-12);
      CHECK(std::abs(m.rmse * m.rmse - m.mse) < 1e-12);
      CHECK(m.mae <= m.rmse + 1e-15);
      CHECK(std::abs(m.std_diff - std::sqrt(var)) < 1e-12);
      CHECK(std::abs(m.median_diff - 0.5 * (sorted[49] + sorted[50])) < 1e-12);
      CHECK(std::abs(m.range_diff - (sorted.back() - sorted.front())) < 1e-12);
    }
  }

  TEST_CASE("signed-rank examples") {
    const std::vector<double> a{1, 2, 3}, zero{0, 0, 0};
    const auto w = wilcoxon_signed_rank(a, zero);
    CHECK(w.p_value == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(w.method == WilcoxonMethod::Exact);
    CHECK(w.w_plus == 6.0);
    CHECK(w.statistic == 0.0);

    const std::vector<double> s{1, -1}, z2{0, 0};
    CHECK(wilcoxon_signed_rank(s, z2).p_value == 1.0);

    try {
      wilcoxon_signed_rank(a, a);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::AllZeroDifferences);
    }
    CHECK_THROWS_AS(wilcoxon_signed_rank(a, std::vector<double>{1, 2}), Error);
  }

  TEST_CASE("exact p equals full enumeration up to n = 12") {
    Rng rng(82);
    for (int trial = 0; trial < 100; ++trial) {
      const int n = static_cast<int>(uniform_int(rng, 1, 12));
      std::vector<double> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        // coarse values so ties and zero differences occur
        a[static_cast<std::size_t>(i)] = static_cast<double>(uniform_int(rng, 0, 8)) / 4.0;
        b[static_cast<std::size_t>(i)] = static_cast<double>(uniform_int(rng, 0, 8)) / 4.0;
      }
      bool any = false;
      for (int i = 0; i < n; ++i) any = any || a[static_cast<std::size_t>(i)] != b[static_cast<std::size_t>(i)];
      if (!any) continue;
      double wp = 0;
      const double p = enumerate_p(a, b, &wp);
      const auto r = wilcoxon_signed_rank(a, b, WilcoxonMethod::Exact);
      CHECK(std::abs(r.p_value - p) <= 1e-12);
      CHECK(r.w_plus == doctest::Approx(wp));
      CHECK(r.w_plus + r.w_minus == doctest::Approx(r.n_effective * (r.n_effective + 1) / 2.0));
    }
  }

  TEST_CASE("normal approximation agrees with exact at n = 25") {
    Rng rng(83);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> a(25), b(25);
      const double shift = uniform(rng, -0.5, 0.5);
      for (std::size_t i = 0; i < 25; ++i) {
        a[i] = normal(rng) + shift;
        b[i] = normal(rng);
      }
      const auto e = wilcoxon_signed_rank(a, b, WilcoxonMethod::Exact);
      const auto n = wilcoxon_signed_rank(a, b, WilcoxonMethod::NormalApproximation);
      CHECK(std::abs(e.p_value - n.p_value) <= 0.01);
    }
  }

  TEST_CASE("large samples use the approximation and stay close to exact") {
    Rng rng(84);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> a(30), b(30);
      for (std::size_t i = 0; i < 30; ++i) {
        a[i] = normal(rng) + 0.3;
        b[i] = normal(rng);
      }
      const auto auto_r = wilcoxon_signed_rank(a, b);
      CHECK(auto_r.method == WilcoxonMethod::NormalApproximation);
      const auto exact = wilcoxon_signed_rank(a, b, WilcoxonMethod::Exact);
      CHECK(std::abs(auto_r.p_value - exact.p_value) <= 0.01);
    }
  }

  TEST_CASE("exact p against published critical values") {
    // magnitudes 1..n with negatives chosen to sum to t, so min(W+, W-) = t
    auto p_at = [](int n, int t) {
      std::vector<double> a(n), b(n, 0.0);
      int left = t;
      for (int k = n; k >= 1; --k) {
        a[k - 1] = k;
        if (k <= left) {
          a[k - 1] = -k;
          left -= k;
        }
      }
      return wilcoxon_signed_rank(a, b, WilcoxonMethod::Exact).p_value;
    };
    // two-sided table: n=15 T(.05)=25 T(.01)=15; n=30 T(.05)=137 T(.01)=109
    CHECK(p_at(15, 25) <= 0.05);
    CHECK(p_at(15, 26) > 0.05);
    CHECK(p_at(15, 15) <= 0.01);
    CHECK(p_at(15, 16) > 0.01);
    CHECK(p_at(30, 137) <= 0.05);
    CHECK(p_at(30, 138) > 0.05);
    CHECK(p_at(30, 109) <= 0.01);
    CHECK(p_at(30, 110) > 0.01);
    CHECK(std::abs(p_at(15, 25) - 0.04791259765625) <= 1e-3);
    CHECK(std::abs(p_at(30, 137) - 0.0497101210) <= 1e-3);
    CHECK(std::abs(p_at(30, 109) - 0.0099315151) <= 1e-3);
  }
}
