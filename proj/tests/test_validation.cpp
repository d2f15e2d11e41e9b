#include <cmath>
#include <functional>
#include <set>

#include "doctest.h"
#include "dfcr/error.hpp"
#include "dfcr/random.hpp"
#include "dfcr/validation.hpp"
#include "fixtures.hpp"

using namespace dfcr;

namespace {

// Best partition by exhaustive search: groups hold distinct sensors and are
// connected through gated pairs; score = gated pairs inside groups.
std::set<std::vector<std::size_t>> brute_force_groups(const std::vector<DetectionVector>& dets,
                                                      const FusionContext& ctx) {
  const std::size_t n = dets.size();
  auto gated = [&](std::size_t i, std::size_t j) {
    const auto a = chart_position(dets[i], ctx.map), b = chart_position(dets[j], ctx.map);
    return dets[i].sensor != dets[j].sensor && a && b && position_accepted(*a, *b, ctx.gate);
  };
  std::vector<std::size_t> label(n, 0);
  int best_score = -1;
  std::set<std::vector<std::size_t>> best;
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t used) {
    if (i == n) {
      std::vector<std::vector<std::size_t>> groups(used);
      for (std::size_t k = 0; k < n; ++k) groups[label[k]].push_back(k);
      int score = 0;
      for (const auto& g : groups) {
        std::set<int> sensors;
        for (auto m : g) sensors.insert(static_cast<int>(dets[m].sensor));
        if (sensors.size() != g.size()) return;
        // connectivity through gated pairs
        std::vector<bool> seen(g.size(), false);
        std::vector<std::size_t> stack{0};
        seen[0] = true;
        while (!stack.empty()) {
          const auto x = stack.back();
          stack.pop_back();
          for (std::size_t y = 0; y < g.size(); ++y)
            if (!seen[y] && gated(g[x], g[y])) {
              seen[y] = true;
              stack.push_back(y);
            }
        }
        for (bool s : seen)
          if (!s) return;
        for (std::size_t x = 0; x < g.size(); ++x)
          for (std::size_t y = x + 1; y < g.size(); ++y) score += gated(g[x], g[y]) ? 1 : 0;
      }
      if (score > best_score) {
        best_score = score;
        best.clear();
        for (auto& g : groups) best.insert(g);
      }
      return;
    }
    for (std::size_t l = 0; l <= used; ++l) {
      label[i] = l;
      rec(i + 1, std::max(used, l + 1));
    }
  };
  rec(0, 0);
  return best;
}

double grid_oracle(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels, double c) {
  double best = 1e300, bw0 = 0, bw1 = 0, bb = 0;
  double span = 4.0;
  for (int level = 0; level < 6; ++level) {
    const double cw0 = bw0, cw1 = bw1, cb = bb;
    for (int i = -20; i <= 20; ++i)
      for (int j = -20; j <= 20; ++j)
        for (int k = -20; k <= 20; ++k) {
          const std::vector<double> w{cw0 + span * i / 20.0, cw1 + span * j / 20.0};
          const double b = cb + span * k / 20.0;
          const double o = svm_objective(w, b, c, rows, labels);
          if (o < best) {
            best = o;
            bw0 = w[0];
            bw1 = w[1];
            bb = b;
          }
        }
    span /= 5.0;
  }
  return best;
}

}  // namespace

TEST_SUITE("validation") {
  TEST_CASE("coincident AIS and radar form one record") {
    const auto ctx = fx::context();
    std::vector<DetectionVector> d{fx::ais({0, 1200}, 0.8), fx::radar({0, 1200}, 0.7)};
    fx::renumber(d);
    const auto r = associate_contacts(d, ctx);
    REQUIRE(r.size() == 1);
    CHECK(r[0].members == std::vector<std::size_t>{0, 1});
    CHECK(r[0].position_score == 1.0);
  }

  TEST_CASE("spoofed AIS with no radar stays alone") {
    const auto ctx = fx::context();
    std::vector<DetectionVector> d{fx::ais({100, 900}, 0.9), fx::radar({-300, 600}, 0.7)};
    fx::renumber(d);
    const auto r = associate_contacts(d, ctx);
    REQUIRE(r.size() == 2);
    CHECK(r[0].members.size() == 1);
  }

  TEST_CASE("three gated sensors form one record, as brute force agrees") {
    const auto ctx = fx::context();
    std::vector<DetectionVector> d{fx::ais({10, 500}, 0.8), fx::radar({0, 505}, 0.7), fx::optical(ctx, {-5, 498}, 0.9)};
    fx::renumber(d);
    const auto r = associate_contacts(d, ctx);
    REQUIRE(r.size() == 1);
    CHECK(r[0].members.size() == 3);
    CHECK(brute_force_groups(d, ctx) == std::set<std::vector<std::size_t>>{{0, 1, 2}});
  }

  TEST_CASE("greedy matches brute force on separated clusters") {
    const auto ctx = fx::context();
    Rng rng(41);
    for (int t = 0; t < 200; ++t) {
      std::vector<DetectionVector> d;
      const int clusters = static_cast<int>(uniform_int(rng, 1, 2));
      for (int c = 0; c < clusters; ++c) {
        const Vec2 centre(uniform(rng, -300, 300) + c * 700.0 - 350.0, uniform(rng, 300, 900));
        auto jitter = [&] { return centre + Vec2(normal(rng, 0, 8), normal(rng, 0, 8)); };
        if (uniform01(rng) < 0.7) d.push_back(fx::ais(jitter(), 0.8));
        if (uniform01(rng) < 0.7) d.push_back(fx::radar(jitter(), 0.7));
        if (uniform01(rng) < 0.7 && ctx.expected(SensorKind::Optical, centre)) d.push_back(fx::optical(ctx, jitter(), 0.8));
      }
      if (d.empty() || d.size() > 4) continue;
      fx::renumber(d);
      std::set<std::vector<std::size_t>> got;
      for (const auto& r : associate_contacts(d, ctx)) got.insert(r.members);
      CHECK(got == brute_force_groups(d, ctx));
    }
  }

  TEST_CASE("association is a partial matching") {
    const auto ctx = fx::context();
    Rng rng(42);
    for (int t = 0; t < 200; ++t) {
      std::vector<DetectionVector> d;
      const int n = static_cast<int>(uniform_int(rng, 0, 12));
      for (int i = 0; i < n; ++i) {
        const Vec2 p(uniform(rng, -200, 200), uniform(rng, 300, 700));
        switch (uniform_int(rng, 0, 2)) {
          case 0: d.push_back(fx::ais(p, 0.8)); break;
          case 1: d.push_back(fx::radar(p, 0.8)); break;
          default: d.push_back(fx::optical(ctx, p, 0.8)); break;
        }
      }
      fx::renumber(d);
      std::vector<int> seen(d.size(), 0);
      for (const auto& r : associate_contacts(d, ctx)) {
        std::set<int> sensors;
        for (auto m : r.members) {
          ++seen[m];
          sensors.insert(static_cast<int>(d[m].sensor));
        }
        CHECK(sensors.size() == r.members.size());
      }
      for (int s : seen) CHECK(s == 1);
    }
  }

  TEST_CASE("multisensor pass") {
    const auto ctx = fx::context();
    std::vector<DetectionVector> d{fx::ais({0, 500}, 0.8), fx::radar({0, 500}, 0.7), fx::optical(ctx, {0, 500}, 0.9),
                                   fx::ais({400, 1300}, 0.9)};
    fx::renumber(d);
    const auto recs = associate_contacts(d, ctx);
    REQUIRE(recs.size() == 2);
    CHECK(multisensor_pass(recs[0], d, ctx) == 1);
    CHECK(multisensor_pass(recs[1], d, ctx) == -1);  // lone AIS inside radar range

    // optical contact beyond radar range expects no corroboration
    auto near_radar = ctx;
    near_radar.radar_range_m = 300.0;
    std::vector<DetectionVector> o{fx::optical(ctx, {0, 600}, 0.8)};
    fx::renumber(o);
    const auto ro = associate_contacts(o, near_radar);
    CHECK(multisensor_pass(ro[0], o, near_radar) == 1);
    CHECK(position_pass(ro[0], o, near_radar) == 0);
    CHECK(metadata_pass(ro[0], o, near_radar, default_metadata_svm()) == 0);
  }

  TEST_CASE("position pass") {
    const auto ctx = fx::context();
    std::vector<DetectionVector> d{fx::ais({0, 500}, 0.8), fx::radar({0, 500}, 0.7)};
    fx::renumber(d);
    auto r = associate_contacts(d, ctx);
    CHECK(position_pass(r[0], d, ctx) == 1);

    // hand-built record straddling the gate boundary
    const double edge = 50.0 * std::sqrt(-2.0 * std::log(0.2));
    MatchRecord rec;
    rec.members = {0, 1};
    rec.positions = {Vec2(0, 500), Vec2(std::nextafter(edge, 0.0), 500)};
    CHECK(position_pass(rec, d, ctx) == 1);
    rec.positions[1] = Vec2(edge * (1 + 1e-9), 500);
    CHECK(position_pass(rec, d, ctx) == -1);
    rec.positions[1] = Vec2(300, 500);
    CHECK(position_pass(rec, d, ctx) == -1);
  }

  TEST_CASE("metadata matrix") {
    const auto ctx = fx::context();
    std::vector<DetectionVector> d{fx::ais({0, 500}, 0.8, 200, 50, 20, 20), fx::radar({0, 500}, 0.7, 240, 40),
                                   fx::ais({300, 900}, 0.9, 200, 50, 20, 20), fx::radar({300, 900}, 0.8, 3, 3),
                                   fx::optical(ctx, {-300, 400}, 0.8)};
    fx::renumber(d);
    const auto recs = associate_contacts(d, ctx);
    REQUIRE(recs.size() == 3);
    const auto m = build_metadata_matrix(recs, d);
    REQUIRE(m.rows.size() == 2);
    CHECK(m.rows[0][4] == 10.0);
    CHECK(m.rows[1][4] == 247.0);
    CHECK(m.applicable == std::vector<bool>{true, true, false});

    const auto svm = default_metadata_svm();
    CHECK(metadata_pass(recs[0], d, ctx, svm) == 1);
    CHECK(metadata_pass(recs[1], d, ctx, svm) == -1);
    // optical alone where radar should have seen it
    CHECK(metadata_pass(recs[2], d, ctx, svm) == -1);
  }

  TEST_CASE("svm symmetric pair") {
    const std::vector<std::vector<double>> rows{{1, 0}, {-1, 0}};
    const std::vector<int> labels{1, -1};
    SvmTrainConfig cfg;
    cfg.c = 10.0;
    cfg.standardize = false;
    const auto res = train_svm(rows, labels, cfg);
    CHECK(std::abs(res.model.bias) < 1e-6);
    CHECK(std::abs(res.model.weights[1]) < 1e-6);
    CHECK(res.model.weights[0] > 0.0);
    // max-margin solution is w = (1, 0), b = 0
    CHECK(res.objective == doctest::Approx(grid_oracle(rows, labels, 10.0)).epsilon(0.01));
    CHECK(svm_decide(res.model, std::vector<double>{1, 0}) == 1);
    CHECK(svm_decide(res.model, std::vector<double>{-1, 0}) == -1);
  }

  TEST_CASE("vanishing C shrinks the weights") {
    const std::vector<std::vector<double>> rows{{2, 1}, {3, 2}, {-2, -1}, {-3, 0}};
    const std::vector<int> labels{1, 1, -1, -1};
    SvmTrainConfig cfg;
    cfg.standardize = false;
    double prev = 1e300;
    for (double c : {1.0, 1e-2, 1e-4, 1e-6}) {
      cfg.c = c;
      const auto m = train_svm(rows, labels, cfg).model;
      const double norm = std::hypot(m.weights[0], m.weights[1]);
      CHECK(norm <= prev + 1e-12);
      prev = norm;
    }
    CHECK(prev < 1e-4);
  }

  TEST_CASE("svm objective trends down") {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    generate_metadata_training({60, 60, 3}, rows, labels);
    SvmTrainConfig cfg;
    cfg.c = 1.0;
    cfg.batch_size = 16;
    cfg.seed = 5;
    const auto res = train_svm(rows, labels, cfg);
    const auto& h = res.objective_history;
    REQUIRE(h.size() >= 20);
    auto avg = [&](std::size_t end) {
      double s = 0;
      for (std::size_t k = end - 10; k < end; ++k) s += h[k];
      return s / 10.0;
    };
    for (std::size_t e = 20; e <= h.size(); e += 10) CHECK(avg(e) <= avg(e - 10) * (1 + 1e-9));
  }

  TEST_CASE("metadata training set is learnable") {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    generate_metadata_training({200, 200, 7}, rows, labels);
    const auto model = default_metadata_svm();
    int correct = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) correct += svm_decide_raw(model, rows[i]) == labels[i];
    CHECK(correct == static_cast<int>(rows.size()));
  }

  TEST_CASE("svm decide and errors") {
    SvmModel m;
    m.weights = {1, 0, 0};
    CHECK(svm_decide(m, std::vector<double>{2, 0, 0}) == 1);
    CHECK(svm_decide(m, std::vector<double>{-2, 0, 0}) == -1);
    CHECK_THROWS_AS(svm_decide(m, std::vector<double>{1, 2}), Error);

    Rng rng(43);
    SvmModel r;
    r.weights = {normal(rng), normal(rng), normal(rng), normal(rng)};
    r.bias = normal(rng);
    for (int i = 0; i < 1000; ++i) {
      std::vector<double> row{normal(rng), normal(rng), normal(rng), normal(rng)};
      double z = r.bias;
      for (int k = 0; k < 4; ++k) z += r.weights[static_cast<std::size_t>(k)] * row[static_cast<std::size_t>(k)];
      CHECK(svm_decide(r, row) == (z >= 0 ? 1 : -1));
      auto scaled = r;
      const double s = uniform(rng, 0.01, 100);
      for (auto& w : scaled.weights) w *= s;
      scaled.bias *= s;
      CHECK(svm_decide(scaled, row) == svm_decide(r, row));
    }

    const std::vector<std::vector<double>> rows{{1, 2}, {2, 3}};
    const std::vector<int> one_class{1, 1};
    try {
      train_svm(rows, one_class, {});
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SingleClassTraining);
    }
  }

  TEST_CASE("svm json round trip") {
    const auto m = default_metadata_svm();
    const auto r = svm_from_json(to_json(m));
    CHECK(r.weights == m.weights);
    CHECK(r.bias == m.bias);
    CHECK(r.feature_scales == m.feature_scales);
  }
}
