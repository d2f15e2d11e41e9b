#include "dfcr/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "dfcr/ais_wire.hpp"
#include "dfcr/error.hpp"
#include "dfcr/random.hpp"

namespace dfcr {

void EaConfig::validate() const {
  if (min_iterations < 0 || max_iterations < min_iterations) {
    throw Error(ErrorCode::InvalidArgument, "iteration bounds must satisfy 0 <= min <= max");
  }
  if (population_size < 2 || population_size % 2 != 0) {
    throw Error(ErrorCode::InvalidArgument, "population size must be even and at least 2");
  }
  if (!(perturbation_epsilon >= 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be non-negative");
  if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0)) throw Error(ErrorCode::InvalidArgument, "decay must lie in (0,1]");
  if (no_improvement_threshold < 1 || objective_count < 1 || reference_divisions < 1) {
    throw Error(ErrorCode::InvalidArgument, "invalid EA configuration");
  }
}

namespace {

// a dominates b (maximization)
bool dominates(const std::vector<double>& a, const std::vector<double>& b) {
  bool strictly = false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] < b[k]) return false;
    if (a[k] > b[k]) strictly = true;
  }
  return strictly;
}

double sum_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

void lattice(int m, int left, std::vector<double>& cur, int divisions, std::vector<std::vector<double>>& out) {
  if (static_cast<int>(cur.size()) == m - 1) {
    cur.push_back(static_cast<double>(left) / divisions);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int k = 0; k <= left; ++k) {
    cur.push_back(static_cast<double>(k) / divisions);
    lattice(m, left - k, cur, divisions, out);
    cur.pop_back();
  }
}

// NSGA-III niching: fills `chosen` up to `target` from `last_front`.
void niche_select(std::span<const Individual> pool, std::vector<std::size_t>& chosen,
                  std::vector<std::size_t> last_front, std::size_t target,
                  const std::vector<std::vector<double>>& refs, Rng& rng) {
  const std::size_t m = pool.front().fitness.size();
  std::vector<std::size_t> all = chosen;
  all.insert(all.end(), last_front.begin(), last_front.end());

  // Minimization form relative to the ideal point, scaled to [0,1].
  std::vector<double> ideal(m, -std::numeric_limits<double>::infinity());
  for (auto i : all)
    for (std::size_t k = 0; k < m; ++k) ideal[k] = std::max(ideal[k], pool[i].fitness[k]);
  std::vector<double> span(m, 0.0);
  for (auto i : all)
    for (std::size_t k = 0; k < m; ++k) span[k] = std::max(span[k], ideal[k] - pool[i].fitness[k]);
  for (auto& s : span)
    if (s < 1e-12) s = 1.0;

  auto associate = [&](std::size_t i, double& dist) {
    std::vector<double> f(m);
    for (std::size_t k = 0; k < m; ++k) f[k] = (ideal[k] - pool[i].fitness[k]) / span[k];
    std::size_t best = 0;
    dist = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < refs.size(); ++r) {
      double dot = 0.0, nn = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        dot += f[k] * refs[r][k];
        nn += refs[r][k] * refs[r][k];
      }
      double d2 = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        const double e = f[k] - dot / nn * refs[r][k];
        d2 += e * e;
      }
      if (d2 < dist) {
        dist = d2;
        best = r;
      }
    }
    return best;
  };

  std::vector<int> niche(refs.size(), 0);
  for (auto i : chosen) {
    double d;
    ++niche[associate(i, d)];
  }
  std::vector<std::size_t> ref_of(last_front.size());
  std::vector<double> dist_of(last_front.size());
  for (std::size_t q = 0; q < last_front.size(); ++q) ref_of[q] = associate(last_front[q], dist_of[q]);

  std::vector<bool> taken(last_front.size(), false);
  std::vector<bool> ref_open(refs.size(), true);
  while (chosen.size() < target) {
    int lowest = std::numeric_limits<int>::max();
    for (std::size_t r = 0; r < refs.size(); ++r)
      if (ref_open[r]) lowest = std::min(lowest, niche[r]);
    std::vector<std::size_t> tied;
    for (std::size_t r = 0; r < refs.size(); ++r)
      if (ref_open[r] && niche[r] == lowest) tied.push_back(r);
    const std::size_t r = tied[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(tied.size()) - 1))];

    std::vector<std::size_t> cand;
    for (std::size_t q = 0; q < last_front.size(); ++q)
      if (!taken[q] && ref_of[q] == r) cand.push_back(q);
    if (cand.empty()) {
      ref_open[r] = false;
      continue;
    }
    std::size_t pick;
    if (niche[r] == 0) {
      pick = *std::min_element(cand.begin(), cand.end(), [&](auto a, auto b) { return dist_of[a] < dist_of[b]; });
    } else {
      pick = cand[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(cand.size()) - 1))];
    }
    taken[pick] = true;
    chosen.push_back(last_front[pick]);
    ++niche[r];
  }
}

}  // namespace

std::vector<std::vector<std::size_t>> nondominated_sort(std::span<const std::vector<double>> objectives) {
  const std::size_t n = objectives.size();
  std::vector<std::vector<std::size_t>> dominated(n);
  std::vector<int> count(n, 0);
  std::vector<std::vector<std::size_t>> fronts;
  std::vector<std::size_t> current;
  for (std::size_t p = 0; p < n; ++p) {
    if (objectives[p].size() != objectives[0].size()) {
      throw Error(ErrorCode::DimensionMismatch, "objective vectors differ in length");
    }
    for (std::size_t q = 0; q < n; ++q) {
      if (p == q) continue;
      if (dominates(objectives[p], objectives[q])) dominated[p].push_back(q);
      else if (dominates(objectives[q], objectives[p])) ++count[p];
    }
    if (count[p] == 0) current.push_back(p);
  }
  while (!current.empty()) {
    std::vector<std::size_t> next;
    for (auto p : current) {
      for (auto q : dominated[p])
        if (--count[q] == 0) next.push_back(q);
    }
    fronts.push_back(current);
    std::sort(next.begin(), next.end());
    current = std::move(next);
  }
  return fronts;
}

std::vector<std::vector<double>> das_dennis(int objectives, int divisions) {
  if (objectives < 1 || divisions < 1) throw Error(ErrorCode::InvalidArgument, "invalid lattice");
  std::vector<std::vector<double>> out;
  std::vector<double> cur;
  lattice(objectives, divisions, cur, divisions, out);
  return out;
}

EaResult evolve_perturbation(const RasterImage& image, std::span<const ObjectiveFn> objectives,
                             const EaConfig& config, std::uint64_t seed) {
  config.validate();
  if (objectives.empty()) throw Error(ErrorCode::InvalidArgument, "at least one objective is required");

  std::vector<std::size_t> pixels;
  if (config.regions.empty()) {
    pixels.resize(image.size());
    std::iota(pixels.begin(), pixels.end(), std::size_t{0});
  } else {
    std::set<std::size_t> uniq;
    for (const auto& r : config.regions) {
      if (!r.fits(image)) throw Error(ErrorCode::InvalidArgument, "attack region outside image");
      for (int y = r.y; y < r.y + r.h; ++y)
        for (int x = r.x; x < r.x + r.w; ++x) uniq.insert(image.index(x, y));
    }
    pixels.assign(uniq.begin(), uniq.end());
  }

  Rng rng(seed);
  RasterImage work = image;
  auto apply = [&](const std::vector<double>& genome) {
    for (std::size_t k = 0; k < pixels.size(); ++k) {
      work.data()[pixels[k]] = std::clamp(image.data()[pixels[k]] + genome[k], 0.0, 255.0);
    }
  };
  auto evaluate = [&](Individual& ind) {
    apply(ind.genome);
    ind.fitness.resize(objectives.size());
    for (std::size_t k = 0; k < objectives.size(); ++k) ind.fitness[k] = objectives[k](work);
  };

  const auto n = static_cast<std::size_t>(config.population_size);
  const double eps0 = config.perturbation_epsilon;
  std::vector<Individual> pop(n);
  for (auto& ind : pop) {
    ind.genome.resize(pixels.size());
    for (auto& g : ind.genome) g = eps0 > 0.0 ? uniform(rng, -eps0, eps0) : 0.0;
    evaluate(ind);
  }

  EaResult result;
  result.best = *std::max_element(pop.begin(), pop.end(), [](const auto& a, const auto& b) {
    return sum_of(a.fitness) < sum_of(b.fitness);
  });
  double best_sum = sum_of(result.best.fitness);
  result.budget = config.random_budget
                      ? static_cast<int>(uniform_int(rng, config.min_iterations, config.max_iterations))
                      : config.max_iterations;
  const auto refs = das_dennis(static_cast<int>(objectives.size()), config.reference_divisions);

  int stale = 0;
  double eps = eps0;
  for (int gen = 1; gen <= result.budget; ++gen) {
    std::vector<Individual> pool = pop;
    pool.reserve(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
      Individual child = pop[i];
      if (eps > 0.0) {
        for (auto& g : child.genome) g += uniform(rng, -eps, eps);
      }
      evaluate(child);
      pool.push_back(std::move(child));
    }

    std::vector<std::vector<double>> fit;
    fit.reserve(pool.size());
    for (const auto& ind : pool) fit.push_back(ind.fitness);
    const auto fronts = nondominated_sort(fit);
    std::vector<std::size_t> chosen;
    for (const auto& front : fronts) {
      if (chosen.size() + front.size() <= n) {
        chosen.insert(chosen.end(), front.begin(), front.end());
        if (chosen.size() == n) break;
      } else {
        niche_select(pool, chosen, front, n, refs, rng);
        break;
      }
    }
    std::vector<Individual> next;
    next.reserve(n);
    for (auto i : chosen) next.push_back(std::move(pool[i]));
    pop = std::move(next);

    double mean = 0.0;
    bool improved = false;
    for (const auto& ind : pop) {
      const double s = sum_of(ind.fitness);
      mean += s;
      if (s > best_sum) {
        best_sum = s;
        result.best = ind;
        improved = true;
      }
    }
    result.average_fitness.push_back(mean / static_cast<double>(n));
    result.best_history.push_back(best_sum);
    result.generations = gen;
    stale = improved ? 0 : stale + 1;
    eps *= config.epsilon_decay;
    if (stale >= config.no_improvement_threshold && gen >= config.min_iterations) {
      result.early_stopped = true;
      break;
    }
  }

  apply(result.best.genome);
  result.adversarial = work;
  return result;
}

void PgdConfig::validate() const {
  if (!(alpha > 0.0) || !(epsilon > 0.0) || iterations < 1) {
    throw Error(ErrorCode::InvalidArgument, "PGD needs alpha > 0, epsilon > 0 and at least one iteration");
  }
}

PgdResult pgd_patch_traced(const RasterImage& image, const PgdConfig& config, const GradientFn& gradient) {
  config.validate();
  const PixelRect& r = config.patch_region;
  if (!r.fits(image)) throw Error(ErrorCode::InvalidArgument, "patch region outside image");

  PgdResult out;
  RasterImage x = image;
  for (int it = 0; it < config.iterations; ++it) {
    const RasterImage g = gradient(x);
    if (g.width() != image.width() || g.height() != image.height()) {
      throw Error(ErrorCode::DimensionMismatch, "gradient shape differs from image");
    }
    for (int py = r.y; py < r.y + r.h; ++py) {
      for (int px = r.x; px < r.x + r.w; ++px) {
        const double gv = g.at(px, py);
        const double sgn = gv > 0.0 ? 1.0 : (gv < 0.0 ? -1.0 : 0.0);
        const double x0 = image.at(px, py) / 255.0;
        double v = x.at(px, py) / 255.0 + config.alpha * sgn;
        v = std::clamp(v, x0 - config.epsilon, x0 + config.epsilon);
        v = std::clamp(v, 0.0, 1.0);
        x.at(px, py) = v * 255.0;
      }
    }
    out.iterates.push_back(x);
  }
  out.adversarial = std::move(x);
  return out;
}

RasterImage pgd_patch(const RasterImage& image, const PgdConfig& config, const GradientFn& gradient) {
  return pgd_patch_traced(image, config, gradient).adversarial;
}

RasterImage pgd_window_attack(const RasterImage& image, const ToyDetectorParams& params, WindowId target,
                              const PgdConfig& config) {
  PgdConfig cfg = config;
  cfg.patch_region = window_rect(params, target);
  return pgd_patch(image, cfg, [&](const RasterImage& x) { return toy_optical_gradient(x, params, target); });
}

std::vector<double> pgd_window_pixels(std::span<const double> window, const ToyDetectorParams& params,
                                      const PgdConfig& config) {
  if (window.size() != params.window_size()) throw Error(ErrorCode::DimensionMismatch, "window size mismatch");
  RasterImage img(params.window_w, params.window_h);
  std::copy(window.begin(), window.end(), img.data().begin());
  const RasterImage adv = pgd_window_attack(img, params, {0, 0}, config);
  return {adv.data().begin(), adv.data().end()};
}

std::string_view to_string(SpoofKind k) {
  switch (k) {
    case SpoofKind::Ais: return "ais";
    case SpoofKind::Radar: return "radar";
    case SpoofKind::Both: return "both";
    case SpoofKind::Mixed: return "mixed";
  }
  return "?";
}

std::optional<SpoofKind> parse_spoof_kind(std::string_view name) {
  for (auto k : {SpoofKind::Ais, SpoofKind::Radar, SpoofKind::Both, SpoofKind::Mixed})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

namespace {

AisStaticData spoofed_static(const SpoofProfile& p, Rng& rng) {
  ais::AisMessage m;
  m.msg_type = 5;
  m.mmsi = static_cast<std::uint32_t>(uniform_int(rng, 200000000, 799999999));
  m.ship_type = p.tanker_ship_type;
  const int length = static_cast<int>(std::lround(p.tanker_length_m));
  const int width = static_cast<int>(std::lround(p.tanker_width_m));
  m.dim_to_bow = length * 4 / 5;
  m.dim_to_stern = length - m.dim_to_bow;
  m.dim_to_port = width / 2;
  m.dim_to_starboard = width - m.dim_to_port;
  m.name = "MV NORTHERN STAR";
  const auto sentences = ais::synthesize_spoof(m, {'B', static_cast<int>(uniform_int(rng, 0, 9)), 60});
  const auto rx = ais::parse_aivdm(sentences);
  return {rx.mmsi, rx.ship_type, rx.dim_to_bow, rx.dim_to_stern, rx.dim_to_port, rx.dim_to_starboard};
}

}  // namespace

Scenario inject_spoofs(const Scenario& scenario, int count, SpoofKind kind, std::uint64_t seed,
                       const SpoofProfile& profile) {
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "spoof count must be positive");
  Scenario out = scenario;
  Rng rng(seed);
  const double r_lo = profile.min_range_m;
  const double r_hi = 0.95 * scenario.sensor_config.radar_range_m;
  const double half = profile.max_bearing_deg * std::numbers::pi / 180.0;

  for (int i = 0; i < count; ++i) {
    SpoofKind k = kind;
    if (k == SpoofKind::Mixed) k = static_cast<SpoofKind>(uniform_int(rng, 0, 2));

    Vec2 pos = Vec2::Zero();
    for (int attempt = 0; attempt < 1000; ++attempt) {
      // uniform over the annular sector's area
      const double r = std::sqrt(uniform(rng, r_lo * r_lo, r_hi * r_hi));
      const double b = uniform(rng, -half, half);
      pos = Vec2(r * std::sin(b), r * std::cos(b));
      bool clear = true;
      for (const auto* list : {&out.objects, &out.spoofed})
        for (const auto& o : *list) clear = clear && (o.position - pos).norm() >= profile.min_separation_m;
      if (clear) break;
    }

    GroundTruthObject o;
    o.id = out.next_object_id();
    o.position = pos;
    o.optically_visible = false;
    o.radar_reflective = false;
    o.speed_knots = uniform(rng, 4.0, 14.0);
    o.course_deg = uniform(rng, 0.0, 359.0);
    if (k == SpoofKind::Ais || k == SpoofKind::Both) {
      o.class_label = ObjectClass::Tanker;
      o.length = profile.tanker_length_m;
      o.width = profile.tanker_width_m;
      o.carries_ais = true;
      o.ais_static = spoofed_static(profile, rng);
    }
    if (k == SpoofKind::Radar || k == SpoofKind::Both) {
      if (k == SpoofKind::Radar) {
        o.class_label = ObjectClass::RadarContact;
        o.length = o.width = profile.blob_size_m;
      }
      o.radar_reflective = true;
      o.radar_signature = RadarBlob{pos, profile.blob_size_m, profile.blob_size_m};
    }
    out.truth_labels[o.id] = 0.0;
    out.spoofed.push_back(std::move(o));
  }
  return out;
}

}  // namespace dfcr
