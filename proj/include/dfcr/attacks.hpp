#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dfcr/core_model.hpp"
#include "dfcr/detector_sim.hpp"

namespace dfcr {

// ---- multi-objective evolutionary perturbation ----

struct EaConfig {
  int max_iterations = 500;
  int min_iterations = 50;
  int population_size = 50;
  double perturbation_epsilon = 50.0;  // intensity units
  double epsilon_decay = 0.9;
  int no_improvement_threshold = 30;
  int objective_count = 2;
  int reference_divisions = 12;
  /// Pixels the attacker may touch; empty means the whole image.
  std::vector<PixelRect> regions;
  /// Draw the generation budget uniformly in [min, max]; otherwise run max.
  bool random_budget = true;

  void validate() const;
};

/// Maximized.
using ObjectiveFn = std::function<double(const RasterImage&)>;

struct Individual {
  std::vector<double> genome;   // one value per attackable pixel
  std::vector<double> fitness;  // one value per objective
};

struct EaResult {
  RasterImage adversarial;
  Individual best;
  int budget = 0;
  int generations = 0;  // generations actually run
  bool early_stopped = false;
  std::vector<double> best_history;     // best-so-far summed fitness per generation
  std::vector<double> average_fitness;  // population mean of summed fitness per generation
};

/// Fronts of mutually non-dominated points, maximization sense.
std::vector<std::vector<std::size_t>> nondominated_sort(std::span<const std::vector<double>> objectives);

/// Das-Dennis simplex lattice: all M-vectors of multiples of 1/divisions
/// summing to one.
std::vector<std::vector<double>> das_dennis(int objectives, int divisions);

/// Mutation-only NSGA-III. Offspring perturb every attackable pixel by
/// U(-eps, eps), eps shrinking by `epsilon_decay` per generation; image plus
/// genome is clipped to [0,255] before every evaluation. Survivors come from
/// non-dominated sorting with reference-direction niching on the last front.
EaResult evolve_perturbation(const RasterImage& image, std::span<const ObjectiveFn> objectives,
                             const EaConfig& config, std::uint64_t seed);

// ---- projected gradient patch ----

struct PgdConfig {
  double alpha = 0.05;
  int iterations = 10;
  double epsilon = 0.3;  // L-inf budget on [0,1]-normalized intensities
  PixelRect patch_region;

  void validate() const;
};

/// Gradient of the attack objective with respect to the pixels of an image
/// given in [0,255] units. Only its sign is used.
using GradientFn = std::function<RasterImage(const RasterImage&)>;

struct PgdResult {
  RasterImage adversarial;
  std::vector<RasterImage> iterates;  // after each step, when requested
};

/// x <- Proj(x + alpha sgn(grad)) on [0,1]-scaled pixels; the projection keeps
/// |x - x0| <= epsilon inside the patch region, leaves the rest untouched, and
/// clips to [0,1]. sgn(0) = 0.
RasterImage pgd_patch(const RasterImage& image, const PgdConfig& config, const GradientFn& gradient);
PgdResult pgd_patch_traced(const RasterImage& image, const PgdConfig& config, const GradientFn& gradient);

/// PGD against one window of the toy detector, maximizing its confidence.
RasterImage pgd_window_attack(const RasterImage& image, const ToyDetectorParams& params, WindowId target,
                              const PgdConfig& config);

/// Same, on a bare window given row-major.
std::vector<double> pgd_window_pixels(std::span<const double> window, const ToyDetectorParams& params,
                                      const PgdConfig& config);

// ---- spoof injection ----

enum class SpoofKind { Ais, Radar, Both, Mixed };

std::string_view to_string(SpoofKind k);
std::optional<SpoofKind> parse_spoof_kind(std::string_view name);

struct SpoofProfile {
  double tanker_length_m = 250.0;
  double tanker_width_m = 40.0;
  int tanker_ship_type = 80;
  double blob_size_m = 3.0;  // buoy-sized return
  double min_range_m = 250.0;
  double max_bearing_deg = 75.0;
  double min_separation_m = 300.0;
};

/// Returns a copy of `scenario` with `count` spoofed objects added (truth 0).
/// AIS spoofs are tanker profiles whose static data has been through an AIVDM
/// encode/decode; radar spoofs carry a small attacker-chosen return; Both
/// puts the two at one position; Mixed draws the kind per spoof. Placement is
/// uniform over the radar sector.
Scenario inject_spoofs(const Scenario& scenario, int count, SpoofKind kind, std::uint64_t seed,
                       const SpoofProfile& profile = {});

}  // namespace dfcr
