#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dfcr/attacks.hpp"
#include "dfcr/confidence.hpp"
#include "dfcr/core_model.hpp"
#include "dfcr/defenses.hpp"
#include "dfcr/render.hpp"
#include "dfcr/stats.hpp"
#include "json.hpp"

namespace dfcr {

struct ExperimentConfig {
  int experiment = 1;
  int scenarios = 0;  // 0: 300 for experiment 1, 100 otherwise
  std::uint64_t seed = 1;
  SensorConfig sensor;
  ScenarioGenParams generation;
  DetectorNoise noise;
  double gate_sigma_m = 50.0;
  double gate_threshold = 0.2;
  DeltaConfig deltas;
  EaConfig ea;
  PgdConfig pgd;
  CompressionConfig compression;
  NoiseConfig noise_defense;
  AdversarialTrainingConfig adversarial;
  std::vector<int> spoof_counts{1, 3, 5};
  std::uint64_t svm_seed = 7;
  /// Minimum chart distance between an attack's false contact and any
  /// genuine object.
  double attack_clearance_m = 200.0;
  unsigned threads = 0;  // 0: hardware concurrency

  int scenario_count() const;
  void validate() const;  // throws ConfigInvalid
};

/// Overlays the keys present in `j` onto `base`. Recognized keys:
/// sensor_config, noise, gate, deltas, ea, pgd, compression, noise_defense,
/// adversarial, spoof_counts, svm_seed, attack_clearance_m. Throws ConfigInvalid.
ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {});

struct SystemResult {
  std::string name;
  MetricSet metrics;
  /// Paired test of this system's absolute errors against the baseline's;
  /// w_plus > w_minus means this system is closer to the truth.
  std::optional<WilcoxonResult> wilcoxon_vs_baseline;
};

struct ScenarioSummary {
  std::size_t scenario = 0;
  std::size_t contacts = 0;
  std::vector<double> mse;  // per system
};

struct ReportSection {
  std::string label;
  std::size_t contacts = 0;
  std::vector<SystemResult> systems;
  std::vector<ScenarioSummary> per_scenario;  // scenarios that contributed contacts
};

/// One measured contact.
struct ContactOutcome {
  std::size_t section = 0;
  std::size_t scenario = 0;
  DetectionVector detection;
  double truth = 0.0;
  std::vector<double> confidence;  // per system, baseline first
  ConfidenceTrace trace;
  std::size_t record_size = 1;  // members in the contact's fused record
};

struct ExperimentReport {
  int experiment = 0;
  std::size_t scenarios = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> systems;
  std::vector<ReportSection> sections;
  std::vector<ContactOutcome> contacts;
  nlohmann::json details = nlohmann::json::object();  // experiment-specific diagnostics
};

ExperimentReport run_experiment(const ExperimentConfig& config);

/// Deterministic: no timings or host information.
nlohmann::json to_json(const ExperimentReport& report);

/// Trace CSV. For experiments with several sections the scenario id is
/// section * scenarios + scenario.
std::string traces_csv(const ExperimentReport& report);

/// Runs fn(0..n-1) on worker threads; results are stored by index, so the
/// output does not depend on scheduling. The first exception is rethrown.
template <typename T>
std::vector<T> parallel_map(std::size_t n, unsigned threads, const std::function<T(std::size_t)>& fn) {
  std::vector<std::optional<T>> slots(n);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  auto worker = [&](unsigned id) {
    try {
      for (std::size_t i = next++; i < n; i = next++) slots[i].emplace(fn(i));
    } catch (...) {
      errors[id] = std::current_exception();
      next = n;
    }
  };
  if (threads <= 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<T> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace dfcr
