#include "dfcr/harness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dfcr/error.hpp"
#include "dfcr/random.hpp"
#include "dfcr/scenario_io.hpp"

namespace dfcr {

int ExperimentConfig::scenario_count() const {
  if (scenarios > 0) return scenarios;
  return experiment == 1 ? 300 : 100;
}

void ExperimentConfig::validate() const {
  if (experiment < 1 || experiment > 4) throw Error(ErrorCode::ConfigInvalid, "experiment must be 1, 2, 3 or 4");
  if (scenarios < 0) throw Error(ErrorCode::ConfigInvalid, "scenario count must be non-negative");
  if (spoof_counts.empty()) throw Error(ErrorCode::ConfigInvalid, "no spoof counts");
  for (int c : spoof_counts)
    if (c < 1) throw Error(ErrorCode::ConfigInvalid, "spoof counts must be positive");
  if (!(attack_clearance_m >= 0.0)) throw Error(ErrorCode::ConfigInvalid, "attack clearance must be non-negative");
  sensor.validate();
  deltas.validate();
  try {
    (void)GaussianGate::isotropic(gate_sigma_m, gate_threshold);
    noise.validate();
    ea.validate();
    PgdConfig p = pgd;
    p.patch_region = {0, 0, 1, 1};
    p.validate();
    compression.validate();
    noise_defense.validate();
    if (!(adversarial.mix_fraction >= 0.0 && adversarial.mix_fraction < 1.0) || adversarial.epochs < 0 ||
        adversarial.batch_size < 1) {
      throw Error(ErrorCode::InvalidArgument, "invalid adversarial training settings");
    }
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigInvalid, e.what());
  }
}

ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig c) {
  try {
    if (!j.is_object()) throw Error(ErrorCode::ConfigInvalid, "config must be a JSON object");
    if (j.contains("sensor_config")) c.sensor = sensor_config_from_json(j.at("sensor_config"));
    if (j.contains("noise")) {
      const auto& n = j.at("noise");
      c.noise.confidence_sigma = n.value("confidence_sigma", c.noise.confidence_sigma);
      c.noise.dropout_prob = n.value("dropout_prob", c.noise.dropout_prob);
      c.noise.false_positive_rate = n.value("false_positive_rate", c.noise.false_positive_rate);
      c.noise.position_sigma_m = n.value("position_sigma_m", c.noise.position_sigma_m);
      c.noise.pixel_sigma = n.value("pixel_sigma", c.noise.pixel_sigma);
      c.noise.extent_jitter = n.value("extent_jitter", c.noise.extent_jitter);
    }
    if (j.contains("gate")) {
      c.gate_sigma_m = j.at("gate").value("sigma_m", c.gate_sigma_m);
      c.gate_threshold = j.at("gate").value("threshold", c.gate_threshold);
    }
    if (j.contains("deltas")) {
      const auto d = j.at("deltas").get<std::vector<double>>();
      if (d.size() != 3) throw Error(ErrorCode::ConfigInvalid, "deltas needs three values");
      std::copy(d.begin(), d.end(), c.deltas.delta.begin());
    }
    if (j.contains("ea")) {
      const auto& e = j.at("ea");
      c.ea.max_iterations = e.value("max_iterations", c.ea.max_iterations);
      c.ea.min_iterations = e.value("min_iterations", c.ea.min_iterations);
      c.ea.population_size = e.value("population_size", c.ea.population_size);
      c.ea.perturbation_epsilon = e.value("perturbation_epsilon", c.ea.perturbation_epsilon);
      c.ea.epsilon_decay = e.value("epsilon_decay", c.ea.epsilon_decay);
      c.ea.no_improvement_threshold = e.value("no_improvement_threshold", c.ea.no_improvement_threshold);
    }
    if (j.contains("pgd")) {
      const auto& p = j.at("pgd");
      c.pgd.alpha = p.value("alpha", c.pgd.alpha);
      c.pgd.iterations = p.value("iterations", c.pgd.iterations);
      c.pgd.epsilon = p.value("epsilon", c.pgd.epsilon);
    }
    if (j.contains("compression")) c.compression.quality = j.at("compression").value("quality", c.compression.quality);
    if (j.contains("noise_defense")) c.noise_defense.sigma = j.at("noise_defense").value("sigma", c.noise_defense.sigma);
    if (j.contains("adversarial")) {
      const auto& a = j.at("adversarial");
      c.adversarial.mix_fraction = a.value("mix_fraction", c.adversarial.mix_fraction);
      c.adversarial.epochs = a.value("epochs", c.adversarial.epochs);
      c.adversarial.batch_size = a.value("batch_size", c.adversarial.batch_size);
      c.adversarial.learning_rate = a.value("learning_rate", c.adversarial.learning_rate);
    }
    if (j.contains("spoof_counts")) c.spoof_counts = j.at("spoof_counts").get<std::vector<int>>();
    if (j.contains("svm_seed")) c.svm_seed = j.at("svm_seed").get<std::uint64_t>();
    if (j.contains("attack_clearance_m")) c.attack_clearance_m = j.at("attack_clearance_m").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("config: ") + e.what());
  }
  return c;
}

namespace {

constexpr double kThreshold = kDetectThreshold;

double thresholded(double c) { return c >= kThreshold ? c : 0.0; }

void append_detection(std::vector<DetectionVector>& dets, const RawDetection& raw) {
  std::size_t idx = 0;
  for (const auto& d : dets)
    if (d.sensor == raw.sensor) ++idx;
  DetectionVector v;
  v.sensor = raw.sensor;
  v.contact_index = idx;
  v.confidence = raw.confidence;
  v.bbox = raw.bbox;
  v.class_label = raw.class_label;
  v.metadata = raw.metadata;
  dets.push_back(std::move(v));
}

bool clear_of_objects(const Scenario& sc, const Vec2& p, double clearance) {
  return std::all_of(sc.objects.begin(), sc.objects.end(),
                     [&](const auto& o) { return (o.position - p).norm() >= clearance; });
}

struct Environment {
  FusionContext ctx;
  SvmModel svm;
};

Environment make_environment(const ExperimentConfig& cfg) {
  return {FusionContext::from_config(cfg.sensor, GaussianGate::isotropic(cfg.gate_sigma_m, cfg.gate_threshold)),
          default_metadata_svm(cfg.svm_seed)};
}

struct ScenarioRun {
  std::vector<ContactOutcome> contacts;
  nlohmann::json details;
};

struct GenuineScene {
  Scenario scenario;
  std::vector<DetectionVector> detections;
};

GenuineScene genuine_scene(const ExperimentConfig& cfg, std::uint64_t sseed) {
  GenuineScene g;
  g.scenario = generate_scenario(sseed, cfg.sensor, cfg.generation);
  g.detections = simulate_all_detections(g.scenario, cfg.noise, derive_seed(sseed, 1));
  return g;
}

ScenarioRun run_clean(const ExperimentConfig& cfg, const Environment& env, std::size_t s) {
  const std::uint64_t sseed = derive_seed(cfg.seed, s);
  const auto g = genuine_scene(cfg, sseed);
  const auto assoc = associate_truth(g.scenario, g.detections, env.ctx.map);
  const auto truth = truth_vector(g.scenario, g.detections, assoc);
  const auto res = run_pipeline(g.detections, env.ctx, env.svm, cfg.deltas);
  ScenarioRun out;
  for (std::size_t i = 0; i < g.detections.size(); ++i) {
    out.contacts.push_back({0, s, g.detections[i], truth[i], {g.detections[i].confidence, res.traces[i].final_score},
                            res.traces[i]});
    out.contacts.back().record_size = res.records[res.record_of[i]].members.size();
  }
  return out;
}

struct ChartModels {
  ChartDisplayLayout layout;
  ToyDetectorParams radar;
  ToyDetectorParams ais;
};

ScenarioRun run_perturbation(const ExperimentConfig& cfg, const Environment& env, const ChartModels& models,
                             std::size_t s) {
  const std::uint64_t sseed = derive_seed(cfg.seed, s);
  auto g = genuine_scene(cfg, sseed);
  const auto& layout = models.layout;
  const RasterImage display = render_chart_display(g.scenario, layout, derive_seed(sseed, 2));

  // Cells the attacker targets: ahead of the ship, inside every sensor's
  // coverage, and clear of real traffic.
  std::vector<WindowId> cells;
  for (int r = 0; r < layout.rows; ++r) {
    for (int c = 0; c < layout.cols; ++c) {
      const Vec2 p = chart_cell_center(layout, {r, c});
      if (env.ctx.expected(SensorKind::Radar, p) && env.ctx.expected(SensorKind::Optical, p) &&
          clear_of_objects(g.scenario, p, cfg.attack_clearance_m)) {
        cells.push_back({r, c});
      }
    }
  }
  ScenarioRun out;
  if (cells.empty()) return out;
  Rng rng(derive_seed(sseed, 3));
  auto pick = [&] { return cells[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(cells.size()) - 1))]; };
  const WindowId radar_cell = pick();
  const WindowId ais_cell = pick();
  const PixelRect radar_rect = chart_cell_rect(layout, ChartPanel::Radar, radar_cell);
  const PixelRect ais_rect = chart_cell_rect(layout, ChartPanel::Ais, ais_cell);

  auto radar_score = [&](const RasterImage& img) { return window_confidence(models.radar, extract_window(img, radar_rect)); };
  auto ais_score = [&](const RasterImage& img) { return window_confidence(models.ais, extract_window(img, ais_rect)); };
  const std::vector<ObjectiveFn> objectives{radar_score, ais_score};
  EaConfig ea = cfg.ea;
  ea.regions = {radar_rect, ais_rect};
  const EaResult attack = evolve_perturbation(display, objectives, ea, derive_seed(sseed, 4));

  const RasterImage compressed = compress(attack.adversarial, cfg.compression);
  const RasterImage noisy = add_noise(attack.adversarial, cfg.noise_defense, derive_seed(sseed, 5));

  struct Fake {
    SensorKind sensor;
    double baseline, compression, noise;
    std::size_t index = 0;
  };
  std::vector<Fake> fakes;
  auto add_fake = [&](SensorKind sensor, const WindowId& cell, const std::function<double(const RasterImage&)>& score) {
    const double base = score(attack.adversarial);
    if (base < kThreshold) return;
    RawDetection raw;
    raw.sensor = sensor;
    raw.confidence = base;
    const Vec2 p = chart_cell_center(layout, cell);
    if (sensor == SensorKind::Radar) {
      raw.bbox = BoundingBox::centered(p, 12.0, 8.0);
      raw.class_label = ObjectClass::RadarContact;
      raw.metadata.radar = RadarBlob{p, 12.0, 8.0};
    } else {
      raw.bbox = BoundingBox::centered(p, 10.0, 10.0);
      raw.class_label = ObjectClass::AisContact;
    }
    fakes.push_back({sensor, base, thresholded(score(compressed)), thresholded(score(noisy)), g.detections.size()});
    append_detection(g.detections, raw);
  };
  add_fake(SensorKind::Radar, radar_cell, radar_score);
  add_fake(SensorKind::Ais, ais_cell, ais_score);

  const auto res = run_pipeline(g.detections, env.ctx, env.svm, cfg.deltas);
  for (const auto& f : fakes) {
    const auto& tr = res.traces[f.index];
    out.contacts.push_back(
        {0, s, g.detections[f.index], 0.0, {f.baseline, tr.final_score, f.compression, f.noise}, tr});
    out.contacts.back().record_size = res.records[res.record_of[f.index]].members.size();
  }
  out.details = {{"generations", attack.generations},
                 {"budget", attack.budget},
                 {"early_stopped", attack.early_stopped},
                 {"best_fitness", attack.best.fitness}};
  return out;
}

struct OpticalModels {
  OpticalLayout layout;
  ToyDetectorParams detector;
  ToyDetectorParams robust;
};

ScenarioRun run_patch(const ExperimentConfig& cfg, const Environment& env, const OpticalModels& models,
                      std::size_t s) {
  const std::uint64_t sseed = derive_seed(cfg.seed, s);
  auto g = genuine_scene(cfg, sseed);
  const auto& cam = g.scenario.sensor_config.camera;
  const auto& layout = models.layout;
  const RasterImage frame = render_optical_frame(g.scenario, layout, derive_seed(sseed, 2));
  const double horizon_px = optical_horizon_row(layout, cam) * layout.downsample;

  std::vector<WindowId> candidates;
  for (int r = 0; r < layout.grid_rows(cam); ++r) {
    for (int c = 0; c < layout.grid_cols(cam); ++c) {
      const BoundingBox box = optical_window_bbox(layout, {r, c});
      if (box.y_max <= horizon_px + 1.0) continue;
      const auto anchor = env.ctx.map.to_chart(box.bottom_center());
      if (!anchor || !env.ctx.expected(SensorKind::Optical, *anchor)) continue;
      if (!clear_of_objects(g.scenario, *anchor, cfg.attack_clearance_m)) continue;
      if (window_has_object(g.scenario, layout, {r, c})) continue;
      candidates.push_back({r, c});
    }
  }
  Rng rng(derive_seed(sseed, 3));
  for (std::size_t i = candidates.size(); i > 1; --i) {
    std::swap(candidates[i - 1], candidates[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i - 1)))]);
  }

  ScenarioRun out;
  int attempts = 0;
  for (const auto& w : candidates) {
    ++attempts;
    const RasterImage adv = pgd_window_attack(frame, models.detector, w, cfg.pgd);
    const double conf = window_confidence(models.detector, extract_window(adv, window_rect(models.detector, w)));
    if (conf < kThreshold) continue;

    // the attacker crafts a fresh patch against the retrained detector
    const RasterImage adv_r = pgd_window_attack(frame, models.robust, w, cfg.pgd);
    const double robust = thresholded(window_confidence(models.robust, extract_window(adv_r, window_rect(models.robust, w))));

    RawDetection raw;
    raw.sensor = SensorKind::Optical;
    raw.confidence = conf;
    raw.bbox = optical_window_bbox(layout, w);
    raw.class_label = ObjectClass::Boat;
    const std::size_t idx = g.detections.size();
    append_detection(g.detections, raw);
    const auto res = run_pipeline(g.detections, env.ctx, env.svm, cfg.deltas);
    out.contacts.push_back({0, s, g.detections[idx], 0.0, {conf, res.traces[idx].final_score, robust}, res.traces[idx]});
    out.contacts.back().record_size = res.records[res.record_of[idx]].members.size();
    out.details = {{"window", {w.row, w.col}}, {"attempts", attempts}};
    break;
  }
  if (out.contacts.empty()) out.details = {{"attempts", attempts}};
  return out;
}

ScenarioRun run_spoof(const ExperimentConfig& cfg, const Environment& env, int count, std::size_t section,
                      std::size_t s) {
  const std::uint64_t sseed = derive_seed(derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(count)), s);
  Scenario empty;
  empty.seed = sseed;
  empty.sensor_config = cfg.sensor;
  const Scenario sc = inject_spoofs(empty, count, count == 1 ? SpoofKind::Ais : SpoofKind::Mixed, derive_seed(sseed, 1));
  DetectorNoise noise = cfg.noise;
  noise.false_positive_rate = 0.0;
  const auto dets = simulate_all_detections(sc, noise, derive_seed(sseed, 2));
  const auto assoc = associate_truth(sc, dets, env.ctx.map);
  const auto truth = truth_vector(sc, dets, assoc);
  const auto res = run_pipeline(dets, env.ctx, env.svm, cfg.deltas);
  ScenarioRun out;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    out.contacts.push_back({section, s, dets[i], truth[i], {dets[i].confidence, res.traces[i].final_score}, res.traces[i]});
    out.contacts.back().record_size = res.records[res.record_of[i]].members.size();
  }
  return out;
}

ReportSection summarize(const std::string& label, const std::vector<std::string>& systems,
                        const std::vector<ContactOutcome>& contacts, std::size_t section) {
  ReportSection sec;
  sec.label = label;
  std::vector<std::vector<double>> conf(systems.size());
  std::vector<double> truth;
  for (const auto& c : contacts) {
    if (c.section != section) continue;
    truth.push_back(c.truth);
    for (std::size_t k = 0; k < systems.size(); ++k) conf[k].push_back(c.confidence[k]);
  }
  sec.contacts = truth.size();
  if (truth.empty()) return sec;

  std::vector<double> base_err(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) base_err[i] = std::abs(truth[i] - conf[0][i]);
  for (std::size_t k = 0; k < systems.size(); ++k) {
    SystemResult r;
    r.name = systems[k];
    r.metrics = compute_metrics(conf[k], truth);
    if (k > 0) {
      std::vector<double> err(truth.size());
      for (std::size_t i = 0; i < truth.size(); ++i) err[i] = std::abs(truth[i] - conf[k][i]);
      try {
        r.wilcoxon_vs_baseline = wilcoxon_signed_rank(base_err, err);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::AllZeroDifferences) throw;
      }
    }
    sec.systems.push_back(std::move(r));
  }

  // per-scenario MSE, in scenario order
  std::size_t i = 0;
  for (const auto& c : contacts) {
    if (c.section != section) continue;
    if (sec.per_scenario.empty() || sec.per_scenario.back().scenario != c.scenario) {
      sec.per_scenario.push_back({c.scenario, 0, std::vector<double>(systems.size(), 0.0)});
    }
    auto& ps = sec.per_scenario.back();
    ++ps.contacts;
    for (std::size_t k = 0; k < systems.size(); ++k) ps.mse[k] += (truth[i] - conf[k][i]) * (truth[i] - conf[k][i]);
    ++i;
  }
  for (auto& ps : sec.per_scenario)
    for (auto& v : ps.mse) v /= static_cast<double>(ps.contacts);
  return sec;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const Environment env = make_environment(config);
  const std::size_t n = static_cast<std::size_t>(config.scenario_count());

  ExperimentReport rep;
  rep.experiment = config.experiment;
  rep.scenarios = n;
  rep.seed = config.seed;
  std::vector<std::string> labels;
  std::vector<ScenarioRun> runs;

  switch (config.experiment) {
    case 1: {
      rep.systems = {"baseline", "dfcr"};
      labels = {"clean"};
      runs = parallel_map<ScenarioRun>(n, config.threads, [&](std::size_t s) { return run_clean(config, env, s); });
      break;
    }
    case 2: {
      rep.systems = {"baseline", "dfcr", "compression", "noise"};
      labels = {"perturbation"};
      ChartModels models;
      models.layout.range_m = config.sensor.radar_range_m;
      models.radar = train_chart_scorer(models.layout, ChartPanel::Radar, derive_seed(config.seed, 0xC0FFEE));
      models.ais = train_chart_scorer(models.layout, ChartPanel::Ais, derive_seed(config.seed, 0xC0FFEF));
      runs = parallel_map<ScenarioRun>(n, config.threads,
                                       [&](std::size_t s) { return run_perturbation(config, env, models, s); });
      break;
    }
    case 3: {
      rep.systems = {"baseline", "dfcr", "adversarial_training"};
      labels = {"patch"};
      OpticalModels models;
      const auto& cam = config.sensor.camera;
      const auto clean = optical_training_windows(models.layout, cam, 591, 1182, derive_seed(config.seed, 0xD00D));
      TrainConfig tc;
      tc.epochs = config.adversarial.epochs;
      tc.batch_size = config.adversarial.batch_size;
      tc.learning_rate = config.adversarial.learning_rate;
      tc.seed = derive_seed(config.seed, 0xD00E);
      models.detector =
          train_toy_detector(clean, initial_params(models.layout.window_w, models.layout.window_h), tc).params;
      AdversarialTrainingConfig ac = config.adversarial;
      ac.seed = derive_seed(config.seed, 0xD00F);
      const PgdConfig pgd = config.pgd;
      const auto at = adversarial_train(
          models.detector, clean,
          [&](const ToyDetectorParams& p, std::span<const double> w) { return pgd_window_pixels(w, p, pgd); }, ac);
      models.robust = at.params;
      rep.details["adversarial_training"] = {{"clean_windows", at.clean_windows},
                                             {"adversarial_windows", at.adversarial_windows},
                                             {"clean_accuracy_before", at.clean_accuracy_before},
                                             {"clean_accuracy_after", at.clean_accuracy_after},
                                             {"attack_confidence_before", at.attack_confidence_before},
                                             {"attack_confidence_after", at.attack_confidence_after},
                                             {"adaptive_attack_confidence_after", at.adaptive_attack_confidence_after}};
      runs = parallel_map<ScenarioRun>(n, config.threads,
                                       [&](std::size_t s) { return run_patch(config, env, models, s); });
      break;
    }
    case 4: {
      rep.systems = {"baseline", "dfcr"};
      for (std::size_t k = 0; k < config.spoof_counts.size(); ++k) {
        const int count = config.spoof_counts[k];
        labels.push_back("spoofs_" + std::to_string(count));
        auto part = parallel_map<ScenarioRun>(
            n, config.threads, [&](std::size_t s) { return run_spoof(config, env, count, k, s); });
        for (auto& r : part) runs.push_back(std::move(r));
      }
      break;
    }
    default: throw Error(ErrorCode::ConfigInvalid, "unknown experiment");
  }

  nlohmann::json per_scenario = nlohmann::json::array();
  for (auto& r : runs) {
    for (auto& c : r.contacts) rep.contacts.push_back(std::move(c));
    if (!r.details.is_null()) per_scenario.push_back(std::move(r.details));
  }
  if (!per_scenario.empty()) rep.details["scenarios"] = std::move(per_scenario);
  for (std::size_t k = 0; k < labels.size(); ++k) rep.sections.push_back(summarize(labels[k], rep.systems, rep.contacts, k));
  return rep;
}

nlohmann::json to_json(const ExperimentReport& rep) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["experiment"] = rep.experiment;
  j["scenarios"] = rep.scenarios;
  j["seed"] = rep.seed;
  j["scenario_seed_rule"] = "derive_seed(seed, scenario_index)";
  j["systems"] = rep.systems;
  nlohmann::json sections = nlohmann::json::array();
  for (const auto& sec : rep.sections) {
    nlohmann::json s;
    s["label"] = sec.label;
    s["contacts"] = sec.contacts;
    nlohmann::json systems = nlohmann::json::array();
    for (const auto& sys : sec.systems) {
      nlohmann::json o{{"name", sys.name}, {"metrics", to_json(sys.metrics)}};
      o["wilcoxon_vs_baseline"] = sys.wilcoxon_vs_baseline ? to_json(*sys.wilcoxon_vs_baseline) : nlohmann::json();
      systems.push_back(std::move(o));
    }
    s["systems"] = std::move(systems);
    nlohmann::json ps = nlohmann::json::array();
    for (const auto& p : sec.per_scenario) ps.push_back({{"scenario", p.scenario}, {"contacts", p.contacts}, {"mse", p.mse}});
    s["per_scenario"] = std::move(ps);
    sections.push_back(std::move(s));
  }
  j["sections"] = std::move(sections);
  j["details"] = rep.details;
  return j;
}

std::string traces_csv(const ExperimentReport& rep) {
  std::ostringstream out;
  out << kTraceCsvHeader << '\n';
  for (const auto& c : rep.contacts) {
    out << trace_csv_row(c.section * rep.scenarios + c.scenario, c.detection, c.trace) << '\n';
  }
  return out.str();
}

}  // namespace dfcr
