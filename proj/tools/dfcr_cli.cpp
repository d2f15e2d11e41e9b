// dfcr: experiment runner and attack artifact generator.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dfcr/ais_wire.hpp"
#include "dfcr/attacks.hpp"
#include "dfcr/error.hpp"
#include "dfcr/harness.hpp"
#include "dfcr/random.hpp"
#include "dfcr/render.hpp"
#include "dfcr/scenario_io.hpp"
#include "dfcr/selftest.hpp"
#include "json.hpp"

namespace {

constexpr int kExitConfig = 2;

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw dfcr::Error(dfcr::ErrorCode::ConfigInvalid, "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw dfcr::Error(dfcr::ErrorCode::ConfigInvalid, path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw dfcr::Error(dfcr::ErrorCode::Io, "cannot write " + path);
  out << text;
}

dfcr::SensorConfig sensor_from(const std::string& config_path) {
  if (config_path.empty()) return {};
  return dfcr::config_from_json(read_json(config_path)).sensor;
}

void print_summary(const dfcr::ExperimentReport& rep) {
  for (const auto& sec : rep.sections) {
    std::cout << sec.label << ": " << sec.contacts << " contacts\n";
    for (const auto& sys : sec.systems) {
      char line[160];
      std::snprintf(line, sizeof line, "  %-22s mse %.4f  rmse %.4f  mae %.4f", sys.name.c_str(), sys.metrics.mse,
                    sys.metrics.rmse, sys.metrics.mae);
      std::cout << line;
      if (sys.wilcoxon_vs_baseline) std::cout << "  p " << sys.wilcoxon_vs_baseline->p_value;
      std::cout << '\n';
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-sensor fusion confidence scoring: experiments and attack artifacts"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run one of the four experiments");
  int experiment = 1;
  int scenarios = 0;
  std::uint64_t seed = 1;
  std::string config_path, deltas_text, out_path, csv_path;
  unsigned threads = 0;
  run->add_option("--experiment", experiment, "1 clean, 2 perturbation, 3 patch, 4 spoofing")->required();
  run->add_option("--scenarios", scenarios, "Scenario count (default 300 for 1, 100 otherwise)");
  run->add_option("--seed", seed, "Base seed");
  run->add_option("--config", config_path, "JSON file with sensor_config and experiment settings");
  run->add_option("--deltas", deltas_text, "Adjustments per component, e.g. 0.4,0.3,0.3");
  run->add_option("--out", out_path, "JSON report path");
  run->add_option("--csv", csv_path, "Per-contact trace CSV path");
  run->add_option("--threads", threads, "Worker threads (0 = all cores)");

  // attack
  auto* attack = app.add_subcommand("attack", "Generate attack artifacts");
  attack->require_subcommand(1);
  std::string attack_out = "attack";
  std::string attack_config;
  std::uint64_t attack_seed = 1;

  auto* ea = attack->add_subcommand("ea", "Evolve a display perturbation (PGM + manifest)");
  ea->add_option("--out", attack_out, "Output prefix");
  ea->add_option("--seed", attack_seed, "Seed");
  ea->add_option("--config", attack_config, "JSON config");

  auto* pgd = attack->add_subcommand("pgd", "Craft a PGD patch on the optical frame (PGM + manifest)");
  pgd->add_option("--out", attack_out, "Output prefix");
  pgd->add_option("--seed", attack_seed, "Seed");
  pgd->add_option("--config", attack_config, "JSON config");

  auto* spoof = attack->add_subcommand("spoof", "Inject spoofed contacts (NMEA + scenario JSON)");
  int spoof_count = 1;
  std::string spoof_kind = "ais";
  std::string scenario_in;
  spoof->add_option("--count", spoof_count, "Number of spoofs")->check(CLI::IsMember({1, 3, 5}));
  spoof->add_option("--kind", spoof_kind, "ais, radar, both or mixed");
  spoof->add_option("--scenario", scenario_in, "Scenario JSON to inject into (default: empty scene)");
  spoof->add_option("--out", attack_out, "Output prefix");
  spoof->add_option("--seed", attack_seed, "Seed");

  // validate
  auto* validate = app.add_subcommand("validate", "Run the built-in oracle checks");
  bool self_test = false;
  validate->add_flag("--self-test", self_test, "Run the self-test suite")->required();

  // ais
  auto* ais = app.add_subcommand("ais", "AIVDM utilities");
  auto* decode = ais->add_subcommand("decode", "Decode a sentence file to JSON");
  ais->require_subcommand(1);
  std::string nmea_path;
  decode->add_option("file", nmea_path, "File with one sentence per line")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run) {
      dfcr::ExperimentConfig cfg;
      if (!config_path.empty()) cfg = dfcr::config_from_json(read_json(config_path));
      cfg.experiment = experiment;
      cfg.scenarios = scenarios;
      cfg.seed = seed;
      cfg.threads = threads;
      if (!deltas_text.empty()) cfg.deltas = dfcr::DeltaConfig::parse(deltas_text);
      const auto rep = dfcr::run_experiment(cfg);
      print_summary(rep);
      if (!out_path.empty()) write_text(out_path, dfcr::to_json(rep).dump(2) + "\n");
      if (!csv_path.empty()) write_text(csv_path, dfcr::traces_csv(rep));
      return 0;
    }

    if (*ea) {
      dfcr::ExperimentConfig cfg;
      if (!attack_config.empty()) cfg = dfcr::config_from_json(read_json(attack_config));
      const auto sc = dfcr::generate_scenario(attack_seed, cfg.sensor, cfg.generation);
      dfcr::ChartDisplayLayout layout;
      layout.range_m = cfg.sensor.radar_range_m;
      const auto display = dfcr::render_chart_display(sc, layout, dfcr::derive_seed(attack_seed, 2));
      const auto radar = dfcr::train_chart_scorer(layout, dfcr::ChartPanel::Radar, dfcr::derive_seed(attack_seed, 3));
      const auto aisp = dfcr::train_chart_scorer(layout, dfcr::ChartPanel::Ais, dfcr::derive_seed(attack_seed, 4));
      // middle of the forward sector
      const dfcr::WindowId cell{layout.rows / 2, layout.cols / 2};
      const auto rr = dfcr::chart_cell_rect(layout, dfcr::ChartPanel::Radar, cell);
      const auto ar = dfcr::chart_cell_rect(layout, dfcr::ChartPanel::Ais, cell);
      std::vector<dfcr::ObjectiveFn> objectives{
          [&](const dfcr::RasterImage& img) { return dfcr::window_confidence(radar, dfcr::extract_window(img, rr)); },
          [&](const dfcr::RasterImage& img) { return dfcr::window_confidence(aisp, dfcr::extract_window(img, ar)); }};
      auto ea_cfg = cfg.ea;
      ea_cfg.regions = {rr, ar};
      const auto res = dfcr::evolve_perturbation(display, objectives, ea_cfg, dfcr::derive_seed(attack_seed, 5));
      dfcr::write_pgm(attack_out + "_clean.pgm", display);
      dfcr::write_pgm(attack_out + ".pgm", res.adversarial);
      nlohmann::json manifest{{"attack", "ea"},
                              {"seed", attack_seed},
                              {"config",
                               {{"max_iterations", ea_cfg.max_iterations},
                                {"min_iterations", ea_cfg.min_iterations},
                                {"population_size", ea_cfg.population_size},
                                {"perturbation_epsilon", ea_cfg.perturbation_epsilon},
                                {"epsilon_decay", ea_cfg.epsilon_decay},
                                {"no_improvement_threshold", ea_cfg.no_improvement_threshold}}},
                              {"cell", {cell.row, cell.col}},
                              {"budget", res.budget},
                              {"generations", res.generations},
                              {"early_stopped", res.early_stopped},
                              {"final_objectives", res.best.fitness},
                              {"average_fitness", res.average_fitness}};
      write_text(attack_out + ".json", manifest.dump(2) + "\n");
      std::cout << "objectives radar " << res.best.fitness[0] << " ais " << res.best.fitness[1] << " after "
                << res.generations << " generations\n";
      return 0;
    }

    if (*pgd) {
      dfcr::ExperimentConfig cfg;
      if (!attack_config.empty()) cfg = dfcr::config_from_json(read_json(attack_config));
      const auto sc = dfcr::generate_scenario(attack_seed, cfg.sensor, cfg.generation);
      dfcr::OpticalLayout layout;
      const auto& cam = cfg.sensor.camera;
      const auto frame = dfcr::render_optical_frame(sc, layout, dfcr::derive_seed(attack_seed, 2));
      const auto data = dfcr::optical_training_windows(layout, cam, 591, 1182, dfcr::derive_seed(attack_seed, 3));
      dfcr::TrainConfig tc;
      tc.seed = dfcr::derive_seed(attack_seed, 4);
      const auto det = dfcr::train_toy_detector(data, dfcr::initial_params(layout.window_w, layout.window_h), tc).params;
      const dfcr::WindowId target{layout.grid_rows(cam) - 2, layout.grid_cols(cam) / 2};
      const auto adv = dfcr::pgd_window_attack(frame, det, target, cfg.pgd);
      const auto rect = dfcr::window_rect(det, target);
      const double before = dfcr::window_confidence(det, dfcr::extract_window(frame, rect));
      const double after = dfcr::window_confidence(det, dfcr::extract_window(adv, rect));
      dfcr::write_pgm(attack_out + "_clean.pgm", frame);
      dfcr::write_pgm(attack_out + ".pgm", adv);
      nlohmann::json manifest{{"attack", "pgd"},
                              {"seed", attack_seed},
                              {"config", {{"alpha", cfg.pgd.alpha}, {"iterations", cfg.pgd.iterations}, {"epsilon", cfg.pgd.epsilon}}},
                              {"window", {target.row, target.col}},
                              {"confidence_before", before},
                              {"final_objectives", {after}},
                              {"detector", dfcr::to_json(det)}};
      write_text(attack_out + ".json", manifest.dump(2) + "\n");
      std::cout << "window confidence " << before << " -> " << after << '\n';
      return 0;
    }

    if (*spoof) {
      const auto kind = dfcr::parse_spoof_kind(spoof_kind);
      if (!kind) throw dfcr::Error(dfcr::ErrorCode::ConfigInvalid, "unknown spoof kind '" + spoof_kind + "'");
      dfcr::Scenario base;
      if (!scenario_in.empty()) base = dfcr::scenario_from_json(read_json(scenario_in));
      const auto sc = dfcr::inject_spoofs(base, spoof_count, *kind, attack_seed);
      std::ostringstream nmea;
      for (const auto& o : sc.spoofed) {
        if (!o.carries_ais) continue;
        dfcr::ais::AisMessage pos;
        pos.msg_type = 1;
        pos.mmsi = o.ais_static->mmsi;
        const auto ll = dfcr::enu_to_latlon(o.position, sc.sensor_config.own_ship);
        pos.latitude_deg = ll.lat_deg;
        pos.longitude_deg = ll.lon_deg;
        pos.sog_knots = o.speed_knots;
        pos.cog_deg = o.course_deg;
        dfcr::ais::AisMessage stat;
        stat.msg_type = 5;
        stat.mmsi = o.ais_static->mmsi;
        stat.ship_type = o.ais_static->ship_type;
        stat.dim_to_bow = o.ais_static->dim_to_bow;
        stat.dim_to_stern = o.ais_static->dim_to_stern;
        stat.dim_to_port = o.ais_static->dim_to_port;
        stat.dim_to_starboard = o.ais_static->dim_to_starboard;
        stat.name = "MV NORTHERN STAR";
        for (const auto& m : {pos, stat})
          for (const auto& s : dfcr::ais::synthesize_spoof(m, {'B', static_cast<int>(o.id % 10), 60}))
            nmea << s.to_string() << "\r\n";
      }
      write_text(attack_out + ".nmea", nmea.str());
      write_text(attack_out + "_scenario.json", dfcr::to_json(sc).dump(2) + "\n");
      std::cout << sc.spoofed.size() << " spoofed objects written\n";
      return 0;
    }

    if (*validate) {
      return dfcr::run_self_test(std::cout) ? 0 : 1;
    }

    if (*decode) {
      std::ifstream in(nmea_path);
      if (!in) throw dfcr::Error(dfcr::ErrorCode::Io, "cannot open " + nmea_path);
      std::vector<std::string> lines;
      for (std::string line; std::getline(in, line);) lines.push_back(line);
      nlohmann::json out = nlohmann::json::array();
      for (const auto& m : dfcr::ais::decode_stream(lines)) {
        nlohmann::json j{{"type", m.msg_type}, {"mmsi", m.mmsi}};
        if (m.msg_type == 5) {
          j["ship_type"] = m.ship_type;
          j["name"] = m.name;
          j["length_m"] = m.reported_length();
          j["width_m"] = m.reported_width();
        } else {
          j["lat"] = m.latitude_deg;
          j["lon"] = m.longitude_deg;
          j["sog_knots"] = m.sog_knots;
          j["cog_deg"] = m.cog_deg;
        }
        out.push_back(std::move(j));
      }
      std::cout << out.dump(2) << '\n';
      return 0;
    }
  } catch (const dfcr::Error& e) {
    std::cerr << "dfcr: " << e.what() << '\n';
    return e.code() == dfcr::ErrorCode::ConfigInvalid ? kExitConfig : 1;
  } catch (const std::exception& e) {
    std::cerr << "dfcr: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
