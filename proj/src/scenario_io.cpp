#include "dfcr/scenario_io.hpp"

#include <fstream>

#include "dfcr/error.hpp"

namespace dfcr {

using nlohmann::json;

namespace {

json vec_json(const Vec2& v) { return json::array({v.x(), v.y()}); }

Vec2 vec_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::ConfigInvalid, "expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

json ais_json(const AisStaticData& s) {
  return {{"mmsi", s.mmsi},
          {"ship_type", s.ship_type},
          {"dim_to_bow", s.dim_to_bow},
          {"dim_to_stern", s.dim_to_stern},
          {"dim_to_port", s.dim_to_port},
          {"dim_to_starboard", s.dim_to_starboard}};
}

AisStaticData ais_from(const json& j) {
  AisStaticData s;
  s.mmsi = j.at("mmsi").get<std::uint32_t>();
  s.ship_type = j.value("ship_type", 0);
  s.dim_to_bow = j.value("dim_to_bow", 0);
  s.dim_to_stern = j.value("dim_to_stern", 0);
  s.dim_to_port = j.value("dim_to_port", 0);
  s.dim_to_starboard = j.value("dim_to_starboard", 0);
  if (!s.is_valid()) throw Error(ErrorCode::ConfigInvalid, "invalid ais_static block");
  return s;
}

json blob_json(const RadarBlob& b) {
  return {{"centroid", vec_json(b.centroid)}, {"extent_major", b.extent_major}, {"extent_minor", b.extent_minor}};
}

RadarBlob blob_from(const json& j) {
  RadarBlob b;
  if (j.contains("centroid")) b.centroid = vec_from(j["centroid"]);
  b.extent_major = j.at("extent_major").get<double>();
  b.extent_minor = j.at("extent_minor").get<double>();
  if (!b.is_valid()) throw Error(ErrorCode::ConfigInvalid, "invalid radar_signature block");
  return b;
}

}  // namespace

json to_json(const SensorConfig& c) {
  json pts = json::array();
  for (const auto& p : c.calibration_points) {
    pts.push_back({{"chart", vec_json(p.source)}, {"image", vec_json(p.target)}});
  }
  return {{"radar_range_m", c.radar_range_m},
          {"optical_range_m", c.optical_range_m},
          {"ais_range_m", c.ais_range_m},
          {"camera_fov_deg", c.camera.horizontal_fov_deg},
          {"camera_height_m", c.camera.mount_height_m},
          {"camera_pitch_deg", c.camera.pitch_down_deg},
          {"image_width", c.camera.image_width},
          {"image_height", c.camera.image_height},
          {"own_ship", {{"lat", c.own_ship.lat_deg}, {"lon", c.own_ship.lon_deg}}},
          {"calibration_points", pts}};
}

SensorConfig sensor_config_from_json(const json& j) {
  SensorConfig c;
  try {
    c.radar_range_m = j.value("radar_range_m", c.radar_range_m);
    c.optical_range_m = j.value("optical_range_m", c.optical_range_m);
    c.ais_range_m = j.value("ais_range_m", c.ais_range_m);
    c.camera.horizontal_fov_deg = j.value("camera_fov_deg", c.camera.horizontal_fov_deg);
    c.camera.mount_height_m = j.value("camera_height_m", c.camera.mount_height_m);
    c.camera.pitch_down_deg = j.value("camera_pitch_deg", c.camera.pitch_down_deg);
    c.camera.image_width = j.value("image_width", c.camera.image_width);
    c.camera.image_height = j.value("image_height", c.camera.image_height);
    if (j.contains("own_ship")) {
      c.own_ship.lat_deg = j["own_ship"].at("lat").get<double>();
      c.own_ship.lon_deg = j["own_ship"].at("lon").get<double>();
    }
    if (j.contains("calibration_points")) {
      for (const auto& p : j["calibration_points"]) {
        c.calibration_points.push_back({vec_from(p.at("chart")), vec_from(p.at("image"))});
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("sensor_config: ") + e.what());
  }
  c.validate();
  return c;
}

json to_json(const GroundTruthObject& o) {
  json j = {{"id", o.id},
            {"class", std::string(to_string(o.class_label))},
            {"position", vec_json(o.position)},
            {"length", o.length},
            {"width", o.width},
            {"carries_ais", o.carries_ais},
            {"radar_reflective", o.radar_reflective},
            {"optically_visible", o.optically_visible},
            {"speed_knots", o.speed_knots},
            {"course_deg", o.course_deg}};
  if (o.ais_static) j["ais_static"] = ais_json(*o.ais_static);
  if (o.radar_signature) j["radar_signature"] = blob_json(*o.radar_signature);
  return j;
}

GroundTruthObject object_from_json(const json& j) {
  GroundTruthObject o;
  try {
    o.id = j.at("id").get<std::uint32_t>();
    const auto cls = parse_object_class(j.at("class").get<std::string>());
    if (!cls) throw Error(ErrorCode::ConfigInvalid, "unknown object class");
    o.class_label = *cls;
    o.position = vec_from(j.at("position"));
    o.length = j.at("length").get<double>();
    o.width = j.at("width").get<double>();
    o.carries_ais = j.value("carries_ais", false);
    o.radar_reflective = j.value("radar_reflective", true);
    o.optically_visible = j.value("optically_visible", true);
    o.speed_knots = j.value("speed_knots", 0.0);
    o.course_deg = j.value("course_deg", 0.0);
    if (j.contains("ais_static")) o.ais_static = ais_from(j["ais_static"]);
    if (j.contains("radar_signature")) o.radar_signature = blob_from(j["radar_signature"]);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("object: ") + e.what());
  }
  if (!o.is_valid()) throw Error(ErrorCode::ConfigInvalid, "object violates invariants");
  return o;
}

json to_json(const Scenario& s) {
  json objs = json::array(), spoofs = json::array(), labels = json::object();
  for (const auto& o : s.objects) objs.push_back(to_json(o));
  for (const auto& o : s.spoofed) spoofs.push_back(to_json(o));
  for (const auto& [id, v] : s.truth_labels) labels[std::to_string(id)] = v;
  return {{"seed", s.seed},
          {"objects", objs},
          {"spoofed", spoofs},
          {"truth_labels", labels},
          {"sensor_config", to_json(s.sensor_config)}};
}

Scenario scenario_from_json(const json& j) {
  Scenario s;
  try {
    s.seed = j.value("seed", std::uint64_t{0});
    s.sensor_config = sensor_config_from_json(j.value("sensor_config", json::object()));
    for (const auto& o : j.value("objects", json::array())) s.objects.push_back(object_from_json(o));
    for (const auto& o : j.value("spoofed", json::array())) s.spoofed.push_back(object_from_json(o));
    for (const auto& o : s.objects) s.truth_labels[o.id] = 1.0;
    for (const auto& o : s.spoofed) s.truth_labels[o.id] = 0.0;
    if (j.contains("truth_labels")) {
      for (const auto& [key, v] : j["truth_labels"].items()) {
        s.truth_labels[static_cast<std::uint32_t>(std::stoul(key))] = v.get<double>();
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("scenario: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw Error(ErrorCode::ConfigInvalid, "scenario: truth_labels keys must be object ids");
  }
  for (const auto& o : s.spoofed) {
    if (s.truth_labels[o.id] != 0.0) throw Error(ErrorCode::ConfigInvalid, "spoofed object must have truth label 0");
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigInvalid, "cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, path.string() + ": " + e.what());
  }
  return scenario_from_json(j);
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << to_json(scenario).dump(2) << '\n';
}

}  // namespace dfcr
