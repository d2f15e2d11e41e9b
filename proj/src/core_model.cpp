#include "dfcr/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "dfcr/error.hpp"
#include "dfcr/random.hpp"

namespace dfcr {

namespace {
constexpr double kEarthRadiusM = 6371008.8;
constexpr double kDegToRad = std::numbers::pi / 180.0;
}  // namespace

SensorKind sensor_from_number(int m) {
  if (m < 1 || m > 3) throw Error(ErrorCode::InvalidArgument, "sensor number must be 1, 2 or 3");
  return static_cast<SensorKind>(m - 1);
}

std::string_view to_string(SensorKind s) {
  switch (s) {
    case SensorKind::Ais: return "AIS";
    case SensorKind::Radar: return "Radar";
    case SensorKind::Optical: return "Optical";
  }
  return "?";
}

std::optional<SensorKind> parse_sensor(std::string_view name) {
  for (auto s : kAllSensors) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

std::string_view to_string(ObjectClass c) {
  switch (c) {
    case ObjectClass::Boat: return "Boat";
    case ObjectClass::Tanker: return "Tanker";
    case ObjectClass::Buoy: return "Buoy";
    case ObjectClass::AisContact: return "AisContact";
    case ObjectClass::RadarContact: return "RadarContact";
  }
  return "?";
}

std::optional<ObjectClass> parse_object_class(std::string_view name) {
  for (auto c : {ObjectClass::Boat, ObjectClass::Tanker, ObjectClass::Buoy, ObjectClass::AisContact,
                 ObjectClass::RadarContact}) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

bool BoundingBox::is_valid() const {
  return std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) && std::isfinite(y_max) &&
         x_min < x_max && y_min < y_max;
}

bool AisStaticData::is_valid() const {
  return mmsi < 1'000'000'000u && dim_to_bow >= 0 && dim_to_stern >= 0 && dim_to_port >= 0 &&
         dim_to_starboard >= 0;
}

bool RadarBlob::is_valid() const {
  return centroid.allFinite() && extent_minor > 0.0 && extent_major >= extent_minor;
}

bool GroundTruthObject::is_valid() const {
  if (!(length > 0.0 && width > 0.0) || !position.allFinite()) return false;
  if (carries_ais && !ais_static) return false;
  return true;
}

std::vector<DetectionVector> build_feature_vectors(std::span<const RawDetection> raw) {
  std::array<std::size_t, 3> next{0, 0, 0};
  std::vector<DetectionVector> out;
  out.reserve(raw.size());
  for (const auto& r : raw) {
    if (!(r.confidence >= 0.0 && r.confidence <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "confidence outside [0,1]");
    }
    if (!r.bbox.is_valid()) throw Error(ErrorCode::InvalidArgument, "degenerate bounding box");
    DetectionVector d;
    d.sensor = r.sensor;
    d.contact_index = next[static_cast<std::size_t>(r.sensor)]++;
    d.confidence = r.confidence;
    d.bbox = r.bbox;
    d.class_label = r.class_label;
    d.metadata = r.metadata;
    out.push_back(std::move(d));
  }
  return out;
}

LatLon enu_to_latlon(const Vec2& enu, const LatLon& origin) {
  const double dlat = enu.y() / kEarthRadiusM;
  const double dlon = enu.x() / (kEarthRadiusM * std::cos(origin.lat_deg * kDegToRad));
  return {origin.lat_deg + dlat / kDegToRad, origin.lon_deg + dlon / kDegToRad};
}

Vec2 latlon_to_enu(const LatLon& ll, const LatLon& origin) {
  const double n = (ll.lat_deg - origin.lat_deg) * kDegToRad * kEarthRadiusM;
  const double e = (ll.lon_deg - origin.lon_deg) * kDegToRad * kEarthRadiusM * std::cos(origin.lat_deg * kDegToRad);
  return {e, n};
}

void SensorConfig::validate() const {
  auto fail = [](const char* what) { throw Error(ErrorCode::ConfigInvalid, what); };
  if (!(radar_range_m > 0.0)) fail("radar_range_m must be positive");
  if (!(optical_range_m > 0.0)) fail("optical_range_m must be positive");
  if (!(ais_range_m > 0.0)) fail("ais_range_m must be positive");
  if (!(camera.horizontal_fov_deg > 0.0 && camera.horizontal_fov_deg < 180.0)) fail("camera_fov_deg must be in (0,180)");
  if (camera.image_width <= 0 || camera.image_height <= 0) fail("image dimensions must be positive");
  if (!(camera.mount_height_m > 0.0)) fail("camera height must be positive");
  if (!(camera.pitch_down_deg > 0.0 && camera.pitch_down_deg < 89.0)) fail("camera pitch must be in (0,89)");
  if (!calibration_points.empty() && calibration_points.size() < 4) fail("need at least 4 calibration points");
  if (std::abs(own_ship.lat_deg) > 85.0 || std::abs(own_ship.lon_deg) > 180.0) fail("own-ship position invalid");
}

std::vector<PointCorrespondence> synthesize_calibration_points(const CameraModel& camera) {
  const Homography h(camera.sea_to_image());
  std::vector<PointCorrespondence> pts;
  for (double north : {100.0, 200.0, 400.0, 800.0}) {
    for (double frac : {-0.6, -0.2, 0.2, 0.6}) {
      const double half_fov = camera.horizontal_fov_deg * kDegToRad / 2.0;
      const Vec2 chart(north * std::tan(half_fov) * frac, north);
      pts.push_back({chart, project_point(h, chart)});
    }
  }
  return pts;
}

ChartImageMap calibrate_chart_image_map(const SensorConfig& config) {
  const auto pts = config.calibration_points.empty() ? synthesize_calibration_points(config.camera)
                                                     : config.calibration_points;
  const auto est = estimate_homography(pts);
  Vec2 ref = Vec2::Zero();
  for (const auto& p : pts) ref += p.source;
  ref /= static_cast<double>(pts.size());
  return ChartImageMap(est.homography, ref);
}

const GroundTruthObject* Scenario::find_object(std::uint32_t id) const {
  for (const auto& o : objects)
    if (o.id == id) return &o;
  for (const auto& o : spoofed)
    if (o.id == id) return &o;
  return nullptr;
}

std::uint32_t Scenario::next_object_id() const {
  std::uint32_t next = 1;
  for (const auto& o : objects) next = std::max(next, o.id + 1);
  for (const auto& o : spoofed) next = std::max(next, o.id + 1);
  return next;
}

namespace {

GroundTruthObject make_object(std::uint32_t id, ObjectClass cls, Rng& rng, double ais_fraction) {
  GroundTruthObject o;
  o.id = id;
  o.class_label = cls;
  switch (cls) {
    case ObjectClass::Tanker:
      o.length = uniform(rng, 150.0, 300.0);
      o.width = o.length * uniform(rng, 0.13, 0.18);
      o.carries_ais = true;
      o.speed_knots = uniform(rng, 5.0, 14.0);
      break;
    case ObjectClass::Buoy:
      o.length = uniform(rng, 1.5, 3.0);
      o.width = o.length;
      o.carries_ais = false;
      break;
    default:
      o.length = uniform(rng, 6.0, 40.0);
      o.width = o.length * uniform(rng, 0.25, 0.4);
      o.carries_ais = uniform(rng, 0.0, 1.0) < ais_fraction;
      o.speed_knots = uniform(rng, 0.0, 20.0);
      break;
  }
  o.course_deg = uniform(rng, 0.0, 359.9);
  if (o.carries_ais) {
    AisStaticData s;
    s.mmsi = static_cast<std::uint32_t>(uniform_int(rng, 200'000'000, 775'999'999));
    s.ship_type = cls == ObjectClass::Tanker ? 80 : 37;
    const int len = std::max(1, static_cast<int>(std::lround(o.length)));
    const int wid = std::max(1, static_cast<int>(std::lround(o.width)));
    s.dim_to_bow = len - len / 3;
    s.dim_to_stern = len / 3;
    s.dim_to_port = wid / 2;
    s.dim_to_starboard = wid - wid / 2;
    o.ais_static = s;
  }
  return o;
}

}  // namespace

Scenario generate_scenario(std::uint64_t seed, const SensorConfig& config, const ScenarioGenParams& params) {
  config.validate();
  Rng rng(seed);
  Scenario sc;
  sc.seed = seed;
  sc.sensor_config = config;
  const int count = static_cast<int>(uniform_int(rng, params.min_objects, params.max_objects));
  const double max_range = 0.95 * config.radar_range_m;
  std::uint32_t id = 1;
  for (int k = 0; k < count; ++k) {
    const double u = uniform(rng, 0.0, 1.0);
    const ObjectClass cls = u < 0.2 ? ObjectClass::Tanker : (u < 0.4 ? ObjectClass::Buoy : ObjectClass::Boat);
    GroundTruthObject obj = make_object(id, cls, rng, params.ais_fraction_boats);
    bool placed = false;
    for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
      // area-uniform over the annular sector
      const double r = std::sqrt(uniform(rng, params.min_range_m * params.min_range_m, max_range * max_range));
      const double b = uniform(rng, -params.max_bearing_deg, params.max_bearing_deg) * kDegToRad;
      const Vec2 p(r * std::sin(b), r * std::cos(b));
      const bool clear = std::all_of(sc.objects.begin(), sc.objects.end(), [&](const auto& o) {
        return (o.position - p).norm() >= params.min_separation_m;
      });
      if (clear) {
        obj.position = p;
        placed = true;
      }
    }
    if (!placed) continue;
    sc.truth_labels[obj.id] = 1.0;
    sc.objects.push_back(std::move(obj));
    ++id;
  }
  return sc;
}

std::optional<Vec2> chart_position(const DetectionVector& det, const ChartImageMap& map) {
  if (det.sensor == SensorKind::Optical) return map.to_chart(det.bbox.bottom_center());
  return det.bbox.center();
}

bool object_visible_to(const GroundTruthObject& obj, SensorKind sensor) {
  switch (sensor) {
    case SensorKind::Ais: return obj.carries_ais;
    case SensorKind::Radar: return obj.radar_reflective;
    case SensorKind::Optical: return obj.optically_visible;
  }
  return false;
}

std::vector<std::optional<std::uint32_t>> associate_truth(const Scenario& scenario,
                                                          std::span<const DetectionVector> detections,
                                                          const ChartImageMap& map, double gate_m) {
  std::vector<std::optional<std::uint32_t>> out;
  out.reserve(detections.size());
  for (const auto& det : detections) {
    const auto pos = chart_position(det, map);
    std::optional<std::uint32_t> best;
    double best_d = gate_m;
    if (pos) {
      auto consider = [&](const GroundTruthObject& o) {
        if (!object_visible_to(o, det.sensor)) return;
        const double d = (o.position - *pos).norm();
        if (d <= best_d) {
          best_d = d;
          best = o.id;
        }
      };
      for (const auto& o : scenario.objects) consider(o);
      for (const auto& o : scenario.spoofed) consider(o);
    }
    out.push_back(best);
  }
  return out;
}

std::vector<double> truth_vector(const Scenario& scenario, std::span<const DetectionVector> detections,
                                 std::span<const std::optional<std::uint32_t>> association) {
  std::vector<double> out(detections.size(), 0.0);
  for (std::size_t i = 0; i < detections.size() && i < association.size(); ++i) {
    if (!association[i]) continue;
    const auto it = scenario.truth_labels.find(*association[i]);
    out[i] = (it != scenario.truth_labels.end() && it->second == 1.0) ? 1.0 : 0.0;
  }
  return out;
}

}  // namespace dfcr
