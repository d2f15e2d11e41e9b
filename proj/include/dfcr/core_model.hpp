#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dfcr/geometry.hpp"

namespace dfcr {

enum class SensorKind : std::uint8_t { Ais = 0, Radar = 1, Optical = 2 };

inline constexpr std::array<SensorKind, 3> kAllSensors{SensorKind::Ais, SensorKind::Radar,
                                                        SensorKind::Optical};

/// Fixed bijection m in {1,2,3} <-> {AIS, Radar, Optical}.
constexpr int sensor_number(SensorKind s) { return static_cast<int>(s) + 1; }
SensorKind sensor_from_number(int m);
std::string_view to_string(SensorKind s);
std::optional<SensorKind> parse_sensor(std::string_view name);

enum class ObjectClass : std::uint8_t { Boat, Tanker, Buoy, AisContact, RadarContact };

std::string_view to_string(ObjectClass c);
std::optional<ObjectClass> parse_object_class(std::string_view name);

/// Axis-aligned box in the owning sensor's coordinate space. AIS and radar
/// boxes live on the chart plane (meters, x = East, y = North); optical boxes
/// live in image pixels (y grows downward).
struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  Vec2 center() const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }
  /// Waterline anchor of an optical box.
  Vec2 bottom_center() const { return {0.5 * (x_min + x_max), y_max}; }
  bool is_valid() const;

  static BoundingBox centered(const Vec2& c, double w, double h) {
    return {c.x() - 0.5 * w, c.y() - 0.5 * h, c.x() + 0.5 * w, c.y() + 0.5 * h};
  }
};

struct AisStaticData {
  std::uint32_t mmsi = 0;
  int ship_type = 0;
  int dim_to_bow = 0;
  int dim_to_stern = 0;
  int dim_to_port = 0;
  int dim_to_starboard = 0;

  int reported_length() const { return dim_to_bow + dim_to_stern; }
  int reported_width() const { return dim_to_port + dim_to_starboard; }
  bool is_valid() const;

  bool operator==(const AisStaticData&) const = default;
};

struct RadarBlob {
  Vec2 centroid = Vec2::Zero();  // chart meters
  double extent_major = 1.0;
  double extent_minor = 1.0;

  bool is_valid() const;
};

/// Sensor-specific side data carried with a detection: decoded AIS static
/// data for AIS contacts, the return signature for radar contacts.
struct ContactMetadata {
  std::optional<AisStaticData> ais;
  std::optional<RadarBlob> radar;
};

/// One detection from one sensor model: (m, i, C_{m,i}, BB_{m,i}, Class_{m,i}).
struct DetectionVector {
  SensorKind sensor = SensorKind::Optical;
  std::size_t contact_index = 0;
  double confidence = 0.0;
  BoundingBox bbox;
  ObjectClass class_label = ObjectClass::Boat;
  ContactMetadata metadata;
};

struct RawDetection {
  SensorKind sensor = SensorKind::Optical;
  double confidence = 0.0;
  BoundingBox bbox;
  ObjectClass class_label = ObjectClass::Boat;
  ContactMetadata metadata;
};

/// Packs raw detector output into feature vectors, assigning contact indices
/// densely per sensor in input order. Throws InvalidArgument on confidence
/// outside [0,1] or a degenerate box.
std::vector<DetectionVector> build_feature_vectors(std::span<const RawDetection> raw);

struct GroundTruthObject {
  std::uint32_t id = 0;
  ObjectClass class_label = ObjectClass::Boat;
  Vec2 position = Vec2::Zero();  // local ENU meters, own-ship at origin
  double length = 10.0;
  double width = 3.0;
  bool carries_ais = false;
  std::optional<AisStaticData> ais_static;
  bool radar_reflective = true;
  bool optically_visible = true;
  /// Attacker-chosen return for spoofed radar contacts; genuine objects
  /// reflect their physical size.
  std::optional<RadarBlob> radar_signature;
  /// Speed and course broadcast in position reports.
  double speed_knots = 0.0;
  double course_deg = 0.0;

  bool is_valid() const;
};

struct LatLon {
  double lat_deg = 0.0;
  double lon_deg = 0.0;
};

/// Flat-earth conversion around own-ship, adequate for sub-10 km scenarios.
LatLon enu_to_latlon(const Vec2& enu, const LatLon& origin);
Vec2 latlon_to_enu(const LatLon& ll, const LatLon& origin);

struct SensorConfig {
  double radar_range_m = 1500.0;
  double optical_range_m = 1000.0;
  double ais_range_m = 10000.0;
  CameraModel camera;
  LatLon own_ship{50.3300, -4.1700};
  /// Chart (ENU meters) to image pixel correspondences for homography
  /// calibration. Empty means: synthesize exact points from `camera`.
  std::vector<PointCorrespondence> calibration_points;

  void validate() const;  // throws ConfigInvalid
};

/// Calibration points taken from the camera model on a grid of visible sea
/// points.
std::vector<PointCorrespondence> synthesize_calibration_points(const CameraModel& camera);

/// Estimates the chart->image map from the configured (or synthesized)
/// calibration points.
ChartImageMap calibrate_chart_image_map(const SensorConfig& config);

struct Scenario {
  std::uint64_t seed = 0;
  std::vector<GroundTruthObject> objects;
  std::vector<GroundTruthObject> spoofed;
  SensorConfig sensor_config;
  /// object id -> 1.0 genuine, 0.0 spoofed
  std::map<std::uint32_t, double> truth_labels;

  const GroundTruthObject* find_object(std::uint32_t id) const;
  std::uint32_t next_object_id() const;
};

struct ScenarioGenParams {
  int min_objects = 2;
  int max_objects = 6;
  double min_range_m = 250.0;
  double max_bearing_deg = 75.0;
  double min_separation_m = 300.0;
  double ais_fraction_boats = 0.6;
};

/// Random genuine-object scenario; byte-identical for identical seeds.
Scenario generate_scenario(std::uint64_t seed, const SensorConfig& config,
                           const ScenarioGenParams& params = {});

/// Position of a detection on the chart plane: box centre for AIS and radar,
/// back-projected waterline anchor for optical. Empty when the optical anchor
/// does not intersect the sea plane.
std::optional<Vec2> chart_position(const DetectionVector& det, const ChartImageMap& map);

/// Nearest-neighbour association of detections to truth (genuine or spoofed)
/// objects visible to that detection's sensor, within `gate_m` meters.
std::vector<std::optional<std::uint32_t>> associate_truth(const Scenario& scenario,
                                                          std::span<const DetectionVector> detections,
                                                          const ChartImageMap& map, double gate_m = 60.0);

/// 1.0 for detections mapped to genuine objects, 0.0 for spoofed objects or
/// no object.
std::vector<double> truth_vector(const Scenario& scenario, std::span<const DetectionVector> detections,
                                 std::span<const std::optional<std::uint32_t>> association);

bool object_visible_to(const GroundTruthObject& obj, SensorKind sensor);

}  // namespace dfcr
