#include "dfcr/detector_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "dfcr/ais_wire.hpp"
#include "dfcr/error.hpp"
#include "dfcr/random.hpp"

namespace dfcr {

RasterImage::RasterImage(int width, int height, double fill) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidArgument, "raster dimensions must be positive");
  data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

void RasterImage::clip() {
  for (auto& v : data_) v = std::clamp(v, 0.0, 255.0);
}

bool RasterImage::within_bounds() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return v >= 0.0 && v <= 255.0; });
}

std::vector<double> extract_window(const RasterImage& img, const PixelRect& rect) {
  if (!rect.fits(img)) throw Error(ErrorCode::InvalidArgument, "window outside image");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(rect.w * rect.h));
  for (int y = rect.y; y < rect.y + rect.h; ++y)
    for (int x = rect.x; x < rect.x + rect.w; ++x) out.push_back(img.at(x, y));
  return out;
}

void paste_window(RasterImage& img, const PixelRect& rect, std::span<const double> pixels) {
  if (!rect.fits(img) || pixels.size() != static_cast<std::size_t>(rect.w * rect.h)) {
    throw Error(ErrorCode::InvalidArgument, "window does not fit");
  }
  std::size_t k = 0;
  for (int y = rect.y; y < rect.y + rect.h; ++y)
    for (int x = rect.x; x < rect.x + rect.w; ++x) img.at(x, y) = pixels[k++];
}

void ToyDetectorParams::validate() const {
  if (window_w <= 0 || window_h <= 0) throw Error(ErrorCode::InvalidArgument, "window must be non-empty");
  if (weights.size() != window_size()) throw Error(ErrorCode::DimensionMismatch, "weights do not match window size");
  if (!(detect_threshold > 0.0 && detect_threshold < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "detect threshold must lie in (0,1)");
  }
}

PixelRect window_rect(const ToyDetectorParams& params, WindowId id) {
  return {id.col * params.window_w, id.row * params.window_h, params.window_w, params.window_h};
}

double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double window_confidence(const ToyDetectorParams& params, std::span<const double> window_pixels) {
  double z = params.bias;
  for (std::size_t i = 0; i < params.weights.size(); ++i) z += params.weights[i] * window_pixels[i] / 255.0;
  return logistic(z);
}

ConfidenceMap toy_optical_forward(const RasterImage& image, const ToyDetectorParams& params) {
  params.validate();
  if (image.width() < params.window_w || image.height() < params.window_h) {
    throw Error(ErrorCode::ImageSmallerThanWindow, "image smaller than detector window");
  }
  ConfidenceMap map;
  map.rows = image.height() / params.window_h;
  map.cols = image.width() / params.window_w;
  map.values.reserve(static_cast<std::size_t>(map.rows * map.cols));
  for (int r = 0; r < map.rows; ++r) {
    for (int c = 0; c < map.cols; ++c) {
      map.values.push_back(window_confidence(params, extract_window(image, window_rect(params, {r, c}))));
    }
  }
  return map;
}

RasterImage toy_optical_gradient(const RasterImage& image, const ToyDetectorParams& params, WindowId target) {
  params.validate();
  const PixelRect rect = window_rect(params, target);
  if (!rect.fits(image)) throw Error(ErrorCode::InvalidArgument, "target window outside image");
  const double c = window_confidence(params, extract_window(image, rect));
  RasterImage grad(image.width(), image.height(), 0.0);
  std::size_t k = 0;
  for (int y = rect.y; y < rect.y + rect.h; ++y)
    for (int x = rect.x; x < rect.x + rect.w; ++x) grad.at(x, y) = c * (1.0 - c) * params.weights[k++] / 255.0;
  return grad;
}

double mean_bce(const ToyDetectorParams& params, std::span<const LabeledWindow> dataset) {
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "no windows");
  double loss = 0.0;
  for (const auto& s : dataset) {
    const double p = std::clamp(window_confidence(params, s.pixels), 1e-15, 1.0 - 1e-15);
    loss -= s.label == 1 ? std::log(p) : std::log(1.0 - p);
  }
  return loss / static_cast<double>(dataset.size());
}

double accuracy(const ToyDetectorParams& params, std::span<const LabeledWindow> dataset) {
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "no windows");
  std::size_t ok = 0;
  for (const auto& s : dataset) {
    const int predicted = window_confidence(params, s.pixels) >= params.detect_threshold ? 1 : 0;
    if (predicted == s.label) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(dataset.size());
}

TrainResult train_toy_detector(std::span<const LabeledWindow> dataset, const ToyDetectorParams& init,
                               const TrainConfig& config) {
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "training set is empty");
  init.validate();
  if (config.batch_size < 1 || config.epochs < 0 || !(config.learning_rate > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "invalid training configuration");
  }
  for (const auto& s : dataset) {
    if (s.pixels.size() != init.window_size()) throw Error(ErrorCode::DimensionMismatch, "window size mismatch");
    if (s.label != 0 && s.label != 1) throw Error(ErrorCode::InvalidArgument, "labels must be 0 or 1");
  }

  TrainResult result{init, {}};
  auto& p = result.params;
  Rng rng(config.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> grad_w(p.weights.size());

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // Fisher-Yates with the portable integer draw.
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i - 1)))]);
    }
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::fill(grad_w.begin(), grad_w.end(), 0.0);
      double grad_b = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const auto& s = dataset[order[k]];
        const double err = window_confidence(p, s.pixels) - s.label;
        for (std::size_t i = 0; i < grad_w.size(); ++i) grad_w[i] += err * s.pixels[i] / 255.0;
        grad_b += err;
      }
      const double step = config.learning_rate / static_cast<double>(end - start);
      for (std::size_t i = 0; i < grad_w.size(); ++i) p.weights[i] -= step * grad_w[i];
      p.bias -= step * grad_b;
    }
    result.loss_history.push_back(mean_bce(p, dataset));
  }
  return result;
}

nlohmann::json to_json(const ToyDetectorParams& p) {
  return {{"window", {p.window_w, p.window_h}},
          {"weights", p.weights},
          {"bias", p.bias},
          {"detect_threshold", p.detect_threshold}};
}

ToyDetectorParams toy_params_from_json(const nlohmann::json& j) {
  ToyDetectorParams p;
  try {
    p.window_w = j.at("window").at(0).get<int>();
    p.window_h = j.at("window").at(1).get<int>();
    p.weights = j.at("weights").get<std::vector<double>>();
    p.bias = j.at("bias").get<double>();
    p.detect_threshold = j.value("detect_threshold", kDetectThreshold);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("detector params: ") + e.what());
  }
  p.validate();
  return p;
}

void write_pgm(const std::filesystem::path& path, const RasterImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
  for (double v : image.data()) {
    out.put(static_cast<char>(static_cast<unsigned char>(std::clamp(std::lround(v), 0L, 255L))));
  }
}

RasterImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P5" || w <= 0 || h <= 0 || maxval != 255) throw Error(ErrorCode::Io, "unsupported PGM header");
  in.get();
  RasterImage img(w, h);
  for (auto& v : img.data()) {
    const int c = in.get();
    if (c == EOF) throw Error(ErrorCode::Io, "truncated PGM");
    v = static_cast<double>(c);
  }
  return img;
}

void DetectorNoise::validate() const {
  if (!(confidence_sigma >= 0.0) || !(dropout_prob >= 0.0 && dropout_prob < 1.0) || !(false_positive_rate >= 0.0) ||
      !(position_sigma_m >= 0.0) || !(pixel_sigma >= 0.0) || !(extent_jitter >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "invalid detector noise");
  }
}

namespace {

struct SensorResponse {
  double base;
  double falloff;
};

SensorResponse response_of(SensorKind s) {
  switch (s) {
    case SensorKind::Ais: return {0.85, 0.10};
    case SensorKind::Radar: return {0.80, 0.25};
    case SensorKind::Optical: return {0.85, 0.35};
  }
  return {0.8, 0.2};
}

double sensor_range(const SensorConfig& c, SensorKind s) {
  switch (s) {
    case SensorKind::Ais: return c.ais_range_m;
    case SensorKind::Radar: return c.radar_range_m;
    case SensorKind::Optical: return c.optical_range_m;
  }
  return 0.0;
}

double draw_confidence(Rng& rng, SensorKind s, double range, double max_range, const DetectorNoise& noise) {
  const auto r = response_of(s);
  double c = r.base - r.falloff * range / max_range;
  if (noise.confidence_sigma > 0.0) c += normal(rng, 0.0, noise.confidence_sigma);
  return std::clamp(c, 0.0, 1.0);
}

// Round-trips the object's broadcast through the AIVDM wire format.
std::optional<RawDetection> ais_detection(const GroundTruthObject& o, const SensorConfig& cfg, double confidence) {
  ais::AisMessage pos;
  pos.msg_type = 1;
  pos.mmsi = o.ais_static->mmsi;
  const LatLon ll = enu_to_latlon(o.position, cfg.own_ship);
  pos.latitude_deg = ll.lat_deg;
  pos.longitude_deg = ll.lon_deg;
  pos.sog_knots = std::clamp(o.speed_knots, 0.0, 102.2);
  pos.cog_deg = std::clamp(o.course_deg, 0.0, 359.9);

  ais::AisMessage stat;
  stat.msg_type = 5;
  stat.mmsi = o.ais_static->mmsi;
  stat.ship_type = o.ais_static->ship_type;
  stat.dim_to_bow = std::min(o.ais_static->dim_to_bow, 511);
  stat.dim_to_stern = std::min(o.ais_static->dim_to_stern, 511);
  stat.dim_to_port = std::min(o.ais_static->dim_to_port, 63);
  stat.dim_to_starboard = std::min(o.ais_static->dim_to_starboard, 63);
  stat.name = "VESSEL " + std::to_string(o.id);

  const ais::SynthesisOptions opts{'A', static_cast<int>(o.id % 10), 60};
  const auto rx_pos = ais::parse_aivdm(ais::synthesize_spoof(pos, opts));
  const auto rx_stat = ais::parse_aivdm(ais::synthesize_spoof(stat, opts));

  RawDetection d;
  d.sensor = SensorKind::Ais;
  d.confidence = confidence;
  const Vec2 p = latlon_to_enu({rx_pos.latitude_deg, rx_pos.longitude_deg}, cfg.own_ship);
  d.bbox = BoundingBox::centered(p, std::max(1, rx_stat.reported_width()), std::max(1, rx_stat.reported_length()));
  d.class_label = ObjectClass::AisContact;
  AisStaticData s;
  s.mmsi = rx_stat.mmsi;
  s.ship_type = rx_stat.ship_type;
  s.dim_to_bow = rx_stat.dim_to_bow;
  s.dim_to_stern = rx_stat.dim_to_stern;
  s.dim_to_port = rx_stat.dim_to_port;
  s.dim_to_starboard = rx_stat.dim_to_starboard;
  d.metadata.ais = s;
  return d;
}

RawDetection radar_detection(const GroundTruthObject& o, Rng& rng, const DetectorNoise& noise, double confidence) {
  RadarBlob blob;
  Vec2 c = o.position;
  if (noise.position_sigma_m > 0.0) {
    c += Vec2(normal(rng, 0.0, noise.position_sigma_m), normal(rng, 0.0, noise.position_sigma_m));
  }
  double a = o.radar_signature ? o.radar_signature->extent_major : o.length;
  double b = o.radar_signature ? o.radar_signature->extent_minor : o.width;
  if (noise.extent_jitter > 0.0) {
    a *= 1.0 + normal(rng, 0.0, noise.extent_jitter);
    b *= 1.0 + normal(rng, 0.0, noise.extent_jitter);
  }
  a = std::max(a, 0.5);
  b = std::max(b, 0.5);
  blob.centroid = c;
  blob.extent_major = std::max(a, b);
  blob.extent_minor = std::min(a, b);
  RawDetection d;
  d.sensor = SensorKind::Radar;
  d.confidence = confidence;
  d.bbox = BoundingBox::centered(c, blob.extent_major, blob.extent_minor);
  d.class_label = ObjectClass::RadarContact;
  d.metadata.radar = blob;
  return d;
}

std::optional<RawDetection> optical_detection(const GroundTruthObject& o, const CameraModel& cam, Rng& rng,
                                              const DetectorNoise& noise, double confidence) {
  const Homography h(cam.sea_to_image());
  const Vec3 q = h.matrix() * Vec3(o.position.x(), o.position.y(), 1.0);
  if (q.z() <= 0.0) return std::nullopt;
  Vec2 anchor(q.x() / q.z(), q.y() / q.z());
  if (!cam.in_frame(anchor)) return std::nullopt;
  if (noise.pixel_sigma > 0.0) anchor += Vec2(normal(rng, 0.0, noise.pixel_sigma), normal(rng, 0.0, noise.pixel_sigma));

  const double th = cam.pitch_down_deg * std::numbers::pi / 180.0;
  const double depth = o.position.y() * std::cos(th) + cam.mount_height_m * std::sin(th);
  const double f = cam.focal_px();
  const double w_px = std::max(1.0, f * (0.6 * o.length + 0.4 * o.width) / depth);
  const double h_px = std::max(1.0, f * std::clamp(0.12 * o.length + 1.5, 1.5, 40.0) / depth);
  RawDetection d;
  d.sensor = SensorKind::Optical;
  d.confidence = confidence;
  d.bbox = {anchor.x() - 0.5 * w_px, anchor.y() - h_px, anchor.x() + 0.5 * w_px, anchor.y()};
  d.class_label = (o.class_label == ObjectClass::Tanker || o.class_label == ObjectClass::Buoy) ? o.class_label
                                                                                               : ObjectClass::Boat;
  return d;
}

RawDetection false_detection(SensorKind sensor, const SensorConfig& cfg, Rng& rng) {
  RawDetection d;
  d.sensor = sensor;
  d.confidence = uniform(rng, kDetectThreshold, 0.55);
  const double max_r = sensor == SensorKind::Optical ? cfg.optical_range_m : cfg.radar_range_m;
  const double r = uniform(rng, 100.0, max_r);
  const double half = sensor == SensorKind::Optical ? cfg.camera.horizontal_fov_deg / 2.0 : 75.0;
  const double b = uniform(rng, -half, half) * std::numbers::pi / 180.0;
  const Vec2 p(r * std::sin(b), r * std::cos(b));
  if (sensor == SensorKind::Optical) {
    const Vec2 px = project_point(Homography(cfg.camera.sea_to_image()), p);
    d.bbox = {px.x() - 4.0, px.y() - 3.0, px.x() + 4.0, px.y()};
    d.class_label = ObjectClass::Boat;
  } else if (sensor == SensorKind::Radar) {
    RadarBlob blob{p, uniform(rng, 3.0, 15.0), 0.0};
    blob.extent_minor = blob.extent_major * uniform(rng, 0.3, 1.0);
    d.bbox = BoundingBox::centered(p, blob.extent_major, blob.extent_minor);
    d.class_label = ObjectClass::RadarContact;
    d.metadata.radar = blob;
  } else {
    d.bbox = BoundingBox::centered(p, 10.0, 10.0);
    d.class_label = ObjectClass::AisContact;
  }
  return d;
}

}  // namespace

std::vector<RawDetection> simulate_raw_detections(const Scenario& scenario, SensorKind sensor,
                                                  const DetectorNoise& noise, std::uint64_t seed) {
  noise.validate();
  const auto& cfg = scenario.sensor_config;
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(sensor_number(sensor))));
  const double max_range = sensor_range(cfg, sensor);
  std::vector<RawDetection> out;

  auto emit = [&](const GroundTruthObject& o, bool spoofed) {
    if (!object_visible_to(o, sensor)) return;
    const double range = o.position.norm();
    if (range > max_range) return;
    // Draw every random quantity unconditionally so one object's outcome
    // does not shift the stream for the next.
    const double conf = draw_confidence(rng, sensor, range, max_range, noise);
    const bool dropped = !spoofed && noise.dropout_prob > 0.0 && uniform01(rng) < noise.dropout_prob;
    std::optional<RawDetection> d;
    switch (sensor) {
      case SensorKind::Ais: d = ais_detection(o, cfg, conf); break;
      case SensorKind::Radar: d = radar_detection(o, rng, noise, conf); break;
      case SensorKind::Optical: d = optical_detection(o, cfg.camera, rng, noise, conf); break;
    }
    if (!d || dropped || d->confidence < kDetectThreshold) return;
    out.push_back(std::move(*d));
  };

  for (const auto& o : scenario.objects) emit(o, false);
  for (const auto& o : scenario.spoofed) emit(o, true);
  const int fp = poisson(rng, noise.false_positive_rate);
  for (int k = 0; k < fp; ++k) out.push_back(false_detection(sensor, cfg, rng));
  return out;
}

std::vector<DetectionVector> simulate_detections(const Scenario& scenario, SensorKind sensor,
                                                 const DetectorNoise& noise, std::uint64_t seed) {
  const auto raw = simulate_raw_detections(scenario, sensor, noise, seed);
  return build_feature_vectors(raw);
}

std::vector<DetectionVector> simulate_all_detections(const Scenario& scenario, const DetectorNoise& noise,
                                                     std::uint64_t seed) {
  std::vector<RawDetection> raw;
  for (auto s : kAllSensors) {
    auto part = simulate_raw_detections(scenario, s, noise, seed);
    raw.insert(raw.end(), part.begin(), part.end());
  }
  return build_feature_vectors(raw);
}

}  // namespace dfcr
