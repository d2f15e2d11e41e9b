#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dfcr/core_model.hpp"
#include "json.hpp"

namespace dfcr {

/// Single-channel raster with real intensities in [0,255], row-major.
class RasterImage {
 public:
  RasterImage() = default;
  RasterImage(int width, int height, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }

  double& at(int x, int y) { return data_[index(x, y)]; }
  double at(int x, int y) const { return data_[index(x, y)]; }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  void clip();  // clamps every pixel into [0,255]
  bool within_bounds() const;

  bool operator==(const RasterImage&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

struct PixelRect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool contains(int px, int py) const { return px >= x && px < x + w && py >= y && py < y + h; }
  bool fits(const RasterImage& img) const { return x >= 0 && y >= 0 && w > 0 && h > 0 && x + w <= img.width() && y + h <= img.height(); }
};

/// Copies the pixels of `rect` row-major.
std::vector<double> extract_window(const RasterImage& img, const PixelRect& rect);
void paste_window(RasterImage& img, const PixelRect& rect, std::span<const double> pixels);

/// Logistic window scorer: confidence = logistic(<weights, patch/255> + bias),
/// evaluated on non-overlapping windows.
struct ToyDetectorParams {
  int window_w = 8;
  int window_h = 8;
  std::vector<double> weights;
  double bias = 0.0;
  double detect_threshold = 0.3;

  std::size_t window_size() const { return static_cast<std::size_t>(window_w) * static_cast<std::size_t>(window_h); }
  void validate() const;
};

/// Window index on the non-overlapping grid.
struct WindowId {
  int row = 0;
  int col = 0;
};

PixelRect window_rect(const ToyDetectorParams& params, WindowId id);

struct ConfidenceMap {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;  // row-major

  double at(int row, int col) const { return values[static_cast<std::size_t>(row * cols + col)]; }
};

double logistic(double z);

/// Confidence of one window of raw (0-255) pixels.
double window_confidence(const ToyDetectorParams& params, std::span<const double> window_pixels);

/// Throws ImageSmallerThanWindow.
ConfidenceMap toy_optical_forward(const RasterImage& image, const ToyDetectorParams& params);

/// d confidence / d pixel for one target window: c(1-c) * w / 255 on the
/// window's pixels, zero elsewhere. Same shape as the image.
RasterImage toy_optical_gradient(const RasterImage& image, const ToyDetectorParams& params, WindowId target);

struct LabeledWindow {
  std::vector<double> pixels;  // raw intensities, window_size() long
  int label = 0;               // 1 object, 0 background
};

struct TrainConfig {
  int epochs = 100;
  int batch_size = 8;
  double learning_rate = 0.5;
  std::uint64_t seed = 0;
};

struct TrainResult {
  ToyDetectorParams params;
  std::vector<double> loss_history;  // mean BCE over the dataset after each epoch
};

/// Mini-batch gradient descent on mean binary cross-entropy, starting from
/// `init`. Throws EmptyDataset.
TrainResult train_toy_detector(std::span<const LabeledWindow> dataset, const ToyDetectorParams& init,
                               const TrainConfig& config);

double mean_bce(const ToyDetectorParams& params, std::span<const LabeledWindow> dataset);
/// Fraction of windows whose thresholded confidence agrees with the label.
double accuracy(const ToyDetectorParams& params, std::span<const LabeledWindow> dataset);

nlohmann::json to_json(const ToyDetectorParams& params);
ToyDetectorParams toy_params_from_json(const nlohmann::json& j);

/// Portable graymap, binary P5, 8 bits. Pixels are rounded and clamped.
void write_pgm(const std::filesystem::path& path, const RasterImage& image);
RasterImage read_pgm(const std::filesystem::path& path);

struct DetectorNoise {
  double confidence_sigma = 0.05;
  double dropout_prob = 0.05;
  double false_positive_rate = 0.2;  // expected false detections per frame
  double position_sigma_m = 3.0;     // radar centroid jitter
  double pixel_sigma = 0.3;          // optical anchor jitter
  double extent_jitter = 0.05;       // relative radar extent jitter

  static DetectorNoise none() { return {0.0, 0.0, 0.0, 0.0, 0.0, 0.0}; }
  void validate() const;
};

inline constexpr double kDetectThreshold = 0.3;

/// Truth-based stand-in for one sensor's detector. Genuine objects visible to
/// the sensor and in range yield a detection with confidence
/// clamp(base - falloff * range/max_range + N(0, sigma), 0, 1), dropped with
/// dropout_prob; spoofed objects always yield one. AIS contacts are encoded to
/// and decoded from AIVDM sentences. Detections below 0.3 are discarded.
std::vector<RawDetection> simulate_raw_detections(const Scenario& scenario, SensorKind sensor,
                                                  const DetectorNoise& noise, std::uint64_t seed);

std::vector<DetectionVector> simulate_detections(const Scenario& scenario, SensorKind sensor,
                                                 const DetectorNoise& noise, std::uint64_t seed);

/// All three sensors, contact indices assigned per sensor.
std::vector<DetectionVector> simulate_all_detections(const Scenario& scenario, const DetectorNoise& noise,
                                                     std::uint64_t seed);

}  // namespace dfcr
