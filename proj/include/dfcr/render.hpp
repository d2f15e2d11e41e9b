#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dfcr/core_model.hpp"
#include "dfcr/detector_sim.hpp"

namespace dfcr {

// Navigational display: one raster, radar PPI on the left half and the AIS
// chart on the right. Both halves cover E in [-R, R], N in [0, R] on a grid of
// square cells, one toy scorer window per cell.
enum class ChartPanel { Radar, Ais };

struct ChartDisplayLayout {
  int cell_px = 8;
  int cols = 16;  // per panel
  int rows = 8;
  double range_m = 1500.0;

  int width() const { return 2 * cols * cell_px; }
  int height() const { return rows * cell_px; }
  double cell_m() const { return range_m / rows; }
};

/// Window id on the full display raster (AIS panel columns are offset by `cols`).
WindowId chart_window(const ChartDisplayLayout& layout, ChartPanel panel, WindowId cell);
PixelRect chart_cell_rect(const ChartDisplayLayout& layout, ChartPanel panel, WindowId cell);
Vec2 chart_cell_center(const ChartDisplayLayout& layout, WindowId cell);
std::optional<WindowId> chart_cell_of(const ChartDisplayLayout& layout, const Vec2& chart);

/// Renders genuine radar returns and AIS symbols over textured panel
/// backgrounds. Spoofed objects are not drawn.
RasterImage render_chart_display(const Scenario& scenario, const ChartDisplayLayout& layout,
                                 std::uint64_t seed);

/// Positive windows hold a return (radar) or a vessel symbol (AIS); negatives
/// are empty panel background or smooth clutter.
std::vector<LabeledWindow> chart_training_windows(const ChartDisplayLayout& layout, ChartPanel panel,
                                                  int per_class, std::uint64_t seed);

/// Trains the window scorer for one display panel.
ToyDetectorParams train_chart_scorer(const ChartDisplayLayout& layout, ChartPanel panel, std::uint64_t seed);

// Low-resolution optical frame: the camera image downsampled by `downsample`,
// scored on non-overlapping windows.
struct OpticalLayout {
  int downsample = 20;
  int window_w = 12;
  int window_h = 9;

  int width(const CameraModel& cam) const { return cam.image_width / downsample; }
  int height(const CameraModel& cam) const { return cam.image_height / downsample; }
  int grid_cols(const CameraModel& cam) const { return width(cam) / window_w; }
  int grid_rows(const CameraModel& cam) const { return height(cam) / window_h; }
};

/// Horizon row in raster pixels.
double optical_horizon_row(const OpticalLayout& layout, const CameraModel& cam);

/// Sky gradient, textured sea, and a hull sprite per optically visible object.
RasterImage render_optical_frame(const Scenario& scenario, const OpticalLayout& layout, std::uint64_t seed);

/// Optical-frame window rectangle in full-resolution image pixels.
BoundingBox optical_window_bbox(const OpticalLayout& layout, WindowId id);

/// Whether any optically visible object's sprite overlaps the window.
bool window_has_object(const Scenario& scenario, const OpticalLayout& layout, WindowId id);

/// Sea, sky, horizon and boat windows cut from synthetic frames.
std::vector<LabeledWindow> optical_training_windows(const OpticalLayout& layout, const CameraModel& cam,
                                                    int positives, int negatives, std::uint64_t seed);

ToyDetectorParams initial_params(int window_w, int window_h);

}  // namespace dfcr
