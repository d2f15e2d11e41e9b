#include "dfcr/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "dfcr/error.hpp"
#include "dfcr/random.hpp"

namespace dfcr {

namespace {

// 7x7 vessel symbol, drawn as an outline so it has sharp edges.
constexpr std::array<const char*, 7> kAisSymbol{
    "...#...",
    "..#.#..",
    "..#.#..",
    ".#...#.",
    ".#...#.",
    "#.....#",
    "#######",
};

double radar_background(Rng& rng) { return 15.0 + std::abs(normal(rng, 0.0, 6.0)); }
double chart_background(Rng& rng) { return 50.0 + normal(rng, 0.0, 2.0); }

void fill_panel(RasterImage& img, int x0, int x1, ChartPanel panel, Rng& rng) {
  for (int y = 0; y < img.height(); ++y)
    for (int x = x0; x < x1; ++x) img.at(x, y) = panel == ChartPanel::Radar ? radar_background(rng) : chart_background(rng);
}

// Returns are speckled on the absolute pixel lattice, so the texture phase is
// the same in every cell.
void draw_return(RasterImage& img, int cx, int cy, int w, int h, int xmax, Rng& rng) {
  for (int y = cy - h / 2; y < cy - h / 2 + h; ++y) {
    for (int x = cx - w / 2; x < cx - w / 2 + w; ++x) {
      if (x < 0 || y < 0 || x >= xmax || y >= img.height()) continue;
      img.at(x, y) = 150.0 + 60.0 * ((x + y) & 1) + normal(rng, 0.0, 10.0);
    }
  }
}

void draw_symbol(RasterImage& img, int x0, int y0, int xmin, int xmax) {
  for (int r = 0; r < 7; ++r) {
    for (int c = 0; c < 7; ++c) {
      const int x = x0 + c, y = y0 + r;
      if (kAisSymbol[r][c] != '#' || x < xmin || x >= xmax || y < 0 || y >= img.height()) continue;
      img.at(x, y) = 230.0;
    }
  }
}

void add_bump(RasterImage& img, const PixelRect& rect, double cx, double cy, double amp, double sigma) {
  for (int y = rect.y; y < rect.y + rect.h; ++y) {
    for (int x = rect.x; x < rect.x + rect.w; ++x) {
      const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
      img.at(x, y) += amp * std::exp(-0.5 * d2 / (sigma * sigma));
    }
  }
}

struct Sprite {
  int x0, y0, w, h;
};

Sprite object_sprite(const GroundTruthObject& o, const OpticalLayout& layout, const CameraModel& cam) {
  const Vec2 px = project_point(Homography(cam.sea_to_image()), o.position) / layout.downsample;
  const double th = cam.pitch_down_deg * std::numbers::pi / 180.0;
  const double depth = o.position.y() * std::cos(th) + cam.mount_height_m * std::sin(th);
  const double f = cam.focal_px() / layout.downsample;
  const int w = std::max(3, static_cast<int>(std::lround(f * (0.6 * o.length + 0.4 * o.width) / depth)));
  const int h = std::max(2, static_cast<int>(std::lround(f * (0.12 * o.length + 1.5) / depth)));
  const int cx = static_cast<int>(std::floor(px.x()));
  const int bottom = static_cast<int>(std::floor(px.y()));
  return {cx - w / 2, bottom - h + 1, w, h};
}

void draw_hull(RasterImage& img, const Sprite& s, bool buoy, Rng& rng) {
  for (int y = s.y0; y < s.y0 + s.h; ++y) {
    for (int x = s.x0; x < s.x0 + s.w; ++x) {
      if (x < 0 || y < 0 || x >= img.width() || y >= img.height()) continue;
      const bool top = y == s.y0 && s.h > 1;
      const bool cabin = top && x >= s.x0 + s.w / 4 && x < s.x0 + s.w - s.w / 4;
      double v = buoy ? 235.0 : (top ? (cabin ? 215.0 : img.at(x, y)) : 35.0);
      img.at(x, y) = v + normal(rng, 0.0, 4.0);
    }
  }
}

void paint_sea_and_sky(RasterImage& img, double horizon, Rng& rng) {
  const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double sea_level = uniform(rng, 60.0, 90.0);
  const double sky_level = uniform(rng, 170.0, 210.0);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (y + 0.5 < horizon) {
        img.at(x, y) = sky_level - 1.5 * y + normal(rng, 0.0, 2.0);
      } else {
        img.at(x, y) = sea_level + 8.0 * std::sin(0.9 * x + 1.7 * y + phase) + normal(rng, 0.0, 5.0);
      }
    }
  }
}

}  // namespace

WindowId chart_window(const ChartDisplayLayout& layout, ChartPanel panel, WindowId cell) {
  return {cell.row, cell.col + (panel == ChartPanel::Ais ? layout.cols : 0)};
}

PixelRect chart_cell_rect(const ChartDisplayLayout& layout, ChartPanel panel, WindowId cell) {
  const WindowId w = chart_window(layout, panel, cell);
  return {w.col * layout.cell_px, w.row * layout.cell_px, layout.cell_px, layout.cell_px};
}

Vec2 chart_cell_center(const ChartDisplayLayout& layout, WindowId cell) {
  const double m = layout.cell_m();
  return {-layout.range_m + (cell.col + 0.5) * m, layout.range_m - (cell.row + 0.5) * m};
}

std::optional<WindowId> chart_cell_of(const ChartDisplayLayout& layout, const Vec2& chart) {
  const double m = layout.cell_m();
  const int col = static_cast<int>(std::floor((chart.x() + layout.range_m) / m));
  const int row = static_cast<int>(std::floor((layout.range_m - chart.y()) / m));
  if (col < 0 || col >= layout.cols || row < 0 || row >= layout.rows) return std::nullopt;
  return WindowId{row, col};
}

RasterImage render_chart_display(const Scenario& scenario, const ChartDisplayLayout& layout, std::uint64_t seed) {
  Rng rng(seed);
  RasterImage img(layout.width(), layout.height());
  const int half = layout.cols * layout.cell_px;
  fill_panel(img, 0, half, ChartPanel::Radar, rng);
  fill_panel(img, half, 2 * half, ChartPanel::Ais, rng);

  const double px_per_m = layout.cell_px / layout.cell_m();
  for (const auto& o : scenario.objects) {
    if (!chart_cell_of(layout, o.position)) continue;
    const int px = static_cast<int>(std::floor((o.position.x() + layout.range_m) * px_per_m));
    const int py = static_cast<int>(std::floor((layout.range_m - o.position.y()) * px_per_m));
    if (object_visible_to(o, SensorKind::Radar)) {
      const int w = std::clamp(static_cast<int>(o.length / 25.0) + 2, 2, 6);
      draw_return(img, px, py, w, std::max(2, w - 1), half, rng);
    }
    if (object_visible_to(o, SensorKind::Ais)) draw_symbol(img, half + px - 3, py - 3, half, 2 * half);
  }
  img.clip();
  return img;
}

std::vector<LabeledWindow> chart_training_windows(const ChartDisplayLayout& layout, ChartPanel panel, int per_class,
                                                  std::uint64_t seed) {
  if (per_class < 1) throw Error(ErrorCode::InvalidArgument, "per_class must be positive");
  Rng rng(seed);
  const int n = layout.cell_px;
  const PixelRect rect{0, 0, n, n};
  std::vector<LabeledWindow> out;
  out.reserve(static_cast<std::size_t>(2 * per_class));
  for (int i = 0; i < 2 * per_class; ++i) {
    const int label = i % 2 == 0 ? 1 : 0;
    RasterImage w(n, n);
    fill_panel(w, 0, n, panel, rng);
    if (label == 1) {
      if (panel == ChartPanel::Radar) {
        const int sw = static_cast<int>(uniform_int(rng, 2, 6));
        const int sh = std::max(2, sw - static_cast<int>(uniform_int(rng, 0, 1)));
        draw_return(w, static_cast<int>(uniform_int(rng, sw / 2, n - sw + sw / 2)),
                    static_cast<int>(uniform_int(rng, sh / 2, n - sh + sh / 2)), sw, sh, n, rng);
      } else {
        draw_symbol(w, static_cast<int>(uniform_int(rng, 0, n - 7)), static_cast<int>(uniform_int(rng, 0, n - 7)), 0, n);
      }
    } else if (uniform01(rng) < 0.5) {
      add_bump(w, rect, uniform(rng, 1.0, n - 2.0), uniform(rng, 1.0, n - 2.0), uniform(rng, 30.0, 110.0),
               uniform(rng, 1.5, 3.0));
    }
    w.clip();
    out.push_back({extract_window(w, rect), label});
  }
  return out;
}

ToyDetectorParams initial_params(int window_w, int window_h) {
  ToyDetectorParams p;
  p.window_w = window_w;
  p.window_h = window_h;
  p.weights.assign(p.window_size(), 0.0);
  return p;
}

ToyDetectorParams train_chart_scorer(const ChartDisplayLayout& layout, ChartPanel panel, std::uint64_t seed) {
  const auto data = chart_training_windows(layout, panel, 400, derive_seed(seed, 1));
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.seed = derive_seed(seed, 2);
  return train_toy_detector(data, initial_params(layout.cell_px, layout.cell_px), cfg).params;
}

double optical_horizon_row(const OpticalLayout& layout, const CameraModel& cam) {
  const double th = cam.pitch_down_deg * std::numbers::pi / 180.0;
  return (cam.image_height / 2.0 - cam.focal_px() * std::tan(th)) / layout.downsample;
}

RasterImage render_optical_frame(const Scenario& scenario, const OpticalLayout& layout, std::uint64_t seed) {
  const auto& cam = scenario.sensor_config.camera;
  Rng rng(seed);
  RasterImage img(layout.width(cam), layout.height(cam));
  paint_sea_and_sky(img, optical_horizon_row(layout, cam), rng);
  for (const auto& o : scenario.objects) {
    if (!object_visible_to(o, SensorKind::Optical) || o.position.norm() > scenario.sensor_config.optical_range_m) {
      continue;
    }
    const Vec3 q = cam.sea_to_image() * Vec3(o.position.x(), o.position.y(), 1.0);
    if (q.z() <= 0.0) continue;
    draw_hull(img, object_sprite(o, layout, cam), o.class_label == ObjectClass::Buoy, rng);
  }
  img.clip();
  return img;
}

BoundingBox optical_window_bbox(const OpticalLayout& layout, WindowId id) {
  const double s = layout.downsample;
  return {id.col * layout.window_w * s, id.row * layout.window_h * s, (id.col + 1) * layout.window_w * s,
          (id.row + 1) * layout.window_h * s};
}

bool window_has_object(const Scenario& scenario, const OpticalLayout& layout, WindowId id) {
  const auto& cam = scenario.sensor_config.camera;
  const PixelRect win{id.col * layout.window_w, id.row * layout.window_h, layout.window_w, layout.window_h};
  for (const auto& o : scenario.objects) {
    if (!object_visible_to(o, SensorKind::Optical)) continue;
    const Vec3 q = cam.sea_to_image() * Vec3(o.position.x(), o.position.y(), 1.0);
    if (q.z() <= 0.0) continue;
    const Sprite s = object_sprite(o, layout, cam);
    const bool overlap = s.x0 < win.x + win.w && s.x0 + s.w > win.x && s.y0 < win.y + win.h && s.y0 + s.h > win.y;
    if (overlap) return true;
  }
  return false;
}

std::vector<LabeledWindow> optical_training_windows(const OpticalLayout& layout, const CameraModel& cam,
                                                    int positives, int negatives, std::uint64_t seed) {
  if (positives < 0 || negatives < 0 || positives + negatives == 0) {
    throw Error(ErrorCode::InvalidArgument, "empty optical training request");
  }
  Rng rng(seed);
  const int W = layout.width(cam), H = layout.height(cam);
  const double horizon = optical_horizon_row(layout, cam);
  const int first_sea = static_cast<int>(std::ceil(horizon));
  std::vector<LabeledWindow> out;
  out.reserve(static_cast<std::size_t>(positives + negatives));

  RasterImage frame(W, H);
  for (int i = 0; i < positives + negatives; ++i) {
    if (i % 16 == 0) paint_sea_and_sky(frame, horizon, rng);
    const bool positive = i < positives;
    RasterImage work = frame;
    PixelRect rect;
    if (positive) {
      // Hull roughly centred in a window lying on the sea.
      rect.w = layout.window_w;
      rect.h = layout.window_h;
      rect.x = static_cast<int>(uniform_int(rng, 0, W - rect.w));
      rect.y = static_cast<int>(uniform_int(rng, std::min(first_sea, H - rect.h), H - rect.h));
      const int sw = static_cast<int>(uniform_int(rng, 4, 8));
      const int sh = static_cast<int>(uniform_int(rng, 2, 4));
      const int bottom = rect.y + rect.h / 2 + 1 + static_cast<int>(uniform_int(rng, -1, 1));
      const int x0 = rect.x + (rect.w - sw) / 2 + static_cast<int>(uniform_int(rng, -1, 1));
      draw_hull(work, {x0, bottom - sh + 1, sw, sh}, uniform01(rng) < 0.15, rng);
      work.clip();
    } else {
      rect = {static_cast<int>(uniform_int(rng, 0, W - layout.window_w)),
              static_cast<int>(uniform_int(rng, 0, H - layout.window_h)), layout.window_w, layout.window_h};
    }
    out.push_back({extract_window(work, rect), positive ? 1 : 0});
  }
  return out;
}

}  // namespace dfcr
