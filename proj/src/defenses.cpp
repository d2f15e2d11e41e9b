#include "dfcr/defenses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dfcr/error.hpp"
#include "dfcr/random.hpp"

namespace dfcr {

namespace {

constexpr std::array<int, 64> kLuminance{
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99,
};

// basis[k][n] = a(k) cos((2n+1) k pi / 16)
const std::array<std::array<double, 8>, 8>& dct_basis() {
  static const auto table = [] {
    std::array<std::array<double, 8>, 8> b{};
    for (int k = 0; k < 8; ++k) {
      const double a = k == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int n = 0; n < 8; ++n) b[k][n] = a * std::cos((2 * n + 1) * k * std::numbers::pi / 16.0);
    }
    return b;
  }();
  return table;
}

}  // namespace

void CompressionConfig::validate() const {
  if (block != 8) throw Error(ErrorCode::InvalidArgument, "only 8x8 blocks are supported");
  if (quality < 1 || quality > 100) throw Error(ErrorCode::InvalidArgument, "quality must lie in [1,100]");
}

std::array<double, 64> quantization_table(int quality) {
  if (quality < 1 || quality > 100) throw Error(ErrorCode::InvalidArgument, "quality must lie in [1,100]");
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  std::array<double, 64> q{};
  for (int i = 0; i < 64; ++i) q[i] = std::max((kLuminance[i] * scale + 50) / 100, 1);
  return q;
}

std::array<double, 64> dct8x8(const std::array<double, 64>& block) {
  const auto& b = dct_basis();
  std::array<double, 64> tmp{}, out{};
  for (int y = 0; y < 8; ++y)
    for (int u = 0; u < 8; ++u) {
      double s = 0.0;
      for (int x = 0; x < 8; ++x) s += b[u][x] * block[y * 8 + x];
      tmp[y * 8 + u] = s;
    }
  for (int v = 0; v < 8; ++v)
    for (int u = 0; u < 8; ++u) {
      double s = 0.0;
      for (int y = 0; y < 8; ++y) s += b[v][y] * tmp[y * 8 + u];
      out[v * 8 + u] = s;
    }
  return out;
}

std::array<double, 64> idct8x8(const std::array<double, 64>& coeffs) {
  const auto& b = dct_basis();
  std::array<double, 64> tmp{}, out{};
  for (int v = 0; v < 8; ++v)
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int u = 0; u < 8; ++u) s += b[u][x] * coeffs[v * 8 + u];
      tmp[v * 8 + x] = s;
    }
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int v = 0; v < 8; ++v) s += b[v][y] * tmp[v * 8 + x];
      out[y * 8 + x] = s;
    }
  return out;
}

RasterImage compress(const RasterImage& image, const CompressionConfig& config) {
  config.validate();
  const auto q = quantization_table(config.quality);
  RasterImage out(image.width(), image.height());
  for (int by = 0; by < image.height(); by += 8) {
    for (int bx = 0; bx < image.width(); bx += 8) {
      std::array<double, 64> block{};
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
          const int sx = std::min(bx + x, image.width() - 1);
          const int sy = std::min(by + y, image.height() - 1);
          block[y * 8 + x] = image.at(sx, sy) - 128.0;
        }
      auto c = dct8x8(block);
      for (int i = 0; i < 64; ++i) c[i] = std::round(c[i] / q[i]) * q[i];
      const auto rec = idct8x8(c);
      for (int y = 0; y < 8 && by + y < image.height(); ++y)
        for (int x = 0; x < 8 && bx + x < image.width(); ++x) out.at(bx + x, by + y) = rec[y * 8 + x] + 128.0;
    }
  }
  out.clip();
  return out;
}

void NoiseConfig::validate() const {
  if (!(sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise sigma must be non-negative");
}

RasterImage add_noise(const RasterImage& image, const NoiseConfig& config, std::uint64_t seed) {
  config.validate();
  RasterImage out = image;
  if (config.sigma == 0.0) return out;
  Rng rng(seed);
  for (auto& v : out.data()) v = std::clamp(v + normal(rng, 0.0, config.sigma), 0.0, 255.0);
  return out;
}

AdversarialTrainingReport adversarial_train(const ToyDetectorParams& detector, std::span<const LabeledWindow> clean,
                                            const WindowAttackFn& attack, const AdversarialTrainingConfig& config) {
  if (clean.empty()) throw Error(ErrorCode::EmptyDataset, "clean training set is empty");
  if (!(config.mix_fraction >= 0.0 && config.mix_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "mix fraction must lie in [0,1)");
  }
  AdversarialTrainingReport rep;
  rep.clean_windows = clean.size();
  rep.adversarial_windows = static_cast<std::size_t>(
      std::lround(config.mix_fraction * static_cast<double>(clean.size()) / (1.0 - config.mix_fraction)));
  rep.clean_accuracy_before = accuracy(detector, clean);

  std::vector<std::size_t> background;
  for (std::size_t i = 0; i < clean.size(); ++i)
    if (clean[i].label == 0) background.push_back(i);
  if (background.empty()) {
    background.resize(clean.size());
    for (std::size_t i = 0; i < clean.size(); ++i) background[i] = i;
  }

  Rng rng(derive_seed(config.seed, 17));
  std::vector<std::size_t> sources(rep.adversarial_windows);
  for (auto& s : sources) {
    s = background[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(background.size()) - 1))];
  }

  std::vector<LabeledWindow> data(clean.begin(), clean.end());
  for (auto s : sources) data.push_back({attack(detector, clean[s].pixels), 0});

  TrainConfig tc;
  tc.epochs = config.epochs;
  tc.batch_size = config.batch_size;
  tc.learning_rate = config.learning_rate;
  tc.seed = config.seed;
  auto trained = train_toy_detector(data, detector, tc);
  rep.params = std::move(trained.params);
  rep.loss_history = std::move(trained.loss_history);
  rep.clean_accuracy_after = accuracy(rep.params, clean);

  double before = 0.0, after = 0.0, adaptive = 0.0;
  for (std::size_t k = 0; k < sources.size(); ++k) {
    const auto& adv = data[clean.size() + k].pixels;
    before += window_confidence(detector, adv);
    after += window_confidence(rep.params, adv);
    adaptive += window_confidence(rep.params, attack(rep.params, clean[sources[k]].pixels));
  }
  if (!sources.empty()) {
    const double n = static_cast<double>(sources.size());
    rep.attack_confidence_before = before / n;
    rep.attack_confidence_after = after / n;
    rep.adaptive_attack_confidence_after = adaptive / n;
  }
  return rep;
}

}  // namespace dfcr
