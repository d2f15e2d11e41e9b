#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "dfcr/detector_sim.hpp"

namespace dfcr {

struct CompressionConfig {
  int block = 8;
  int quality = 50;  // 1..100

  void validate() const;
};

/// Standard JPEG luminance table scaled for `quality` (IJG formula). Entries
/// are floored at 1 but not capped at 255, so low qualities stay coarse.
std::array<double, 64> quantization_table(int quality);

/// 8x8 orthonormal DCT-II of one block, row-major.
std::array<double, 64> dct8x8(const std::array<double, 64>& block);
std::array<double, 64> idct8x8(const std::array<double, 64>& coeffs);

/// Block DCT, quantize, dequantize, inverse DCT, clip. Edges are padded by
/// replication to whole blocks.
RasterImage compress(const RasterImage& image, const CompressionConfig& config = {});

struct NoiseConfig {
  double sigma = 8.0;

  void validate() const;
};

/// Adds independent N(0, sigma^2) per pixel, then clips.
RasterImage add_noise(const RasterImage& image, const NoiseConfig& config, std::uint64_t seed);

/// Produces an adversarial version of a window against the given detector.
using WindowAttackFn = std::function<std::vector<double>(const ToyDetectorParams&, std::span<const double>)>;

struct AdversarialTrainingConfig {
  double mix_fraction = 0.10;
  int epochs = 100;
  int batch_size = 8;
  double learning_rate = 0.5;
  std::uint64_t seed = 0;
};

struct AdversarialTrainingReport {
  ToyDetectorParams params;
  std::size_t clean_windows = 0;
  std::size_t adversarial_windows = 0;
  double clean_accuracy_before = 0.0;
  double clean_accuracy_after = 0.0;
  /// Mean confidence on the adversarial training windows (crafted against the
  /// original detector), scored by the original and by the retrained detector.
  double attack_confidence_before = 0.0;
  double attack_confidence_after = 0.0;
  /// Same source windows, attack re-run against the retrained detector.
  double adaptive_attack_confidence_after = 0.0;
  std::vector<double> loss_history;
};

/// Augments `clean` with attacked background windows (label 0) so they make up
/// `mix_fraction` of the training set, then continues training `detector` on
/// it.
AdversarialTrainingReport adversarial_train(const ToyDetectorParams& detector, std::span<const LabeledWindow> clean,
                                            const WindowAttackFn& attack, const AdversarialTrainingConfig& config);

}  // namespace dfcr
