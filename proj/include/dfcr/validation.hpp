#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dfcr/core_model.hpp"
#include "json.hpp"

namespace dfcr {

/// Everything the validation components need to know about the sensor suite:
/// the chart<->image map, the position gate, and which sensors should see a
/// given chart point.
struct FusionContext {
  ChartImageMap map;
  GaussianGate gate;
  double radar_range_m = 1500.0;
  double optical_range_m = 1000.0;
  int image_width = 1920;
  int image_height = 1080;

  static FusionContext from_config(const SensorConfig& config, const GaussianGate& gate);

  /// AIS is never expected: small craft and buoys legitimately carry none.
  bool expected(SensorKind sensor, const Vec2& chart) const;
};

/// Default gate: isotropic 50 m, accept at likelihood 0.2.
GaussianGate default_gate();

/// Contacts believed to be the same object, at most one per sensor.
struct MatchRecord {
  std::vector<std::size_t> members;           // indices into the detection list, ascending
  std::vector<std::optional<Vec2>> positions;  // chart positions, aligned with members
  double position_score = 1.0;                 // smallest pairwise likelihood; 1 for singletons

  bool has(SensorKind s, std::span<const DetectionVector> detections) const;
  std::optional<std::size_t> member(SensorKind s, std::span<const DetectionVector> detections) const;
  /// Mean of the known member positions.
  std::optional<Vec2> position() const;
};

/// Greedy best-first association: cross-sensor pairs with likelihood at or
/// above the gate threshold are merged in descending likelihood order (ties by
/// detection order) whenever the two records cover disjoint sensor sets.
/// Unmatched detections become singletons. Records are ordered by their first
/// member.
std::vector<MatchRecord> associate_contacts(std::span<const DetectionVector> detections, const FusionContext& ctx);

/// -1 when a sensor that should see the record's position has no member in
/// it (or the position is unknown), otherwise +1.
int multisensor_pass(const MatchRecord& record, std::span<const DetectionVector> detections,
                     const FusionContext& ctx);

/// Two or more members: +1 iff every member pair is accepted by the gate.
/// Singletons: -1 when an expected corroborator is missing, else 0.
int position_pass(const MatchRecord& record, std::span<const DetectionVector> detections, const FusionContext& ctx);

inline constexpr std::size_t kMetadataColumns = 6;
using MetadataRow = std::array<double, kMetadataColumns>;

/// [ais_length, ais_width, radar_major, radar_minor, |length - major|, class_agree]
/// for records with an AIS member carrying static data and a radar member.
std::optional<MetadataRow> metadata_row(const MatchRecord& record, std::span<const DetectionVector> detections);

struct MetadataMatrix {
  std::vector<MetadataRow> rows;
  std::vector<std::size_t> record_index;  // row -> record
  std::vector<bool> applicable;           // per record
};

MetadataMatrix build_metadata_matrix(std::span<const MatchRecord> records, std::span<const DetectionVector> detections);

struct SvmModel {
  std::vector<double> weights;
  double bias = 0.0;
  double regularization = 1.0;  // C
  std::vector<double> feature_means;
  std::vector<double> feature_scales;

  std::vector<double> standardize(std::span<const double> raw) const;
  void validate() const;
};

struct SvmTrainConfig {
  double c = 1.0;
  int epochs = 300;
  int batch_size = 0;  // 0 means full batch
  bool standardize = true;
  std::uint64_t seed = 0;
};

struct SvmTrainResult {
  SvmModel model;
  std::vector<double> objective_history;  // per epoch, averaged iterate
  double objective = 0.0;                 // of the returned model
};

/// 1/2 |w|^2 + C sum max(0, 1 - y (w.x + b)) on already standardized rows.
double svm_objective(std::span<const double> w, double b, double c, std::span<const std::vector<double>> rows,
                     std::span<const int> labels);

/// Pegasos-style subgradient descent on the primal, step 1/(lambda t) with
/// lambda = 1/(C n); the bias is unregularized. Keeps the best iterate seen and
/// finishes with an exact line search over the bias. Throws SingleClassTraining.
SvmTrainResult train_svm(std::span<const std::vector<double>> rows, std::span<const int> labels,
                         const SvmTrainConfig& config);

/// sgn(w.x + b) on a standardized row, ties to +1. Throws DimensionMismatch.
int svm_decide(const SvmModel& model, std::span<const double> row);

/// Standardizes a raw row with the model's statistics, then decides.
int svm_decide_raw(const SvmModel& model, std::span<const double> raw);

/// SVM verdict when AIS static data and a radar return are both present; -1
/// when radar should see the position and did not, or the AIS member has no
/// static data; 0 otherwise.
int metadata_pass(const MatchRecord& record, std::span<const DetectionVector> detections, const FusionContext& ctx,
                  const SvmModel& model);

struct MetadataTrainingConfig {
  int genuine = 200;
  int anomalous = 200;
  std::uint64_t seed = 7;
};

/// Genuine pairs: radar extent = AIS length x U(0.8, 1.2). Anomalous pairs:
/// independent sizes differing by at least half the reported length.
/// Labels +1 genuine, -1 anomalous.
void generate_metadata_training(const MetadataTrainingConfig& config, std::vector<std::vector<double>>& rows,
                                std::vector<int>& labels);

/// Trains the runtime metadata classifier on generated pairs.
SvmModel default_metadata_svm(std::uint64_t seed = 7);

nlohmann::json to_json(const SvmModel& model);
SvmModel svm_from_json(const nlohmann::json& j);

}  // namespace dfcr
