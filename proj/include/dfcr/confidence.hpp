#pragma once

#include <array>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dfcr/validation.hpp"

namespace dfcr {

/// Adjustment per component: multisensor, position, metadata.
struct DeltaConfig {
  std::array<double, 3> delta{0.4, 0.3, 0.3};

  void validate() const;
  /// "0.4,0.3,0.3". Throws ConfigInvalid.
  static DeltaConfig parse(std::string_view text);
};

struct ConfidenceTrace {
  double initial = 0.0;
  std::array<int, 3> indicators{0, 0, 0};
  std::array<double, 3> per_step{0.0, 0.0, 0.0};
  double final_score = 0.0;
};

/// C <- clamp(C + delta_k * s_k, 0, 1) for k = 1..3, clamping after every
/// step. Throws InvalidArgument for an initial value outside [0,1] or an
/// indicator outside {-1, 0, +1}.
ConfidenceTrace adjust_confidence(double initial, const std::array<int, 3>& indicators, const DeltaConfig& deltas);

struct PipelineResult {
  std::vector<ConfidenceTrace> traces;   // aligned with the detections
  std::vector<MatchRecord> records;
  std::vector<std::size_t> record_of;    // detection -> record
};

/// Association, then the three components on every record (evaluated
/// independently, no short-circuit), then the confidence adjustment for every
/// member.
PipelineResult run_pipeline(std::span<const DetectionVector> detections, const FusionContext& ctx,
                            const SvmModel& svm, const DeltaConfig& deltas);

inline constexpr std::string_view kTraceCsvHeader = "scenario_id,sensor,contact_index,initial,s1,s2,s3,final";

/// One CSV row per trace; numbers with 17 significant digits.
std::string trace_csv_row(std::size_t scenario_id, const DetectionVector& det, const ConfidenceTrace& trace);

std::string format_double(double v);

}  // namespace dfcr
