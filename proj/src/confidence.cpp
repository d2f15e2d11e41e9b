#include "dfcr/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "dfcr/error.hpp"

namespace dfcr {

void DeltaConfig::validate() const {
  for (double d : delta) {
    if (!(d > 0.0) || !std::isfinite(d)) throw Error(ErrorCode::ConfigInvalid, "deltas must be positive");
  }
}

DeltaConfig DeltaConfig::parse(std::string_view text) {
  DeltaConfig cfg;
  std::size_t k = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    if (k >= 3) throw Error(ErrorCode::ConfigInvalid, "expected three deltas");
    const std::string part(text.substr(start, comma - start));
    try {
      std::size_t used = 0;
      cfg.delta[k] = std::stod(part, &used);
      if (used != part.size()) throw Error(ErrorCode::ConfigInvalid, "bad delta '" + part + "'");
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::ConfigInvalid, "bad delta '" + part + "'");
    }
    ++k;
    start = comma + 1;
  }
  if (k != 3) throw Error(ErrorCode::ConfigInvalid, "expected three deltas");
  cfg.validate();
  return cfg;
}

ConfidenceTrace adjust_confidence(double initial, const std::array<int, 3>& indicators, const DeltaConfig& deltas) {
  if (!(initial >= 0.0 && initial <= 1.0)) throw Error(ErrorCode::InvalidArgument, "initial confidence outside [0,1]");
  deltas.validate();
  ConfidenceTrace t;
  t.initial = initial;
  t.indicators = indicators;
  double c = initial;
  for (std::size_t k = 0; k < 3; ++k) {
    const int s = indicators[k];
    if (s < -1 || s > 1) throw Error(ErrorCode::InvalidArgument, "indicator must be -1, 0 or +1");
    c = std::clamp(c + deltas.delta[k] * s, 0.0, 1.0);
    t.per_step[k] = c;
  }
  t.final_score = c;
  return t;
}

PipelineResult run_pipeline(std::span<const DetectionVector> detections, const FusionContext& ctx,
                            const SvmModel& svm, const DeltaConfig& deltas) {
  deltas.validate();
  PipelineResult out;
  out.records = associate_contacts(detections, ctx);
  out.traces.resize(detections.size());
  out.record_of.assign(detections.size(), 0);
  for (std::size_t r = 0; r < out.records.size(); ++r) {
    const auto& rec = out.records[r];
    const std::array<int, 3> s{multisensor_pass(rec, detections, ctx), position_pass(rec, detections, ctx),
                               metadata_pass(rec, detections, ctx, svm)};
    for (auto m : rec.members) {
      out.traces[m] = adjust_confidence(detections[m].confidence, s, deltas);
      out.record_of[m] = r;
    }
  }
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trace_csv_row(std::size_t scenario_id, const DetectionVector& det, const ConfidenceTrace& trace) {
  std::string row = std::to_string(scenario_id);
  row += ',';
  row += to_string(det.sensor);
  row += ',';
  row += std::to_string(det.contact_index);
  row += ',';
  row += format_double(trace.initial);
  for (int s : trace.indicators) {
    row += ',';
    row += std::to_string(s);
  }
  row += ',';
  row += format_double(trace.final_score);
  return row;
}

}  // namespace dfcr
