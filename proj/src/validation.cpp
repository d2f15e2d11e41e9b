#include "dfcr/validation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "dfcr/error.hpp"
#include "dfcr/random.hpp"

namespace dfcr {

FusionContext FusionContext::from_config(const SensorConfig& config, const GaussianGate& gate) {
  config.validate();
  return FusionContext{calibrate_chart_image_map(config), gate,
                       config.radar_range_m,               config.optical_range_m,
                       config.camera.image_width,          config.camera.image_height};
}

bool FusionContext::expected(SensorKind sensor, const Vec2& chart) const {
  switch (sensor) {
    case SensorKind::Ais: return false;
    case SensorKind::Radar: return chart.norm() <= radar_range_m;
    case SensorKind::Optical: {
      if (chart.norm() > optical_range_m) return false;
      const auto px = map.to_image(chart);
      return px && px->x() >= 0.0 && px->x() <= image_width && px->y() >= 0.0 && px->y() <= image_height;
    }
  }
  return false;
}

GaussianGate default_gate() { return GaussianGate::isotropic(50.0, 0.2); }

bool MatchRecord::has(SensorKind s, std::span<const DetectionVector> detections) const {
  return member(s, detections).has_value();
}

std::optional<std::size_t> MatchRecord::member(SensorKind s, std::span<const DetectionVector> detections) const {
  for (auto m : members)
    if (detections[m].sensor == s) return m;
  return std::nullopt;
}

std::optional<Vec2> MatchRecord::position() const {
  Vec2 sum = Vec2::Zero();
  int n = 0;
  for (const auto& p : positions) {
    if (!p) continue;
    sum += *p;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return Vec2(sum / n);
}

std::vector<MatchRecord> associate_contacts(std::span<const DetectionVector> detections, const FusionContext& ctx) {
  const std::size_t n = detections.size();
  std::vector<std::optional<Vec2>> pos(n);
  for (std::size_t i = 0; i < n; ++i) pos[i] = chart_position(detections[i], ctx.map);

  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (detections[i].sensor == detections[j].sensor || !pos[i] || !pos[j]) continue;
      const double l = position_likelihood(*pos[i], *pos[j], ctx.gate);
      if (l >= ctx.gate.accept_threshold()) pairs.emplace_back(l, i, j);
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    return std::tie(std::get<1>(a), std::get<2>(a)) < std::tie(std::get<1>(b), std::get<2>(b));
  });

  std::vector<std::size_t> owner(n);
  std::iota(owner.begin(), owner.end(), std::size_t{0});
  std::vector<std::vector<std::size_t>> groups(n);
  for (std::size_t i = 0; i < n; ++i) groups[i] = {i};

  auto sensors_of = [&](const std::vector<std::size_t>& g) {
    unsigned mask = 0;
    for (auto m : g) mask |= 1u << static_cast<unsigned>(detections[m].sensor);
    return mask;
  };
  for (const auto& [l, i, j] : pairs) {
    const std::size_t a = owner[i], b = owner[j];
    if (a == b || (sensors_of(groups[a]) & sensors_of(groups[b])) != 0) continue;
    const std::size_t keep = std::min(a, b), drop = std::max(a, b);
    for (auto m : groups[drop]) owner[m] = keep;
    groups[keep].insert(groups[keep].end(), groups[drop].begin(), groups[drop].end());
    groups[drop].clear();
  }

  std::vector<MatchRecord> records;
  for (auto& g : groups) {
    if (g.empty()) continue;
    std::sort(g.begin(), g.end());
    MatchRecord r;
    r.members = g;
    for (auto m : g) r.positions.push_back(pos[m]);
    for (std::size_t x = 0; x < g.size(); ++x) {
      for (std::size_t y = x + 1; y < g.size(); ++y) {
        if (!r.positions[x] || !r.positions[y]) continue;
        r.position_score = std::min(r.position_score, position_likelihood(*r.positions[x], *r.positions[y], ctx.gate));
      }
    }
    records.push_back(std::move(r));
  }
  std::sort(records.begin(), records.end(),
            [](const MatchRecord& a, const MatchRecord& b) { return a.members.front() < b.members.front(); });
  return records;
}

namespace {

bool corroborator_missing(const MatchRecord& record, std::span<const DetectionVector> detections,
                          const FusionContext& ctx) {
  const auto p = record.position();
  if (!p) return true;
  for (auto s : kAllSensors) {
    if (ctx.expected(s, *p) && !record.has(s, detections)) return true;
  }
  return false;
}

}  // namespace

int multisensor_pass(const MatchRecord& record, std::span<const DetectionVector> detections,
                     const FusionContext& ctx) {
  return corroborator_missing(record, detections, ctx) ? -1 : +1;
}

int position_pass(const MatchRecord& record, std::span<const DetectionVector> detections, const FusionContext& ctx) {
  if (record.members.size() < 2) return corroborator_missing(record, detections, ctx) ? -1 : 0;
  for (std::size_t x = 0; x < record.members.size(); ++x) {
    for (std::size_t y = x + 1; y < record.members.size(); ++y) {
      const auto& a = record.positions[x];
      const auto& b = record.positions[y];
      if (!a || !b || !position_accepted(*a, *b, ctx.gate)) return -1;
    }
  }
  return +1;
}

std::optional<MetadataRow> metadata_row(const MatchRecord& record, std::span<const DetectionVector> detections) {
  const auto ais = record.member(SensorKind::Ais, detections);
  const auto radar = record.member(SensorKind::Radar, detections);
  if (!ais || !radar) return std::nullopt;
  const auto& stat = detections[*ais].metadata.ais;
  const auto& blob = detections[*radar].metadata.radar;
  if (!stat || !blob) return std::nullopt;

  const double length = stat->reported_length();
  double agree = 1.0;
  if (const auto opt = record.member(SensorKind::Optical, detections)) {
    const ObjectClass size_class = length >= 100.0 ? ObjectClass::Tanker : ObjectClass::Boat;
    agree = detections[*opt].class_label == size_class ? 1.0 : 0.0;
  }
  return MetadataRow{length,
                     static_cast<double>(stat->reported_width()),
                     blob->extent_major,
                     blob->extent_minor,
                     std::abs(length - blob->extent_major),
                     agree};
}

MetadataMatrix build_metadata_matrix(std::span<const MatchRecord> records, std::span<const DetectionVector> detections) {
  MetadataMatrix m;
  m.applicable.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto row = metadata_row(records[i], detections);
    m.applicable.push_back(row.has_value());
    if (!row) continue;
    m.rows.push_back(*row);
    m.record_index.push_back(i);
  }
  return m;
}

std::vector<double> SvmModel::standardize(std::span<const double> raw) const {
  if (raw.size() != weights.size()) throw Error(ErrorCode::DimensionMismatch, "row width does not match model");
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double mean = feature_means.empty() ? 0.0 : feature_means[i];
    const double scale = feature_scales.empty() ? 1.0 : feature_scales[i];
    out[i] = (raw[i] - mean) / scale;
  }
  return out;
}

void SvmModel::validate() const {
  if (!(regularization > 0.0)) throw Error(ErrorCode::InvalidArgument, "regularization must be positive");
  if ((!feature_means.empty() && feature_means.size() != weights.size()) ||
      (!feature_scales.empty() && feature_scales.size() != weights.size())) {
    throw Error(ErrorCode::DimensionMismatch, "standardization vectors do not match weights");
  }
  for (double s : feature_scales)
    if (!(s > 0.0)) throw Error(ErrorCode::InvalidArgument, "feature scales must be positive");
}

double svm_objective(std::span<const double> w, double b, double c, std::span<const std::vector<double>> rows,
                     std::span<const int> labels) {
  double reg = 0.0;
  for (double v : w) reg += v * v;
  double hinge = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double s = b;
    for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * rows[i][k];
    hinge += std::max(0.0, 1.0 - labels[i] * s);
  }
  return 0.5 * reg + c * hinge;
}

namespace {

// Exact minimizer over b of sum max(0, 1 - y (s + b)), a convex piecewise
// linear function with breakpoints at y - s. Picks the middle of a flat
// bottom.
double best_bias(std::span<const double> scores, std::span<const int> labels) {
  const std::size_t n = scores.size();
  std::vector<std::pair<double, int>> bp(n);
  int total_pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    bp[i] = {labels[i] - scores[i], labels[i]};
    if (labels[i] > 0) ++total_pos;
  }
  std::sort(bp.begin(), bp.end());
  int pos_le = 0, neg_le = 0;
  for (std::size_t k = 0; k < n;) {
    const double b = bp[k].first;
    while (k < n && bp[k].first == b) {
      (bp[k].second > 0 ? pos_le : neg_le) += 1;
      ++k;
    }
    // slope just right of b
    const int slope = neg_le - (total_pos - pos_le);
    if (slope > 0) return b;
    if (slope == 0) return k < n ? 0.5 * (b + bp[k].first) : b;
  }
  return n ? bp.back().first : 0.0;
}

double polish_bias(std::span<const double> w, std::span<const std::vector<double>> rows, std::span<const int> labels) {
  std::vector<double> s(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    s[i] = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) s[i] += w[k] * rows[i][k];
  }
  return best_bias(s, labels);
}

}  // namespace

SvmTrainResult train_svm(std::span<const std::vector<double>> rows, std::span<const int> labels,
                         const SvmTrainConfig& config) {
  if (rows.empty()) throw Error(ErrorCode::EmptyDataset, "no training rows");
  if (rows.size() != labels.size()) throw Error(ErrorCode::DimensionMismatch, "rows and labels differ in length");
  if (!(config.c > 0.0) || config.epochs < 1) throw Error(ErrorCode::InvalidArgument, "invalid SVM configuration");
  const std::size_t d = rows.front().size();
  bool has_pos = false, has_neg = false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != d) throw Error(ErrorCode::DimensionMismatch, "ragged training rows");
    if (labels[i] == 1) has_pos = true;
    else if (labels[i] == -1) has_neg = true;
    else throw Error(ErrorCode::InvalidArgument, "labels must be +1 or -1");
  }
  if (!has_pos || !has_neg) throw Error(ErrorCode::SingleClassTraining, "both classes are required");

  const std::size_t n = rows.size();
  SvmTrainResult result;
  SvmModel& model = result.model;
  model.regularization = config.c;
  model.weights.assign(d, 0.0);
  if (config.standardize) {
    model.feature_means.assign(d, 0.0);
    model.feature_scales.assign(d, 1.0);
    for (std::size_t k = 0; k < d; ++k) {
      double mean = 0.0;
      for (const auto& r : rows) mean += r[k];
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (const auto& r : rows) var += (r[k] - mean) * (r[k] - mean);
      const double sd = std::sqrt(var / static_cast<double>(n));
      model.feature_means[k] = mean;
      model.feature_scales[k] = sd > 1e-12 ? sd : 1.0;
    }
  }
  std::vector<std::vector<double>> x;
  x.reserve(n);
  for (const auto& r : rows) x.push_back(model.standardize(r));

  const double lambda = 1.0 / (config.c * static_cast<double>(n));
  const std::size_t k = config.batch_size > 0 ? std::min<std::size_t>(config.batch_size, n) : n;
  Rng rng(config.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<double> w(d, 0.0), avg(d, 0.0), step(d);
  double b = 0.0;
  std::uint64_t t = 0;
  std::vector<double> best_w = w;
  double best_b = polish_bias(w, x, labels);
  double best_obj = svm_objective(w, best_b, config.c, x, labels);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (k < n) {
      for (std::size_t i = n; i > 1; --i) {
        std::swap(order[i - 1], order[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i - 1)))]);
      }
    }
    for (std::size_t start = 0; start < n; start += k) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const std::size_t end = std::min(n, start + k);
      std::fill(step.begin(), step.end(), 0.0);
      double step_b = 0.0;
      for (std::size_t q = start; q < end; ++q) {
        const std::size_t i = order[q];
        double s = b;
        for (std::size_t j = 0; j < d; ++j) s += w[j] * x[i][j];
        if (labels[i] * s < 1.0) {
          for (std::size_t j = 0; j < d; ++j) step[j] += labels[i] * x[i][j];
          step_b += labels[i];
        }
      }
      const double scale = eta / static_cast<double>(end - start);
      for (std::size_t j = 0; j < d; ++j) w[j] = (1.0 - eta * lambda) * w[j] + scale * step[j];
      b += scale * step_b;
      // Pegasos projection onto the ball that must contain the optimum.
      double norm = 0.0;
      for (double v : w) norm += v * v;
      norm = std::sqrt(norm);
      const double radius = 1.0 / std::sqrt(lambda);
      if (norm > radius) {
        for (double& v : w) v *= radius / norm;
      }
      for (std::size_t j = 0; j < d; ++j) avg[j] += (w[j] - avg[j]) / static_cast<double>(t);
    }
    // The unregularized bias oscillates under 1/(lambda t) steps, so each
    // iterate is scored at its best bias.
    b = polish_bias(w, x, labels);
    const double obj = svm_objective(w, b, config.c, x, labels);
    if (obj < best_obj) {
      best_obj = obj;
      best_w = w;
      best_b = b;
    }
    const double avg_b = polish_bias(avg, x, labels);
    const double avg_obj = svm_objective(avg, avg_b, config.c, x, labels);
    result.objective_history.push_back(avg_obj);
    if (avg_obj < best_obj) {
      best_obj = avg_obj;
      best_w = avg;
      best_b = avg_b;
    }
  }
  model.weights = best_w;
  model.bias = best_b;
  result.objective = best_obj;
  return result;
}

int svm_decide(const SvmModel& model, std::span<const double> row) {
  if (row.size() != model.weights.size()) throw Error(ErrorCode::DimensionMismatch, "row width does not match model");
  double s = model.bias;
  for (std::size_t i = 0; i < row.size(); ++i) s += model.weights[i] * row[i];
  return s >= 0.0 ? +1 : -1;
}

int svm_decide_raw(const SvmModel& model, std::span<const double> raw) {
  return svm_decide(model, model.standardize(raw));
}

int metadata_pass(const MatchRecord& record, std::span<const DetectionVector> detections, const FusionContext& ctx,
                  const SvmModel& model) {
  const auto ais = record.member(SensorKind::Ais, detections);
  const auto radar = record.member(SensorKind::Radar, detections);
  if (ais && radar) {
    const auto row = metadata_row(record, detections);
    if (!row) return -1;  // AIS contact without static data
    return svm_decide_raw(model, *row);
  }
  const auto p = record.position();
  if (!radar && (!p || ctx.expected(SensorKind::Radar, *p))) return -1;
  return 0;
}

void generate_metadata_training(const MetadataTrainingConfig& config, std::vector<std::vector<double>>& rows,
                                std::vector<int>& labels) {
  if (config.genuine < 1 || config.anomalous < 1) throw Error(ErrorCode::InvalidArgument, "need both classes");
  Rng rng(config.seed);
  rows.clear();
  labels.clear();
  auto log_uniform = [&](double lo, double hi) { return std::exp(uniform(rng, std::log(lo), std::log(hi))); };
  auto push = [&](double length, double width, double major, double minor, double agree, int label) {
    if (minor > major) std::swap(major, minor);
    rows.push_back({length, width, major, minor, std::abs(length - major), agree});
    labels.push_back(label);
  };
  for (int i = 0; i < config.genuine; ++i) {
    const double length = std::round(log_uniform(5.0, 330.0));
    const double width = std::max(1.0, std::round(length * uniform(rng, 0.12, 0.2)));
    push(length, width, length * uniform(rng, 0.8, 1.2), width * uniform(rng, 0.8, 1.2),
         uniform01(rng) < 0.9 ? 1.0 : 0.0, +1);
  }
  for (int i = 0; i < config.anomalous; ++i) {
    double length = 0.0, major = 0.0;
    do {
      length = std::round(log_uniform(5.0, 330.0));
      major = log_uniform(1.0, 330.0);
    } while (std::abs(length - major) < 0.5 * length + 10.0);
    const double width = std::max(1.0, std::round(length * uniform(rng, 0.12, 0.2)));
    push(length, width, major, major * uniform(rng, 0.15, 1.0), uniform01(rng) < 0.5 ? 1.0 : 0.0, -1);
  }
}

SvmModel default_metadata_svm(std::uint64_t seed) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  generate_metadata_training({200, 200, seed}, rows, labels);
  SvmTrainConfig cfg;
  cfg.c = 10.0;
  cfg.seed = derive_seed(seed, 1);
  return train_svm(rows, labels, cfg).model;
}

nlohmann::json to_json(const SvmModel& m) {
  return {{"weights", m.weights},
          {"bias", m.bias},
          {"regularization", m.regularization},
          {"feature_means", m.feature_means},
          {"feature_scales", m.feature_scales}};
}

SvmModel svm_from_json(const nlohmann::json& j) {
  SvmModel m;
  try {
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    m.regularization = j.at("regularization").get<double>();
    m.feature_means = j.value("feature_means", std::vector<double>{});
    m.feature_scales = j.value("feature_scales", std::vector<double>{});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("svm model: ") + e.what());
  }
  m.validate();
  return m;
}

}  // namespace dfcr
