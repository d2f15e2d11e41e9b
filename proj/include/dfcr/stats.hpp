#pragma once

#include <cstddef>
#include <span>
#include <string_view>

#include "json.hpp"

namespace dfcr {

/// Statistics of d_i = |truth_i - predicted_i|; std is the population form.
struct MetricSet {
  double mse = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
  double median_diff = 0.0;
  double range_diff = 0.0;
  double std_diff = 0.0;
};

/// Throws EmptyInput, or DimensionMismatch for unequal lengths.
MetricSet compute_metrics(std::span<const double> predicted, std::span<const double> truth);

enum class WilcoxonMethod { Exact, NormalApproximation };
std::string_view to_string(WilcoxonMethod m);

struct WilcoxonResult {
  double statistic = 0.0;  // min(W+, W-)
  double w_plus = 0.0;
  double w_minus = 0.0;
  double p_value = 1.0;    // two-sided
  std::size_t n_effective = 0;
  WilcoxonMethod method = WilcoxonMethod::Exact;
};

inline constexpr std::size_t kWilcoxonExactMax = 25;

/// Signed-rank test on d_i = a_i - b_i. Zero differences are dropped, tied
/// magnitudes get midranks. Exact null distribution (conditional on the ties)
/// for n <= 25, otherwise the normal approximation with tie and continuity
/// corrections. Throws AllZeroDifferences, EmptyInput, DimensionMismatch.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

/// Forces one method regardless of n.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b, WilcoxonMethod method);

nlohmann::json to_json(const MetricSet& m);
nlohmann::json to_json(const WilcoxonResult& w);

}  // namespace dfcr
