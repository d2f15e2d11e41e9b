#include "dfcr/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "dfcr/error.hpp"

namespace dfcr {

MetricSet compute_metrics(std::span<const double> predicted, std::span<const double> truth) {
  if (predicted.empty()) throw Error(ErrorCode::EmptyInput, "no values");
  if (predicted.size() != truth.size()) throw Error(ErrorCode::DimensionMismatch, "length mismatch");
  const std::size_t n = predicted.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = std::abs(truth[i] - predicted[i]);

  MetricSet m;
  double sq = 0.0, abs_sum = 0.0;
  for (double v : d) {
    sq += v * v;
    abs_sum += v;
  }
  m.mse = sq / static_cast<double>(n);
  m.rmse = std::sqrt(m.mse);
  m.mae = abs_sum / static_cast<double>(n);
  double var = 0.0;
  for (double v : d) var += (v - m.mae) * (v - m.mae);
  m.std_diff = std::sqrt(var / static_cast<double>(n));

  std::sort(d.begin(), d.end());
  m.median_diff = n % 2 ? d[n / 2] : 0.5 * (d[n / 2 - 1] + d[n / 2]);
  m.range_diff = d.back() - d.front();
  return m;
}

std::string_view to_string(WilcoxonMethod m) {
  return m == WilcoxonMethod::Exact ? "exact" : "normal-approximation";
}

namespace {

struct SignedRanks {
  std::vector<double> ranks;  // midranks of |d|
  std::vector<bool> positive;
  double tie_term = 0.0;      // sum over tie groups of t^3 - t
};

SignedRanks rank_differences(std::span<const double> a, std::span<const double> b) {
  if (a.empty()) throw Error(ErrorCode::EmptyInput, "no pairs");
  if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "samples differ in length");
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] - b[i] != 0.0) d.push_back(a[i] - b[i]);
  if (d.empty()) throw Error(ErrorCode::AllZeroDifferences, "all paired differences are zero");

  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return std::abs(d[x]) < std::abs(d[y]); });

  SignedRanks r;
  r.ranks.assign(d.size(), 0.0);
  r.positive.assign(d.size(), false);
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && std::abs(d[order[j]]) == std::abs(d[order[i]])) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j);
    const double t = static_cast<double>(j - i);
    r.tie_term += t * t * t - t;
    for (std::size_t k = i; k < j; ++k) {
      r.ranks[k] = mid;
      r.positive[k] = d[order[k]] > 0.0;
    }
    i = j;
  }
  return r;
}

}  // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b, WilcoxonMethod method) {
  const SignedRanks r = rank_differences(a, b);
  const std::size_t n = r.ranks.size();
  WilcoxonResult w;
  w.n_effective = n;
  w.method = method;
  for (std::size_t i = 0; i < n; ++i) (r.positive[i] ? w.w_plus : w.w_minus) += r.ranks[i];
  w.statistic = std::min(w.w_plus, w.w_minus);

  if (method == WilcoxonMethod::Exact) {
    // Midranks are multiples of 1/2, so doubled ranks are integers and the
    // null distribution of W+ is a subset-sum count over them.
    std::vector<int> r2(n);
    int total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      r2[i] = static_cast<int>(std::lround(2.0 * r.ranks[i]));
      total += r2[i];
    }
    std::vector<double> ways(static_cast<std::size_t>(total) + 1, 0.0);
    ways[0] = 1.0;
    int reach = 0;
    for (int v : r2) {
      for (int s = reach; s >= 0; --s)
        if (ways[s] != 0.0) ways[s + v] += ways[s];
      reach += v;
    }
    const int obs = static_cast<int>(std::lround(2.0 * w.w_plus));
    double lower = 0.0, upper = 0.0;
    for (int s = 0; s <= total; ++s) {
      if (s <= obs) lower += ways[s];
      if (s >= obs) upper += ways[s];
    }
    const double all = std::ldexp(1.0, static_cast<int>(n));
    w.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / all);
  } else {
    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - r.tie_term / 48.0;
    if (var <= 0.0) {
      w.p_value = 1.0;
    } else {
      const double dev = std::max(0.0, std::abs(w.w_plus - mean) - 0.5);
      const double z = dev / std::sqrt(var);
      w.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
    }
  }
  return w;
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  std::size_t nonzero = 0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i)
    if (a[i] - b[i] != 0.0) ++nonzero;
  return wilcoxon_signed_rank(a, b, nonzero <= kWilcoxonExactMax ? WilcoxonMethod::Exact
                                                                 : WilcoxonMethod::NormalApproximation);
}

nlohmann::json to_json(const MetricSet& m) {
  return {{"mse", m.mse},           {"rmse", m.rmse},           {"mae", m.mae},
          {"median_diff", m.median_diff}, {"range_diff", m.range_diff}, {"std_diff", m.std_diff}};
}

nlohmann::json to_json(const WilcoxonResult& w) {
  return {{"statistic", w.statistic},     {"w_plus", w.w_plus},
          {"w_minus", w.w_minus},         {"p_value", w.p_value},
          {"n_effective", w.n_effective}, {"method", std::string(to_string(w.method))}};
}

}  // namespace dfcr
