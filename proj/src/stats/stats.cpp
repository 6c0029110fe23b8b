#include "mui/stats/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mui/error.hpp"

namespace mui::stats {
namespace {

void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::kShapeMismatch, "length mismatch");
  if (x.size() < 2) throw Error(ErrorCode::kInsufficientData, "need at least two observations");
}

double rank_sum_u(const std::vector<double>& ranks, std::size_t n1) {
  const double r = std::accumulate(ranks.begin(), ranks.begin() + n1, 0.0);
  return r - double(n1) * double(n1 + 1) / 2.0;
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (double(i) + double(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

double mean(std::span<const double> v) {
  if (v.empty()) throw Error(ErrorCode::kInsufficientData, "mean of empty sample");
  return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

double population_variance(std::span<const double> v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / double(v.size());
}

CorrelationResult pearson(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::kUndefined, "zero variance");
  return {std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0), std::nullopt};
}

CorrelationResult spearman(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const auto rx = average_ranks(x), ry = average_ranks(y);
  return pearson(rx, ry);
}

CorrelationResult kendall(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  long long concordant = 0, discordant = 0, tie_x = 0, tie_y = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double dx = x[i] - x[j], dy = y[i] - y[j];
      if (dx == 0.0 && dy == 0.0) continue;
      if (dx == 0.0) ++tie_x;
      else if (dy == 0.0) ++tie_y;
      else if ((dx > 0) == (dy > 0)) ++concordant;
      else ++discordant;
    }
  const double denom = std::sqrt(double(concordant + discordant + tie_x) * double(concordant + discordant + tie_y));
  if (denom == 0.0) throw Error(ErrorCode::kUndefined, "zero variance");
  return {double(concordant - discordant) / denom, std::nullopt};
}

double mann_whitney_exact_p(std::span<const double> a, std::span<const double> b) {
  const std::size_t n1 = a.size(), n2 = b.size(), n = n1 + n2;
  if (n1 == 0 || n2 == 0) throw Error(ErrorCode::kInsufficientData, "empty group");
  if (n > 24) throw Error(ErrorCode::kInvalidArgument, "exact enumeration limited to 24 observations");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranks = average_ranks(pooled);
  const double mu = double(n1) * double(n2) / 2.0;
  const double obs = std::abs(rank_sum_u(ranks, n1) - mu);
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + n1, true);
  std::size_t total = 0, extreme = 0;
  do {
    double r = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (pick[i]) r += ranks[i];
    const double u = r - double(n1) * double(n1 + 1) / 2.0;
    ++total;
    if (std::abs(u - mu) >= obs - 1e-9) ++extreme;
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return double(extreme) / double(total);
}

UTestResult mann_whitney_u(std::span<const double> a, std::span<const double> b, std::size_t exact_limit) {
  const std::size_t n1 = a.size(), n2 = b.size(), n = n1 + n2;
  if (n1 == 0 || n2 == 0) throw Error(ErrorCode::kInsufficientData, "empty group");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranks = average_ranks(pooled);
  UTestResult res;
  res.n1 = n1;
  res.n2 = n2;
  res.u = rank_sum_u(ranks, n1);

  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && sorted[j] == sorted[i]) ++j;
    const double t = double(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double mu = double(n1) * double(n2) / 2.0;
  const double var = double(n1) * double(n2) / 12.0 *
                     ((double(n) + 1.0) - (n > 1 ? tie_term / (double(n) * (double(n) - 1.0)) : 0.0));
  if (var > 0.0) {
    res.z = std::max(std::abs(res.u - mu) - 0.5, 0.0) / std::sqrt(var);
    res.p_normal = std::erfc(res.z / std::sqrt(2.0));
  }
  if (n <= exact_limit) {
    res.exact = true;
    res.p_value = mann_whitney_exact_p(a, b);
  } else {
    res.p_value = res.p_normal;
  }
  return res;
}

std::string verdict(double p, double alpha) {
  return p > alpha ? "no significant difference" : "significant difference";
}

}  // namespace mui::stats
