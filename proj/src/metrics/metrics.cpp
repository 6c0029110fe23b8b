#include "mui/metrics/metrics.hpp"

#include <cmath>
#include <numeric>
#include <set>

#include "mui/csv.hpp"
#include "mui/error.hpp"
#include "mui/stats/stats.hpp"

namespace mui::metrics {

const char* to_string(DirectionKind kind) {
  switch (kind) {
    case DirectionKind::kEvolving: return "Evolving";
    case DirectionKind::kAccumulating: return "Accumulating";
    case DirectionKind::kCoarsening: return "Coarsening";
    case DirectionKind::kCollapsing: return "Collapsing";
    case DirectionKind::kStationary: return "Stationary";
  }
  return "?";
}

double mui(std::span<const selection::KeySet> keysets, std::span<const std::uint32_t> widths) {
  const double total = std::accumulate(widths.begin(), widths.end(), 0.0);
  if (total <= 0.0) throw Error(ErrorCode::kInvalidArgument, "unit space has no units");
  std::set<trace::UnitId> all;
  for (const auto& ks : keysets)
    for (const auto& u : ks.units) {
      if (u.layer >= widths.size() || u.index >= widths[u.layer])
        throw Error(ErrorCode::kInvalidArgument, "key unit (" + std::to_string(u.layer) + ", " +
                                                     std::to_string(u.index) + ") outside the unit space");
      all.insert(u);
    }
  return 100.0 * double(all.size()) / total;
}

double pur(double performance, double m, const PurConfig& config) {
  if (!(config.alpha >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "alpha must be non-negative");
  if (!(m > 0.0)) throw Error(ErrorCode::kUndefined, "PUR is undefined for MUI <= 0");
  return performance / std::pow(m, config.alpha);
}

UtilityFit fit_utility(std::span<const EvalPoint> points) {
  if (points.size() < 2) throw Error(ErrorCode::kInsufficientData, "utility fit needs at least two points");
  const double n = double(points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& p : points) {
    if (!(p.performance > 0.0)) throw Error(ErrorCode::kInvalidArgument, "utility fit needs P > 0 (" + p.label + ")");
    mx += std::log(p.performance);
    my += p.mui;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& p : points) {
    const double dx = std::log(p.performance) - mx, dy = p.mui - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx <= 1e-300) throw Error(ErrorCode::kSingularFit, "all performance values are equal");
  UtilityFit f;
  f.n_points = points.size();
  f.a = sxy / sxx;
  f.b = my - f.a * mx;
  double ss_res = 0.0;
  for (const auto& p : points) {
    const double r = p.mui - (f.a * std::log(p.performance) + f.b);
    ss_res += r * r;
  }
  f.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  return f;
}

double extrapolate(const UtilityFit& fit, double performance) {
  if (!(performance > 0.0)) throw Error(ErrorCode::kInvalidArgument, "extrapolation needs P > 0");
  return fit.a * std::log(performance) + fit.b;
}

Direction classify_direction(const EvalPoint& before, const EvalPoint& after, double eps_p, double eps_m) {
  if (before.dataset != after.dataset)
    throw Error(ErrorCode::kInvalidArgument, "direction needs one dataset, got '" + before.dataset + "' and '" +
                                                 after.dataset + "'");
  Direction d;
  d.delta_p = after.performance - before.performance;
  d.delta_mui = after.mui - before.mui;
  if (std::abs(d.delta_p) <= eps_p || std::abs(d.delta_mui) <= eps_m) d.kind = DirectionKind::kStationary;
  else if (d.delta_p > 0) d.kind = d.delta_mui < 0 ? DirectionKind::kEvolving : DirectionKind::kAccumulating;
  else d.kind = d.delta_mui > 0 ? DirectionKind::kCoarsening : DirectionKind::kCollapsing;
  return d;
}

std::vector<double> rank_by(std::span<const double> scores, bool descending) {
  std::vector<double> v(scores.begin(), scores.end());
  if (descending)
    for (auto& x : v) x = -x;
  return stats::average_ranks(v);
}

void write_eval_points_csv(const std::filesystem::path& path, std::span<const EvalPoint> points,
                           const PurConfig& config) {
  std::vector<csv::Row> rows;
  for (const auto& p : points)
    rows.push_back({p.label, p.dataset, csv::num(p.performance), csv::num(p.mui),
                    p.mui > 0.0 ? csv::num(pur(p.performance, p.mui, config)) : ""});
  csv::write(path, {"label", "dataset", "P", "MUI", "PUR"}, rows);
}

void write_fit_csv(const std::filesystem::path& path, const UtilityFit& fit) {
  csv::write(path, {"A", "B", "R2", "n_points", "MUI@100"},
             {{csv::num(fit.a), csv::num(fit.b), csv::num(fit.r_squared), std::to_string(fit.n_points),
               csv::num(extrapolate(fit, 100.0))}});
}

void write_directions_csv(const std::filesystem::path& path, std::span<const DirectionRow> rows) {
  std::vector<csv::Row> out;
  for (const auto& r : rows)
    out.push_back({r.before.dataset, r.before.label, r.after.label, csv::num(r.before.performance),
                   csv::num(r.before.mui), csv::num(r.after.performance), csv::num(r.after.mui),
                   csv::num(r.direction.delta_p), csv::num(r.direction.delta_mui), to_string(r.direction.kind)});
  csv::write(path, {"dataset", "before", "after", "P_before", "MUI_before", "P_after", "MUI_after", "dP", "dMUI",
                    "direction"},
             out);
}

}  // namespace mui::metrics
