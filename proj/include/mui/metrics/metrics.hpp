#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mui/selection/selection.hpp"

namespace mui::metrics {

struct EvalPoint {
  std::string label;
  std::string dataset;
  double performance = 0.0;  // percent
  double mui = 0.0;          // percent

  bool operator==(const EvalPoint&) const = default;
};

struct UtilityFit {
  double a = 0.0;
  double b = 0.0;
  double r_squared = 0.0;
  std::size_t n_points = 0;
};

struct PurConfig {
  double alpha = 0.5;
};

enum class DirectionKind { kEvolving, kAccumulating, kCoarsening, kCollapsing, kStationary };
const char* to_string(DirectionKind kind);

struct Direction {
  DirectionKind kind = DirectionKind::kStationary;
  double delta_p = 0.0;
  double delta_mui = 0.0;
};

// Layer widths indexed by layer id; neurons use N per layer, features D per
// instrumented layer.
double mui(std::span<const selection::KeySet> keysets, std::span<const std::uint32_t> layer_widths);

// Throws ErrorCode::kUndefined when mui <= 0.
double pur(double performance, double mui, const PurConfig& config = {});

// OLS of MUI on ln P. Throws kInsufficientData below two points, kInvalidArgument
// for P <= 0, kSingularFit when every P is equal.
UtilityFit fit_utility(std::span<const EvalPoint> points);
double extrapolate(const UtilityFit& fit, double performance);

// Stationary when either delta lies within its epsilon.
Direction classify_direction(const EvalPoint& before, const EvalPoint& after, double eps_p = 0.5,
                             double eps_m = 0.05);

// Rank 1 = best; ties share the average rank.
std::vector<double> rank_by(std::span<const double> scores, bool descending = true);

void write_eval_points_csv(const std::filesystem::path& path, std::span<const EvalPoint> points,
                           const PurConfig& config = {});
void write_fit_csv(const std::filesystem::path& path, const UtilityFit& fit);

struct DirectionRow {
  EvalPoint before;
  EvalPoint after;
  Direction direction;
};
void write_directions_csv(const std::filesystem::path& path, std::span<const DirectionRow> rows);

}  // namespace mui::metrics
