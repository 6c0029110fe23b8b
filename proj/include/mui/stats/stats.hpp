#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mui::stats {

struct CorrelationResult {
  double coefficient = 0.0;  // in [-1, 1]
  std::optional<double> p_value;

  double percent() const { return 100.0 * coefficient; }
};

struct UTestResult {
  double u = 0.0;  // statistic of group a
  double z = 0.0;  // (|U - n1 n2 / 2| - 0.5) / sd, tie corrected
  double p_value = 1.0;
  double p_normal = 1.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  bool exact = false;  // p_value came from full enumeration
};

// Ranks with ties sharing their average rank; rank 1 is the smallest value.
std::vector<double> average_ranks(std::span<const double> values);

CorrelationResult spearman(std::span<const double> x, std::span<const double> y);
CorrelationResult kendall(std::span<const double> x, std::span<const double> y);  // tau-b
CorrelationResult pearson(std::span<const double> x, std::span<const double> y);

// Two-sided test. Exact enumeration over all group assignments of the pooled
// ranks when n1 + n2 <= exact_limit, normal approximation otherwise.
UTestResult mann_whitney_u(std::span<const double> a, std::span<const double> b, std::size_t exact_limit = 12);

// Exact two-sided p by enumeration regardless of size (n1 + n2 <= 24).
double mann_whitney_exact_p(std::span<const double> a, std::span<const double> b);

std::string verdict(double p_value, double alpha = 0.05);

double population_variance(std::span<const double> v);
double mean(std::span<const double> v);

}  // namespace mui::stats
