#pragma once

// Two-sample statistics used to compare the societies.

#include <optional>
#include <span>
#include <string_view>

namespace rawle {

struct MannWhitneyResult {
  double u = 0.0;  // U of the first sample
  double p = 1.0;  // two-sided
  bool exact = false;
};

// Mid-ranks for ties. Exact permutation p-value when both samples have at
// most kExactLimit observations, otherwise the tie-corrected normal
// approximation with continuity correction.
inline constexpr int kExactLimit = 20;
MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

// Pooled standard deviation from summary statistics (sample SDs).
double pooled_sd(double sd_a, int n_a, double sd_b, int n_b);

// |mean_a - mean_b| / pooled SD; empty when the pooled SD is zero.
std::optional<double> cohens_d(std::span<const double> a, std::span<const double> b);
std::optional<double> cohens_d_from_summary(double mean_a, double sd_a, int n_a, double mean_b,
                                            double sd_b, int n_b);

// negligible < 0.2 <= small < 0.5 <= medium < 0.8 <= large
std::string_view effect_magnitude(double d);

double mean(std::span<const double> x);
// Sample standard deviation (n - 1); 0 for fewer than two values.
double stddev(std::span<const double> x);

}  // namespace rawle
