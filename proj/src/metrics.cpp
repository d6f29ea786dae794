#include "rawle/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace rawle {

double gini(std::span<const double> values) {
  if (values.empty()) return 0.0;
  std::vector<double> x(values.begin(), values.end());
  for (double v : x)
    if (v < 0.0) throw std::invalid_argument("gini needs non-negative values");
  std::sort(x.begin(), x.end());
  const double total = std::accumulate(x.begin(), x.end(), 0.0);
  if (total <= 0.0) return 0.0;
  // Sorted form of the pairwise sum: sum_i (2i - n + 1) x_(i).
  const auto n = static_cast<double>(x.size());
  double weighted = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    weighted += (2.0 * static_cast<double>(i) - n + 1.0) * x[i];
  return weighted / (n * total);
}

double social_welfare(std::span<const double> values) {
  return std::accumulate(values.begin(), values.end(), 0.0);
}

double min_experience_value(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return *std::min_element(values.begin(), values.end());
}

}  // namespace rawle
