#pragma once

// Fairness and sustainability metrics over one society.

#include <span>

namespace rawle {

// Mean absolute difference over all ordered pairs divided by twice the mean:
// sum_i sum_j |x_i - x_j| / (2 n sum x). 0 for an all-zero vector.
double gini(std::span<const double> values);

double social_welfare(std::span<const double> values);

// Lowest value; 0 for an empty society.
double min_experience_value(std::span<const double> values);

}  // namespace rawle
