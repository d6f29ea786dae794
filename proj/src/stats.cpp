#include "rawle/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace rawle {

double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double stddev(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

namespace {

// Doubled mid-ranks of the pooled sample, so ties stay integral.
std::vector<long> doubled_ranks(const std::vector<double>& pooled) {
  const std::size_t n = pooled.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return pooled[i] < pooled[j]; });
  std::vector<long> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    // Ranks i+1 .. j+1 share (i + j + 2) / 2; doubled that is i + j + 2.
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = static_cast<long>(i + j + 2);
    i = j + 1;
  }
  return ranks;
}

double normal_two_sided(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

// Exact two-sided p: the share of all C(N, n_a) label assignments whose
// doubled rank sum lies at least as far from its mean as the observed one.
// Counts rank-sum frequencies with a subset-sum table.
double exact_p(const std::vector<long>& ranks, std::size_t n_a, long observed) {
  const long max_sum = std::accumulate(ranks.begin(), ranks.end(), 0L);
  // ways[c][s]: subsets of size c with doubled rank sum s.
  std::vector<std::vector<double>> ways(n_a + 1, std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
  ways[0][0] = 1.0;
  for (long r : ranks) {
    for (std::size_t c = n_a; c >= 1; --c) {
      auto& dst = ways[c];
      const auto& src = ways[c - 1];
      for (long s = max_sum; s >= r; --s) dst[static_cast<std::size_t>(s)] += src[static_cast<std::size_t>(s - r)];
    }
  }
  const double n = static_cast<double>(ranks.size());
  // Doubled expected rank sum: n_a (N + 1).
  const double centre = static_cast<double>(n_a) * (n + 1.0);
  const double dist = std::abs(static_cast<double>(observed) - centre);
  double extreme = 0.0, total = 0.0;
  for (long s = 0; s <= max_sum; ++s) {
    const double w = ways[n_a][static_cast<std::size_t>(s)];
    if (w == 0.0) continue;
    total += w;
    if (std::abs(static_cast<double>(s) - centre) >= dist - 1e-9) extreme += w;
  }
  return std::min(1.0, extreme / total);
}

}  // namespace

MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("Mann-Whitney needs two non-empty samples");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranks = doubled_ranks(pooled);
  const auto n_a = static_cast<double>(a.size());
  const auto n_b = static_cast<double>(b.size());
  long doubled_sum_a = 0;
  for (std::size_t i = 0; i < a.size(); ++i) doubled_sum_a += ranks[i];

  MannWhitneyResult res;
  res.u = static_cast<double>(doubled_sum_a) / 2.0 - n_a * (n_a + 1.0) / 2.0;

  const bool all_tied = std::all_of(pooled.begin(), pooled.end(),
                                    [&](double v) { return v == pooled.front(); });
  if (all_tied) {
    res.p = 1.0;
    res.exact = a.size() <= kExactLimit && b.size() <= kExactLimit;
    return res;
  }

  if (a.size() <= kExactLimit && b.size() <= kExactLimit) {
    res.exact = true;
    res.p = exact_p(ranks, a.size(), doubled_sum_a);
    return res;
  }

  // Tie correction: sum over tie groups of (t^3 - t).
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double n = n_a + n_b;
  const double mu = n_a * n_b / 2.0;
  const double var = n_a * n_b / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (var <= 0.0) {
    res.p = 1.0;
    return res;
  }
  const double diff = std::abs(res.u - mu);
  const double z = std::max(0.0, diff - 0.5) / std::sqrt(var);
  res.p = std::min(1.0, normal_two_sided(z));
  return res;
}

double pooled_sd(double sd_a, int n_a, double sd_b, int n_b) {
  if (n_a + n_b <= 2) throw std::invalid_argument("pooled SD needs more than two observations");
  const double num = (n_a - 1) * sd_a * sd_a + (n_b - 1) * sd_b * sd_b;
  return std::sqrt(num / static_cast<double>(n_a + n_b - 2));
}

std::optional<double> cohens_d_from_summary(double mean_a, double sd_a, int n_a, double mean_b,
                                            double sd_b, int n_b) {
  const double s = pooled_sd(sd_a, n_a, sd_b, n_b);
  if (!(s > 0.0)) return std::nullopt;
  return std::abs(mean_a - mean_b) / s;
}

std::optional<double> cohens_d(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("Cohen's d needs two observations per sample");
  return cohens_d_from_summary(mean(a), stddev(a), static_cast<int>(a.size()), mean(b), stddev(b),
                               static_cast<int>(b.size()));
}

std::string_view effect_magnitude(double d) {
  const double m = std::abs(d);
  if (m < 0.2) return "negligible";
  if (m < 0.5) return "small";
  if (m < 0.8) return "medium";
  return "large";
}

}  // namespace rawle
