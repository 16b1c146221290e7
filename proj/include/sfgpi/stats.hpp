#pragma once

#include <cstddef>
#include <span>

namespace sfgpi {

struct WilcoxonResult {
  std::size_t n = 0;          // pairs with a non-zero difference
  double w_plus = 0.0;        // sum of ranks of positive differences
  double p_value = 1.0;       // P(W+ >= observed) under the null
};

// Exact one-sided signed-rank test of H1: x tends to exceed y, paired by
// index. Zero differences are dropped; tied magnitudes get average ranks and
// the null distribution is computed over those ranks exactly.
WilcoxonResult wilcoxon_greater(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> v);
// Sample standard deviation (n - 1); 0 for fewer than two values.
double stddev(std::span<const double> v);

}  // namespace sfgpi
