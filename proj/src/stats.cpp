#include "sfgpi/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "sfgpi/errors.hpp"

namespace sfgpi {

WilcoxonResult wilcoxon_greater(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw UsageError("paired test needs samples of equal size");
  std::vector<double> d;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] != y[i]) d.push_back(x[i] - y[i]);
  }
  WilcoxonResult out;
  out.n = d.size();
  if (d.empty()) return out;

  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return std::abs(d[a]) < std::abs(d[b]); });
  // Doubled ranks keep averages of tied groups integral.
  std::vector<long> rank2(d.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
    const long r2 = static_cast<long>(i + j + 2);  // 2 * mean of ranks i+1..j+1
    for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = r2;
    i = j + 1;
  }

  long observed2 = 0, total2 = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    total2 += rank2[i];
    if (d[i] > 0) observed2 += rank2[i];
  }
  out.w_plus = static_cast<double>(observed2) / 2.0;

  // count[s] = number of sign patterns with doubled W+ equal to s.
  std::vector<double> count(static_cast<std::size_t>(total2) + 1, 0.0);
  count[0] = 1.0;
  long reach = 0;
  for (long r : rank2) {
    for (long s = reach; s >= 0; --s) {
      if (count[static_cast<std::size_t>(s)] != 0.0) count[static_cast<std::size_t>(s + r)] += count[static_cast<std::size_t>(s)];
    }
    reach += r;
  }
  double tail = 0.0;
  for (long s = observed2; s <= total2; ++s) tail += count[static_cast<std::size_t>(s)];
  out.p_value = tail / std::ldexp(1.0, static_cast<int>(d.size()));
  return out;
}

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace sfgpi
