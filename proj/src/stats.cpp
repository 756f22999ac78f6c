#include "obq/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace obq {

namespace {

void require_paired(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw std::invalid_argument("correlation inputs differ in length");
  if (x.size() < 2)
    throw std::invalid_argument("correlation needs at least two samples");
}

bool is_constant(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(),
                     [&](double v) { return v == x.front(); });
}

double pearson_raw(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;  // mean of i..j, 1-based
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  require_paired(x, y);
  const bool cx = is_constant(x), cy = is_constant(y);
  if (cx || cy) return cx && cy ? 1.0 : 0.0;
  return pearson_raw(x, y);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  require_paired(x, y);
  const bool cx = is_constant(x), cy = is_constant(y);
  if (cx || cy) return cx && cy ? 1.0 : 0.0;
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson_raw(rx, ry);
}

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  require_paired(x, y);
  const bool cx = is_constant(x), cy = is_constant(y);
  if (cx || cy) return cx && cy ? 1.0 : 0.0;
  const std::size_t n = x.size();
  // O(n^2) pair scan; ensembles here are a few thousand samples at most.
  std::int64_t concordant = 0, discordant = 0, tx = 0, ty = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = x[i] - x[j], dy = y[i] - y[j];
      if (dx == 0) ++tx;
      if (dy == 0) ++ty;
      if (dx == 0 || dy == 0) continue;
      if ((dx > 0) == (dy > 0))
        ++concordant;
      else
        ++discordant;
    }
  const double n0 = 0.5 * static_cast<double>(n) * (n - 1);
  const double denom = std::sqrt((n0 - static_cast<double>(tx)) *
                                 (n0 - static_cast<double>(ty)));
  if (!(denom > 0)) return 0.0;
  return (static_cast<double>(concordant) - discordant) / denom;
}

CorrelationTriple correlate(std::span<const double> x,
                            std::span<const double> y) {
  require_paired(x, y);
  CorrelationTriple out;
  out.degenerate = is_constant(x) || is_constant(y);
  out.pearson = pearson(x, y);
  out.spearman = spearman(x, y);
  out.kendall_tau = kendall_tau(x, y);
  return out;
}

}  // namespace obq
