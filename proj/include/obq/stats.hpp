#pragma once

#include <span>
#include <vector>

namespace obq {

// Pearson / Spearman / Kendall tau-b over paired samples. `degenerate` is set
// when at least one side has zero variance; by convention the affected
// coefficients are 1 when both sides are constant (every monotone relation
// holds vacuously) and 0 when only one side is.
struct CorrelationTriple {
  double pearson = 0;
  double spearman = 0;
  double kendall_tau = 0;
  bool degenerate = false;
};

// Average ranks (1-based, ties share the mean rank), the form Spearman needs.
std::vector<double> average_ranks(std::span<const double> x);

double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);
// Tau-b, i.e. with tie correction in both arguments.
double kendall_tau(std::span<const double> x, std::span<const double> y);

CorrelationTriple correlate(std::span<const double> x,
                            std::span<const double> y);

}  // namespace obq
