#pragma once

#include <span>
#include <vector>

namespace emoreg::stats {

double mean(std::span<const double> x);

// Population (ddof = 0) unless sample = true.
double variance(std::span<const double> x, bool sample = false);
double stddev(std::span<const double> x, bool sample = false);

double median(std::vector<double> x);

// Non-excess kurtosis (3 for a Gaussian). Returns 0 for a constant series.
double kurtosis(std::span<const double> x);

// Sample Pearson correlation. Throws undefined_correlation when either side
// has zero variance and insufficient_data for mismatched or short inputs.
double pearson(std::span<const double> x, std::span<const double> y);

struct AnovaResult {
  double f = 0.0;
  double p = 1.0;
  double df_between = 0.0;
  double df_within = 0.0;
};

// One-way ANOVA across groups. Zero between-group spread gives F = 0, p = 1.
AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups);

// Two-sided Welch t-test p-value.
double welch_t_test_p(std::span<const double> a, std::span<const double> b);

}  // namespace emoreg::stats
