#pragma once

// Small statistics toolbox: summary moments, quantiles, rank tests.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace mft::stats {

double mean(std::span<const double> x);

/// Unbiased sample variance (n - 1 denominator).
double variance(std::span<const double> x);

double median(std::vector<double> x);

/// Empirical (1 - alpha)-quantile: the ceil((1 - alpha) n)-th smallest value,
/// so alpha = 1 yields the sample minimum.
double upper_quantile(std::vector<double> x, double alpha);

/// Pearson correlation; nullopt when either side has zero variance.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

double normal_cdf(double z);

struct WilcoxonResult {
    double w_plus = 0.0;     // sum of ranks of positive values
    std::size_t n_used = 0;  // nonzero values
    double p_value = 1.0;    // two-sided
    bool exact = false;
};

/// One-sample signed-rank test of median zero. Zeros are dropped; tied
/// magnitudes get average ranks. Exact null distribution below 10 nonzero
/// values, normal approximation with tie and continuity correction otherwise.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> x);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

}  // namespace mft::stats
