#pragma once

// Moment and dependence estimators: lagged autocovariances, the long-run
// variance rho^2, global and local count-scale estimates, and selection of the
// dependence order from windowed serial correlations.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "mft/core.hpp"

namespace mft {

/// Plug-in lag covariance over a contiguous interval sequence:
///   (1 / (N - lag - 1)) * sum_{i=1}^{N-lag-1} xi_i xi_{i+lag}  -  mean^2,
/// with the mean taken over all N intervals. Requires N >= lag + 2.
std::optional<double> autocov(std::span<const double> isis, std::size_t lag);

/// sigma^2 + 2 sum_{l <= m} rho_l. May be negative; nullopt if N < m + 2.
std::optional<double> rho2_hat(std::span<const double> isis, std::size_t m);

struct MomentEstimates {
    double mu_hat = 0.0;
    double sigma2_hat = 0.0;
    std::vector<double> rho_hat;  // lags 1..m
    double rho2_hat = 0.0;
    std::size_t n_isis = 0;
    bool defined = false;

    /// rho2_hat / mu_hat^3 when rho2_hat >= 0 (numerical zeros snapped to 0).
    std::optional<double> count_variance_rate() const;
};

MomentEstimates moments(std::span<const double> isis, std::size_t m);

/// Moments of any contiguous block of one interval sequence in O(m).
class IsiPrefixSums {
public:
    IsiPrefixSums(std::span<const double> isis, std::size_t max_lag);

    std::size_t max_lag() const { return lagged_.size() - 1; }
    MomentEstimates moments(IsiRange range, std::size_t m) const;

private:
    std::vector<double> sum_;
    // lagged_[l][k] = sum_{i < k} xi_i xi_{i+l}
    std::vector<std::vector<double>> lagged_;
};

/// Whole-train scale sqrt(2 h rho2 / mu^3); nullopt when rho2 < 0 or too few intervals.
std::optional<double> s_hat_global(const SpikeTrain& train, double h, std::size_t m);

struct LocalScale {
    double t = 0.0;
    double h = 0.0;
    /// Per-side rho2 / mu^3; nullopt when that side is undefined.
    std::optional<double> s2_left;
    std::optional<double> s2_right;
    /// Undefined (nullopt) if either side is undefined. May be exactly 0.
    std::optional<double> s_hat;
};

/// Separate left/right estimation on (t - h, t] and (t, t + h].
/// A side is undefined with fewer than min_isis intervals (default m + 2) or rho2 < 0.
/// Throws std::domain_error for t outside [h, T - h].
LocalScale s_hat_local(const SpikeTrain& train, double t, double h, std::size_t m,
                       std::size_t min_isis = 0);

/// Fast repeated local estimation over one train.
class LocalScaleEstimator {
public:
    LocalScaleEstimator(const SpikeTrain& train, std::size_t m, std::size_t min_isis = 0);

    LocalScale at(double t, double h) const;
    std::size_t order() const { return m_; }

private:
    std::optional<double> side(double a, double b) const;

    const SpikeTrain& train_;
    std::size_t m_;
    std::size_t min_isis_;
    std::vector<double> isis_;
    IsiPrefixSums sums_;
};

struct LagCorrelation {
    std::size_t lag = 0;
    std::vector<double> samples;  // one Pearson correlation per section
    double median = 0.0;
    double p_value = 1.0;
};

struct MOrderEstimate {
    std::size_t m_hat = 0;
    std::size_t section_len = 0;
    std::size_t n_sections = 0;
    std::vector<LagCorrelation> per_lag;
};

/// Raised when the recording is too short for order selection.
class InsufficientData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Splits intervals into disjoint sections, correlates lag pairs inside each
/// section, and tests each lag's section correlations for median zero. The
/// estimate is one below the first non-significant lag (max_lag if none).
MOrderEstimate estimate_m(const SpikeTrain& train, std::size_t section_len = 50,
                          std::size_t max_lag = 10, double alpha_m = 0.05);

/// 2 sum_{l <= m} rho_l / sigma^2 = (rho^2 - sigma^2) / sigma^2.
std::optional<double> correlation_contribution(std::span<const double> isis, std::size_t m);

}  // namespace mft
