#include "mft/estimate.hpp"

#include <algorithm>
#include <cmath>

#include "mft/stats.hpp"

namespace mft {

namespace {

// rho2 within this relative distance of zero is treated as exactly zero,
// so constant intervals give a zero scale rather than a spurious sign.
constexpr double kZeroSnap = 1e-10;

double snap(double rho2, double mu) {
    return std::abs(rho2) <= kZeroSnap * mu * mu ? 0.0 : rho2;
}

}  // namespace

std::optional<double> autocov(std::span<const double> isis, std::size_t lag) {
    const std::size_t n = isis.size();
    if (n < lag + 2) {
        return std::nullopt;
    }
    double total = 0.0;
    for (double v : isis) {
        total += v;
    }
    const double mu = total / static_cast<double>(n);
    const std::size_t terms = n - lag - 1;
    double s = 0.0;
    for (std::size_t i = 0; i < terms; ++i) {
        s += isis[i] * isis[i + lag];
    }
    return s / static_cast<double>(terms) - mu * mu;
}

std::optional<double> rho2_hat(std::span<const double> isis, std::size_t m) {
    const auto est = moments(isis, m);
    if (!est.defined) {
        return std::nullopt;
    }
    return est.rho2_hat;
}

std::optional<double> MomentEstimates::count_variance_rate() const {
    if (!defined || !(mu_hat > 0.0)) {
        return std::nullopt;
    }
    const double r = snap(rho2_hat, mu_hat);
    if (r < 0.0) {
        return std::nullopt;
    }
    return r / (mu_hat * mu_hat * mu_hat);
}

MomentEstimates moments(std::span<const double> isis, std::size_t m) {
    MomentEstimates out;
    out.n_isis = isis.size();
    if (isis.size() < m + 2) {
        return out;
    }
    out.mu_hat = stats::mean(isis);
    out.sigma2_hat = *autocov(isis, 0);
    out.rho2_hat = out.sigma2_hat;
    for (std::size_t lag = 1; lag <= m; ++lag) {
        const double r = *autocov(isis, lag);
        out.rho_hat.push_back(r);
        out.rho2_hat += 2.0 * r;
    }
    out.defined = true;
    return out;
}

IsiPrefixSums::IsiPrefixSums(std::span<const double> isis, std::size_t max_lag)
    : sum_(isis.size() + 1, 0.0), lagged_(max_lag + 1) {
    const std::size_t n = isis.size();
    for (std::size_t i = 0; i < n; ++i) {
        sum_[i + 1] = sum_[i] + isis[i];
    }
    for (std::size_t lag = 0; lag <= max_lag; ++lag) {
        auto& p = lagged_[lag];
        p.assign(n + 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            p[i + 1] = p[i] + (i + lag < n ? isis[i] * isis[i + lag] : 0.0);
        }
    }
}

MomentEstimates IsiPrefixSums::moments(IsiRange range, std::size_t m) const {
    if (m > max_lag()) {
        throw InvalidArgument("order exceeds the prefix-sum lag capacity");
    }
    MomentEstimates out;
    const std::size_t n = range.size();
    out.n_isis = n;
    if (n < m + 2) {
        return out;
    }
    const double nn = static_cast<double>(n);
    out.mu_hat = (sum_[range.last] - sum_[range.first]) / nn;
    const double mu2 = out.mu_hat * out.mu_hat;
    auto cov = [&](std::size_t lag) {
        const std::size_t terms = n - lag - 1;
        const auto& p = lagged_[lag];
        return (p[range.first + terms] - p[range.first]) / static_cast<double>(terms) - mu2;
    };
    out.sigma2_hat = cov(0);
    out.rho2_hat = out.sigma2_hat;
    for (std::size_t lag = 1; lag <= m; ++lag) {
        const double r = cov(lag);
        out.rho_hat.push_back(r);
        out.rho2_hat += 2.0 * r;
    }
    out.defined = true;
    return out;
}

std::optional<double> s_hat_global(const SpikeTrain& train, double h, std::size_t m) {
    const auto xi = isis(train);
    const auto est = moments(xi.view(), m);
    const auto rate = est.count_variance_rate();
    if (!rate) {
        return std::nullopt;
    }
    return std::sqrt(2.0 * h * *rate);
}

namespace {

LocalScale combine(double t, double h, std::optional<double> left, std::optional<double> right) {
    LocalScale out;
    out.t = t;
    out.h = h;
    out.s2_left = left;
    out.s2_right = right;
    if (left && right) {
        out.s_hat = std::sqrt((*left + *right) * h);
    }
    return out;
}

void check_local_range(const SpikeTrain& train, double t, double h) {
    const double tol = 1e-9 * std::max(1.0, train.duration());
    if (!(h > 0.0) || t < h - tol || t > train.duration() - h + tol) {
        throw std::domain_error("local estimation needs h <= t <= T - h");
    }
}

}  // namespace

LocalScale s_hat_local(const SpikeTrain& train, double t, double h, std::size_t m,
                       std::size_t min_isis) {
    check_local_range(train, t, h);
    const std::size_t need = std::max(min_isis, m + 2);
    auto side = [&](double a, double b) -> std::optional<double> {
        const auto xi = window_isis(train, std::max(0.0, a), std::min(b, train.duration()));
        if (xi.size() < need) {
            return std::nullopt;
        }
        return moments(xi.view(), m).count_variance_rate();
    };
    return combine(t, h, side(t - h, t), side(t, t + h));
}

LocalScaleEstimator::LocalScaleEstimator(const SpikeTrain& train, std::size_t m,
                                         std::size_t min_isis)
    : train_(train),
      m_(m),
      min_isis_(std::max(min_isis, m + 2)),
      isis_(isis(train).values),
      sums_(isis_, m) {}

std::optional<double> LocalScaleEstimator::side(double a, double b) const {
    const auto range = window_isi_range(train_, std::max(0.0, a), std::min(b, train_.duration()));
    if (range.size() < min_isis_) {
        return std::nullopt;
    }
    return sums_.moments(range, m_).count_variance_rate();
}

LocalScale LocalScaleEstimator::at(double t, double h) const {
    check_local_range(train_, t, h);
    return combine(t, h, side(t - h, t), side(t, t + h));
}

MOrderEstimate estimate_m(const SpikeTrain& train, std::size_t section_len, std::size_t max_lag,
                          double alpha_m) {
    if (section_len < max_lag + 3) {
        throw InvalidArgument("sections must hold at least max_lag + 3 intervals");
    }
    if (!(alpha_m > 0.0 && alpha_m < 1.0)) {
        throw InvalidArgument("alpha_m must lie in (0, 1)");
    }
    const auto xi = isis(train).values;
    const std::size_t n_sections = xi.size() / section_len;
    if (n_sections < 5) {
        throw InsufficientData("order selection needs at least 5 sections of " +
                               std::to_string(section_len) + " intervals (have " +
                               std::to_string(xi.size()) + " intervals); use a longer recording");
    }

    MOrderEstimate out;
    out.section_len = section_len;
    out.n_sections = n_sections;
    out.m_hat = max_lag;
    bool found = false;
    for (std::size_t lag = 1; lag <= max_lag; ++lag) {
        LagCorrelation lc;
        lc.lag = lag;
        for (std::size_t s = 0; s < n_sections; ++s) {
            const std::span<const double> sec(xi.data() + s * section_len, section_len);
            const auto r = stats::pearson(sec.first(section_len - lag), sec.subspan(lag));
            if (r) {
                lc.samples.push_back(*r);
            }
        }
        if (!lc.samples.empty()) {
            lc.median = stats::median(lc.samples);
            lc.p_value = stats::wilcoxon_signed_rank(lc.samples).p_value;
        }
        if (!found && lc.p_value >= alpha_m) {
            out.m_hat = lag - 1;
            found = true;
        }
        out.per_lag.push_back(std::move(lc));
    }
    return out;
}

std::optional<double> correlation_contribution(std::span<const double> isis, std::size_t m) {
    const auto est = moments(isis, m);
    if (!est.defined || !(est.sigma2_hat > 0.0)) {
        return std::nullopt;
    }
    return (est.rho2_hat - est.sigma2_hat) / est.sigma2_hat;
}

}  // namespace mft
