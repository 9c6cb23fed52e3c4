#include "mft/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mft::stats {

double mean(std::span<const double> x) {
    if (x.empty()) {
        throw std::invalid_argument("mean of empty sample");
    }
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
    if (x.size() < 2) {
        throw std::invalid_argument("variance needs at least two values");
    }
    const double mu = mean(x);
    double ss = 0.0;
    for (double v : x) {
        ss += (v - mu) * (v - mu);
    }
    return ss / static_cast<double>(x.size() - 1);
}

double median(std::vector<double> x) {
    if (x.empty()) {
        throw std::invalid_argument("median of empty sample");
    }
    const std::size_t mid = x.size() / 2;
    std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mid), x.end());
    const double upper = x[mid];
    if (x.size() % 2 == 1) {
        return upper;
    }
    const double lower = *std::max_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

double upper_quantile(std::vector<double> x, double alpha) {
    if (x.empty()) {
        throw std::invalid_argument("quantile of empty sample");
    }
    if (!(alpha > 0.0) || alpha > 1.0) {
        throw std::invalid_argument("alpha must lie in (0, 1]");
    }
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    // guard against 0.95 * 10000 = 9500.000000000002
    double k = std::ceil((1.0 - alpha) * n - 1e-9);
    k = std::clamp(k, 1.0, n);
    return x[static_cast<std::size_t>(k) - 1];
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        return std::nullopt;
    }
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) {
        return std::nullopt;
    }
    return sxy / std::sqrt(sxx * syy);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

WilcoxonResult wilcoxon_signed_rank(std::span<const double> x) {
    WilcoxonResult out;
    std::vector<double> nonzero;
    nonzero.reserve(x.size());
    for (double v : x) {
        if (v != 0.0) {
            nonzero.push_back(v);
        }
    }
    const std::size_t n = nonzero.size();
    out.n_used = n;
    if (n == 0) {
        return out;
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(nonzero[a]) < std::abs(nonzero[b]);
    });
    // doubled ranks stay integral under tie averaging
    std::vector<long> rank2(n);
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && std::abs(nonzero[order[j + 1]]) == std::abs(nonzero[order[i]])) {
            ++j;
        }
        const long doubled = static_cast<long>(i + 1 + j + 1);
        for (std::size_t k = i; k <= j; ++k) {
            rank2[order[k]] = doubled;
        }
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    long w2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (nonzero[i] > 0.0) {
            w2 += rank2[i];
        }
    }
    out.w_plus = 0.5 * static_cast<double>(w2);

    if (n < 10) {
        out.exact = true;
        const long total = std::accumulate(rank2.begin(), rank2.end(), 0L);
        std::vector<double> count(static_cast<std::size_t>(total) + 1, 0.0);
        count[0] = 1.0;
        for (long r : rank2) {
            for (long s = total; s >= r; --s) {
                count[static_cast<std::size_t>(s)] += count[static_cast<std::size_t>(s - r)];
            }
        }
        const double all = std::ldexp(1.0, static_cast<int>(n));
        double lower = 0.0;
        double upper = 0.0;
        for (long s = 0; s <= total; ++s) {
            if (s <= w2) {
                lower += count[static_cast<std::size_t>(s)];
            }
            if (s >= w2) {
                upper += count[static_cast<std::size_t>(s)];
            }
        }
        out.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / all);
        return out;
    }

    const double nn = static_cast<double>(n);
    const double expected = nn * (nn + 1.0) / 4.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    if (var <= 0.0) {
        return out;
    }
    const double dev = std::abs(out.w_plus - expected);
    const double z = std::max(0.0, dev - 0.5) / std::sqrt(var);
    out.p_value = std::min(1.0, 2.0 * (1.0 - normal_cdf(z)));
    return out;
}

namespace {

double kolmogorov_survival(double lambda) {
    if (lambda < 1e-3) {
        return 1.0;
    }
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1 ? term : -term);
        if (term < 1e-12) {
            break;
        }
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

}  // namespace

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) {
        throw std::invalid_argument("KS test needs two nonempty samples");
    }
    const auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(a.begin(), a.end(), finite) || !std::all_of(b.begin(), b.end(), finite)) {
        throw std::invalid_argument("KS test needs finite samples");
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) {
            ++i;
        }
        while (j < b.size() && b[j] == v) {
            ++j;
        }
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double ne = std::sqrt(na * nb / (na + nb));
    KsResult out;
    out.statistic = d;
    out.p_value = kolmogorov_survival((ne + 0.12 + 0.11 / ne) * d);
    return out;
}

}  // namespace mft::stats
