#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "mft/random.hpp"
#include "mft/stats.hpp"

using namespace mft;

namespace {

// Two-sided exact p-value by enumerating all 2^n sign patterns over the given ranks.
double brute_force_signed_rank_p(const std::vector<double>& ranks, double w_plus) {
    const std::size_t n = ranks.size();
    double total = 0.0;
    for (double r : ranks) {
        total += r;
    }
    const double centre = total / 2.0;
    const double obs = std::abs(w_plus - centre);
    std::size_t extreme = 0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        double w = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask >> i & 1) {
                w += ranks[i];
            }
        }
        extreme += std::abs(w - centre) >= obs - 1e-12;
    }
    return static_cast<double>(extreme) / static_cast<double>(std::size_t{1} << n);
}

}  // namespace

TEST_CASE("moments") {
    const std::vector<double> x{1, 2, 3, 4};
    CHECK(stats::mean(x) == 2.5);
    CHECK(stats::variance(x) == doctest::Approx(5.0 / 3.0));
    CHECK(stats::median({3, 1, 2}) == 2.0);
    CHECK(stats::median({4, 1, 3, 2}) == 2.5);
}

TEST_CASE("upper quantile order statistic") {
    std::vector<double> x;
    for (int i = 1; i <= 100; ++i) {
        x.push_back(i);
    }
    CHECK(stats::upper_quantile(x, 0.05) == 95.0);
    CHECK(stats::upper_quantile(x, 0.5) == 50.0);
    CHECK(stats::upper_quantile(x, 1.0) == 1.0);
    CHECK(stats::upper_quantile(x, 0.001) == 100.0);
    CHECK_THROWS(stats::upper_quantile(x, 0.0));
    CHECK_THROWS(stats::upper_quantile({}, 0.05));
}

TEST_CASE("pearson correlation") {
    const std::vector<double> x{1, 2, 3, 4}, y{2, 4, 6, 8}, z{4, 3, 2, 1}, c{1, 1, 1, 1};
    CHECK(*stats::pearson(x, y) == doctest::Approx(1.0));
    CHECK(*stats::pearson(x, z) == doctest::Approx(-1.0));
    CHECK_FALSE(stats::pearson(x, c).has_value());
}

TEST_CASE("normal cdf") {
    CHECK(stats::normal_cdf(0.0) == doctest::Approx(0.5));
    CHECK(stats::normal_cdf(1.959963985) == doctest::Approx(0.975).epsilon(1e-9));
}

TEST_CASE("signed-rank test exact branch matches enumeration") {
    const std::vector<double> x{0.8, -0.3, 1.2, 0.5, -0.1, 0.9, 0.4};
    const auto r = stats::wilcoxon_signed_rank(x);
    CHECK(r.exact);
    CHECK(r.n_used == 7);
    // ranks of |x|: 0.1->1, 0.3->2, 0.4->3, 0.5->4, 0.8->5, 0.9->6, 1.2->7
    CHECK(r.w_plus == 25.0);
    CHECK(r.p_value == doctest::Approx(brute_force_signed_rank_p({1, 2, 3, 4, 5, 6, 7}, 25.0)));
}

TEST_CASE("signed-rank test drops zeros and averages tied ranks") {
    const std::vector<double> x{0.0, 1.0, -1.0, 2.0, 2.0, 3.0};
    const auto r = stats::wilcoxon_signed_rank(x);
    CHECK(r.n_used == 5);
    // |x| ranks: 1,1 -> 1.5 each; 2,2 -> 3.5 each; 3 -> 5
    CHECK(r.w_plus == doctest::Approx(1.5 + 3.5 + 3.5 + 5.0));
    CHECK(r.p_value ==
          doctest::Approx(brute_force_signed_rank_p({1.5, 1.5, 3.5, 3.5, 5.0}, 13.5)));
}

TEST_CASE("signed-rank normal approximation is close to the exact law") {
    Rng rng = make_rng(9);
    std::normal_distribution<double> n(0.3, 1.0);
    for (int rep = 0; rep < 5; ++rep) {
        std::vector<double> x(14);
        for (auto& v : x) {
            v = n(rng);
        }
        const auto r = stats::wilcoxon_signed_rank(x);
        CHECK_FALSE(r.exact);
        std::vector<double> mag(x.size());
        std::transform(x.begin(), x.end(), mag.begin(), [](double v) { return std::abs(v); });
        std::vector<double> sorted = mag;
        std::sort(sorted.begin(), sorted.end());
        std::vector<double> ranks;
        for (double m : mag) {
            ranks.push_back(
                static_cast<double>(std::lower_bound(sorted.begin(), sorted.end(), m) - sorted.begin()) + 1);
        }
        CHECK(std::abs(r.p_value - brute_force_signed_rank_p(ranks, r.w_plus)) < 0.02);
    }
}

TEST_CASE("two-sample KS") {
    std::vector<double> a{1, 2, 3, 4, 5};
    CHECK(stats::ks_two_sample(a, a).statistic == 0.0);
    CHECK(stats::ks_two_sample(a, a).p_value == doctest::Approx(1.0));
    const auto far = stats::ks_two_sample(a, {10, 11, 12, 13, 14});
    CHECK(far.statistic == 1.0);
    CHECK(far.p_value < 0.01);
}
