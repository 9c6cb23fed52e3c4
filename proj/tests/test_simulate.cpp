#include <doctest.h>

#include <cmath>

#include "mft/core.hpp"
#include "mft/estimate.hpp"
#include "mft/simulate.hpp"
#include "mft/stats.hpp"

using namespace mft;

namespace {

// Plain lag-l sample covariance with the overall mean, as a Monte Carlo reference.
double lag_cov(const std::vector<double>& x, std::size_t lag) {
    const double mu = stats::mean(x);
    double s = 0.0;
    for (std::size_t i = 0; i + lag < x.size(); ++i) {
        s += (x[i] - mu) * (x[i + lag] - mu);
    }
    return s / static_cast<double>(x.size() - lag);
}

// Standard error of a lag covariance for an m-dependent sequence, generous bound.
double cov_se(const std::vector<double>& x, std::size_t m) {
    const double v = stats::variance(x);
    return v * std::sqrt(static_cast<double>(2 * m + 2) / static_cast<double>(x.size()));
}

}  // namespace

TEST_CASE("gamma renewal rate and independence") {
    const auto train = sim_renewal({0.25, 0.25}, 600.0, 7);
    const double n = static_cast<double>(train.size());
    // Poisson count: s.e. of the count is sqrt(n)
    CHECK(std::abs(n - 2400.0) < 3.0 * std::sqrt(2400.0));
    const auto x = isis(train).values;
    CHECK(std::abs(lag_cov(x, 1)) < 4.0 * cov_se(x, 0));

    const auto regular = isis(sim_renewal({1.0, 0.001}, 200.0, 1)).values;
    CHECK(std::sqrt(stats::variance(regular)) < 0.01);
}

TEST_CASE("MA intervals follow the closed-form covariances") {
    SUBCASE("a = (1, 0.5)") {
        const auto model = MaModel::from_isi_moments({1.0, 0.5}, 1.0, 0.5);
        const auto x = sample_intervals(model, 400000, 3);
        const double v = stats::variance(x);
        CHECK(lag_cov(x, 1) / v == doctest::Approx(0.4).epsilon(0.03));
        CHECK(std::abs(lag_cov(x, 2)) < 4.0 * cov_se(x, 1));
    }
    SUBCASE("a_k = 0.25^k, m = 3") {
        const auto model = MaModel::from_isi_moments(MaModel::geometric(0.25, 3), 0.2, 0.1);
        const auto x = sample_intervals(model, 400000, 4);
        const auto th = theoretical_rho2(model);
        CHECK(stats::mean(x) == doctest::Approx(0.2).epsilon(0.005));
        for (std::size_t l = 1; l <= 3; ++l) {
            CHECK(lag_cov(x, l) > 0.0);
            CHECK(std::abs(lag_cov(x, l) - th.rho[l - 1]) < 4.0 * cov_se(x, 3));
        }
        for (std::size_t l = 4; l <= 8; ++l) {
            CHECK(std::abs(lag_cov(x, l)) < 4.0 * cov_se(x, 3));
        }
    }
    SUBCASE("a = (1) is renewal") {
        const auto model = MaModel::from_isi_moments({1.0}, 0.3, 0.2);
        const auto x = sample_intervals(model, 100000, 5);
        CHECK(std::abs(lag_cov(x, 1)) < 4.0 * cov_se(x, 0));
    }
}

TEST_CASE("MA negative coefficients are redrawn and counted") {
    MaModel model{{1.0, -0.5}, Distribution::uniform(0.0, 1.0)};
    CHECK(model.needs_rejection());
    SimulationDiagnostics diag;
    const auto train = sim_ma(model, 500.0, 2, &diag);
    CHECK(diag.resampled > 0);
    for (double v : isis(train).values) {
        CHECK(v > 0.0);
    }
    CHECK_FALSE(theoretical_rho2(model).exact);
}

TEST_CASE("jitter intervals") {
    const JitterModel model{0.3, 0.06, 0.12};
    const auto x = sample_intervals(model, 400000, 6);
    CHECK(stats::variance(x) == doctest::Approx(0.0108).epsilon(0.02));
    CHECK(lag_cov(x, 1) == doctest::Approx(-0.0048).epsilon(0.04));
    CHECK(std::abs(lag_cov(x, 2)) < 4.0 * cov_se(x, 1));

    CHECK_THROWS_AS(validate(JitterModel{0.3, 0.06, 0.0}), InvalidArgument);

    CHECK_THROWS_AS(validate(JitterModel{0.1, 0.06, 0.03}), InvalidArgument);
}

TEST_CASE("bursty intervals") {
    const BurstyModel model{};
    const auto x = sample_intervals(model, 400000, 8);
    CHECK(lag_cov(x, 1) < 0.0);
    CHECK(std::abs(lag_cov(x, 3)) < 4.0 * cov_se(x, 2));
    for (double v : x) {
        REQUIRE(v > 0.0);
    }

    // Enumerate I_i, I_{i-1}, I_{i-2}, J_i, J'_i and mix the component means.
    const double pi = model.p_i, pj = model.p_j;
    const double mx = 0.59, my = 0.065;
    double mean = 0.0;
    for (int c = 0; c < 32; ++c) {
        const int i0 = c & 1, i1 = c >> 1 & 1, i2 = c >> 2 & 1, j = c >> 3 & 1, jp = c >> 4 & 1;
        const double w = (i0 ? pi : 1 - pi) * (i1 ? pi : 1 - pi) * (i2 ? pi : 1 - pi) *
                         (j ? pj : 1 - pj) * (jp ? pj : 1 - pj);
        const int lng = i0 * (1 - i1), b1 = i1 * j, b2 = i2 * jp;
        const int fill = (lng || b1 || b2) ? 0 : 1;
        mean += w * (lng * mx + b1 * my + b2 * my + fill * my);
    }
    CHECK(model_mean(model) == doctest::Approx(mean).epsilon(1e-12));
    const double se = std::sqrt(stats::variance(x) * 5.0 / static_cast<double>(x.size()));
    CHECK(std::abs(stats::mean(x) - mean) < 4.0 * se);

    CHECK_THROWS_AS(validate(BurstyModel{0.0, 0.4}), InvalidArgument);
}

TEST_CASE("closed-form moments") {
    const auto ma = theoretical_rho2(MaModel{{1.0, 0.5}, Distribution::gamma(1.0, 1.0)});
    CHECK(ma.variance == doctest::Approx(1.25));
    CHECK(ma.rho[0] == doctest::Approx(0.5));
    CHECK(ma.rho2 == doctest::Approx(2.25));

    const auto jit = theoretical_rho2(JitterModel{0.3, 0.06, 0.12});
    CHECK(jit.variance == doctest::Approx(0.0108));
    CHECK(jit.rho[0] == doctest::Approx(-0.0048));
    CHECK(jit.rho2 == doctest::Approx(0.0012));

    const auto iid = theoretical_rho2(MaModel{{1.0}, Distribution::gamma(2.0, 0.7)});
    CHECK(iid.rho2 == doctest::Approx(0.49));
    CHECK(iid.rho2 == doctest::Approx(iid.variance));
}

TEST_CASE("stationarity of each generator") {
    const std::vector<Model> models{GammaRenewal{0.2, 0.1},
                                    MaModel::from_isi_moments(MaModel::geometric(0.5, 3), 0.1, 0.15),
                                    JitterModel{0.3, 0.06, 0.12}, BurstyModel{}};
    for (const auto& m : models) {
        const auto x = sample_intervals(m, 200000, 10);
        const std::vector<double> a(x.begin(), x.begin() + 100000), b(x.begin() + 100000, x.end());
        const double se = std::sqrt(2.0 * stats::variance(x) * 8.0 / 100000.0);
        CHECK(std::abs(stats::mean(a) - stats::mean(b)) < 4.0 * se);
    }
}

TEST_CASE("piecewise simulation") {
    std::vector<Segment> segs;
    const double means[] = {0.4, 1.0 / 3.0, 1.0 / 6.0, 0.1};
    const double lengths[] = {150, 150, 60, 90};
    for (int i = 0; i < 4; ++i) {
        segs.push_back({GammaRenewal{means[i], 0.2}, lengths[i]});
    }
    const auto sim = sim_piecewise(segs, 11);
    CHECK(sim.change_points == std::vector<double>{150, 300, 360});
    CHECK(sim.train.duration() == 450.0);
    double start = 0.0;
    for (int i = 0; i < 4; ++i) {
        const double n = static_cast<double>(count_events(sim.train, start, start + lengths[i]));
        const double expected = lengths[i] / means[i];
        // renewal count variance is length * sigma^2 / mu^3
        const double sd = std::sqrt(lengths[i] * 0.04 / std::pow(means[i], 3));
        CHECK(std::abs(n - expected) < 3.0 * sd);
        start += lengths[i];
    }

    const std::vector<Segment> one{{GammaRenewal{0.25, 0.25}, 100}};
    CHECK(sim_piecewise(one, 1).change_points.empty());
}

TEST_CASE("identical segments look like one long segment") {
    const JitterModel m{0.3, 0.06, 0.12};
    int passes = 0;
    for (int seed = 0; seed < 40; ++seed) {
        const std::vector<Segment> split{{m, 150}, {m, 150}};
        const auto a = isis(sim_piecewise(split, 100 + seed).train).values;
        const auto b = isis(simulate(m, 300, 500 + seed)).values;
        passes += stats::ks_two_sample(a, b).p_value >= 0.01;
    }
    CHECK(passes >= 38);
}

TEST_CASE("determinism") {
    const auto m = MaModel::from_isi_moments(MaModel::geometric(0.5, 3), 0.1, 0.15);
    const auto a = simulate(m, 100.0, 42);
    const auto b = simulate(m, 100.0, 42);
    const auto c = simulate(m, 100.0, 43);
    CHECK(std::equal(a.times().begin(), a.times().end(), b.times().begin(), b.times().end()));
    CHECK_FALSE(std::equal(a.times().begin(), a.times().end(), c.times().begin(), c.times().end()));
}

TEST_CASE("model validation") {
    CHECK_THROWS_AS(validate(GammaRenewal{-1.0, 1.0}), InvalidArgument);
    CHECK_THROWS_AS(validate(BurstyModel{1.5, 0.4}), InvalidArgument);
    CHECK_THROWS_AS(sim_renewal({0.25, 0.25}, 0.0, 1), InvalidArgument);
    CHECK_THROWS_AS(MaModel::from_isi_moments({}, 1.0, 1.0), InvalidArgument);
}
