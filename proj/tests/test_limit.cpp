#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "mft/limit.hpp"
#include "mft/random.hpp"
#include "mft/stats.hpp"

using namespace mft;

TEST_CASE("limit process formula") {
    Rng rng = make_rng(1);
    const double dt = 0.5, h = 2.0;
    const auto path = brownian_path(20, dt, rng);
    REQUIRE(path.size() == 21);
    CHECK(path[0] == 0.0);
    const std::size_t grid = 13;  // t = 2 .. 8
    const auto l = limit_process(path, h, dt, grid);
    REQUIRE(l.size() == grid);
    for (std::size_t k = 0; k < grid; ++k) {
        const std::size_t i = 4 + k;  // index of t
        const double want = ((path[i + 4] - path[i]) - (path[i] - path[i - 4])) / std::sqrt(2 * h);
        CHECK(l[k] == doctest::Approx(want).epsilon(1e-14));
    }
    CHECK(limit_process(path, h, dt, 14).size() == grid);  // truncated to the path
}

TEST_CASE("single grid point maxima are folded normal") {
    // T = 2h leaves one grid point, so M*_h = |N(0, 1)| with mean sqrt(2/pi).
    const WindowSet ws({10.0}, 20.0, 0.1);
    const auto s = sim_limit_maxima(ws, 20000, 3);
    std::vector<double> m(s.maxima.begin(), s.maxima.end());
    CHECK(stats::mean(m) == doctest::Approx(std::sqrt(2.0 / M_PI)).epsilon(0.02));
    CHECK(stats::variance(m) == doctest::Approx(1.0 - 2.0 / M_PI).epsilon(0.04));
}

TEST_CASE("calibration determinism and structure") {
    const WindowSet ws({25, 50}, 200.0);
    const auto a = threshold_Q(ws, 0.05, 500, 7);
    const auto b = threshold_Q(ws, 0.05, 500, 7);
    CHECK(a.q == b.q);
    REQUIRE(a.rows.size() == 2);
    CHECK(a.rows[0].h == 25.0);
    CHECK(a.rows[0].mean > a.rows[1].mean);  // more grid points, larger maximum
    CHECK(a.row(50.0) != nullptr);
    CHECK(a.row(60.0) == nullptr);
    CHECK_FALSE(a.warnings.empty());  // fewer than 1000 simulations
    CHECK(threshold_Q(ws, 0.05, 500, 8).q != a.q);
}

TEST_CASE("threshold monotone in alpha and minimal at alpha = 1") {
    const WindowSet ws({25, 50}, 200.0);
    const auto samples = sim_limit_maxima(ws, 2000, 9);
    double prev = INFINITY;
    for (double alpha : {0.01, 0.05, 0.1, 0.5, 1.0}) {
        const double q = threshold_from_samples(samples, ws, alpha, 9).q;
        CHECK(q <= prev);
        prev = q;
    }
    const auto rows = limit_moments(samples);
    const auto z = standardized_maxima(samples, rows);
    CHECK(threshold_from_samples(samples, ws, 1.0, 9).q ==
          *std::min_element(z.begin(), z.end()));
}

TEST_CASE("standardized maxima use the per-window moments") {
    const WindowSet ws({25, 50}, 200.0);
    const auto samples = sim_limit_maxima(ws, 300, 10);
    const auto rows = limit_moments(samples);
    const auto z = standardized_maxima(samples, rows);
    for (std::size_t i = 0; i < samples.n_sims; ++i) {
        const double a = (samples.at(i, 0) - rows[0].mean) / rows[0].sd;
        const double b = (samples.at(i, 1) - rows[1].mean) / rows[1].sd;
        CHECK(z[i] == doctest::Approx(std::max(a, b)));
    }
}

TEST_CASE("calibration errors") {
    CHECK_THROWS_AS(sim_limit_maxima(WindowSet({10}, 100.0, 6.0), 10, 1), CalibrationError);
    CHECK_THROWS(threshold_Q(WindowSet({10}, 100.0), 0.0, 10, 1));
    CHECK_THROWS(threshold_Q(WindowSet({10}, 100.0), 1.5, 10, 1));
}

TEST_CASE("threshold cache round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "mft_cache_test";
    std::filesystem::remove_all(dir);
    const ThresholdCache cache(dir);
    const WindowSet ws({25, 50}, 200.0);
    const auto first = cache.get_or_calibrate(ws, 0.05, 300, 2);
    REQUIRE(std::filesystem::exists(cache.path_for(first.meta)));
    const auto loaded = cache.load(first.meta);
    REQUIRE(loaded.has_value());
    CHECK(loaded->q == first.q);
    CHECK(loaded->meta == first.meta);
    CHECK(loaded->rows[1].sd == first.rows[1].sd);
    // a different alpha is a different key
    auto meta = first.meta;
    meta.alpha = 0.1;
    CHECK_FALSE(cache.load(meta).has_value());
    CHECK(cache.path_for(meta) != cache.path_for(first.meta));

    const auto text = threshold_table_to_json(first);
    CHECK(threshold_table_from_json(text).q == first.q);
    CHECK_THROWS(threshold_table_from_json("{\"format\": \"other\"}"));
    std::filesystem::remove_all(dir);
}
