#include <doctest.h>

#include <random>
#include <stdexcept>

#include "mft/core.hpp"
#include "mft/random.hpp"

using namespace mft;

TEST_CASE("spike train validation") {
    CHECK_NOTHROW(SpikeTrain({0.5, 1.0, 2.0}, 2.0));
    CHECK_THROWS_AS(SpikeTrain({1.0, 1.0}, 2.0), InvalidArgument);
    CHECK_THROWS_AS(SpikeTrain({1.0, 0.5}, 2.0), InvalidArgument);
    CHECK_THROWS_AS(SpikeTrain({0.0, 1.0}, 2.0), InvalidArgument);
    CHECK_THROWS_AS(SpikeTrain({1.0, 3.0}, 2.0), InvalidArgument);
    CHECK_THROWS_AS(SpikeTrain({}, 2.0), InvalidArgument);
    CHECK_THROWS_AS(SpikeTrain({1.0}, 0.0), InvalidArgument);
    CHECK(SpikeTrain({}, 2.0, true).empty());
    // an event exactly at T is allowed
    CHECK(SpikeTrain({1.0, 2.0}, 2.0).size() == 2);
}

TEST_CASE("count_events uses half-open (a, b]") {
    const SpikeTrain train({1.0, 2.0, 3.0}, 4.0);
    CHECK(count_events(train, 1.0, 3.0) == 2);
    CHECK(count_events(train, 0.0, 1.0) == 1);
    CHECK(count_events(train, 0.0, 4.0) == 3);
    CHECK(count_events(train, 2.0, 2.0) == 0);
    CHECK(count_events(train, 3.0, 4.0) == 0);
    CHECK_THROWS_AS(count_events(train, 2.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(count_events(train, -1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(count_events(train, 0.0, 5.0), std::domain_error);
}

TEST_CASE("count_events is additive over adjacent intervals") {
    Rng rng = make_rng(3);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    std::vector<double> t;
    double s = 0.0;
    std::exponential_distribution<double> e(5.0);
    while ((s += e(rng)) <= 100.0) {
        t.push_back(s);
    }
    const SpikeTrain train(t, 100.0);
    for (int i = 0; i < 200; ++i) {
        double a = u(rng), b = u(rng), c = u(rng);
        if (a > b) std::swap(a, b);
        if (b > c) std::swap(b, c);
        if (a > b) std::swap(a, b);
        CHECK(count_events(train, a, b) + count_events(train, b, c) == count_events(train, a, c));
    }
}

TEST_CASE("intervals and window intervals") {
    const SpikeTrain train({0.5, 1.0, 2.0, 3.5}, 4.0);
    const auto x = isis(train);
    REQUIRE(x.size() == 4);
    CHECK(x.values[0] == 0.5);
    CHECK(x.values[3] == 1.5);
    CHECK_FALSE(x.insufficient);

    // only intervals with both ends in (0.5, 3.5]: 1.0-0.5 excluded (0.5 not inside)
    const auto w = window_isis(train, 0.5, 3.5);
    REQUIRE(w.size() == 2);
    CHECK(w.values[0] == 1.0);
    CHECK(w.values[1] == 1.5);

    const auto all = window_isis(train, 0.0, 4.0);
    CHECK(all.size() == 3);  // the interval from time 0 is never included
    CHECK(window_isis(train, 3.0, 4.0).insufficient);
    CHECK_THROWS_AS(window_isis(train, 3.0, 2.0), std::domain_error);
    CHECK_THROWS_AS(window_isis(train, 0.0, 5.0), std::domain_error);
}

TEST_CASE("window set grid") {
    const WindowSet ws({100, 50, 75, 50}, 600.0);
    REQUIRE(ws.size() == 3);
    CHECK(ws.smallest() == 50.0);
    CHECK(ws.grid_step() == doctest::Approx(0.5));
    const auto g = ws.grid(100.0);
    CHECK(g.front() == 100.0);
    CHECK(g.back() == doctest::Approx(500.0));
    CHECK(g.size() == ws.grid_size(100.0));
    CHECK(g.size() == 801);

    CHECK_THROWS_AS(WindowSet({}, 10.0), InvalidArgument);
    CHECK_THROWS_AS(WindowSet({6.0}, 10.0), InvalidArgument);  // 2h > T
    CHECK_THROWS_AS(WindowSet({-1.0}, 10.0), InvalidArgument);
    CHECK_NOTHROW(WindowSet({5.0}, 10.0));
}

TEST_CASE("window list parsing") {
    CHECK(parse_window_list("25,50, 75") == std::vector<double>{25, 50, 75});
    CHECK_THROWS_AS(parse_window_list("25,x"), InvalidArgument);
    CHECK_THROWS_AS(parse_window_list(""), InvalidArgument);
}

TEST_CASE("shifted train") {
    const SpikeTrain train({0.25, 1.5}, 2.0);
    const auto s = train.shifted(64.0);
    CHECK(s.duration() == 66.0);
    CHECK(s[0] == 64.25);
    CHECK(s[1] == 65.5);
}

TEST_CASE("seed derivation is deterministic and stream-separated") {
    CHECK(derive_seed(1, 0) == derive_seed(1, 0));
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
    Rng a = make_rng(5, 2), b = make_rng(5, 2);
    CHECK(a() == b());
}
