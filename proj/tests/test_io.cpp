#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mft/io.hpp"
#include "mft/simulate.hpp"

using namespace mft;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("mft_io_" + name);
}

}  // namespace

TEST_CASE("spike train text format") {
    std::istringstream in("# T=10\n# a comment\n0.5\n1.5\n\n9.75\n");
    const auto t = io::parse_spike_train(in);
    CHECK(t.duration() == 10.0);
    CHECK(t.size() == 3);

    std::istringstream no_header("0.5\n2.25\n");
    CHECK(io::parse_spike_train(no_header).duration() == 3.0);

    std::istringstream bad("0.5\n1.0\nabc\n");
    try {
        io::parse_spike_train(bad, "bad.txt");
        FAIL("expected a parse error");
    } catch (const io::ParseError& e) {
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("bad.txt:3") != std::string::npos);
    }
    std::istringstream unordered("1.0\n0.5\n");
    CHECK_THROWS_AS(io::parse_spike_train(unordered), io::ParseError);
    std::istringstream beyond("# T=1\n0.5\n2.0\n");
    CHECK_THROWS_AS(io::parse_spike_train(beyond), io::ParseError);
    std::istringstream empty("# T=1\n");
    CHECK_THROWS_AS(io::parse_spike_train(empty), io::ParseError);
    CHECK_THROWS_AS(io::read_spike_train(temp_file("missing")), io::ParseError);
}

TEST_CASE("spike train round trip is exact") {
    const auto train = sim_renewal({0.1, 0.07}, 50.0, 3);
    const auto path = temp_file("train.txt");
    io::write_spike_train(path, train, {"seed: 3"});
    const auto back = io::read_spike_train(path);
    CHECK(back.duration() == train.duration());
    CHECK(std::equal(back.times().begin(), back.times().end(), train.times().begin(),
                     train.times().end()));
    std::filesystem::remove(path);
}

TEST_CASE("change point sidecar") {
    const auto path = temp_file("truth.txt");
    io::write_change_points(path, {150, 300, 360}, {"truth"});
    CHECK(io::read_change_points(path) == std::vector<double>{150, 300, 360});
    std::filesystem::remove(path);
}

TEST_CASE("model config") {
    SUBCASE("single model") {
        std::istringstream in("model = jitter\nnu = 0.3\nsigma1 = 0.06\nsigma2 = 0.12\nT = 100\n");
        const auto cfg = io::parse_model_config(in);
        REQUIRE(cfg.segments.size() == 1);
        CHECK_FALSE(cfg.piecewise);
        CHECK(*cfg.duration == 100.0);
        CHECK(std::get<JitterModel>(cfg.segments[0].model).sigma2 == 0.12);
    }
    SUBCASE("segments") {
        std::istringstream in(
            "[segment]\nmodel = gamma\nmean = 0.4\nsd = 0.2\nlength = 150\n"
            "[segment]\nmodel = ma\ncoeffs = 1, 0.5, 0.25\nmean = 0.1\nsd = 0.15\nlength = 60\n"
            "[segment]\nmodel = bursty\np_i = 0.5\np_j = 0.4\nx_lo = 0.45\nx_hi = 0.73\n"
            "y_lo = 0.01\ny_hi = 0.12\nlength = 30\n");
        const auto cfg = io::parse_model_config(in);
        REQUIRE(cfg.segments.size() == 3);
        CHECK(cfg.piecewise);
        CHECK(cfg.segments[1].length == 60.0);
        CHECK(std::get<MaModel>(cfg.segments[1].model).order() == 2);
        CHECK(model_mean(cfg.segments[1].model) == doctest::Approx(0.1));
    }
    SUBCASE("errors name the line") {
        std::istringstream unknown("model = gamma\nmean = 1\nsd = 1\ncolour = red\n");
        try {
            io::parse_model_config(unknown, "m.cfg");
            FAIL("expected a parse error");
        } catch (const io::ParseError& e) {
            CHECK(e.line() == 4);
        }
        std::istringstream missing("model = gamma\nmean = 1\n");
        CHECK_THROWS_AS(io::parse_model_config(missing), io::ParseError);
        std::istringstream kind("model = hawkes\n");
        CHECK_THROWS_AS(io::parse_model_config(kind), io::ParseError);
        std::istringstream junk("model gamma\n");
        CHECK_THROWS_AS(io::parse_model_config(junk), io::ParseError);
    }
}

TEST_CASE("csv round trip") {
    io::CsvTable t;
    t.meta = {{"experiment", "demo"}, {"config", "{\"a\": 1}"}};
    t.header = {"x", "y"};
    t.add_row({"1", io::format_double(0.1)});
    t.add_row({"2", io::format_double(1.0 / 3.0)});
    CHECK_THROWS(t.add_row({"3"}));
    std::stringstream ss;
    io::write_csv(ss, t);
    const auto back = io::read_csv(ss);
    CHECK(back.header == t.header);
    CHECK(back.rows == t.rows);
    CHECK(*back.meta_value("config") == "{\"a\": 1}");
    CHECK(back.column("y") == 1);
    CHECK(std::stod(back.rows[1][1]) == 1.0 / 3.0);
}

TEST_CASE("report json") {
    DetectionReport r;
    r.test.statistic = 3.5;
    r.test.q = 2.3;
    r.test.reject = true;
    r.change_points = {{150.5, 50, 4.2}};
    r.rate_profile = {{0, 150.5, 300, 1.99}, {150.5, 450, 1000, 3.34}};
    r.m_used = 1;
    const auto j = io::report_to_json(r, {{"command", "detect"}});
    CHECK(j["format"] == "mft-detection-report");
    CHECK(j["config"]["command"] == "detect");
    CHECK(j["test"]["reject"] == true);
    CHECK(j["change_points"][0]["time"] == 150.5);
    CHECK(j["rate_profile"].size() == 2);

    r.test.decidable = false;
    CHECK(io::report_to_json(r, {})["test"]["statistic"].is_null());
}
