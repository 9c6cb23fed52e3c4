// mft: simulate spike trains, estimate dependence order, calibrate thresholds,
// detect rate change points and run simulation studies.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mft/core.hpp"
#include "mft/detect.hpp"
#include "mft/estimate.hpp"
#include "mft/experiments.hpp"
#include "mft/io.hpp"
#include "mft/limit.hpp"
#include "mft/simulate.hpp"
#include "mft/version.hpp"

namespace {

using nlohmann::ordered_json;
using namespace mft;

enum Exit { kOk = 0, kUsage = 1, kData = 2, kUndecidable = 3 };

constexpr int kConfigFormatVersion = 1;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

ordered_json run_config(const std::string& command) {
    ordered_json j;
    j["command"] = command;
    j["config_format_version"] = kConfigFormatVersion;
    j["library_version"] = kVersion;
    return j;
}

void emit_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out || !(out << text)) {
        throw std::runtime_error("cannot write " + path);
    }
}

void emit_csv(const std::string& path, const io::CsvTable& table) {
    if (path.empty() || path == "-") {
        io::write_csv(std::cout, table);
    } else {
        io::write_csv(std::filesystem::path(path), table);
    }
}

std::vector<double> windows_from(const std::string& text) {
    if (text.empty()) {
        throw UsageError("--windows is required (comma-separated seconds)");
    }
    return parse_window_list(text);
}

struct SimulateArgs {
    std::string model;
    std::optional<double> duration;
    std::uint64_t seed = 1;
    std::string out;
};

int cmd_simulate(const SimulateArgs& a) {
    if (a.duration && !(*a.duration > 0.0)) {
        throw UsageError("--T must be positive");
    }
    const auto cfg = io::read_model_config(a.model);
    std::vector<Segment> segments = cfg.segments;
    if (!cfg.piecewise) {
        const auto T = a.duration ? a.duration : cfg.duration;
        if (!T) {
            throw UsageError("the model file has no T; pass --T");
        }
        segments.front().length = *T;
    } else if (a.duration) {
        double total = 0.0;
        for (const auto& s : segments) {
            total += s.length;
        }
        if (std::abs(total - *a.duration) > 1e-9 * total) {
            throw UsageError("--T disagrees with the summed segment lengths");
        }
    }
    const auto sim = sim_piecewise(segments, a.seed);

    auto config = run_config("simulate");
    config["model"] = a.model;
    config["T"] = sim.train.duration();
    config["seed"] = a.seed;
    config["out"] = a.out;
    config["resampled_intervals"] = sim.diagnostics.resampled;
    config["coincident_dropped"] = sim.diagnostics.coincident_dropped;
    const std::vector<std::string> comments{"config: " + config.dump()};
    io::write_spike_train(a.out, sim.train, comments);
    io::write_change_points(a.out + ".truth", sim.change_points, comments);
    std::fprintf(stderr, "wrote %zu spikes over %g s to %s (truth: %s.truth)\n", sim.train.size(),
                 sim.train.duration(), a.out.c_str(), a.out.c_str());
    return kOk;
}

struct EstimateArgs {
    std::string input;
    std::size_t section = 50;
    std::size_t max_lag = 10;
    double alpha = 0.05;
    std::string out;
};

int cmd_estimate_m(const EstimateArgs& a) {
    const auto train = io::read_spike_train(a.input);
    const auto est = estimate_m(train, a.section, a.max_lag, a.alpha);
    auto config = run_config("estimate-m");
    config["input"] = a.input;
    config["section"] = a.section;
    config["max_lag"] = a.max_lag;
    config["alpha"] = a.alpha;

    io::CsvTable t;
    t.meta = {{"config", config.dump()},
              {"m_hat", std::to_string(est.m_hat)},
              {"n_sections", std::to_string(est.n_sections)}};
    t.header = {"lag", "median", "p_value", "n_sections"};
    for (const auto& l : est.per_lag) {
        t.add_row({std::to_string(l.lag), io::format_double(l.median), io::format_double(l.p_value),
                   std::to_string(l.samples.size())});
    }
    emit_csv(a.out, t);
    std::fprintf(stderr, "m_hat = %zu\n", est.m_hat);
    return kOk;
}

struct CalibrateArgs {
    double duration = 0.0;
    std::string windows;
    double alpha = 0.05;
    std::size_t sims = 10000;
    std::uint64_t seed = 1;
    double grid_step = 0.0;
    std::string out;
};

int cmd_calibrate(const CalibrateArgs& a) {
    if (!(a.duration > 0.0)) {
        throw UsageError("--T must be positive");
    }
    const WindowSet ws(windows_from(a.windows), a.duration, a.grid_step);
    const auto cache = ThresholdCache::from_environment();
    const auto table = cache ? cache->get_or_calibrate(ws, a.alpha, a.sims, a.seed)
                             : threshold_Q(ws, a.alpha, a.sims, a.seed);
    for (const auto& w : table.warnings) {
        std::fprintf(stderr, "warning: %s\n", w.c_str());
    }
    emit_text(a.out, threshold_table_to_json(table) + "\n");
    return kOk;
}

struct DetectArgs {
    std::string input;
    std::string windows;
    double alpha = 0.05;
    std::string m = "auto";
    double grid_step = 0.0;
    std::string threshold = "asymptotic";
    std::string scale = "local";
    std::size_t sims = 10000;
    std::uint64_t seed = 1;
    std::size_t boot = 200;
    std::size_t block_len = 0;
    std::size_t section = 50;
    std::size_t max_lag = 10;
    double alpha_m = 0.05;
    std::string out;
    std::string field_csv;
};

int cmd_detect(const DetectArgs& a) {
    DetectOptions o;
    o.windows = windows_from(a.windows);
    o.alpha = a.alpha;
    if (a.m != "auto") {
        std::size_t pos = 0;
        long long v = -1;
        try {
            v = std::stoll(a.m, &pos);
        } catch (const std::exception&) {
        }
        if (v < 0 || pos != a.m.size()) {
            throw UsageError("--m must be 'auto' or a nonnegative integer");
        }
        o.m = static_cast<std::size_t>(v);
    }
    o.grid_step = a.grid_step;
    o.source = a.threshold == "bootstrap" ? ThresholdSource::bootstrap : ThresholdSource::asymptotic;
    o.scale = a.scale == "global" ? ScaleMode::global : ScaleMode::local;
    o.n_sims = a.sims;
    o.seed = a.seed;
    o.n_boot = a.boot;
    o.block_len = a.block_len;
    o.section_len = a.section;
    o.max_lag = a.max_lag;
    o.alpha_m = a.alpha_m;
    const auto cache = ThresholdCache::from_environment();
    o.cache = cache ? &*cache : nullptr;

    const auto train = io::read_spike_train(a.input);
    const auto report = detect(train, o);

    auto config = run_config("detect");
    config["input"] = a.input;
    config["T"] = train.duration();
    config["windows"] = o.windows;
    config["alpha"] = a.alpha;
    config["m"] = a.m;
    config["grid_step"] = WindowSet(o.windows, train.duration(), a.grid_step).grid_step();
    config["threshold"] = a.threshold;
    config["scale"] = a.scale;
    config["sims"] = a.sims;
    config["seed"] = a.seed;
    if (o.source == ThresholdSource::bootstrap) {
        config["boot"] = a.boot;
        config["block_len"] = a.block_len;
    }
    config["section"] = a.section;
    config["max_lag"] = a.max_lag;
    config["alpha_m"] = a.alpha_m;

    emit_text(a.out, io::report_to_json(report, config).dump(2) + "\n");
    if (!a.field_csv.empty()) {
        io::write_field_csv(a.field_csv, report.test, config);
    }
    for (const auto& w : report.warnings) {
        std::fprintf(stderr, "warning: %s\n", w.c_str());
    }
    return report.test.decidable ? kOk : kUndecidable;
}

struct ExperimentArgs {
    std::string name;
    std::optional<std::size_t> reps;
    std::uint64_t seed = 1;
    std::size_t sims = 10000;
    double alpha = 0.05;
    bool full = false;
    double c = 0.5;
    double bin_width = 5.0;
    std::string out;
};

int cmd_experiment(const ExperimentArgs& a) {
    experiments::Settings s;
    s.seed = a.seed;
    s.n_sims = a.sims;
    s.alpha = a.alpha;
    io::CsvTable t;
    if (a.name == "significance-level") {
        s.reps = a.reps.value_or(a.full ? 10000 : 2000);
        t = experiments::significance_level(s, a.c);
    } else if (a.name == "alternative-histogram") {
        s.reps = a.reps.value_or(1000);
        t = experiments::alternative_histogram(s, a.bin_width);
    } else if (a.name == "window-size") {
        s.reps = a.reps.value_or(a.full ? 10000 : 500);
        t = experiments::window_size(s);
    } else if (a.name == "estimator-bias") {
        s.reps = a.reps.value_or(a.full ? 1000 : 500);
        t = experiments::estimator_bias(s);
    } else {
        throw UsageError("unknown experiment '" + a.name + "'");
    }
    auto config = run_config("experiment");
    config["name"] = a.name;
    config["reps"] = s.reps;
    config["seed"] = a.seed;
    config["sims"] = a.sims;
    config["alpha"] = a.alpha;
    config["full"] = a.full;
    if (a.name == "significance-level") {
        config["c"] = a.c;
    }
    if (a.name == "alternative-histogram") {
        config["bin_width"] = a.bin_width;
    }
    t.meta.insert(t.meta.begin(), {"config", config.dump()});
    emit_csv(a.out, t);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multiple filter test for rate change points in spike trains with serial dependence"};
    app.set_version_flag("--version", std::string(mft::kVersion));
    app.set_config("--config", "", "Read options from a key = value file");
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "Simulate a spike train from a model file");
    s->add_option("--model", sim.model, "Model file")->required()->check(CLI::ExistingFile);
    s->add_option("--T", sim.duration, "Duration in seconds");
    s->add_option("--seed", sim.seed, "Master seed");
    s->add_option("--out", sim.out, "Output spike file (truth goes to <out>.truth)")->required();

    EstimateArgs est;
    auto* e = app.add_subcommand("estimate-m", "Estimate the dependence order");
    e->add_option("--input", est.input, "Spike file")->required();
    e->add_option("--section", est.section, "Intervals per section")->capture_default_str();
    e->add_option("--max-lag", est.max_lag, "Largest lag tested")->capture_default_str();
    e->add_option("--alpha", est.alpha, "Per-lag test level")->capture_default_str();
    e->add_option("--out", est.out, "Per-lag CSV (default stdout)");

    CalibrateArgs cal;
    auto* c = app.add_subcommand("calibrate", "Simulate the rejection threshold");
    c->add_option("--T", cal.duration, "Duration in seconds")->required();
    c->add_option("--windows", cal.windows, "Comma-separated window sizes")->required();
    c->add_option("--alpha", cal.alpha, "Test level")->capture_default_str();
    c->add_option("--sims", cal.sims, "Limit-process simulations")->capture_default_str();
    c->add_option("--seed", cal.seed, "Seed")->capture_default_str();
    c->add_option("--grid-step", cal.grid_step, "Grid step (default smallest window / 100)");
    c->add_option("--out", cal.out, "Threshold JSON (default stdout)");

    DetectArgs det;
    auto* d = app.add_subcommand("detect", "Test for rate changes and locate change points");
    d->add_option("--input", det.input, "Spike file")->required();
    d->add_option("--windows", det.windows, "Comma-separated window sizes")->required();
    d->add_option("--alpha", det.alpha, "Test level")->capture_default_str();
    d->add_option("--m", det.m, "Dependence order: auto or an integer")->capture_default_str();
    d->add_option("--grid-step", det.grid_step, "Grid step (default smallest window / 100)");
    d->add_option("--threshold", det.threshold, "asymptotic or bootstrap (bootstrap is experimental)")
        ->check(CLI::IsMember({"asymptotic", "bootstrap"}))
        ->capture_default_str();
    d->add_option("--scale", det.scale, "local or global scale estimate")
        ->check(CLI::IsMember({"local", "global"}))
        ->capture_default_str();
    d->add_option("--sims", det.sims, "Limit-process simulations")->capture_default_str();
    d->add_option("--seed", det.seed, "Seed")->capture_default_str();
    d->add_option("--boot", det.boot, "Bootstrap replicates")->capture_default_str();
    d->add_option("--block-len", det.block_len, "Bootstrap block length in intervals (default 10(m+1), experimental)");
    d->add_option("--section", det.section, "Intervals per section for m estimation")
        ->capture_default_str();
    d->add_option("--max-lag", det.max_lag, "Largest lag for m estimation")->capture_default_str();
    d->add_option("--alpha-m", det.alpha_m, "Per-lag level for m estimation")->capture_default_str();
    d->add_option("--out", det.out, "Report JSON (default stdout)");
    d->add_option("--field-csv", det.field_csv, "Write h, t, G, R, state rows here");

    ExperimentArgs exp;
    auto* x = app.add_subcommand("experiment", "Run a simulation study");
    x->add_option("name", exp.name, "significance-level | alternative-histogram | window-size | estimator-bias")
        ->required();
    x->add_option("--reps", exp.reps, "Replicates (default depends on the experiment)");
    x->add_option("--seed", exp.seed, "Master seed")->capture_default_str();
    x->add_option("--sims", exp.sims, "Limit-process simulations")->capture_default_str();
    x->add_option("--alpha", exp.alpha, "Test level")->capture_default_str();
    x->add_flag("--full", exp.full, "Large replicate counts (10000 for significance-level)");
    x->add_option("--c", exp.c, "Geometric coefficient for significance-level")->capture_default_str();
    x->add_option("--bin-width", exp.bin_width, "Histogram bin width")->capture_default_str();
    x->add_option("--out", exp.out, "CSV output (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        return app.exit(err) == 0 ? kOk : kUsage;
    }

    try {
        if (*s) return cmd_simulate(sim);
        if (*e) return cmd_estimate_m(est);
        if (*c) return cmd_calibrate(cal);
        if (*d) return cmd_detect(det);
        if (*x) return cmd_experiment(exp);
    } catch (const UsageError& err) {
        std::fprintf(stderr, "usage error: %s\n", err.what());
        return kUsage;
    } catch (const mft::io::ParseError& err) {
        std::fprintf(stderr, "data error: %s\n", err.what());
        return kData;
    } catch (const mft::InvalidArgument& err) {
        std::fprintf(stderr, "usage error: %s\n", err.what());
        return kUsage;
    } catch (const std::exception& err) {
        std::fprintf(stderr, "data error: %s\n", err.what());
        return kData;
    }
    return kUsage;
}
