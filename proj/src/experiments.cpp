#include "mft/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mft/estimate.hpp"
#include "mft/parallel.hpp"
#include "mft/random.hpp"
#include "mft/version.hpp"

namespace mft::experiments {

namespace {

using io::format_double;

std::string level_string(std::size_t hits, std::size_t reps) {
    return format_double(static_cast<double>(hits) / static_cast<double>(reps));
}

void add_common_meta(io::CsvTable& t, const std::string& name, const Settings& s) {
    t.meta.emplace_back("experiment", name);
    t.meta.emplace_back("library_version", kVersion);
    t.meta.emplace_back("reps", std::to_string(s.reps));
    t.meta.emplace_back("seed", std::to_string(s.seed));
    t.meta.emplace_back("n_sims", std::to_string(s.n_sims));
    t.meta.emplace_back("alpha", format_double(s.alpha));
}

std::string join(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out += (i ? "," : "") + format_double(v[i]);
    }
    return out;
}

}  // namespace

double Scenario::duration() const {
    double T = 0.0;
    for (const auto& s : segments) {
        T += s.length;
    }
    return T;
}

std::vector<double> Scenario::change_points() const {
    std::vector<double> out;
    double t = 0.0;
    for (std::size_t i = 0; i + 1 < segments.size(); ++i) {
        t += segments[i].length;
        out.push_back(t);
    }
    return out;
}

Scenario step_gamma_scenario() {
    Scenario s{"step-gamma", {}, {50, 100, 150}};
    const double means[] = {0.4, 1.0 / 3.0, 1.0 / 6.0, 0.1};
    const double lengths[] = {150, 150, 60, 90};
    for (int i = 0; i < 4; ++i) {
        s.segments.push_back({GammaRenewal{means[i], 0.2}, lengths[i]});
    }
    return s;
}

Scenario correlated_profile_scenario() {
    Scenario s{"correlated-profile", {}, {25, 50, 75, 100}};
    const auto coeffs = MaModel::geometric(0.5, 3);
    const double means[] = {0.1, 0.15, 0.25};
    const double lengths[] = {120, 90, 90};
    for (int i = 0; i < 3; ++i) {
        s.segments.push_back({MaModel::from_isi_moments(coeffs, means[i], 0.15), lengths[i]});
    }
    return s;
}

Scenario jitter_step_scenario() {
    Scenario s{"jitter-step", {}, {25, 50, 75, 100}};
    const double periods[] = {0.1, 0.09, 0.1};
    for (double nu : periods) {
        s.segments.push_back({JitterModel{nu, 0.03, 0.03}, 100});
    }
    return s;
}

MaModel example_ma_model() { return MaModel::from_isi_moments(MaModel::geometric(0.25, 3), 0.2, 0.1); }

JitterModel example_jitter_model() { return JitterModel{0.3, 0.06, 0.12}; }

BurstyModel example_bursty_model() { return BurstyModel{}; }

std::vector<std::vector<ReplicateOutcome>> run_replicates(const std::vector<Segment>& segments,
                                                          const std::vector<Variant>& variants,
                                                          const ThresholdTable& table,
                                                          std::size_t reps, std::uint64_t seed) {
    std::vector<std::vector<ReplicateOutcome>> out(variants.size(),
                                                   std::vector<ReplicateOutcome>(reps));
    parallel_for(reps, [&](std::size_t r) {
        const auto sim = sim_piecewise(segments, derive_seed(seed, r));
        std::optional<std::size_t> m_hat;
        for (std::size_t v = 0; v < variants.size(); ++v) {
            const auto& var = variants[v];
            DetectOptions o;
            o.windows = table.meta.windows;
            o.alpha = table.meta.alpha;
            o.grid_step = table.meta.grid_step;
            o.scale = var.scale;
            o.mask_neighborhood = var.mask_neighborhood;
            o.table = &table;
            if (var.m) {
                o.m = var.m;
            } else {
                if (!m_hat) {
                    m_hat = estimate_m(sim.train).m_hat;
                }
                o.m = m_hat;
            }
            const auto rep = detect(sim.train, o);
            auto& res = out[v][r];
            res.reject = rep.test.reject;
            res.decidable = rep.test.decidable;
            res.m_used = rep.m_used;
            res.change_points = rep.change_points;
        }
    });
    return out;
}

io::CsvTable significance_level(const Settings& settings, double c, std::size_t max_order) {
    const double T = 300.0;
    const std::vector<double> H{25, 50, 75, 100};
    const auto table = threshold_Q(WindowSet(H, T), settings.alpha, settings.n_sims, settings.seed);

    io::CsvTable t;
    add_common_meta(t, "significance-level", settings);
    t.meta.emplace_back("T", format_double(T));
    t.meta.emplace_back("windows", join(H));
    t.meta.emplace_back("isi_mean", "0.1");
    t.meta.emplace_back("isi_sd", "0.15");
    t.meta.emplace_back("Q", format_double(table.q));
    t.header = {"c", "m_true", "variant", "reps", "rejections", "undecidable", "level", "mean_m_used"};

    for (std::size_t m = 1; m <= max_order; ++m) {
        const std::vector<Segment> segs{
            {MaModel::from_isi_moments(MaModel::geometric(c, m), 0.1, 0.15), T}};
        const std::vector<Variant> variants{
            {"mft0", 0}, {"mft_true_m", m}, {"mft_m_hat", std::nullopt}};
        const auto res = run_replicates(segs, variants, table, settings.reps,
                                        derive_seed(settings.seed, 1000 + m));
        for (std::size_t v = 0; v < variants.size(); ++v) {
            std::size_t rej = 0, undec = 0;
            double m_sum = 0.0;
            for (const auto& r : res[v]) {
                rej += r.reject;
                undec += !r.decidable;
                m_sum += static_cast<double>(r.m_used);
            }
            t.add_row({format_double(c), std::to_string(m), variants[v].name,
                       std::to_string(settings.reps), std::to_string(rej), std::to_string(undec),
                       level_string(rej, settings.reps),
                       format_double(m_sum / static_cast<double>(settings.reps))});
        }
    }
    return t;
}

io::CsvTable alternative_histogram(const Settings& settings, double bin_width) {
    if (!(bin_width > 0.0)) {
        throw InvalidArgument("bin width must be positive");
    }
    const auto sc = correlated_profile_scenario();
    const double T = sc.duration();
    const auto table =
        threshold_Q(WindowSet(sc.windows, T), settings.alpha, settings.n_sims, settings.seed);
    const std::vector<Variant> variants{{"mfa0_local", 0, ScaleMode::local},
                                        {"mfa3_global", 3, ScaleMode::global},
                                        {"mfa3_local", 3, ScaleMode::local}};
    const auto res = run_replicates(sc.segments, variants, table, settings.reps, settings.seed);

    io::CsvTable t;
    add_common_meta(t, "alternative-histogram", settings);
    t.meta.emplace_back("scenario", sc.name);
    t.meta.emplace_back("T", format_double(T));
    t.meta.emplace_back("windows", join(sc.windows));
    t.meta.emplace_back("change_points", join(sc.change_points()));
    t.meta.emplace_back("Q", format_double(table.q));
    t.header = {"variant", "bin_start", "bin_end", "reps", "detections"};

    const auto n_bins = static_cast<std::size_t>(std::ceil(T / bin_width));
    for (std::size_t v = 0; v < variants.size(); ++v) {
        std::vector<std::size_t> counts(n_bins, 0);
        for (const auto& r : res[v]) {
            for (const auto& c : r.change_points) {
                const auto b = std::min(n_bins - 1, static_cast<std::size_t>(c.time / bin_width));
                ++counts[b];
            }
        }
        for (std::size_t b = 0; b < n_bins; ++b) {
            t.add_row({variants[v].name, format_double(static_cast<double>(b) * bin_width),
                       format_double(std::min(T, static_cast<double>(b + 1) * bin_width)),
                       std::to_string(settings.reps), std::to_string(counts[b])});
        }
    }
    return t;
}

io::CsvTable window_size(const Settings& settings, std::vector<double> spike_counts) {
    struct Entry {
        std::string name;
        Model model;
        std::size_t m;
    };
    const std::vector<Entry> models{{"ma", example_ma_model(), 3},
                                    {"jitter", example_jitter_model(), 1},
                                    {"bursty", example_bursty_model(), 2}};

    io::CsvTable t;
    add_common_meta(t, "window-size", settings);
    t.meta.emplace_back("windows", "h, 1.5h, 2h with h = spikes * mean interval");
    t.meta.emplace_back("T", "8h");
    t.header = {"model",       "spikes", "h_min", "T",     "variant",
                "reps",        "rejections", "undecidable", "level"};

    std::uint64_t stream = 0;
    for (const auto& e : models) {
        const double mu = model_mean(e.model);
        for (double n : spike_counts) {
            if (!(n > 0.0)) {
                throw InvalidArgument("spike counts must be positive");
            }
            const double h = n * mu;
            const double T = 8.0 * h;
            const std::vector<double> H{h, 1.5 * h, 2.0 * h};
            const auto table =
                threshold_Q(WindowSet(H, T), settings.alpha, settings.n_sims, settings.seed);
            const std::vector<Variant> variants{{"masked", e.m, ScaleMode::local, true},
                                                {"unmasked", e.m, ScaleMode::local, false}};
            const std::vector<Segment> segs{{e.model, T}};
            const auto res = run_replicates(segs, variants, table, settings.reps,
                                            derive_seed(settings.seed, 2000 + stream++));
            for (std::size_t v = 0; v < variants.size(); ++v) {
                std::size_t rej = 0, undec = 0;
                for (const auto& r : res[v]) {
                    rej += r.reject;
                    undec += !r.decidable;
                }
                t.add_row({e.name, format_double(n), format_double(h), format_double(T),
                           variants[v].name, std::to_string(settings.reps), std::to_string(rej),
                           std::to_string(undec), level_string(rej, settings.reps)});
            }
        }
    }
    return t;
}

double true_count_variance(const std::vector<Segment>& segments, double a, double b) {
    double total = 0.0;
    double start = 0.0;
    for (const auto& s : segments) {
        const double end = start + s.length;
        const double overlap = std::min(b, end) - std::max(a, start);
        if (overlap > 0.0) {
            total += overlap * theoretical_rho2(s.model).count_variance_rate();
        }
        start = end;
    }
    return total;
}

io::CsvTable estimator_bias(const Settings& settings) {
    const auto sc = correlated_profile_scenario();
    const double T = sc.duration();
    const std::size_t m = 3;
    const WindowSet ws(sc.windows, T);

    std::vector<std::vector<double>> grids;
    for (double h : sc.windows) {
        grids.push_back(ws.grid(h));
    }
    // Per replicate storage keeps the parallel loop free of shared writes.
    std::vector<std::vector<std::vector<std::optional<double>>>> local(settings.reps),
        global(settings.reps);
    parallel_for(settings.reps, [&](std::size_t r) {
        const auto sim = sim_piecewise(sc.segments, derive_seed(settings.seed, r));
        const LocalScaleEstimator est(sim.train, m, m + 5);
        local[r].resize(grids.size());
        global[r].resize(grids.size());
        for (std::size_t w = 0; w < grids.size(); ++w) {
            const double h = sc.windows[w];
            const auto g = s_hat_global(sim.train, h, m);
            for (double t : grids[w]) {
                const auto s = est.at(t, h).s_hat;
                local[r][w].push_back(s ? std::optional<double>(*s * *s) : std::nullopt);
                global[r][w].push_back(g ? std::optional<double>(*g * *g) : std::nullopt);
            }
        }
    });

    io::CsvTable t;
    add_common_meta(t, "estimator-bias", settings);
    t.meta.emplace_back("scenario", sc.name);
    t.meta.emplace_back("T", format_double(T));
    t.meta.emplace_back("m", std::to_string(m));
    t.meta.emplace_back("change_points", join(sc.change_points()));
    t.header = {"h", "t", "true_s2", "local_mean", "local_defined", "global_mean", "global_defined"};
    for (std::size_t w = 0; w < grids.size(); ++w) {
        const double h = sc.windows[w];
        for (std::size_t k = 0; k < grids[w].size(); ++k) {
            const double tt = grids[w][k];
            double ls = 0.0, gs = 0.0;
            std::size_t ln = 0, gn = 0;
            for (std::size_t r = 0; r < settings.reps; ++r) {
                if (const auto& v = local[r][w][k]) {
                    ls += *v;
                    ++ln;
                }
                if (const auto& v = global[r][w][k]) {
                    gs += *v;
                    ++gn;
                }
            }
            t.add_row({format_double(h), format_double(tt),
                       format_double(true_count_variance(sc.segments, tt - h, tt + h)),
                       ln ? format_double(ls / static_cast<double>(ln)) : "nan", std::to_string(ln),
                       gn ? format_double(gs / static_cast<double>(gn)) : "nan",
                       std::to_string(gn)});
        }
    }
    return t;
}

const std::vector<std::string>& names() {
    static const std::vector<std::string> n{"significance-level", "alternative-histogram",
                                            "window-size", "estimator-bias"};
    return n;
}

}  // namespace mft::experiments
