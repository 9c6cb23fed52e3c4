#include "mft/detect.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "mft/bootstrap.hpp"
#include "mft/parallel.hpp"
#include "mft/stats.hpp"

namespace mft {

const char* to_string(GridState s) {
    switch (s) {
        case GridState::valid:
            return "valid";
        case GridState::zeroed:
            return "zeroed";
        case GridState::masked:
            return "masked";
    }
    return "?";
}

const char* to_string(ScaleMode s) { return s == ScaleMode::local ? "local" : "global"; }

const char* to_string(ThresholdSource s) {
    return s == ThresholdSource::asymptotic ? "asymptotic" : "bootstrap";
}

std::size_t ScaledField::count(GridState s) const {
    return static_cast<std::size_t>(std::count(state.begin(), state.end(), s));
}

double ScaledField::fraction(GridState s) const {
    return state.empty() ? 0.0 : static_cast<double>(count(s)) / static_cast<double>(state.size());
}

namespace {

using ScaleAt = std::function<std::optional<double>(double t)>;

double tolerance(double duration) { return 1e-9 * std::max(1.0, duration); }

ScaledField build_field(const SpikeTrain& train, double h, std::span<const double> grid,
                        const ThresholdRow& row, const ScaleAt& scale_at, bool mask_neighborhood) {
    const double T = train.duration();
    const double tol = tolerance(T);
    const auto times = train.times();
    const std::size_t n = grid.size();

    ScaledField f;
    f.h = h;
    f.grid.assign(grid.begin(), grid.end());
    f.g.assign(n, 0.0);
    f.r.assign(n, 0.0);
    f.state.assign(n, GridState::valid);

    std::vector<std::optional<double>> scale(n);
    std::vector<int> masked_cover(n + 1, 0);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = grid[k];
        if (t < h - tol || t > T - h + tol || (k > 0 && !(t > grid[k - 1]))) {
            throw InvalidArgument("grid must be increasing and inside [h, T - h]");
        }
        scale[k] = scale_at(t);
        if (!scale[k] && !mask_neighborhood) {
            ++masked_cover[k];
            --masked_cover[k + 1];
        } else if (!scale[k]) {
            const auto lo = std::lower_bound(grid.begin(), grid.end(), t - h - tol) - grid.begin();
            const auto hi = std::upper_bound(grid.begin(), grid.end(), t + h + tol) - grid.begin();
            ++masked_cover[static_cast<std::size_t>(lo)];
            --masked_cover[static_cast<std::size_t>(hi)];
        }
    }

    int cover = 0;
    for (std::size_t k = 0; k < n; ++k) {
        cover += masked_cover[k];
        const double t = grid[k];
        if (cover > 0) {
            f.state[k] = GridState::masked;
        } else if (*scale[k] == 0.0) {
            f.state[k] = GridState::zeroed;
        } else {
            const auto left = std::upper_bound(times.begin(), times.end(), std::max(0.0, t - h));
            const auto mid = std::upper_bound(left, times.end(), t);
            const auto right = std::upper_bound(mid, times.end(), std::min(T, t + h));
            const double n_le = static_cast<double>(mid - left);
            const double n_ri = static_cast<double>(right - mid);
            f.g[k] = (n_ri - n_le) / *scale[k];
        }
        f.r[k] = (std::abs(f.g[k]) - row.mean) / row.sd;
    }
    return f;
}

ScaleAt make_scale(const SpikeTrain& train, double h, std::size_t m, const FieldOptions& options,
                   const LocalScaleEstimator* local) {
    if (options.scale == ScaleMode::global) {
        const auto s = s_hat_global(train, h, m);
        return [s](double) { return s; };
    }
    return [local, h](double t) { return local->at(t, h).s_hat; };
}

std::size_t min_side(std::size_t m, const FieldOptions& options) {
    return options.min_side_isis ? options.min_side_isis : m + 5;
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)); }

void check_table(const ThresholdTable& table, const WindowSet& windows) {
    const auto& meta = table.meta;
    bool ok = close(meta.duration, windows.duration()) && close(meta.grid_step, windows.grid_step()) &&
              meta.windows.size() == windows.size();
    for (std::size_t i = 0; ok && i < windows.size(); ++i) {
        ok = close(meta.windows[i], windows.window(i));
    }
    if (!ok) {
        throw ThresholdMismatch("threshold table was calibrated for " + meta.canonical());
    }
}

}  // namespace

ScaledField g_field(const SpikeTrain& train, double h, std::size_t m, std::span<const double> grid,
                    const ThresholdRow& row, const FieldOptions& options) {
    if (!(row.sd > 0.0)) {
        throw ThresholdMismatch("threshold row has no spread");
    }
    std::optional<LocalScaleEstimator> local;
    if (options.scale == ScaleMode::local) {
        local.emplace(train, m, min_side(m, options));
    }
    return build_field(train, h, grid, row, make_scale(train, h, m, options, local ? &*local : nullptr),
                       options.mask_neighborhood);
}

TestResult mft_test(const SpikeTrain& train, const WindowSet& windows, std::size_t m,
                    const ThresholdTable& table, const TestOptions& options) {
    check_table(table, windows);
    if (!close(train.duration(), windows.duration())) {
        throw InvalidArgument("train duration differs from the window set duration");
    }
    TestResult out;
    out.q = options.q_override.value_or(table.q);
    out.source = options.q_override ? ThresholdSource::bootstrap : ThresholdSource::asymptotic;

    const double expected = static_cast<double>(train.size()) / train.duration() * windows.smallest();
    if (expected < 100.0) {
        out.warnings.push_back("smallest window holds about " + std::to_string(std::lround(expected)) +
                               " events; at least 100-200 are needed to keep the level");
    }

    std::optional<LocalScaleEstimator> local;
    if (options.field.scale == ScaleMode::local) {
        local.emplace(train, m, min_side(m, options.field));
    }
    double best = -std::numeric_limits<double>::infinity();
    bool any_valid = false;
    for (double h : windows.windows()) {
        const ThresholdRow* row = table.row(h);
        if (!row) {
            throw ThresholdMismatch("no threshold row for window " + std::to_string(h));
        }
        const auto grid = windows.grid(h);
        auto field = build_field(train, h, grid, *row,
                                 make_scale(train, h, m, options.field, local ? &*local : nullptr),
                                 options.field.mask_neighborhood);
        for (std::size_t k = 0; k < field.grid.size(); ++k) {
            if (field.state[k] == GridState::valid) {
                any_valid = true;
                best = std::max(best, field.r[k]);
            }
        }
        out.fields.push_back(std::move(field));
    }
    if (!any_valid) {
        out.decidable = false;
        out.statistic = std::numeric_limits<double>::quiet_NaN();
        out.reject = false;
        out.warnings.push_back("every grid point is zeroed or masked; the test is undecidable");
        return out;
    }
    out.statistic = best;
    out.reject = best > out.q;
    return out;
}

std::vector<ChangePoint> mfa_candidates(const ScaledField& field, double q) {
    std::vector<ChangePoint> out;
    const std::size_t n = field.grid.size();
    std::vector<char> open(n);
    for (std::size_t k = 0; k < n; ++k) {
        open[k] = field.state[k] == GridState::valid;
    }
    const double tol = 1e-9 * std::max(1.0, field.h);
    while (true) {
        std::optional<std::size_t> arg;
        for (std::size_t k = 0; k < n; ++k) {
            if (open[k] && (!arg || field.r[k] > field.r[*arg])) {
                arg = k;
            }
        }
        if (!arg || !(field.r[*arg] > q)) {
            break;
        }
        const double c = field.grid[*arg];
        out.push_back({c, field.h, field.r[*arg]});
        for (std::size_t k = 0; k < n; ++k) {
            if (std::abs(field.grid[k] - c) <= field.h + tol) {
                open[k] = 0;
            }
        }
    }
    return out;
}

std::vector<ChangePoint> mfa_combine(std::span<const std::vector<ChangePoint>> per_window) {
    std::vector<ChangePoint> accepted;
    for (std::size_t w = 0; w < per_window.size(); ++w) {
        for (const auto& c : per_window[w]) {
            if (w == 0) {
                accepted.push_back(c);
                continue;
            }
            const double tol = 1e-9 * std::max(1.0, c.h);
            const bool blocked = std::any_of(accepted.begin(), accepted.end(), [&](const ChangePoint& a) {
                return std::abs(a.time - c.time) <= c.h + tol;
            });
            if (!blocked) {
                accepted.push_back(c);
            }
        }
    }
    std::sort(accepted.begin(), accepted.end(),
              [](const ChangePoint& a, const ChangePoint& b) { return a.time < b.time; });
    return accepted;
}

std::vector<RateSegment> rate_profile(const SpikeTrain& train, std::span<const double> change_points) {
    std::vector<double> edges{0.0};
    for (double c : change_points) {
        if (!(c > 0.0) || !(c < train.duration())) {
            throw InvalidArgument("change points must lie inside (0, T)");
        }
        edges.push_back(c);
    }
    edges.push_back(train.duration());
    std::vector<RateSegment> out;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        RateSegment s;
        s.start = edges[i];
        s.end = edges[i + 1];
        if (!(s.end > s.start)) {
            throw InvalidArgument("change points must be strictly increasing (zero-length segment)");
        }
        s.count = count_events(train, s.start, s.end);
        s.rate = static_cast<double>(s.count) / (s.end - s.start);
        out.push_back(s);
    }
    return out;
}

DetectionReport detect(const SpikeTrain& train, const DetectOptions& options) {
    DetectionReport report;
    const WindowSet windows(options.windows, train.duration(), options.grid_step);

    if (options.m) {
        report.m_used = *options.m;
    } else {
        report.m_estimate = estimate_m(train, options.section_len, options.max_lag, options.alpha_m);
        report.m_used = report.m_estimate->m_hat;
    }

    ThresholdTable table;
    if (options.table) {
        table = *options.table;
    } else if (options.cache) {
        table = options.cache->get_or_calibrate(windows, options.alpha, options.n_sims, options.seed);
    } else {
        table = threshold_Q(windows, options.alpha, options.n_sims, options.seed);
    }
    if (!close(table.meta.alpha, options.alpha) && options.source == ThresholdSource::asymptotic) {
        throw ThresholdMismatch("threshold table alpha differs from the requested alpha");
    }
    report.warnings = table.warnings;

    TestOptions test_options;
    test_options.field.scale = options.scale;
    test_options.field.min_side_isis = options.min_side_isis;
    test_options.field.mask_neighborhood = options.mask_neighborhood;
    if (options.source == ThresholdSource::bootstrap) {
        const std::size_t block = options.block_len ? options.block_len : 10 * (report.m_used + 1);
        const auto boot = bootstrap_Q(train, windows, options.alpha, block, options.n_boot,
                                      report.m_used, derive_seed(options.seed, 0xb007), table,
                                      test_options.field);
        test_options.q_override = boot.q;
    }
    report.test = mft_test(train, windows, report.m_used, table, test_options);
    report.warnings.insert(report.warnings.end(), report.test.warnings.begin(),
                           report.test.warnings.end());

    if (report.test.reject) {
        std::vector<std::vector<ChangePoint>> per_window;
        for (const auto& field : report.test.fields) {
            per_window.push_back(mfa_candidates(field, report.test.q));
        }
        report.change_points = mfa_combine(per_window);
    }
    std::vector<double> cps;
    for (const auto& c : report.change_points) {
        cps.push_back(c.time);
    }
    report.rate_profile = rate_profile(train, cps);
    for (const auto& f : report.test.fields) {
        report.windows.push_back({f.h, f.fraction(GridState::masked), f.fraction(GridState::zeroed)});
    }
    return report;
}

SpikeTrain block_resample(const std::vector<double>& intervals, double duration,
                          std::size_t block_len, Rng& rng) {
    if (block_len == 0 || intervals.size() < block_len) {
        throw InvalidArgument("block length must be between 1 and the number of intervals");
    }
    std::uniform_int_distribution<std::size_t> start(0, intervals.size() - block_len);
    std::vector<double> times;
    double t = 0.0;
    while (true) {
        const std::size_t s = start(rng);
        for (std::size_t i = s; i < s + block_len; ++i) {
            t += intervals[i];
            if (t > duration) {
                return SpikeTrain(std::move(times), duration, true);
            }
            if (times.empty() || t > times.back()) {
                times.push_back(t);
            }
        }
    }
}

BootstrapResult bootstrap_Q(const SpikeTrain& train, const WindowSet& windows, double alpha,
                            std::size_t block_len, std::size_t n_boot, std::size_t m,
                            std::uint64_t seed, const ThresholdTable& table,
                            const FieldOptions& field) {
    if (n_boot == 0) {
        throw InvalidArgument("need at least one bootstrap replicate");
    }
    const auto intervals = isis(train).values;
    if (block_len == 0 || intervals.size() / block_len < 10) {
        throw InvalidArgument("block bootstrap needs at least 10 blocks of " +
                              std::to_string(block_len) + " intervals");
    }
    BootstrapResult out;
    out.block_len = block_len;
    out.statistics.resize(n_boot);
    TestOptions options;
    options.field = field;
    options.q_override = 0.0;
    parallel_for(n_boot, [&](std::size_t b) {
        Rng rng = make_rng(seed, b);
        const auto replicate = block_resample(intervals, train.duration(), block_len, rng);
        const auto result = mft_test(replicate, windows, m, table, options);
        out.statistics[b] =
            result.decidable ? result.statistic : -std::numeric_limits<double>::infinity();
    });
    out.q = stats::upper_quantile(out.statistics, alpha);
    return out;
}

}  // namespace mft
