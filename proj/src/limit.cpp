#include "mft/limit.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "mft/parallel.hpp"
#include "mft/stats.hpp"
#include "mft/version.hpp"

namespace mft {

namespace {

std::size_t steps_for(double duration, double dt) {
    return static_cast<std::size_t>(std::ceil(duration / dt - 1e-9));
}

std::size_t offset_for(double h, double dt) {
    return static_cast<std::size_t>(std::llround(h / dt));
}

}  // namespace

std::vector<double> brownian_path(std::size_t steps, double dt, Rng& rng) {
    std::normal_distribution<double> step(0.0, std::sqrt(dt));
    std::vector<double> w(steps + 1);
    w[0] = 0.0;
    for (std::size_t j = 1; j <= steps; ++j) {
        w[j] = w[j - 1] + step(rng);
    }
    return w;
}

std::vector<double> limit_process(std::span<const double> path, double h, double dt,
                                  std::size_t grid_size) {
    const std::size_t off = offset_for(h, dt);
    if (off == 0 || path.size() < 2 * off + 1) {
        return {};
    }
    const std::size_t usable = std::min(grid_size, path.size() - 2 * off);
    const double scale = 1.0 / std::sqrt(2.0 * static_cast<double>(off) * dt);
    std::vector<double> out(usable);
    for (std::size_t k = 0; k < usable; ++k) {
        const std::size_t j = off + k;
        out[k] = ((path[j + off] - path[j]) - (path[j] - path[j - off])) * scale;
    }
    return out;
}

LimitSamples sim_limit_maxima(const WindowSet& windows, std::size_t n_sims, std::uint64_t seed) {
    if (n_sims == 0) {
        throw InvalidArgument("need at least one simulation");
    }
    const double dt = windows.grid_step();
    if (dt > windows.smallest() / 2.0) {
        throw CalibrationError("grid step exceeds half the smallest window");
    }
    LimitSamples out;
    out.windows.assign(windows.windows().begin(), windows.windows().end());
    out.n_sims = n_sims;
    out.maxima.assign(n_sims * out.windows.size(), 0.0);
    const std::size_t steps = steps_for(windows.duration(), dt);
    const std::size_t nw = out.windows.size();

    parallel_for(n_sims, [&](std::size_t sim) {
        Rng rng = make_rng(seed, sim);
        const auto w = brownian_path(steps, dt, rng);
        for (std::size_t i = 0; i < nw; ++i) {
            const double h = out.windows[i];
            double best = 0.0;
            for (double l : limit_process(w, h, dt, windows.grid_size(h))) {
                best = std::max(best, std::abs(l));
            }
            out.maxima[sim * nw + i] = best;
        }
    });
    return out;
}

std::string ThresholdMeta::canonical() const {
    std::ostringstream s;
    s.precision(17);
    s << "T=" << duration << ";H=";
    for (std::size_t i = 0; i < windows.size(); ++i) {
        s << (i ? "," : "") << windows[i];
    }
    s << ";dt=" << grid_step << ";alpha=" << alpha << ";sims=" << n_sims << ";seed=" << seed;
    return s.str();
}

std::uint64_t ThresholdMeta::hash() const {
    // FNV-1a
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

const ThresholdRow* ThresholdTable::row(double h) const {
    for (const auto& r : rows) {
        if (std::abs(r.h - h) <= 1e-9 * std::max(1.0, std::abs(h))) {
            return &r;
        }
    }
    return nullptr;
}

std::vector<ThresholdRow> limit_moments(const LimitSamples& samples) {
    std::vector<ThresholdRow> rows;
    std::vector<double> column(samples.n_sims);
    for (std::size_t i = 0; i < samples.windows.size(); ++i) {
        for (std::size_t s = 0; s < samples.n_sims; ++s) {
            column[s] = samples.at(s, i);
        }
        ThresholdRow r;
        r.h = samples.windows[i];
        r.mean = stats::mean(column);
        r.sd = samples.n_sims > 1 ? std::sqrt(stats::variance(column)) : 0.0;
        rows.push_back(r);
    }
    return rows;
}

std::vector<double> standardized_maxima(const LimitSamples& samples,
                                        std::span<const ThresholdRow> rows) {
    std::vector<double> out(samples.n_sims, -std::numeric_limits<double>::infinity());
    for (std::size_t s = 0; s < samples.n_sims; ++s) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            out[s] = std::max(out[s], (samples.at(s, i) - rows[i].mean) / rows[i].sd);
        }
    }
    return out;
}

ThresholdTable threshold_from_samples(const LimitSamples& samples, const WindowSet& windows,
                                      double alpha, std::uint64_t seed) {
    ThresholdTable table;
    table.meta.duration = windows.duration();
    table.meta.windows = samples.windows;
    table.meta.grid_step = windows.grid_step();
    table.meta.alpha = alpha;
    table.meta.n_sims = samples.n_sims;
    table.meta.seed = seed;
    table.rows = limit_moments(samples);
    for (const auto& r : table.rows) {
        if (!(r.sd > 0.0) || !std::isfinite(r.sd)) {
            throw CalibrationError("degenerate spread of M*_h for h = " + std::to_string(r.h) +
                                   "; increase the number of simulations");
        }
    }
    table.q = stats::upper_quantile(standardized_maxima(samples, table.rows), alpha);
    if (samples.n_sims < 1000) {
        table.warnings.push_back("only " + std::to_string(samples.n_sims) +
                                 " calibration simulations; at least 1000 recommended");
    }
    return table;
}

ThresholdTable threshold_Q(const WindowSet& windows, double alpha, std::size_t n_sims,
                           std::uint64_t seed) {
    if (!(alpha > 0.0) || alpha > 1.0) {
        throw InvalidArgument("alpha must lie in (0, 1]");
    }
    return threshold_from_samples(sim_limit_maxima(windows, n_sims, seed), windows, alpha, seed);
}

std::string threshold_table_to_json(const ThresholdTable& table) {
    nlohmann::json j;
    j["format"] = "mft-threshold-table";
    j["format_version"] = 1;
    j["library_version"] = kVersion;
    j["meta"] = {{"T", table.meta.duration},       {"windows", table.meta.windows},
                 {"grid_step", table.meta.grid_step}, {"alpha", table.meta.alpha},
                 {"n_sims", table.meta.n_sims},     {"seed", table.meta.seed},
                 {"hash", table.meta.hash()}};
    j["rows"] = nlohmann::json::array();
    for (const auto& r : table.rows) {
        j["rows"].push_back({{"h", r.h}, {"mean", r.mean}, {"sd", r.sd}});
    }
    j["Q"] = table.q;
    return j.dump(2);
}

ThresholdTable threshold_table_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", "") != "mft-threshold-table" || j.value("format_version", 0) != 1) {
        throw CalibrationError("unsupported threshold table format");
    }
    ThresholdTable t;
    const auto& m = j.at("meta");
    t.meta.duration = m.at("T").get<double>();
    t.meta.windows = m.at("windows").get<std::vector<double>>();
    t.meta.grid_step = m.at("grid_step").get<double>();
    t.meta.alpha = m.at("alpha").get<double>();
    t.meta.n_sims = m.at("n_sims").get<std::size_t>();
    t.meta.seed = m.at("seed").get<std::uint64_t>();
    for (const auto& r : j.at("rows")) {
        t.rows.push_back({r.at("h").get<double>(), r.at("mean").get<double>(),
                          r.at("sd").get<double>()});
    }
    t.q = j.at("Q").get<double>();
    return t;
}

ThresholdCache::ThresholdCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::optional<ThresholdCache> ThresholdCache::from_environment() {
    const char* dir = std::getenv("MFT_CACHE_DIR");
    if (!dir || !*dir) {
        return std::nullopt;
    }
    return ThresholdCache(dir);
}

std::filesystem::path ThresholdCache::path_for(const ThresholdMeta& meta) const {
    char name[64];
    std::snprintf(name, sizeof name, "threshold-%016llx.json",
                  static_cast<unsigned long long>(meta.hash()));
    return dir_ / name;
}

std::optional<ThresholdTable> ThresholdCache::load(const ThresholdMeta& meta) const {
    std::ifstream in(path_for(meta));
    if (!in) {
        return std::nullopt;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        auto table = threshold_table_from_json(buf.str());
        if (!(table.meta == meta)) {
            return std::nullopt;
        }
        return table;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

void ThresholdCache::store(const ThresholdTable& table) const {
    std::filesystem::create_directories(dir_);
    const auto target = path_for(table.meta);
    auto tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        out << threshold_table_to_json(table) << '\n';
        if (!out) {
            throw std::runtime_error("cannot write threshold cache " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, target);
}

ThresholdTable ThresholdCache::get_or_calibrate(const WindowSet& windows, double alpha,
                                                std::size_t n_sims, std::uint64_t seed) const {
    ThresholdMeta meta;
    meta.duration = windows.duration();
    meta.windows.assign(windows.windows().begin(), windows.windows().end());
    meta.grid_step = windows.grid_step();
    meta.alpha = alpha;
    meta.n_sims = n_sims;
    meta.seed = seed;
    if (auto hit = load(meta)) {
        return *hit;
    }
    auto table = threshold_Q(windows, alpha, n_sims, seed);
    store(table);
    return table;
}

}  // namespace mft
