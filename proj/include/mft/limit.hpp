#pragma once

// Monte Carlo calibration of the Brownian limit of the filtered derivative:
// per-window moments of M*_h = max_t |L_{h,t}| and the global threshold Q.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mft/core.hpp"
#include "mft/random.hpp"

namespace mft {

class CalibrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Standard Brownian motion sampled at 0, dt, ..., steps * dt (W_0 = 0).
std::vector<double> brownian_path(std::size_t steps, double dt, Rng& rng);

/// L_{h,t} = ((W_{t+h} - W_t) - (W_t - W_{t-h})) / sqrt(2h) at t = h + k dt,
/// k < grid_size, on a path sampled with step dt.
std::vector<double> limit_process(std::span<const double> path, double h, double dt,
                                  std::size_t grid_size);

/// Per-simulation maxima, row-major: maxima[sim * windows + i].
struct LimitSamples {
    std::vector<double> windows;
    std::size_t n_sims = 0;
    std::vector<double> maxima;

    double at(std::size_t sim, std::size_t window) const {
        return maxima[sim * windows.size() + window];
    }
};

/// One Brownian path per simulation, shared by every window in the set.
LimitSamples sim_limit_maxima(const WindowSet& windows, std::size_t n_sims, std::uint64_t seed);

struct ThresholdRow {
    double h = 0.0;
    double mean = 0.0;  // mean of M*_h
    double sd = 0.0;    // sd of M*_h
};

struct ThresholdMeta {
    double duration = 0.0;
    std::vector<double> windows;
    double grid_step = 0.0;
    double alpha = 0.05;
    std::size_t n_sims = 0;
    std::uint64_t seed = 0;

    bool operator==(const ThresholdMeta&) const = default;
    /// Canonical text form; the cache key is a hash of it.
    std::string canonical() const;
    std::uint64_t hash() const;
};

struct ThresholdTable {
    ThresholdMeta meta;
    std::vector<ThresholdRow> rows;
    double q = 0.0;
    std::vector<std::string> warnings;

    /// Row for window h (relative tolerance 1e-9); nullptr if absent.
    const ThresholdRow* row(double h) const;
};

std::vector<ThresholdRow> limit_moments(const LimitSamples& samples);

/// max_h (M*_h - mean_h) / sd_h for each simulation.
std::vector<double> standardized_maxima(const LimitSamples& samples,
                                        std::span<const ThresholdRow> rows);

ThresholdTable threshold_from_samples(const LimitSamples& samples, const WindowSet& windows,
                                      double alpha, std::uint64_t seed);

/// Calibrates rows and the (1 - alpha)-quantile Q. Deterministic given seed.
ThresholdTable threshold_Q(const WindowSet& windows, double alpha, std::size_t n_sims = 10000,
                           std::uint64_t seed = 1);

/// Directory of calibrated tables keyed by a hash of their meta.
class ThresholdCache {
public:
    explicit ThresholdCache(std::filesystem::path dir);

    /// Directory from MFT_CACHE_DIR, else nullopt.
    static std::optional<ThresholdCache> from_environment();

    std::filesystem::path path_for(const ThresholdMeta& meta) const;
    std::optional<ThresholdTable> load(const ThresholdMeta& meta) const;
    void store(const ThresholdTable& table) const;

    /// Returns the cached table or calibrates and stores a new one.
    ThresholdTable get_or_calibrate(const WindowSet& windows, double alpha, std::size_t n_sims,
                                    std::uint64_t seed) const;

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
};

std::string threshold_table_to_json(const ThresholdTable& table);
ThresholdTable threshold_table_from_json(const std::string& text);

}  // namespace mft
