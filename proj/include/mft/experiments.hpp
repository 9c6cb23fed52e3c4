#pragma once

// Simulation studies: replicated detection runs over fixed scenarios, written
// out as tidy CSV tables.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mft/detect.hpp"
#include "mft/io.hpp"
#include "mft/simulate.hpp"

namespace mft::experiments {

struct Scenario {
    std::string name;
    std::vector<Segment> segments;
    std::vector<double> windows;

    double duration() const;
    std::vector<double> change_points() const;
};

/// Gamma renewal, sd 0.2, rates 2.5 / 3 / 6 / 10 Hz with changes at 150, 300, 360.
Scenario step_gamma_scenario();
/// Positively correlated MA(3) intervals (a_k = 0.5^k, sd 0.15) with mean
/// intervals 0.1 / 0.15 / 0.25 over 120 / 90 / 90 s.
Scenario correlated_profile_scenario();
/// Negatively correlated jitter intervals, period 0.1 / 0.09 / 0.1 over 100 s each.
Scenario jitter_step_scenario();

/// Stationary example processes with dependence orders 3, 1 and 2.
MaModel example_ma_model();
JitterModel example_jitter_model();
BurstyModel example_bursty_model();

struct Variant {
    std::string name;
    /// nullopt estimates the order from each train.
    std::optional<std::size_t> m;
    ScaleMode scale = ScaleMode::local;
    bool mask_neighborhood = true;
};

struct ReplicateOutcome {
    bool reject = false;
    bool decidable = true;
    std::size_t m_used = 0;
    std::vector<ChangePoint> change_points;
};

/// Runs every variant on the same trains; result[v][r]. Train r uses seed
/// derive_seed(seed, r).
std::vector<std::vector<ReplicateOutcome>> run_replicates(const std::vector<Segment>& segments,
                                                          const std::vector<Variant>& variants,
                                                          const ThresholdTable& table,
                                                          std::size_t reps, std::uint64_t seed);

struct Settings {
    std::size_t reps = 1000;
    std::uint64_t seed = 1;
    std::size_t n_sims = 10000;
    double alpha = 0.05;
};

/// Level of MFT(0), MFT(m) and MFT(m_hat) on MA trains with a_k = c^k.
io::CsvTable significance_level(const Settings& settings, double c = 0.5,
                                std::size_t max_order = 7);

/// Histogram of detected change points under the correlated profile.
io::CsvTable alternative_histogram(const Settings& settings, double bin_width = 5.0);

/// Level of masked and unmasked MFT(m) as the smallest window grows.
io::CsvTable window_size(const Settings& settings,
                         std::vector<double> spike_counts = {25, 50, 100, 150, 200, 300});

/// True, local and global s^2 along the correlated profile, averaged over replicates.
io::CsvTable estimator_bias(const Settings& settings);

/// Expected count variance over (a, b] for a piecewise model.
double true_count_variance(const std::vector<Segment>& segments, double a, double b);

const std::vector<std::string>& names();

}  // namespace mft::experiments
