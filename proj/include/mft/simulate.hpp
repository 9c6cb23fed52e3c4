#pragma once

// Generators for stationary m-dependent interval processes and piecewise-rate
// concatenations of them, plus their theoretical second-order moments.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mft/core.hpp"
#include "mft/random.hpp"

namespace mft {

/// Positive-valued building-block distribution.
struct Distribution {
    enum class Kind { gamma, uniform };
    Kind kind = Kind::gamma;
    // gamma: (mean, sd); uniform: (lo, hi)
    double first = 1.0;
    double second = 1.0;

    static Distribution gamma(double mean, double sd) { return {Kind::gamma, mean, sd}; }
    static Distribution uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }
    /// Uniform law with the given mean and standard deviation.
    static Distribution uniform_moments(double mean, double sd);

    double mean() const;
    double variance() const;
    double lower_bound() const;
    void validate() const;
    double sample(Rng& rng) const;
};

struct GammaRenewal {
    double mean = 1.0;
    double sd = 1.0;
};

/// xi_i = sum_j a_j X_{i-j}.
struct MaModel {
    std::vector<double> coeffs{1.0};
    Distribution base = Distribution::gamma(1.0, 1.0);

    /// Chooses the base law so the intervals have the given mean and sd.
    static MaModel from_isi_moments(std::vector<double> coeffs, double mean, double sd,
                                    Distribution::Kind kind = Distribution::Kind::gamma);
    /// Coefficients a_k = c^k for k = 0..m.
    static std::vector<double> geometric(double c, std::size_t m);

    std::size_t order() const { return coeffs.size() - 1; }
    /// True when nonpositive intervals can occur and rejection is needed.
    bool needs_rejection() const;
};

/// xi_i = U_i + Z_i - Z_{i-1}, U ~ U[nu - s1, nu + s1], Z ~ U[-s2, s2].
struct JitterModel {
    double nu = 1.0;
    double sigma1 = 0.1;
    double sigma2 = 0.1;
};

/// Two-dependent oscillatory bursty intervals.
struct BurstyModel {
    double p_i = 0.5;
    double p_j = 0.4;
    Distribution long_isi = Distribution::uniform(0.45, 0.73);
    Distribution short_isi = Distribution::uniform(0.01, 0.12);
};

using Model = std::variant<GammaRenewal, MaModel, JitterModel, BurstyModel>;

void validate(const Model& model);
std::string model_name(const Model& model);
double model_mean(const Model& model);

struct SimulationDiagnostics {
    /// Nonpositive MA intervals redrawn.
    std::size_t resampled = 0;
    /// Events that landed on the previous event time in floating point.
    std::size_t coincident_dropped = 0;

    SimulationDiagnostics& operator+=(const SimulationDiagnostics& o) {
        resampled += o.resampled;
        coincident_dropped += o.coincident_dropped;
        return *this;
    }
};

SpikeTrain sim_renewal(const GammaRenewal& model, double duration, std::uint64_t seed);
SpikeTrain sim_ma(const MaModel& model, double duration, std::uint64_t seed,
                  SimulationDiagnostics* diagnostics = nullptr);
SpikeTrain sim_jitter(const JitterModel& model, double duration, std::uint64_t seed);
SpikeTrain sim_bursty(const BurstyModel& model, double duration, std::uint64_t seed);
SpikeTrain simulate(const Model& model, double duration, std::uint64_t seed,
                    SimulationDiagnostics* diagnostics = nullptr);

/// Draws n consecutive stationary intervals of a model.
std::vector<double> sample_intervals(const Model& model, std::size_t n, std::uint64_t seed,
                                     SimulationDiagnostics* diagnostics = nullptr);

struct Segment {
    Model model;
    double length = 1.0;

    double rate() const { return 1.0 / model_mean(model); }
};

struct PiecewiseTrain {
    SpikeTrain train;
    std::vector<double> change_points;
    SimulationDiagnostics diagnostics;
};

/// Concatenates independent segment processes; each restarts its dependence.
PiecewiseTrain sim_piecewise(std::span<const Segment> segments, std::uint64_t seed);

struct TheoreticalMoments {
    double mean = 0.0;
    double variance = 0.0;
    /// Lag covariances rho_1..rho_m.
    std::vector<double> rho;
    double rho2 = 0.0;
    /// False when obtained by Monte Carlo (bursty) or distorted by rejection.
    bool exact = true;

    std::size_t order() const { return rho.size(); }
    /// rho^2 / mu^3, the per-second count variance.
    double count_variance_rate() const { return rho2 / (mean * mean * mean); }
};

TheoreticalMoments theoretical_rho2(const Model& model);

}  // namespace mft
