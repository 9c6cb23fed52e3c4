#pragma once

// Multiple filter test and change-point algorithm.
//
// For each window h the filtered derivative G_{h,t} = (N_ri - N_le) / s_hat is
// evaluated on the grid; |G| is standardized by the limit moments of M*_h into
// R_{h,t}. The test statistic M is the maximum of R over all windows and valid
// grid points. Change points are extracted per window by repeated argmax and
// h-neighborhood deletion, then merged preferring smaller windows.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mft/core.hpp"
#include "mft/estimate.hpp"
#include "mft/limit.hpp"

namespace mft {

enum class GridState : std::uint8_t {
    valid,
    zeroed,  // s_hat == 0, G := 0
    masked,  // within h of a point with undefined s_hat, G := 0
};

enum class ScaleMode { local, global };

enum class ThresholdSource { asymptotic, bootstrap };

const char* to_string(GridState s);
const char* to_string(ScaleMode s);
const char* to_string(ThresholdSource s);

struct FieldOptions {
    ScaleMode scale = ScaleMode::local;
    /// Minimum intervals per side for a defined local estimate; 0 means m + 5.
    std::size_t min_side_isis = 0;
    /// Zero G on the whole h-neighborhood of undefined points; when false only
    /// the undefined points themselves are dropped.
    bool mask_neighborhood = true;
};

struct ScaledField {
    double h = 0.0;
    std::vector<double> grid;
    std::vector<double> g;
    std::vector<double> r;
    std::vector<GridState> state;

    std::size_t count(GridState s) const;
    double fraction(GridState s) const;
};

/// G and R for one window on the given grid (which must lie in [h, T - h]).
ScaledField g_field(const SpikeTrain& train, double h, std::size_t m, std::span<const double> grid,
                    const ThresholdRow& row, const FieldOptions& options = {});

struct TestResult {
    /// max R over windows and valid points; NaN when undecidable.
    double statistic = 0.0;
    double q = 0.0;
    bool reject = false;
    bool decidable = true;
    ThresholdSource source = ThresholdSource::asymptotic;
    std::vector<ScaledField> fields;
    std::vector<std::string> warnings;
};

struct TestOptions {
    FieldOptions field;
    /// Replaces the table's Q (bootstrap threshold); the table still
    /// supplies the per-window standardization.
    std::optional<double> q_override;
};

/// Raised when a threshold table does not match the test configuration.
class ThresholdMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

TestResult mft_test(const SpikeTrain& train, const WindowSet& windows, std::size_t m,
                    const ThresholdTable& table, const TestOptions& options = {});

struct ChangePoint {
    double time = 0.0;
    double h = 0.0;
    double r_value = 0.0;
};

/// Candidates of one window in detection order (decreasing R).
std::vector<ChangePoint> mfa_candidates(const ScaledField& field, double q);

/// Accepts every candidate of the smallest window, then larger-window
/// candidates whose closed h-neighborhood holds no accepted point. Input is
/// grouped by window in ascending order; output is sorted by time.
std::vector<ChangePoint> mfa_combine(std::span<const std::vector<ChangePoint>> per_window);

struct RateSegment {
    double start = 0.0;
    double end = 0.0;
    std::size_t count = 0;
    double rate = 0.0;
};

/// Piecewise rates between {0} u change points u {T}; events counted in (start, end].
std::vector<RateSegment> rate_profile(const SpikeTrain& train, std::span<const double> change_points);

struct DetectOptions {
    std::vector<double> windows;
    double alpha = 0.05;
    /// Fixed dependence order; nullopt selects it from the data.
    std::optional<std::size_t> m;
    double grid_step = 0.0;
    ThresholdSource source = ThresholdSource::asymptotic;
    ScaleMode scale = ScaleMode::local;
    std::size_t min_side_isis = 0;
    bool mask_neighborhood = true;

    std::size_t n_sims = 10000;
    std::uint64_t seed = 1;

    std::size_t section_len = 50;
    std::size_t max_lag = 10;
    double alpha_m = 0.05;

    std::size_t n_boot = 200;
    /// 0 means 10 (m + 1) intervals.
    std::size_t block_len = 0;

    /// Precomputed table matching (T, windows, grid_step, alpha); skips calibration.
    const ThresholdTable* table = nullptr;
    const ThresholdCache* cache = nullptr;
};

struct WindowDiagnostics {
    double h = 0.0;
    double masked_fraction = 0.0;
    double zeroed_fraction = 0.0;
};

struct DetectionReport {
    TestResult test;
    std::vector<ChangePoint> change_points;
    std::vector<RateSegment> rate_profile;
    std::size_t m_used = 0;
    std::optional<MOrderEstimate> m_estimate;
    std::vector<WindowDiagnostics> windows;
    std::vector<std::string> warnings;
};

DetectionReport detect(const SpikeTrain& train, const DetectOptions& options);

}  // namespace mft
