#pragma once

// Spike trains, event counting, inter-spike intervals and evaluation grids.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mft {

/// Raised for inputs that violate a documented precondition.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Strictly increasing event times on (0, T].
class SpikeTrain {
public:
    SpikeTrain() = default;

    /// Validates ordering and range; an empty train needs allow_empty.
    SpikeTrain(std::vector<double> times, double duration, bool allow_empty = false);

    std::span<const double> times() const { return times_; }
    double duration() const { return duration_; }
    std::size_t size() const { return times_.size(); }
    bool empty() const { return times_.empty(); }
    double operator[](std::size_t i) const { return times_[i]; }

    /// Copy of this train with every time (and T) shifted by delta.
    SpikeTrain shifted(double delta) const;

private:
    std::vector<double> times_;
    double duration_ = 0.0;
};

/// Number of events in (a, b]. Throws std::domain_error unless 0 <= a <= b <= T.
std::size_t count_events(const SpikeTrain& train, double a, double b);

/// Intervals xi_1 = S_1, xi_i = S_i - S_{i-1}.
struct IsiSequence {
    std::vector<double> values;
    /// Set when the source had too few events to produce any interval.
    bool insufficient = false;

    std::size_t size() const { return values.size(); }
    bool empty() const { return values.empty(); }
    std::span<const double> view() const { return values; }
};

IsiSequence isis(const SpikeTrain& train);

/// Half-open index range [first, last) into the sequence returned by isis().
struct IsiRange {
    std::size_t first = 0;
    std::size_t last = 0;
    std::size_t size() const { return last > first ? last - first : 0; }
    bool empty() const { return size() == 0; }
};

/// Intervals with both endpoints in (a, b]. The interval starting at time 0
/// is never included because 0 is not in (a, b] for a >= 0.
IsiRange window_isi_range(const SpikeTrain& train, double a, double b);
IsiSequence window_isis(const SpikeTrain& train, double a, double b);

/// Finite ascending window set H with a shared grid step.
class WindowSet {
public:
    WindowSet(std::vector<double> windows, double duration, double grid_step = 0.0);

    std::span<const double> windows() const { return windows_; }
    std::size_t size() const { return windows_.size(); }
    double window(std::size_t i) const { return windows_[i]; }
    double smallest() const { return windows_.front(); }
    double duration() const { return duration_; }
    double grid_step() const { return grid_step_; }

    /// Grid t = h, h + dt, ... up to T - h (inclusive within rounding).
    std::vector<double> grid(double h) const;
    std::size_t grid_size(double h) const;

    /// Default step min(H) / 100.
    static double default_step(std::span<const double> windows);

private:
    std::vector<double> windows_;
    double duration_;
    double grid_step_;
};

/// Parse "50,75,100" style lists.
std::vector<double> parse_window_list(const std::string& text);

}  // namespace mft
