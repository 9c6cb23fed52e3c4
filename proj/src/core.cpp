#include "mft/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mft {

SpikeTrain::SpikeTrain(std::vector<double> times, double duration, bool allow_empty)
    : times_(std::move(times)), duration_(duration) {
    if (!(duration_ > 0.0) || !std::isfinite(duration_)) {
        throw InvalidArgument("spike train duration must be positive and finite");
    }
    if (times_.empty() && !allow_empty) {
        throw InvalidArgument("empty spike train");
    }
    for (std::size_t i = 0; i < times_.size(); ++i) {
        const double s = times_[i];
        if (!std::isfinite(s) || s <= 0.0 || s > duration_) {
            throw InvalidArgument("spike time " + std::to_string(s) + " outside (0, T]");
        }
        if (i > 0 && !(s > times_[i - 1])) {
            throw InvalidArgument("spike times must be strictly increasing (index " +
                                  std::to_string(i) + ")");
        }
    }
}

SpikeTrain SpikeTrain::shifted(double delta) const {
    std::vector<double> moved(times_.size());
    std::transform(times_.begin(), times_.end(), moved.begin(),
                   [delta](double s) { return s + delta; });
    return SpikeTrain(std::move(moved), duration_ + delta, true);
}

std::size_t count_events(const SpikeTrain& train, double a, double b) {
    if (!(a >= 0.0) || !(b >= a) || b > train.duration()) {
        throw std::domain_error("count_events: interval (a, b] must satisfy 0 <= a <= b <= T");
    }
    const auto t = train.times();
    const auto lo = std::upper_bound(t.begin(), t.end(), a);
    const auto hi = std::upper_bound(lo, t.end(), b);
    return static_cast<std::size_t>(hi - lo);
}

IsiSequence isis(const SpikeTrain& train) {
    IsiSequence out;
    const auto t = train.times();
    if (t.empty()) {
        out.insufficient = true;
        return out;
    }
    out.values.resize(t.size());
    out.values[0] = t[0];
    for (std::size_t i = 1; i < t.size(); ++i) {
        out.values[i] = t[i] - t[i - 1];
    }
    return out;
}

IsiRange window_isi_range(const SpikeTrain& train, double a, double b) {
    const auto t = train.times();
    const auto lo = static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), a) - t.begin());
    const auto hi = static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), b) - t.begin());
    // spikes lo..hi-1 lie in (a, b]; interval i joins spikes i-1 and i
    if (hi < lo + 2) {
        return {};
    }
    return {lo + 1, hi};
}

IsiSequence window_isis(const SpikeTrain& train, double a, double b) {
    if (!(a >= 0.0) || !(b > a) || b > train.duration()) {
        throw std::domain_error("window_isis: interval (a, b] must satisfy 0 <= a < b <= T");
    }
    IsiSequence out;
    const auto range = window_isi_range(train, a, b);
    if (range.empty()) {
        out.insufficient = true;
        return out;
    }
    const auto t = train.times();
    out.values.reserve(range.size());
    for (std::size_t i = range.first; i < range.last; ++i) {
        out.values.push_back(t[i] - t[i - 1]);
    }
    return out;
}

WindowSet::WindowSet(std::vector<double> windows, double duration, double grid_step)
    : windows_(std::move(windows)), duration_(duration), grid_step_(grid_step) {
    if (windows_.empty()) {
        throw InvalidArgument("window set is empty");
    }
    if (!(duration_ > 0.0)) {
        throw InvalidArgument("duration must be positive");
    }
    std::sort(windows_.begin(), windows_.end());
    windows_.erase(std::unique(windows_.begin(), windows_.end()), windows_.end());
    for (double h : windows_) {
        if (!(h > 0.0) || h > duration_ / 2.0 * (1.0 + 1e-12)) {
            throw InvalidArgument("window " + std::to_string(h) + " must lie in (0, T/2]");
        }
    }
    if (grid_step_ == 0.0) {
        grid_step_ = default_step(windows_);
    }
    if (!(grid_step_ > 0.0)) {
        throw InvalidArgument("grid step must be positive");
    }
}

double WindowSet::default_step(std::span<const double> windows) {
    return *std::min_element(windows.begin(), windows.end()) / 100.0;
}

std::size_t WindowSet::grid_size(double h) const {
    const double span = duration_ - 2.0 * h;
    if (span < 0.0) {
        return 0;
    }
    return static_cast<std::size_t>(std::floor(span / grid_step_ + 1e-9)) + 1;
}

std::vector<double> WindowSet::grid(double h) const {
    const std::size_t n = grid_size(h);
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        out[k] = std::min(h + static_cast<double>(k) * grid_step_, duration_ - h);
    }
    return out;
}

std::vector<double> parse_window_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw InvalidArgument("bad window value '" + item + "'");
        }
        if (item.find_first_not_of(" \t", used) != std::string::npos) {
            throw InvalidArgument("bad window value '" + item + "'");
        }
        out.push_back(v);
    }
    if (out.empty()) {
        throw InvalidArgument("no windows given");
    }
    return out;
}

}  // namespace mft
