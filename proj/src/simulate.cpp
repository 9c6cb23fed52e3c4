#include "mft/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mft {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

class GammaSource {
public:
    explicit GammaSource(const Distribution& d)
        : dist_((d.first / d.second) * (d.first / d.second), d.second * d.second / d.first) {}
    double operator()(Rng& rng) { return dist_(rng); }

private:
    std::gamma_distribution<double> dist_;
};

class RenewalSource {
public:
    explicit RenewalSource(const GammaRenewal& m) : gamma_(Distribution::gamma(m.mean, m.sd)) {}
    double next(Rng& rng, SimulationDiagnostics&) { return gamma_(rng); }

private:
    GammaSource gamma_;
};

class MaSource {
public:
    MaSource(const MaModel& model, Rng& rng) : model_(model), history_(model.coeffs.size()) {
        // history_[j] holds X_{i-j}; warm-up fills the m lagged draws
        for (std::size_t j = 1; j < history_.size(); ++j) {
            history_[j] = model_.base.sample(rng);
        }
    }

    double next(Rng& rng, SimulationDiagnostics& diag) {
        double lagged = 0.0;
        for (std::size_t j = 1; j < history_.size(); ++j) {
            lagged += model_.coeffs[j] * history_[j];
        }
        double x = model_.base.sample(rng);
        double xi = model_.coeffs[0] * x + lagged;
        while (!(xi > 0.0)) {
            ++diag.resampled;
            x = model_.base.sample(rng);
            xi = model_.coeffs[0] * x + lagged;
        }
        if (history_.size() > 1) {
            std::rotate(history_.rbegin(), history_.rbegin() + 1, history_.rend());
            history_[1] = x;
        }
        return xi;
    }

private:
    const MaModel& model_;
    std::vector<double> history_;
};

class JitterSource {
public:
    JitterSource(const JitterModel& m, Rng& rng)
        : u_(m.nu - m.sigma1, m.nu + m.sigma1), z_(-m.sigma2, m.sigma2), z_prev_(z_(rng)) {}

    double next(Rng& rng, SimulationDiagnostics&) {
        const double u = u_(rng);
        const double z = z_(rng);
        const double xi = u + z - z_prev_;
        z_prev_ = z;
        return xi;
    }

private:
    std::uniform_real_distribution<double> u_;
    std::uniform_real_distribution<double> z_;
    double z_prev_;
};

class BurstySource {
public:
    BurstySource(const BurstyModel& m, Rng& rng) : model_(m), bern_i_(m.p_i), bern_j_(m.p_j) {
        i_lag2_ = bern_i_(rng);
        i_lag1_ = bern_i_(rng);
    }

    double next(Rng& rng, SimulationDiagnostics&) {
        const int i_now = bern_i_(rng);
        const int j = bern_j_(rng);
        const int j_prime = bern_j_(rng);
        const double x = model_.long_isi.sample(rng);
        const double y = model_.short_isi.sample(rng);
        const double y_prime = model_.short_isi.sample(rng);
        const double y_fill = model_.short_isi.sample(rng);

        const int long_term = i_now * (1 - i_lag1_);
        const int burst1 = i_lag1_ * j;
        const int burst2 = i_lag2_ * j_prime;
        const int fill = 1 - std::max({long_term, burst1, burst2});
        const double xi = long_term * x + burst1 * y + burst2 * y_prime + fill * y_fill;

        i_lag2_ = i_lag1_;
        i_lag1_ = i_now;
        return xi;
    }

private:
    const BurstyModel& model_;
    std::bernoulli_distribution bern_i_;
    std::bernoulli_distribution bern_j_;
    int i_lag1_ = 0;
    int i_lag2_ = 0;
};

/// Appends event times offset + cumulative intervals up to and including end.
template <class Source>
void emit_times(Source& source, Rng& rng, double offset, double end, std::vector<double>& out,
                SimulationDiagnostics& diag) {
    double t = offset;
    while (true) {
        t += source.next(rng, diag);
        if (t > end) {
            break;
        }
        if (!out.empty() && !(t > out.back())) {
            ++diag.coincident_dropped;
            continue;
        }
        out.push_back(t);
    }
}

void emit_model(const Model& model, Rng& rng, double offset, double end, std::vector<double>& out,
                SimulationDiagnostics& diag) {
    std::visit(overloaded{
                   [&](const GammaRenewal& m) {
                       RenewalSource s(m);
                       emit_times(s, rng, offset, end, out, diag);
                   },
                   [&](const MaModel& m) {
                       MaSource s(m, rng);
                       emit_times(s, rng, offset, end, out, diag);
                   },
                   [&](const JitterModel& m) {
                       JitterSource s(m, rng);
                       emit_times(s, rng, offset, end, out, diag);
                   },
                   [&](const BurstyModel& m) {
                       BurstySource s(m, rng);
                       emit_times(s, rng, offset, end, out, diag);
                   },
               },
               model);
}

SpikeTrain simulate_checked(const Model& model, double duration, std::uint64_t seed,
                            SimulationDiagnostics* diagnostics) {
    validate(model);
    if (!(duration > 0.0)) {
        throw InvalidArgument("duration must be positive");
    }
    Rng rng = make_rng(seed, 0);
    SimulationDiagnostics diag;
    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(duration / model_mean(model) * 1.1) + 16);
    emit_model(model, rng, 0.0, duration, times, diag);
    if (diagnostics) {
        *diagnostics += diag;
    }
    return SpikeTrain(std::move(times), duration, true);
}

}  // namespace

Distribution Distribution::uniform_moments(double mean, double sd) {
    const double half = std::sqrt(3.0) * sd;
    return uniform(mean - half, mean + half);
}

double Distribution::mean() const {
    return kind == Kind::gamma ? first : 0.5 * (first + second);
}

double Distribution::variance() const {
    if (kind == Kind::gamma) {
        return second * second;
    }
    const double w = second - first;
    return w * w / 12.0;
}

double Distribution::lower_bound() const { return kind == Kind::gamma ? 0.0 : first; }

void Distribution::validate() const {
    if (kind == Kind::gamma) {
        if (!(first > 0.0) || !(second > 0.0)) {
            throw InvalidArgument("gamma distribution needs positive mean and sd");
        }
    } else if (!(second > first)) {
        throw InvalidArgument("uniform distribution needs lo < hi");
    }
}

double Distribution::sample(Rng& rng) const {
    if (kind == Kind::gamma) {
        GammaSource g(*this);
        return g(rng);
    }
    return std::uniform_real_distribution<double>(first, second)(rng);
}

MaModel MaModel::from_isi_moments(std::vector<double> coeffs, double mean, double sd,
                                  Distribution::Kind kind) {
    if (coeffs.empty() || coeffs.front() == 0.0) {
        throw InvalidArgument("MA model needs a_0 != 0");
    }
    const double sum = std::accumulate(coeffs.begin(), coeffs.end(), 0.0);
    const double sum_sq = std::inner_product(coeffs.begin(), coeffs.end(), coeffs.begin(), 0.0);
    if (!(sum > 0.0)) {
        throw InvalidArgument("MA coefficients must have a positive sum");
    }
    const double base_mean = mean / sum;
    const double base_sd = sd / std::sqrt(sum_sq);
    MaModel m;
    m.coeffs = std::move(coeffs);
    m.base = kind == Distribution::Kind::gamma ? Distribution::gamma(base_mean, base_sd)
                                               : Distribution::uniform_moments(base_mean, base_sd);
    return m;
}

std::vector<double> MaModel::geometric(double c, std::size_t m) {
    std::vector<double> a(m + 1);
    for (std::size_t k = 0; k <= m; ++k) {
        a[k] = std::pow(c, static_cast<double>(k));
    }
    return a;
}

bool MaModel::needs_rejection() const {
    const bool nonneg = std::all_of(coeffs.begin(), coeffs.end(), [](double a) { return a >= 0.0; });
    if (nonneg) {
        return false;
    }
    if (base.kind == Distribution::Kind::gamma) {
        return true;
    }
    // uniform base: smallest attainable value of the linear combination
    double worst = 0.0;
    for (double a : coeffs) {
        worst += a >= 0.0 ? a * base.first : a * base.second;
    }
    return !(worst > 0.0);
}

void validate(const Model& model) {
    std::visit(overloaded{
                   [](const GammaRenewal& m) {
                       if (!(m.mean > 0.0) || !(m.sd > 0.0)) {
                           throw InvalidArgument("gamma renewal needs positive mean and sd");
                       }
                   },
                   [](const MaModel& m) {
                       if (m.coeffs.empty() || m.coeffs.front() == 0.0) {
                           throw InvalidArgument("MA model needs a_0 != 0");
                       }
                       m.base.validate();
                       if (m.base.lower_bound() < 0.0) {
                           throw InvalidArgument("MA base distribution must be positive");
                       }
                       if (!(model_mean(m) > 0.0)) {
                           throw InvalidArgument("MA model must have a positive mean interval");
                       }
                   },
                   [](const JitterModel& m) {
                       if (!(m.nu > 0.0) || !(m.sigma1 > 0.0) || !(m.sigma2 > 0.0)) {
                           throw InvalidArgument("jitter model needs nu, sigma1, sigma2 > 0");
                       }
                       if (m.sigma1 + 2.0 * m.sigma2 > m.nu * (1.0 + 1e-12)) {
                           throw InvalidArgument("jitter model needs sigma1 + 2 sigma2 <= nu");
                       }
                   },
                   [](const BurstyModel& m) {
                       if (!(m.p_i > 0.0 && m.p_i < 1.0) || !(m.p_j > 0.0 && m.p_j < 1.0)) {
                           throw InvalidArgument("bursty model needs probabilities in (0, 1)");
                       }
                       m.long_isi.validate();
                       m.short_isi.validate();
                       const bool long_ok = m.long_isi.kind == Distribution::Kind::gamma ||
                                            m.long_isi.first > 0.0;
                       const bool short_ok = m.short_isi.kind == Distribution::Kind::gamma ||
                                             m.short_isi.first > 0.0;
                       if (!long_ok || !short_ok) {
                           throw InvalidArgument("bursty interval laws must be strictly positive");
                       }
                   },
               },
               model);
}

std::string model_name(const Model& model) {
    return std::visit(overloaded{
                          [](const GammaRenewal&) { return std::string("gamma"); },
                          [](const MaModel&) { return std::string("ma"); },
                          [](const JitterModel&) { return std::string("jitter"); },
                          [](const BurstyModel&) { return std::string("bursty"); },
                      },
                      model);
}

double model_mean(const Model& model) {
    return std::visit(
        overloaded{
            [](const GammaRenewal& m) { return m.mean; },
            [](const MaModel& m) {
                return m.base.mean() * std::accumulate(m.coeffs.begin(), m.coeffs.end(), 0.0);
            },
            [](const JitterModel& m) { return m.nu; },
            [](const BurstyModel& m) {
                // the long term needs I_i = 1, I_{i-1} = 0; each burst term needs one
                // lagged I and its J; the fill term applies when none is active
                const double pi = m.p_i;
                const double pj = m.p_j;
                const double p_long = pi * (1.0 - pi);
                const double p_burst = pi * pj;
                const double p_fill = (1.0 - p_long - pi) * (1.0 - p_burst) +
                                      pi * (1.0 - pj) * (1.0 - p_burst);
                return p_long * m.long_isi.mean() + (2.0 * p_burst + p_fill) * m.short_isi.mean();
            },
        },
        model);
}

SpikeTrain sim_renewal(const GammaRenewal& model, double duration, std::uint64_t seed) {
    return simulate_checked(model, duration, seed, nullptr);
}

SpikeTrain sim_ma(const MaModel& model, double duration, std::uint64_t seed,
                  SimulationDiagnostics* diagnostics) {
    return simulate_checked(model, duration, seed, diagnostics);
}

SpikeTrain sim_jitter(const JitterModel& model, double duration, std::uint64_t seed) {
    return simulate_checked(model, duration, seed, nullptr);
}

SpikeTrain sim_bursty(const BurstyModel& model, double duration, std::uint64_t seed) {
    return simulate_checked(model, duration, seed, nullptr);
}

SpikeTrain simulate(const Model& model, double duration, std::uint64_t seed,
                    SimulationDiagnostics* diagnostics) {
    return simulate_checked(model, duration, seed, diagnostics);
}

std::vector<double> sample_intervals(const Model& model, std::size_t n, std::uint64_t seed,
                                     SimulationDiagnostics* diagnostics) {
    validate(model);
    Rng rng = make_rng(seed, 0);
    SimulationDiagnostics diag;
    std::vector<double> out(n);
    auto fill = [&](auto& source) {
        for (auto& v : out) {
            v = source.next(rng, diag);
        }
    };
    std::visit(overloaded{
                   [&](const GammaRenewal& m) {
                       RenewalSource s(m);
                       fill(s);
                   },
                   [&](const MaModel& m) {
                       MaSource s(m, rng);
                       fill(s);
                   },
                   [&](const JitterModel& m) {
                       JitterSource s(m, rng);
                       fill(s);
                   },
                   [&](const BurstyModel& m) {
                       BurstySource s(m, rng);
                       fill(s);
                   },
               },
               model);
    if (diagnostics) {
        *diagnostics += diag;
    }
    return out;
}

PiecewiseTrain sim_piecewise(std::span<const Segment> segments, std::uint64_t seed) {
    if (segments.empty()) {
        throw InvalidArgument("piecewise simulation needs at least one segment");
    }
    PiecewiseTrain out;
    std::vector<double> times;
    double start = 0.0;
    for (std::size_t j = 0; j < segments.size(); ++j) {
        const Segment& seg = segments[j];
        validate(seg.model);
        if (!(seg.length > 0.0)) {
            throw InvalidArgument("segment length must be positive");
        }
        if (j > 0) {
            out.change_points.push_back(start);
        }
        Rng rng = make_rng(seed, j);
        emit_model(seg.model, rng, start, start + seg.length, times, out.diagnostics);
        start += seg.length;
    }
    out.train = SpikeTrain(std::move(times), start, true);
    return out;
}

TheoreticalMoments theoretical_rho2(const Model& model) {
    validate(model);
    TheoreticalMoments out;
    std::visit(overloaded{
                   [&](const GammaRenewal& m) {
                       out.mean = m.mean;
                       out.variance = m.sd * m.sd;
                       out.rho2 = out.variance;
                   },
                   [&](const MaModel& m) {
                       const auto& a = m.coeffs;
                       const double var_x = m.base.variance();
                       out.mean = model_mean(m);
                       out.variance = var_x * std::inner_product(a.begin(), a.end(), a.begin(), 0.0);
                       out.rho2 = out.variance;
                       for (std::size_t lag = 1; lag < a.size(); ++lag) {
                           double s = 0.0;
                           for (std::size_t j = 0; j + lag < a.size(); ++j) {
                               s += a[j] * a[j + lag];
                           }
                           out.rho.push_back(var_x * s);
                           out.rho2 += 2.0 * var_x * s;
                       }
                       out.exact = !m.needs_rejection();
                   },
                   [&](const JitterModel& m) {
                       out.mean = m.nu;
                       out.variance = (m.sigma1 * m.sigma1 + 2.0 * m.sigma2 * m.sigma2) / 3.0;
                       out.rho = {-m.sigma2 * m.sigma2 / 3.0};
                       out.rho2 = out.variance + 2.0 * out.rho[0];
                   },
                   [&](const BurstyModel& m) {
                       constexpr std::size_t n = 4'000'000;
                       const auto xi = sample_intervals(m, n, 0x6275727374ULL);
                       double mu = 0.0;
                       for (double v : xi) {
                           mu += v;
                       }
                       mu /= static_cast<double>(n);
                       auto cov = [&](std::size_t lag) {
                           double s = 0.0;
                           for (std::size_t i = 0; i + lag < n; ++i) {
                               s += (xi[i] - mu) * (xi[i + lag] - mu);
                           }
                           return s / static_cast<double>(n - lag);
                       };
                       out.mean = mu;
                       out.variance = cov(0);
                       out.rho = {cov(1), cov(2)};
                       out.rho2 = out.variance + 2.0 * (out.rho[0] + out.rho[1]);
                       out.exact = false;
                   },
               },
               model);
    return out;
}

}  // namespace mft
