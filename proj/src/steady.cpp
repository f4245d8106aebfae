#include "tangle/steady.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tangle {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error("steady: " + msg); }

// Composite Simpson over [a, b] with at least `min_points` nodes (count made
// even as required). The integrands here are smooth, so this converges far
// below the fixed-point tolerances.
template <typename F>
double simpson(F&& f, double a, double b, std::size_t intervals) {
    if (b <= a) return 0.0;
    if (intervals % 2 == 1) ++intervals;
    intervals = std::max<std::size_t>(intervals, 2);
    const double step = (b - a) / static_cast<double>(intervals);
    double sum = f(a) + f(b);
    for (std::size_t i = 1; i < intervals; ++i) {
        sum += f(a + step * static_cast<double>(i)) * (i % 2 == 1 ? 4.0 : 2.0);
    }
    return sum * step / 3.0;
}

}  // namespace

double SteadyProfile::x(double s) const {
    double expo = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
        expo += weights[j].integral(s) / zeta[j];
    }
    return std::exp(-expo);
}

SteadyProfile solve_fixed_point(std::vector<WeightFunction> weights, double h,
                                SteadyOptions options) {
    if (h <= 0.0) fail("h must be > 0");
    if (weights.size() < 2) fail("at least two weight functions required");
    for (const WeightFunction& g : weights) {
        if (!g.integrable()) fail("fixed point needs integrable weights");
        if (!(g.integral(h) > 0.0)) fail("each weight needs positive mass on [0, h]");
    }

    // Truncation point: far enough out that every g-tail is negligible.
    double s_max = options.s_max;
    if (s_max <= 0.0) {
        s_max = h;
        for (const WeightFunction& g : weights) {
            s_max = std::max(s_max, g.tail_cutoff(1e-15));
        }
        s_max += h;
    }
    double tail_bound = 0.0;
    for (const WeightFunction& g : weights) {
        tail_bound += std::max(0.0, g.total() - g.integral(s_max));
    }

    double ds = options.ds;
    if (ds <= 0.0) {
        double scale = h;
        for (const WeightFunction& g : weights) {
            if (g.kind() == WeightFunction::Kind::ExpDecay) scale = std::min(scale, 1.0 / g.param());
            if (g.kind() == WeightFunction::Kind::Window) scale = std::min(scale, g.param());
        }
        ds = scale / 400.0;
    }
    const auto intervals = static_cast<std::size_t>(std::ceil((s_max - h) / ds));

    SteadyProfile profile;
    profile.h = h;
    profile.weights = weights;
    profile.zeta.resize(weights.size());
    for (std::size_t j = 0; j < weights.size(); ++j) profile.zeta[j] = weights[j].total();
    if (!options.initial_zeta.empty()) {
        if (options.initial_zeta.size() != weights.size()) {
            fail("initial_zeta needs one value per weight");
        }
        for (std::size_t j = 0; j < weights.size(); ++j) {
            const double z0 = options.initial_zeta[j];
            if (!(z0 >= weights[j].integral(h)) || !(z0 <= weights[j].total())) {
                fail("initial_zeta outside [int_0^h g, int_0^inf g]");
            }
            profile.zeta[j] = z0;
        }
    }

    auto apply_map = [&](const std::vector<double>& zeta) {
        std::vector<double> next(zeta.size());
        for (std::size_t j = 0; j < zeta.size(); ++j) {
            auto integrand = [&](double s) {
                double expo = 0.0;
                for (std::size_t k = 0; k < zeta.size(); ++k) {
                    expo += weights[k].integral(s - h) / zeta[k];
                }
                return weights[j](s) * std::exp(-expo);
            };
            next[j] = weights[j].integral(h) + simpson(integrand, h, s_max, intervals);
        }
        return next;
    };

    double residual = 0.0;
    for (int it = 1; it <= options.max_iterations; ++it) {
        const std::vector<double> next = apply_map(profile.zeta);
        residual = 0.0;
        for (std::size_t j = 0; j < next.size(); ++j) {
            residual = std::max(residual,
                                (std::abs(profile.zeta[j] - next[j]) + tail_bound) / next[j]);
        }
        profile.zeta = next;
        profile.iterations = it;
        if (residual < options.tolerance) break;
    }
    if (residual >= options.tolerance) {
        fail("fixed point did not converge within " + std::to_string(options.max_iterations) +
             " iterations, residual " + std::to_string(residual));
    }

    double expo = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
        expo += weights[j].total() / profile.zeta[j];
    }
    profile.x_infinity = std::exp(-expo);
    profile.residual = residual;
    profile.tail_bound = tail_bound;
    return profile;
}

PersistenceReport verify_orphan_persistence(const SteadyProfile& profile, double s_max) {
    if (s_max <= 4.0 * profile.h) fail("persistence check needs s_max well past h");

    PersistenceReport report;
    report.x_infinity = profile.x_infinity;
    double expo = 0.0;
    for (std::size_t j = 0; j < profile.weights.size(); ++j) {
        expo += profile.weights[j].total() / profile.zeta[j];
    }
    report.formula_residual = std::abs(profile.x_infinity - std::exp(-expo));

    // Cumulative integral of x at evenly spaced checkpoints.
    constexpr std::size_t kCheckpoints = 64;
    const double seg = s_max / static_cast<double>(kCheckpoints);
    const auto seg_intervals = static_cast<std::size_t>(
        std::max(64.0, std::ceil(seg / (profile.h / 512.0))));
    double acc = 0.0;
    report.integral_table.reserve(kCheckpoints);
    for (std::size_t i = 0; i < kCheckpoints; ++i) {
        const double a = seg * static_cast<double>(i);
        acc += simpson([&](double s) { return profile.x(s); }, a, a + seg, seg_intervals);
        report.integral_table.emplace_back(a + seg, acc);
    }

    const auto& table = report.integral_table;
    const auto [s_half, i_half] = table[kCheckpoints / 2 - 1];
    const auto [s_full, i_full] = table[kCheckpoints - 1];
    report.tail_slope = (i_full - i_half) / (s_full - s_half);
    report.tail_slope_rel_err =
        std::abs(report.tail_slope - profile.x_infinity) / profile.x_infinity;
    report.intercept = i_full - profile.x_infinity * s_full;
    report.doubling_ratio = i_full / i_half;
    report.diverges = profile.x_infinity > 0.0;
    return report;
}

RandomSelectionFixedPoint random_selection_fixed_point(double h, int m) {
    if (h <= 0.0) fail("h must be > 0");
    if (m < 2) fail("m must be >= 2");
    return RandomSelectionFixedPoint{h / static_cast<double>(m - 1),
                                     static_cast<double>(m) * h / static_cast<double>(m - 1)};
}

}  // namespace tangle
