#include "tangle/fluid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace tangle {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error("fluid: " + msg); }

double trapezoid(const std::vector<double>& v, double dt) {
    if (v.size() < 2) return 0.0;
    double sum = 0.5 * (v.front() + v.back());
    for (std::size_t i = 1; i + 1 < v.size(); ++i) sum += v[i];
    return sum * dt;
}

}  // namespace

void FluidConfig::validate() const {
    if (h <= 0.0) fail("h must be > 0");
    if (weights.size() < 2) fail("at least two weight functions required");
    for (const WeightFunction& g : weights) {
        if (!(g.integral(h) > 0.0)) fail("each weight needs positive mass on [0, h]");
    }
    if (dt < 0.0) fail("dt must be >= 0");
    if (t_max < 3.0 * h) fail("t_max must cover the bootstrap, t_max >= 3h");
    if (zeta_age_cap != 0.0 && zeta_age_cap <= h) fail("zeta age cap must exceed h");
    if (density_stride < 0) fail("density_stride must be >= 0");
}

FluidSolver::FluidSolver(FluidConfig config) : config_(std::move(config)) {
    config_.validate();
    const double want_dt = config_.dt > 0.0 ? config_.dt : config_.h / 100.0;
    const double ratio = config_.h / want_dt;
    n_h_ = static_cast<std::size_t>(std::llround(ratio));
    if (n_h_ < 2 || std::abs(ratio - static_cast<double>(n_h_)) > 1e-9 * ratio) {
        fail("dt must divide h (characteristics must hit grid nodes)");
    }
    dt_ = config_.h / static_cast<double>(n_h_);
    n_t_ = static_cast<std::size_t>(std::ceil(config_.t_max / dt_ - 1e-9));
    if (config_.density_stride > 0 &&
        n_h_ % static_cast<std::size_t>(config_.density_stride) != 0) {
        // the dump pairs each row with its h-lagged row to rebuild l(t,s)
        fail("density_stride must divide the per-h step count");
    }

    const std::size_t m = config_.weights.size();
    g_tab_.resize(m);
    zeta_.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
        g_tab_[k].resize(n_t_ + 1);
        for (std::size_t j = 0; j <= n_t_; ++j) {
            g_tab_[k][j] = config_.weights[k](static_cast<double>(j) * dt_);
        }
        zeta_[k].assign(n_t_ + 1, kNaN);
    }
    ring_.resize(n_h_ + 1);
    x_tot_.assign(n_t_ + 1, kNaN);
    l_tot_.assign(n_t_ + 1, kNaN);
    w_tot_.assign(n_t_ + 1, kNaN);

    if (config_.zeta_age_cap > 0.0) {
        for (const WeightFunction& g : config_.weights) {
            if (g.integrable()) {
                zeta_tail_bound_ = std::max(
                    zeta_tail_bound_, g.total() - g.integral(config_.zeta_age_cap));
            }
        }
    }
}

std::size_t FluidSolver::index_of(double t) const {
    const double r = t / dt_;
    const auto i = static_cast<std::size_t>(std::llround(r));
    if (std::abs(r - static_cast<double>(i)) > 1e-6 || i > n_t_) {
        fail("time " + std::to_string(t) + " is not on the grid");
    }
    return i;
}

// sum_j g_j(s)/zeta_j(t) at grid node (i, j). A zero normalizer with positive
// weight yields +inf (instant depletion at the singular corner t = h); a zero
// weight contributes nothing even there.
double FluidSolver::rate_at(std::size_t i, std::size_t j) const {
    double r = 0.0;
    for (std::size_t k = 0; k < zeta_.size(); ++k) {
        const double z = zeta_[k][i];
        const double g = g_tab_[k][j];
        if (g == 0.0) continue;
        r += z > 0.0 ? g / z : std::numeric_limits<double>::infinity();
    }
    return r;
}

void FluidSolver::advance_row(std::size_t i) {
    if (i > zeta_done_) fail("internal: normalizer not ready for row");
    const std::vector<double>& prev = row(i - 1);
    std::vector<double>& cur = row(i);
    cur.assign(i - n_h_ + 1, 0.0);
    cur[0] = 1.0;
    // prev_rates_ holds the rate row of i-1, so each node's rate is computed
    // exactly once across the sweep.
    cur_rates_.resize(cur.size());
    for (std::size_t j = 0; j < cur.size(); ++j) cur_rates_[j] = rate_at(i, j);
    // One trapezoid segment along the characteristic per node. Multiplying
    // the per-segment factors telescopes to the full propagator exactly.
    for (std::size_t j = 1; j < cur.size(); ++j) {
        const double expo = 0.5 * dt_ * (prev_rates_[j - 1] + cur_rates_[j]);
        cur[j] = prev[j - 1] * std::exp(-expo);
    }
    std::swap(prev_rates_, cur_rates_);
}

void FluidSolver::record_totals(std::size_t i) {
    const std::vector<double>& r = row(i);
    x_tot_[i] = trapezoid(r, dt_);
    if (i <= 2 * n_h_) {
        l_tot_[i] = time_of(i) - config_.h;
    } else {
        l_tot_[i] = config_.h + x_tot_[i - n_h_];
    }
    w_tot_[i] = l_tot_[i] - x_tot_[i];

    if (i == 2 * n_h_) x_tot_at_2h_ = x_tot_[i];
    sup_x_tot_ = std::max(sup_x_tot_, x_tot_[i]);
    if (!std::isnan(w_tot_[i])) {
        const double mh = static_cast<double>(config_.weights.size()) * config_.h;
        max_w_excess_ = std::max(max_w_excess_, w_tot_[i] - mh);
    }
    if (config_.density_stride > 0 &&
        i % static_cast<std::size_t>(config_.density_stride) == 0) {
        stored_rows_.emplace_back(i, r);
    }
    if (i == n_t_) final_row_ = r;
}

void FluidSolver::extend_zeta(std::size_t upto) {
    upto = std::min(upto, n_t_);
    for (std::size_t i = zeta_done_ + 1; i <= upto; ++i) {
        if (i < 2 * n_h_) fail("internal: normalizer extension before 2h");
        const std::size_t src = i - n_h_;
        if (src > rows_done_) fail("internal: density row not ready for normalizer");
        const std::vector<double>& r = row(src);
        const std::size_t full = i - 2 * n_h_; // ages h .. t-h, offsets 0..full
        for (std::size_t k = 0; k < zeta_.size(); ++k) {
            std::size_t last = full;
            if (config_.zeta_age_cap > 0.0 && config_.weights[k].integrable()) {
                const auto cap = static_cast<std::size_t>(
                    std::floor((config_.zeta_age_cap - config_.h) / dt_ + 1e-9));
                last = std::min(last, cap);
            }
            double sum = 0.0;
            if (last >= 1) {
                sum = 0.5 * (g_tab_[k][n_h_] * r[0] + g_tab_[k][n_h_ + last] * r[last]);
                for (std::size_t j = 1; j < last; ++j) sum += g_tab_[k][n_h_ + j] * r[j];
                sum *= dt_;
            }
            zeta_[k][i] = config_.weights[k].integral(config_.h) + sum;
            min_zeta_margin_ = std::min(
                min_zeta_margin_, zeta_[k][i] - config_.weights[k].integral(config_.h));
        }
    }
    zeta_done_ = std::max(zeta_done_, upto);
}

void FluidSolver::build_startup() {
    if (startup_built_) fail("startup already built");

    // Warm-up [h, 2h]: the density of tips is identically 1 (the earliest
    // selection commits at 2h), so the normalizers are the exact running
    // weight integrals and the free density follows by characteristics.
    for (std::size_t i = n_h_; i <= 2 * n_h_; ++i) {
        for (std::size_t k = 0; k < zeta_.size(); ++k) {
            zeta_[k][i] = config_.weights[k].integral(time_of(i) - config_.h);
        }
    }
    zeta_done_ = 2 * n_h_;

    for (std::size_t i = 0; i < n_h_; ++i) {
        x_tot_[i] = 0.0;
        l_tot_[i] = 0.0;
        w_tot_[i] = 0.0;
    }
    row(n_h_).assign(1, 1.0);
    rows_done_ = n_h_;
    record_totals(n_h_);
    prev_rates_.assign(1, rate_at(n_h_, 0));
    for (std::size_t i = n_h_ + 1; i <= 2 * n_h_; ++i) {
        advance_row(i);
        rows_done_ = i;
        record_totals(i);
    }
    extend_zeta(std::min(3 * n_h_, n_t_));

    startup_.dt = dt_;
    startup_.h = config_.h;
    startup_.free_profile.assign(2 * n_h_ + 1, 0.0);
    const std::vector<double>& profile = row(2 * n_h_);
    std::copy(profile.begin(), profile.end(), startup_.free_profile.begin());
    startup_.zeta_window.assign(zeta_.size(), {});
    for (std::size_t k = 0; k < zeta_.size(); ++k) {
        startup_.zeta_window[k].assign(zeta_[k].begin() + static_cast<std::ptrdiff_t>(2 * n_h_),
                                       zeta_[k].begin() + static_cast<std::ptrdiff_t>(3 * n_h_ + 1));
    }
    check_startup_compatibility();
    startup_built_ = true;
}

void FluidSolver::build_startup(const FluidStartup& startup) {
    if (startup_built_) fail("startup already built");
    if (std::abs(startup.dt - dt_) > 1e-12 || std::abs(startup.h - config_.h) > 1e-12) {
        fail("supplied startup grid does not match the solver grid");
    }
    if (startup.free_profile.size() != 2 * n_h_ + 1) fail("free profile must cover ages [0, 2h]");
    if (startup.zeta_window.size() != zeta_.size()) fail("one normalizer window per weight required");
    for (const auto& w : startup.zeta_window) {
        if (w.size() != n_h_ + 1) fail("normalizer window must cover [2h, 3h]");
    }

    startup_ = startup;
    startup_.dt = dt_;
    for (std::size_t k = 0; k < zeta_.size(); ++k) {
        for (std::size_t j = 0; j <= n_h_; ++j) zeta_[k][2 * n_h_ + j] = startup.zeta_window[k][j];
        min_zeta_margin_ = 0.0;
    }
    zeta_done_ = 3 * n_h_;

    // Only ages up to t - h influence the future (the normalizer and totals
    // windows); the supplied profile beyond age h is checked, not evolved.
    row(2 * n_h_).assign(startup.free_profile.begin(),
                         startup.free_profile.begin() + static_cast<std::ptrdiff_t>(n_h_ + 1));
    rows_done_ = 2 * n_h_;
    record_totals(2 * n_h_);
    prev_rates_.resize(n_h_ + 1);
    for (std::size_t j = 0; j <= n_h_; ++j) prev_rates_[j] = rate_at(2 * n_h_, j);
    // Totals on (2h, 3h) need the unavailable warm-up density; they stay NaN.
    check_startup_compatibility();
    startup_built_ = true;
}

// Discrete residuals of the self-consistency conditions tying the warm-up
// profile to the normalizer window. Quadrature-exact identities must hold to
// roundoff; the two derivative matches are first-order in dt.
void FluidSolver::check_startup_compatibility() const {
    const auto& phi = startup_.free_profile;
    auto diag = [&](const std::string& what, double residual, double tol) {
        if (!(residual <= tol)) {
            fail("startup compatibility: " + what + " residual " + std::to_string(residual) +
                 " exceeds " + std::to_string(tol));
        }
    };

    diag("free profile boundary value", std::abs(phi[0] - 1.0), 1e-9);

    for (std::size_t k = 0; k < zeta_.size(); ++k) {
        const auto& psi = startup_.zeta_window[k];
        const double base = config_.weights[k].integral(config_.h);
        diag("normalizer base value", std::abs(psi[0] - base), 1e-9 * std::max(1.0, base));
        for (std::size_t j = 0; j + 1 < psi.size(); ++j) {
            diag("normalizer monotonicity", std::max(0.0, psi[j] - psi[j + 1]),
                 1e-12 * std::max(1.0, psi[j]));
        }
        // psi_k at the window end must equal base + int_h^{2h} g_k(s) phi(s-h) ds.
        double integ = 0.5 * (g_tab_[k][n_h_] * phi[0] + g_tab_[k][2 * n_h_] * phi[n_h_]);
        for (std::size_t j = 1; j < n_h_; ++j) integ += g_tab_[k][n_h_ + j] * phi[j];
        integ *= dt_;
        diag("normalizer window endpoint", std::abs(psi[n_h_] - (base + integ)),
             1e-7 * std::max(1.0, psi[n_h_]));
    }

    // Derivative compatibility, first order in dt.
    {
        double target = 0.0;
        for (std::size_t k = 0; k < zeta_.size(); ++k) {
            target -= g_tab_[k][0] / startup_.zeta_window[k][0];
        }
        const double fd = (phi[1] - phi[0]) / dt_;
        diag("free profile boundary slope", std::abs(fd - target),
             25.0 * dt_ * (1.0 + std::abs(target)));
    }
    for (std::size_t k = 0; k < zeta_.size(); ++k) {
        const auto& psi = startup_.zeta_window[k];
        const double fd = (psi[n_h_] - psi[n_h_ - 1]) / dt_;
        // g_k(2h) phi(h) - int_h^{2h} g_k(s) [sum_j g_j(s-h)/psi_j(0) phi(s-h) + phi'(s-h)] ds
        auto phi_slope = [&](std::size_t j) {
            if (j == 0) return (phi[1] - phi[0]) / dt_;
            if (j >= n_h_) return (phi[n_h_] - phi[n_h_ - 1]) / dt_;
            return (phi[j + 1] - phi[j - 1]) / (2.0 * dt_);
        };
        auto integrand = [&](std::size_t j) {
            double sel = 0.0;
            for (std::size_t kk = 0; kk < zeta_.size(); ++kk) {
                sel += g_tab_[kk][j] / startup_.zeta_window[kk][0];
            }
            return g_tab_[k][n_h_ + j] * (sel * phi[j] + phi_slope(j));
        };
        double integ = 0.5 * (integrand(0) + integrand(n_h_));
        for (std::size_t j = 1; j < n_h_; ++j) integ += integrand(j);
        integ *= dt_;
        const double target = g_tab_[k][2 * n_h_] * phi[n_h_] - integ;
        diag("normalizer window end slope", std::abs(fd - target),
             25.0 * dt_ * (1.0 + std::abs(target)) + 1e-9);
    }
}

bool FluidSolver::advance_block() {
    if (!startup_built_) fail("build_startup must run before advancing");
    if (rows_done_ >= n_t_) return false;
    const std::size_t target = std::min(rows_done_ + n_h_, n_t_);
    for (std::size_t i = rows_done_ + 1; i <= target; ++i) {
        advance_row(i);
        rows_done_ = i;
        record_totals(i);
    }
    extend_zeta(std::min(rows_done_ + n_h_, n_t_));
    return rows_done_ < n_t_;
}

void FluidSolver::run() {
    if (!startup_built_) build_startup();
    while (advance_block()) {
    }
}

double FluidSolver::propagator(double t, double s, double v) const {
    const std::size_t it = index_of(t);
    const std::size_t is = index_of(s);
    const std::size_t iv = index_of(v);
    if (iv > is || is > it) fail("propagator needs 0 <= v <= s <= t");
    if (it - is + iv < n_h_ || it > zeta_done_) {
        throw std::out_of_range("fluid: propagator normalizer range not computed");
    }
    if (is == iv) return 1.0;
    double expo = 0.0;
    for (std::size_t j = iv; j <= is; ++j) {
        const double r = rate_at(it - is + j, j);
        expo += (j == iv || j == is) ? 0.5 * r : r;
    }
    return std::exp(-expo * dt_);
}

FluidTotals FluidSolver::totals_at(double t) const {
    const std::size_t i = index_of(t);
    if (i > rows_done_) fail("totals requested beyond the computed range");
    return FluidTotals{x_tot_[i], l_tot_[i], w_tot_[i]};
}

}  // namespace tangle
