#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "tangle/weight.hpp"

namespace tangle {

// Configuration of the fluid-limit solver. The model is the delayed
// transport system for the rescaled tip densities:
//
//   d/dt x + d/ds x = -x(t,s) * sum_j g_j(s) / zeta_j(t),   x(t,0) = 1
//   l(t,s) = 1 for s <= h,  l(t,s) = x(t-h, s-h) for s >= h
//   zeta_j(t) = int_0^{t-h} g_j(s) l(t,s) ds
//
// discretized on a square grid with a single step for t and s, so the
// characteristics t - s = const pass through grid nodes exactly.
struct FluidConfig {
    double h = 1.0;
    std::vector<WeightFunction> weights; // g_1..g_m, one per selection slot
    double dt = 0.0;                     // 0 -> h/100
    double t_max = 10.0;

    // Optional truncation age for the normalizer quadrature, applied only to
    // integrable weights (the tail error is bounded by the g-tail since
    // l <= 1). Constant weights always integrate the full density. 0 = off.
    double zeta_age_cap = 0.0;

    // Keep every stride-th density row for dumping (0 = keep none).
    int density_stride = 0;

    void validate() const;
};

// Self-consistent data at the end of the warm-up window: the free-tip
// profile x(2h, .) and the normalizers on [2h, 3h]. On [h, 2h] no approval
// has completed yet (the earliest selection, made at t = h, commits at 2h),
// so the tip density is identically 1 there and the normalizers are the
// exact running integrals of the weights; the profile follows by integrating
// along characteristics against those explicit normalizers.
struct FluidStartup {
    double dt = 0.0;
    double h = 0.0;
    std::vector<double> free_profile;              // x(2h, j*dt), j = 0..2h/dt (0 beyond age h)
    std::vector<std::vector<double>> zeta_window;  // per weight: zeta(2h + j*dt), j = 0..h/dt
};

struct FluidTotals {
    double x = 0.0; // free-tip mass
    double l = 0.0; // tip mass
    double w = 0.0; // pending mass
};

// Method-of-characteristics solver with the h-block bootstrap: solve the
// density over one block [kh, (k+1)h] with the normalizers already known
// there, then extend the normalizers over the next block from the freshly
// solved density (lagged by h), and repeat.
class FluidSolver {
public:
    explicit FluidSolver(FluidConfig config);

    // Builds the warm-up data and checks its internal consistency; throws
    // with a diagnostic if a compatibility residual is out of tolerance.
    void build_startup();

    // Replaces the warm-up with caller-supplied data (advanced entry point);
    // runs the same compatibility checks.
    void build_startup(const FluidStartup& startup);

    // Advances one h-block of rows; false once t_max is reached.
    bool advance_block();

    // build_startup (if needed) + all blocks.
    void run();

    // Attenuation of the free density along one characteristic, evaluated by
    // trapezoid on the grid: exp(-int_v^s sum_j g_j(w)/zeta_j(t+w-s) dw).
    // Arguments must be grid-aligned with 0 <= v <= s <= t; throws when the
    // needed normalizer range has not been computed yet.
    double propagator(double t, double s, double v) const;

    FluidTotals totals_at(double t) const;

    // --- grid/series access ------------------------------------------------

    double dt() const { return dt_; }
    double h() const { return config_.h; }
    std::size_t weight_count() const { return config_.weights.size(); }
    double time_of(std::size_t i) const { return static_cast<double>(i) * dt_; }
    std::size_t index_of(double t) const;
    std::size_t last_index() const { return n_t_; }
    double current_time() const { return time_of(rows_done_); }

    const std::vector<double>& x_total() const { return x_tot_; }
    const std::vector<double>& l_total() const { return l_tot_; }
    const std::vector<double>& w_total() const { return w_tot_; }
    const std::vector<double>& zeta(std::size_t j) const { return zeta_.at(j); }

    const FluidStartup& startup() const { return startup_; }

    // Free-density row at the final computed time, ages 0..t-h.
    const std::vector<double>& final_row() const { return final_row_; }

    // Rows retained under density_stride, as (time index, row) pairs.
    const std::vector<std::pair<std::size_t, std::vector<double>>>& stored_rows() const {
        return stored_rows_;
    }

    // --- invariant trackers (over every computed grid step) ------------------

    double sup_x_total() const { return sup_x_tot_; }
    double x_total_at_2h() const { return x_tot_at_2h_; }
    double max_pending_excess() const { return max_w_excess_; } // max w(t) - m*h
    double min_zeta_margin() const { return min_zeta_margin_; } // min zeta_j(t) - zeta_j(2h)
    double zeta_tail_bound() const { return zeta_tail_bound_; } // truncation error bound

private:
    std::vector<double>& row(std::size_t i) { return ring_[i % ring_.size()]; }
    const std::vector<double>& row(std::size_t i) const { return ring_[i % ring_.size()]; }

    void advance_row(std::size_t i);
    void extend_zeta(std::size_t upto);
    void record_totals(std::size_t i);
    void check_startup_compatibility() const;
    double rate_at(std::size_t i, std::size_t j) const;

    FluidConfig config_;
    double dt_ = 0.0;
    std::size_t n_h_ = 0; // steps per h
    std::size_t n_t_ = 0; // last time index

    std::vector<std::vector<double>> g_tab_;   // g_j at ages 0..n_t
    std::vector<std::vector<double>> zeta_;    // per weight, NaN until computed
    std::vector<std::vector<double>> ring_;    // last n_h+1 density rows
    std::vector<double> prev_rates_, cur_rates_;
    std::vector<double> x_tot_, l_tot_, w_tot_;

    std::size_t rows_done_ = 0;     // highest row index computed
    std::size_t zeta_done_ = 0;     // highest normalizer index computed
    bool startup_built_ = false;

    FluidStartup startup_;
    std::vector<double> final_row_;
    std::vector<std::pair<std::size_t, std::vector<double>>> stored_rows_;

    double sup_x_tot_ = 0.0;
    double x_tot_at_2h_ = 0.0;
    double max_w_excess_ = -1e300;
    double min_zeta_margin_ = 1e300;
    double zeta_tail_bound_ = 0.0;
};

}  // namespace tangle
