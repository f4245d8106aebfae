#pragma once

#include <vector>

#include "tangle/weight.hpp"

namespace tangle {

// Time-independent profile of the tip densities:
//
//   x(s) = exp(-sum_j G_j(s) / zeta_j),  G_j = running integral of g_j
//   l(s) = 1 for s <= h,  l(s) = x(s - h) for s >= h
//   zeta_j = int_0^inf g_j(s) l(s) ds   (self-consistency)
//
struct SteadyProfile {
    double h = 0.0;
    std::vector<WeightFunction> weights;
    std::vector<double> zeta;

    double x_infinity = 0.0;  // exp(-sum_j G_j(inf)/zeta_j)
    double residual = 0.0;    // max_j |zeta_j - F_j(zeta)| / zeta_j at convergence
    double tail_bound = 0.0;  // quadrature truncation bound folded into residual
    int iterations = 0;

    double x(double s) const;
    double l(double s) const { return s <= h ? 1.0 : x(s - h); }
};

struct SteadyOptions {
    double tolerance = 1e-10;
    int max_iterations = 500;
    double ds = 0.0;    // quadrature step; 0 = auto from the weight scales
    double s_max = 0.0; // truncation point; 0 = auto from the weight tails

    // Multi-start hook: alternative initial normalizers (one per weight).
    // Empty = the canonical upper bound int_0^inf g_j. Iterates stay inside
    // [int_0^h g_j, int_0^inf g_j] either way.
    std::vector<double> initial_zeta;
};

// Solves the self-consistency equation by damping-free fixed-point iteration
// from the upper bound zeta_j^0 = int_0^inf g_j. The map
//   F_j(zeta) = int_0^h g_j + int_h^inf g_j(s) x(s-h; zeta) ds
// is monotone in zeta, so the iterates decrease monotonically and stay within
// [int_0^h g_j, int_0^inf g_j]. Requires every weight to be integrable;
// throws on non-convergence, reporting the residual reached.
SteadyProfile solve_fixed_point(std::vector<WeightFunction> weights, double h,
                                SteadyOptions options = {});

// Numerical witness that the steady tip population is non-integrable: the
// free density tends to a positive floor, so its running integral grows
// linearly without bound.
struct PersistenceReport {
    double x_infinity = 0.0;
    double formula_residual = 0.0; // |x_infinity - closed form| (identity check)
    double tail_slope = 0.0;       // slope of int_0^S x over the upper half
    double tail_slope_rel_err = 0.0;
    double intercept = 0.0;        // fitted b in int_0^S x ~ x_inf * S + b
    double doubling_ratio = 0.0;   // I(s_max) / I(s_max/2)
    bool diverges = false;
    std::vector<std::pair<double, double>> integral_table; // (S, int_0^S x ds)
};

PersistenceReport verify_orphan_persistence(const SteadyProfile& profile, double s_max);

// Closed-form fixed point when every slot selects uniformly (g = 1): with m
// slots, x(s) = exp(-m s / l*) and l* = h + l*/m gives
//   l* = m h / (m - 1),  x* = h / (m - 1)
// i.e. l* = 2h and x* = h for the standard two-slot case; unscaled tip counts
// sit near lambda * l*.
struct RandomSelectionFixedPoint {
    double x_star = 0.0;
    double l_star = 0.0;
};

RandomSelectionFixedPoint random_selection_fixed_point(double h, int m = 2);

}  // namespace tangle
