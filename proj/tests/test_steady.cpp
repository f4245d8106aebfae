#include <doctest.h>

#include <cmath>
#include <vector>

#include "tangle/fluid.hpp"
#include "tangle/steady.hpp"

using namespace tangle;

namespace {

// Closed-form self-consistency for g1 = g2 = e^{-s}: substituting
// x(u) = exp(-(2/z)(1 - e^{-u})) into the defining integral collapses it to
//   F(z) = (1 - e^{-h}) + e^{-h} * (z/2) * (1 - e^{-2/z})
// (substitute y = e^{-u}). Solve F(z) = z by bisection to full precision.
double exp_pair_zeta_closed_form(double h) {
    auto F = [&](double z) {
        return (1.0 - std::exp(-h)) + std::exp(-h) * 0.5 * z * (1.0 - std::exp(-2.0 / z));
    };
    double lo = 1.0 - std::exp(-h), hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (F(mid) > mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("exponential pair: solver matches the closed-form fixed point") {
    SteadyOptions opts;
    opts.tolerance = 1e-10;
    const SteadyProfile profile =
        solve_fixed_point({WeightFunction::exp_decay(1), WeightFunction::exp_decay(1)}, 1.0, opts);

    const double z_star = exp_pair_zeta_closed_form(1.0);
    CHECK(profile.zeta[0] == doctest::Approx(z_star).epsilon(1e-9));
    CHECK(profile.zeta[1] == doctest::Approx(z_star).epsilon(1e-9));
    CHECK(profile.residual < 1e-10);

    // residual against the independent closed-form map, not the solver's own
    const double F_star = (1.0 - std::exp(-1.0)) +
                          std::exp(-1.0) * 0.5 * profile.zeta[0] *
                              (1.0 - std::exp(-2.0 / profile.zeta[0]));
    CHECK(std::abs(profile.zeta[0] - F_star) / profile.zeta[0] < 1e-8);

    // bounds held by every iterate: int_0^h g <= zeta <= int_0^inf g
    CHECK(profile.zeta[0] >= 1.0 - std::exp(-1.0));
    CHECK(profile.zeta[0] <= 1.0);

    // x_infinity identity and positivity
    CHECK(profile.x_infinity > 0.0);
    CHECK(profile.x_infinity ==
          doctest::Approx(std::exp(-2.0 / profile.zeta[0])).epsilon(1e-12));

    // l is 1 on [0,h], then the shifted x, and never increases
    CHECK(profile.l(0.5) == 1.0);
    CHECK(profile.l(1.7) == doctest::Approx(profile.x(0.7)).epsilon(1e-12));
    double prev = 2.0;
    for (double s = 0.0; s < 12.0; s += 0.1) {
        CHECK(profile.l(s) <= prev + 1e-12);
        CHECK(profile.l(s) >= profile.x(s) - 1e-12);
        prev = profile.l(s);
    }
}

TEST_CASE("multi-start: the lower bound converges to the same fixed point") {
    SteadyOptions canonical;
    canonical.tolerance = 1e-10;
    const std::vector<WeightFunction> gs{WeightFunction::exp_decay(1),
                                         WeightFunction::exp_decay(1)};
    const SteadyProfile from_above = solve_fixed_point(gs, 1.0, canonical);

    SteadyOptions from_below = canonical;
    from_below.initial_zeta = {gs[0].integral(1.0), gs[1].integral(1.0)};
    const SteadyProfile low = solve_fixed_point(gs, 1.0, from_below);
    CHECK(low.zeta[0] == doctest::Approx(from_above.zeta[0]).epsilon(1e-8));

    SteadyOptions bad = canonical;
    bad.initial_zeta = {2.0, 2.0}; // above the admissible interval
    CHECK_THROWS(solve_fixed_point(gs, 1.0, bad));
    bad.initial_zeta = {0.9};
    CHECK_THROWS(solve_fixed_point(gs, 1.0, bad));
}

TEST_CASE("weights supported inside [0,h] converge in one iteration") {
    const WeightFunction g = WeightFunction::window(0.5);
    const SteadyProfile profile = solve_fixed_point({g, g}, 1.0, {});
    CHECK(profile.iterations == 1);
    CHECK(profile.zeta[0] == doctest::Approx(g.total()).epsilon(1e-12));
    CHECK(profile.zeta[0] == doctest::Approx(g.integral(1.0)).epsilon(1e-12));
}

TEST_CASE("constant weights are rejected; bad geometry is rejected") {
    CHECK_THROWS(solve_fixed_point({WeightFunction::constant(), WeightFunction::exp_decay(1)}, 1.0,
                                   {}));
    CHECK_THROWS(solve_fixed_point({WeightFunction::exp_decay(1)}, 1.0, {}));
    CHECK_THROWS(solve_fixed_point(
        {WeightFunction::exp_decay(1), WeightFunction::exp_decay(1)}, 0.0, {}));
}

TEST_CASE("orphan persistence witness: positive floor, linear tip integral") {
    SteadyOptions opts;
    opts.tolerance = 1e-10;
    const SteadyProfile profile =
        solve_fixed_point({WeightFunction::exp_decay(1), WeightFunction::exp_decay(1)}, 1.0, opts);
    const PersistenceReport report = verify_orphan_persistence(profile, 1200.0);

    CHECK(report.diverges);
    CHECK(report.x_infinity > 0.0);
    CHECK(report.formula_residual < 1e-12);
    CHECK(report.tail_slope_rel_err < 0.01);       // slope of int x -> x_infinity
    CHECK(std::abs(report.doubling_ratio - 2.0) < 0.02);
    CHECK(report.intercept > 0.0); // x(s) >= x_infinity pointwise lifts the line
    // int_0^S x >= x_inf * S - C for the fitted C, at every tabulated S
    for (const auto& [s, integral] : report.integral_table) {
        CHECK(integral >= report.x_infinity * s - report.intercept - 1e-9);
    }
    CHECK_THROWS(verify_orphan_persistence(profile, 2.0));
}

TEST_CASE("uniform-selection closed form") {
    const RandomSelectionFixedPoint five = random_selection_fixed_point(5.0);
    CHECK(five.l_star == doctest::Approx(10.0));
    CHECK(five.x_star == doctest::Approx(5.0));
    const RandomSelectionFixedPoint one = random_selection_fixed_point(1.0);
    CHECK(one.l_star == doctest::Approx(2.0));
    const RandomSelectionFixedPoint tri = random_selection_fixed_point(2.0, 3);
    CHECK(tri.l_star == doctest::Approx(3.0));
    CHECK(tri.x_star == doctest::Approx(1.0));
    CHECK_THROWS(random_selection_fixed_point(0.0));
    CHECK_THROWS(random_selection_fixed_point(1.0, 1));
}

TEST_CASE("dynamic solution relaxes onto the steady profile") {
    // integrable weights: the time-dependent density at a large fixed time
    // must sit on the steady age profile
    SteadyOptions opts;
    opts.tolerance = 1e-10;
    const SteadyProfile steady =
        solve_fixed_point({WeightFunction::exp_decay(1), WeightFunction::exp_decay(1)}, 1.0, opts);

    FluidConfig cfg;
    cfg.h = 1.0;
    cfg.t_max = 60.0;
    cfg.dt = 0.01;
    cfg.weights = {WeightFunction::exp_decay(1), WeightFunction::exp_decay(1)};
    FluidSolver solver(cfg);
    solver.run();

    // normalizers agree
    for (std::size_t j = 0; j < 2; ++j) {
        CHECK(solver.zeta(j).back() == doctest::Approx(steady.zeta[j]).epsilon(0.01));
    }
    // age profile agrees within 2% on [0, 10h]
    const std::vector<double>& row = solver.final_row();
    double worst = 0.0;
    for (std::size_t j = 0; j * solver.dt() <= 10.0; ++j) {
        const double s = static_cast<double>(j) * solver.dt();
        const double rel = std::abs(row[j] - steady.x(s)) / steady.x(s);
        worst = std::max(worst, rel);
    }
    CHECK(worst < 0.02);
    // and the tip-mass growth rate approaches the steady floor
    const double slope =
        (solver.totals_at(60.0).l - solver.totals_at(50.0).l) / 10.0;
    CHECK(slope == doctest::Approx(steady.x_infinity).epsilon(0.02));
}
