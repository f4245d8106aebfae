// Acceptance suite: end-to-end checks of the simulator, the fluid solver and
// the steady-state solver at pinned parameters and tolerances. Prints one
// PASS/FAIL line per criterion and exits nonzero if any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "tangle/experiments.hpp"
#include "tangle/fluid.hpp"
#include "tangle/rng.hpp"
#include "tangle/selection.hpp"
#include "tangle/sim.hpp"
#include "tangle/steady.hpp"

using namespace tangle;

namespace {

int g_failures = 0;

void report(const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] %-28s %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof(buf), f, args);
    va_end(args);
    return buf;
}

double mean_tail_level(const std::vector<RunTrace>& traces) {
    double mean = 0.0;
    for (const RunTrace& tr : traces) mean += tr.tail_mean_L;
    return mean / static_cast<double>(traces.size());
}

// --- criterion 1: uniform-selection baseline --------------------------------

void rs_baseline() {
    ScenarioConfig cfg;
    cfg.lambda = 30;
    cfg.h = 5;
    cfg.m = 2;
    cfg.horizon = 2000;
    cfg.runs = 10;
    cfg.seed = 101;
    cfg.policy = SelectionPolicy::uniform();
    const auto start = std::chrono::steady_clock::now();
    const std::vector<RunTrace> traces = run_batch(cfg);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const double level = mean_tail_level(traces);
    const double target = 2.0 * cfg.lambda * static_cast<double>(cfg.h);
    const double rel = std::abs(level - target) / target;
    report("rs-baseline-level", rel <= 0.15 && secs < 60.0,
           fmt("tail L = %.1f vs 2*lambda*h = %.0f (%.1f%% off, band 15%%), %.1fs (budget 60s)",
               level, target, 100 * rel, secs));
}

// --- criteria 2-4: figure reproductions --------------------------------------

std::vector<RunTrace> figure_batch(double lambda, SelectionPolicy policy, std::uint64_t seed) {
    ScenarioConfig cfg;
    cfg.lambda = lambda;
    cfg.h = 5;
    cfg.m = 2;
    cfg.horizon = 1000;
    cfg.runs = 50;
    cfg.seed = seed;
    cfg.policy = std::move(policy);
    return run_batch(cfg);
}

void figure_reproductions() {
    {
        const std::vector<RunTrace> traces = figure_batch(30, SelectionPolicy::mcmc(0.1), 601);
        const Verdict v = compute_verdict(traces, {});
        int positive = 0;
        for (const RunTrace& tr : traces) {
            if (tr.tail_slope > 0) ++positive;
        }
        report("fig6-divergence", v.diverges && positive >= 45,
               fmt("verdict %s (slope %.2f > thr %.3f), positive tail slope %d/50 (need >=45)",
                   v.word(), v.slope, v.threshold, positive));
    }
    {
        const std::vector<RunTrace> traces = figure_batch(30, SelectionPolicy::mcmc(0.001), 701);
        const Verdict v = compute_verdict(traces, {});
        report("fig7-bounded", !v.diverges,
               fmt("verdict %s (slope %.4f vs thr %.4f, level %.0f)", v.word(), v.slope,
                   v.threshold, v.level));
    }
    {
        const std::vector<RunTrace> traces = figure_batch(
            40, SelectionPolicy::hybrid(SelectionPolicy::mcmc(1.0), SelectionPolicy::uniform()),
            801);
        const Verdict v = compute_verdict(traces, {});
        report("fig8-hybrid-bounded", !v.diverges,
               fmt("verdict %s at lambda=40, alpha=1 (harsher than fig6), level %.0f", v.word(),
                   v.level));
    }
}

// --- criterion 5: fluid fixed point ------------------------------------------

void fluid_fixed_point() {
    FluidConfig cfg;
    cfg.h = 5.0;
    cfg.t_max = 300.0;
    cfg.dt = cfg.h / 100.0;
    cfg.weights = {WeightFunction::constant(), WeightFunction::constant()};
    FluidSolver solver(cfg);
    solver.run();

    double worst_l = 0.0, worst_x = 0.0;
    for (std::size_t i = solver.index_of(200.0); i <= solver.last_index(); ++i) {
        worst_l = std::max(worst_l, std::abs(solver.l_total()[i] - 10.0) / 10.0);
        worst_x = std::max(worst_x, std::abs(solver.x_total()[i] - 5.0) / 5.0);
    }
    const double bound = std::max(2.0 * cfg.h, solver.x_total_at_2h()) + 1e-4;
    const bool sup_ok = solver.sup_x_total() <= bound;
    report("fluid-fixed-point", worst_l <= 0.01 && worst_x <= 0.01 && sup_ok,
           fmt("t>=200: |l-10|/10 <= %.2e, |x-5|/5 <= %.2e (band 1%%); sup x = %.4f <= %.4f",
               worst_l, worst_x, solver.sup_x_total(), bound));
}

// --- criterion 6: orphan-persistence witness ----------------------------------

void orphan_persistence_witness() {
    SteadyOptions opts;
    opts.tolerance = 1e-9;
    const SteadyProfile profile =
        solve_fixed_point({WeightFunction::exp_decay(1), WeightFunction::exp_decay(1)}, 1.0, opts);
    const PersistenceReport persistence = verify_orphan_persistence(profile, 1200.0);

    const bool steady_ok = profile.residual < 1e-8 && profile.x_infinity > 0.0 &&
                           persistence.tail_slope_rel_err < 0.01;
    report("steady-orphan-witness", steady_ok,
           fmt("residual %.2e (<1e-8), x_inf %.4f (>0), tail slope err %.3f%% (<1%%)",
               profile.residual, profile.x_infinity, 100 * persistence.tail_slope_rel_err));

    FluidConfig cfg;
    cfg.h = 1.0;
    cfg.t_max = 400.0;
    cfg.dt = 0.01;
    cfg.weights = {WeightFunction::exp_decay(1), WeightFunction::exp_decay(1)};
    FluidSolver solver(cfg);
    solver.run();
    bool monotone = true;
    for (std::size_t i = solver.index_of(2.0); i + 1 <= solver.last_index(); ++i) {
        if (solver.l_total()[i + 1] < solver.l_total()[i] - 1e-12) monotone = false;
    }
    const double l_full = solver.totals_at(400.0).l;
    const double l_half = solver.totals_at(200.0).l;
    const double slope = (solver.totals_at(400.0).l - solver.totals_at(300.0).l) / 100.0;
    const bool doubling = l_full > 2.0 * l_half;
    report("fluid-orphan-growth", monotone && doubling,
           fmt("monotone %s, settled slope %.4f (steady floor %.4f); doubling check "
               "l(400)=%.2f vs 2*l(200)=%.2f, ratio %.3f",
               monotone ? "yes" : "no", slope, profile.x_infinity, l_full, 2.0 * l_half,
               l_full / l_half));
    if (!doubling) {
        std::printf("       note: l(t) = %.4f*t + %.2f is affine with a positive intercept, so\n"
                    "       l(t_max)/l(t_max/2) approaches 2 strictly from below at every t_max;\n"
                    "       the growth itself (settled slope == steady floor x_inf) is the\n"
                    "       unbounded-tip-mass evidence.\n",
                    slope, l_full - slope * 400.0);
    }
}

// --- criterion 7: oracle equivalence -------------------------------------------

std::int64_t brute_weight(const TangleState& st, SiteId target) {
    std::int64_t count = 0;
    for (SiteId u = 0; u < static_cast<SiteId>(st.site_count()); ++u) {
        if (!st.site(u).attached()) continue;
        std::vector<SiteId> stack{u};
        std::set<SiteId> seen;
        bool reaches = false;
        while (!stack.empty() && !reaches) {
            const SiteId v = stack.back();
            stack.pop_back();
            if (!seen.insert(v).second) continue;
            if (v == target) reaches = true;
            for (SiteId p : st.site(v).parents) stack.push_back(p);
        }
        if (reaches) ++count;
    }
    return count;
}

void oracle_equivalence() {
    // (a) cumulative weight vs brute-force reverse reachability
    Rng rng(4242);
    int dags = 0;
    std::int64_t checked = 0, mismatches = 0;
    for (int trial = 0; trial < 200; ++trial) {
        TangleState st(1);
        st.batch_weight_updates(trial % 2 == 0);
        st.add_arrival(0);
        const int target_sites = 10 + static_cast<int>(rng.uniform_below(41));
        while (st.site_count() < static_cast<std::size_t>(target_sites)) {
            const Time t = st.clock();
            const auto burst = static_cast<int>(1 + rng.uniform_below(3));
            std::vector<SiteId> created;
            const auto attached = static_cast<SiteId>(st.site_count());
            for (int i = 0; i < burst; ++i) created.push_back(st.add_arrival(t));
            st.advance_clock();
            for (SiteId id : created) {
                const SiteId a =
                    static_cast<SiteId>(rng.uniform_below(static_cast<std::uint64_t>(attached)));
                const SiteId b =
                    static_cast<SiteId>(rng.uniform_below(static_cast<std::uint64_t>(attached)));
                st.commit_attachment(id, std::vector<SiteId>{a, b}, t + 1);
            }
        }
        ++dags;
        for (SiteId i = 0; i < static_cast<SiteId>(st.site_count()); ++i) {
            if (!st.site(i).attached()) continue;
            ++checked;
            if (st.cumulative_weight(i) != brute_weight(st, i)) ++mismatches;
        }
    }
    report("oracle-cumulative-weight", mismatches == 0,
           fmt("%d random DAGs, %lld site weights vs brute-force reachability, %lld mismatches",
               dags, static_cast<long long>(checked), static_cast<long long>(mismatches)));

    // (b) walk exit distribution vs exhaustive path enumeration
    TangleState st(1);
    st.add_arrival(0);
    auto grow = [&st](std::vector<SiteId> parents) {
        const Time t = st.clock();
        const SiteId id = st.add_arrival(t);
        st.advance_clock();
        st.commit_attachment(id, parents, t + 1);
        return id;
    };
    const SiteId a = grow({0});
    const SiteId b = grow({0});
    const SiteId c = grow({a, b});
    const SiteId d = grow({a});
    const SiteId e = grow({c});
    const SiteId f = grow({c, d});
    grow({e, f});
    grow({e});
    grow({d});

    const double alpha = 0.5;
    const auto n = static_cast<SiteId>(st.site_count());
    std::vector<std::vector<SiteId>> kids(static_cast<std::size_t>(n));
    for (SiteId i = 0; i < n; ++i) {
        for (SiteId p : st.site(i).parents) kids[static_cast<std::size_t>(p)].push_back(i);
    }
    std::vector<double> weight(static_cast<std::size_t>(n), 0.0);
    for (SiteId i = 0; i < n; ++i) {
        std::set<SiteId> seen;
        std::vector<SiteId> stack{i};
        while (!stack.empty()) {
            const SiteId v = stack.back();
            stack.pop_back();
            if (!seen.insert(v).second) continue;
            for (SiteId k : kids[static_cast<std::size_t>(v)]) stack.push_back(k);
        }
        weight[static_cast<std::size_t>(i)] = static_cast<double>(seen.size());
    }
    std::map<SiteId, double> exit_prob;
    auto enumerate = [&](auto&& self, SiteId v, double prob) -> void {
        const auto& ks = kids[static_cast<std::size_t>(v)];
        if (ks.empty()) {
            exit_prob[v] += prob;
            return;
        }
        double z = 0.0;
        for (SiteId k : ks) z += std::exp(alpha * weight[static_cast<std::size_t>(k)]);
        for (SiteId k : ks) {
            self(self, k, prob * std::exp(alpha * weight[static_cast<std::size_t>(k)]) / z);
        }
    };
    enumerate(enumerate, kGenesisId, 1.0);

    const int walks = 100000;
    Rng walk_rng(2024);
    std::map<SiteId, int> counts;
    for (int i = 0; i < walks; ++i) ++counts[select_mcmc(st, alpha, walk_rng)];
    double worst_sigma = 0.0;
    for (const auto& [tip, p] : exit_prob) {
        const double sigma = std::sqrt(walks * p * (1 - p));
        worst_sigma = std::max(worst_sigma, std::abs(counts[tip] - walks * p) / sigma);
    }
    report("oracle-walk-absorption", worst_sigma < 3.0,
           fmt("10-site DAG, %d walks vs path enumeration: worst deviation %.2f sigma (band 3)",
               walks, worst_sigma));
}

// --- criterion 8: exact bookkeeping --------------------------------------------

void bookkeeping_identities() {
    struct Case {
        const char* name;
        ScenarioConfig cfg;
    };
    std::vector<Case> cases;
    {
        ScenarioConfig cfg;
        cfg.lambda = 5;
        cfg.h = 2;
        cfg.horizon = 120;
        cfg.policy = SelectionPolicy::uniform();
        cases.push_back({"uniform", cfg});
        cfg.lambda = 3;
        cfg.h = 3;
        cfg.policy = SelectionPolicy::mcmc(0.5);
        cases.push_back({"mcmc", cfg});
        cfg.lambda = 4;
        cfg.h = 2;
        cfg.policy = SelectionPolicy::hybrid(SelectionPolicy::mcmc(2.0), SelectionPolicy::uniform());
        cases.push_back({"hybrid", cfg});
        cfg.lambda = 6;
        cfg.h = 1;
        cfg.policy = SelectionPolicy::age_weighted(WeightFunction::exp_decay(0.5));
        cases.push_back({"age", cfg});
    }
    std::string detail;
    bool ok = true;
    std::int64_t steps = 0;
    for (Case& c : cases) {
        c.cfg.seed = 31337;
        c.cfg.check_identities = true; // engine throws on any violation, zero tolerance
        try {
            for (int run = 0; run < 3; ++run) {
                SimEngine engine(c.cfg, run);
                engine.run_to_horizon();
                steps += c.cfg.horizon;
                if (!engine.state().partition_consistent()) {
                    ok = false;
                    detail += fmt("%s: tip partition drifted; ", c.name);
                }
            }
        } catch (const std::exception& ex) {
            ok = false;
            detail += fmt("%s: %s; ", c.name, ex.what());
        }
    }
    if (ok) {
        detail = fmt("N/W/X/L identities and the pending bound held exactly over %lld steps "
                     "(4 policies x 3 runs)",
                     static_cast<long long>(steps));
    }
    report("bookkeeping-identities", ok, detail);
}

// --- criterion 9: simulation vs fluid limit --------------------------------------

void sim_fluid_agreement() {
    // Physical scenario: lambda = 200 per unit time, h = 2 units, both slots
    // age-weighted with g(s) = e^{-s}. The step sim runs on a refined grid
    // (50 substeps per unit) so its per-substep depletion approaches the
    // continuous-time law; the config below is that same scenario expressed
    // in substep units.
    const int substeps = 50;
    const double lambda_unit = 200.0;
    ScenarioConfig sim;
    sim.lambda = lambda_unit / substeps;
    sim.h = 2 * substeps;
    sim.m = 2;
    sim.horizon = 40 * substeps;
    sim.runs = 12;
    sim.seed = 900;
    sim.policy = SelectionPolicy::age_weighted(WeightFunction::exp_decay(1.0 / substeps));
    const std::vector<RunTrace> traces = run_batch(sim);

    FluidConfig fluid;
    fluid.h = 2.0;
    fluid.t_max = 40.0;
    fluid.dt = 0.02;
    fluid.weights = {WeightFunction::exp_decay(1), WeightFunction::exp_decay(1)};
    FluidSolver solver(fluid);
    solver.run();

    double worst = 0.0;
    for (int tau = 20; tau <= 40; tau += 2) { // t >= 10h
        double mean = 0.0;
        for (const RunTrace& tr : traces) {
            mean += static_cast<double>(tr.L[static_cast<std::size_t>(tau * substeps - 1)]);
        }
        mean /= static_cast<double>(traces.size());
        const double sim_l = mean / lambda_unit;
        const double fluid_l = solver.totals_at(static_cast<double>(tau)).l;
        worst = std::max(worst, std::abs(sim_l - fluid_l) / fluid_l);
    }
    report("sim-fluid-agreement", worst <= 0.05,
           fmt("lambda=200, h=2, g=e^{-s}: max |L/lambda - l| / l = %.2f%% over t in [20,40] "
               "(band 5%%)",
               100 * worst));
}

}  // namespace

int main() {
    const auto start = std::chrono::steady_clock::now();
    std::printf("acceptance suite\n----------------\n");
    rs_baseline();
    figure_reproductions();
    fluid_fixed_point();
    orphan_persistence_witness();
    oracle_equivalence();
    bookkeeping_identities();
    sim_fluid_agreement();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("----------------\n%s (%d criterion failure%s, %.0fs)\n",
                g_failures == 0 ? "ALL PASS" : "FAILURES PRESENT", g_failures,
                g_failures == 1 ? "" : "s", secs);
    return g_failures == 0 ? 0 : 1;
}
