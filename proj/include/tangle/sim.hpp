#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "tangle/core.hpp"
#include "tangle/rng.hpp"
#include "tangle/selection.hpp"

namespace tangle {

// One Monte Carlo scenario: discrete time steps, Poisson(lambda) arrivals per
// step, PoW delay h steps, m selections per transaction.
struct ScenarioConfig {
    double lambda = 30.0;
    Time h = 5;
    int m = 2;
    Time horizon = 1000;
    int runs = 50;
    std::uint64_t seed = 1;
    SelectionPolicy policy = SelectionPolicy::uniform();
    double tail_fraction = 0.25;   // summary window: last quarter of the horizon
    bool check_identities = true;  // exact per-step bookkeeping asserts

    void validate() const;
};

// Tip-age census of one finished run (bin width = h steps).
struct OrphanStats {
    Time bin_width = 1;
    std::vector<std::int64_t> histogram; // histogram[i] = tips aged [i*bin, (i+1)*bin)
    std::int64_t tip_count = 0;
    std::int64_t older_than_threshold = 0;
    Time threshold = 0;

    double orphan_fraction() const {
        return tip_count == 0 ? 0.0
                              : static_cast<double>(older_than_threshold) /
                                    static_cast<double>(tip_count);
    }
};

// Per-step series plus the run summary. All series have length = horizon and
// satisfy L = X + W at every recorded step.
struct RunTrace {
    int run_index = 0;
    std::uint64_t seed = 0;
    std::vector<std::int64_t> L, X, W, N;

    double final_L = 0.0;
    double tail_mean_L = 0.0;
    double tail_slope = 0.0;
    std::int64_t age_weight_fallbacks = 0; // vanished-mass draws that fell back to uniform
    OrphanStats tip_ages; // at the horizon, threshold 20h by default
};

// Drives one realization. Within a step: (1) commit transactions created at
// t-h, (2) draw Poisson arrivals, (3) each arrival selects m tips against the
// start-of-step snapshot and marks its free picks pending, (4) record the
// trace row, (5) advance the clock. Arrival counts come from a dedicated
// substream so changing the policy never perturbs arrival times.
class SimEngine {
public:
    SimEngine(const ScenarioConfig& config, int run_index);

    void step();
    void run_to_horizon();

    const TangleState& state() const { return state_; }
    const ScenarioConfig& config() const { return config_; }
    RunTrace take_trace();

    // Sum of U over arrivals of one step; exposed for the bookkeeping tests.
    const std::vector<std::int64_t>& selected_free_by_step() const { return su_by_step_; }
    const std::vector<std::int64_t>& arrivals_by_step() const { return arrivals_by_step_; }

private:
    struct PendingCommit {
        SiteId site;
        std::vector<SiteId> parents;
    };

    void verify_identities(Time t) const;

    ScenarioConfig config_;
    int run_index_;
    std::uint64_t run_seed_;
    TangleState state_;
    Rng arrival_rng_;
    std::vector<std::vector<PendingCommit>> due_ring_; // h+1 buckets keyed by step mod (h+1)
    std::vector<std::int64_t> arrivals_by_step_;
    std::vector<std::int64_t> su_by_step_;
    std::vector<std::int64_t> arrivals_prefix_; // inclusive prefix sums
    std::vector<std::int64_t> su_prefix_;
    RunTrace trace_;
    std::int64_t age_fallbacks_ = 0;
};

RunTrace run_single(const ScenarioConfig& config, int run_index);

// `runs` independent traces with seeds seed+0..seed+runs-1. Runs are spread
// over hardware threads; traces are bit-identical for a given config no
// matter the thread count.
std::vector<RunTrace> run_batch(const ScenarioConfig& config);

// Tip-age census of a finished state. Threshold picks the "orphan" cutoff;
// bin width defaults to the PoW delay.
OrphanStats orphan_statistics(const TangleState& state, Time now, Time age_threshold,
                              Time bin_width = 0);

// CSV emission: per-run rows `t,L,X,W,N`, batch summary
// `run,seed,final_L,tail_mean_L,tail_slope`.
void write_trace_csv(std::ostream& out, const RunTrace& trace);
void write_summary_csv(std::ostream& out, const std::vector<RunTrace>& traces);

}  // namespace tangle
