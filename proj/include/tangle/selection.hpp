#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tangle/core.hpp"
#include "tangle/rng.hpp"
#include "tangle/weight.hpp"

namespace tangle {

// Link function for the weight-biased walk; defaults to exp.
using LinkFn = double (*)(double);

// How each approval slot picks its tip. Hybrid composes exactly one level:
// the first slot runs a high-alpha walk, the remaining slots run the swipe
// policy (uniform or a low-alpha walk).
struct SelectionPolicy {
    enum class Kind { Uniform, McmcWalk, AgeWeighted, Hybrid };

    Kind kind = Kind::Uniform;
    double alpha = 0.0;                       // McmcWalk
    WeightFunction g = WeightFunction::constant(); // AgeWeighted
    LinkFn link = nullptr;                    // McmcWalk; nullptr = exp
    std::shared_ptr<const SelectionPolicy> first;  // Hybrid slot 1
    std::shared_ptr<const SelectionPolicy> second; // Hybrid slots 2..m

    static SelectionPolicy uniform();
    static SelectionPolicy mcmc(double alpha);
    static SelectionPolicy age_weighted(WeightFunction g);
    static SelectionPolicy hybrid(SelectionPolicy security, SelectionPolicy swipe);

    // True when some component runs the weight-biased walk (the engine keeps
    // cumulative weights up to date only in that case).
    bool needs_weights() const;

    // Policy grammar used in scenario configs:
    //   uniform | mcmc{alpha} | age{g=exp,beta=B} | hybrid{first,second}
    std::string to_string() const;
};

// One transaction's selections: the chosen tip per slot and, once the engine
// has marked them, the number of distinct free tips hit (U).
struct SelectionRecord {
    std::vector<SiteId> slots;
    int u = -1;
};

// --- per-operation draws --------------------------------------------------

// Uniform over the whole tip set (free and pending alike). Throws when the
// tip set is empty.
SiteId select_uniform(const TangleState& state, Rng& rng);

// One step of the weight-biased walk: jumps from `current` to an attached
// approver k with probability proportional to link(alpha * (w_k - w_cur))
// (the current site's weight cancels in the normalization). Throws when
// `current` has no attached children; callers treat that as the terminus.
SiteId mcmc_step(const TangleState& state, SiteId current, double alpha, Rng& rng,
                 LinkFn link = nullptr);

// Exact single-step jump distribution, index-aligned with
// state.children(current). Exposed for tests and diagnostics.
std::vector<double> mcmc_step_probabilities(const TangleState& state, SiteId current,
                                            double alpha, LinkFn link = nullptr);

// Full walk from `start` (genesis by default) until a site with no attached
// children is reached; that site is a tip of the attached DAG. Ids strictly
// increase along the walk, so it always terminates.
SiteId select_mcmc(const TangleState& state, double alpha, Rng& rng,
                   SiteId start = kGenesisId, LinkFn link = nullptr);

// Age-weighted draw: tip b with probability g(age_b) / Z, Z = sum over the
// tip set. If Z underflows to zero the draw falls back to uniform (an
// arrival must always select something); `fallbacks` counts such events.
SiteId select_age_weighted(const TangleState& state, const WeightFunction& g, Rng& rng,
                           std::int64_t* fallbacks = nullptr);

// Draws all m slots for one transaction: slot 1 from the policy itself (or
// its security half), slots 2..m from the swipe half for hybrids. Slots are
// independent; the same tip may fill several slots. `u` is left unset.
SelectionRecord select_m_tips(const TangleState& state, const SelectionPolicy& policy,
                              int m, Rng& rng);

// --- frozen per-step sampler -----------------------------------------------

// Start-of-step snapshot sampler. Tip membership and weights only change at
// commit time, so the snapshot is just the precomputed cumulative g-mass over
// the (stable) tip list; every arrival in the step draws from the same law.
class FrozenSelector {
public:
    FrozenSelector(const TangleState& state, const SelectionPolicy& policy, int m);

    SelectionRecord draw(Rng& rng) const;

    std::int64_t age_fallbacks() const { return fallbacks_; }

    // Exact per-tip law of one slot, aligned with state.tips(); only for
    // uniform/age slots (walk slots depend on the DAG, not on a tip table).
    std::vector<double> slot_distribution(int slot) const;

private:
    struct SlotPlan {
        const SelectionPolicy* policy;    // non-hybrid component
        std::vector<double> cumulative;   // age-weighted prefix sums
        double mass = 0.0;
    };

    SlotPlan make_plan(const SelectionPolicy& component) const;
    SiteId draw_slot(const SlotPlan& plan, Rng& rng) const;

    const TangleState& state_;
    int m_;
    SlotPlan first_;
    SlotPlan rest_;
    bool split_ = false;  // hybrid: rest_ differs from first_
    mutable std::int64_t fallbacks_ = 0;
};

}  // namespace tangle
