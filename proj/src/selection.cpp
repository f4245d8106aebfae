#include "tangle/selection.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace tangle {

namespace {

[[noreturn]] void fail(const char* msg) { throw std::invalid_argument(msg); }

double apply_link(LinkFn link, double v) { return link ? link(v) : std::exp(v); }

}  // namespace

SelectionPolicy SelectionPolicy::uniform() { return SelectionPolicy{}; }

SelectionPolicy SelectionPolicy::mcmc(double alpha) {
    if (alpha <= 0.0) fail("mcmc policy: alpha must be > 0");
    SelectionPolicy p;
    p.kind = Kind::McmcWalk;
    p.alpha = alpha;
    return p;
}

SelectionPolicy SelectionPolicy::age_weighted(WeightFunction g) {
    SelectionPolicy p;
    p.kind = Kind::AgeWeighted;
    p.g = g;
    return p;
}

SelectionPolicy SelectionPolicy::hybrid(SelectionPolicy security, SelectionPolicy swipe) {
    if (security.kind != Kind::McmcWalk) fail("hybrid policy: first slot must be a weight-biased walk");
    if (swipe.kind == Kind::Hybrid) fail("hybrid policy: nesting is one level only");
    if (swipe.kind == Kind::AgeWeighted) fail("hybrid policy: swipe slot must be uniform or a walk");
    SelectionPolicy p;
    p.kind = Kind::Hybrid;
    p.first = std::make_shared<SelectionPolicy>(std::move(security));
    p.second = std::make_shared<SelectionPolicy>(std::move(swipe));
    return p;
}

bool SelectionPolicy::needs_weights() const {
    switch (kind) {
        case Kind::McmcWalk: return true;
        case Kind::Hybrid: return first->needs_weights() || second->needs_weights();
        default: return false;
    }
}

std::string SelectionPolicy::to_string() const {
    auto num = [](double v) {
        char buf[32];
        auto res = std::to_chars(buf, buf + sizeof(buf), v);
        return std::string(buf, res.ptr);
    };
    switch (kind) {
        case Kind::Uniform: return "uniform";
        case Kind::McmcWalk: return "mcmc{" + num(alpha) + "}";
        case Kind::AgeWeighted: {
            // age{g=exp,beta=B} / age{g=const,c=C} / age{g=window,width=W}
            switch (g.kind()) {
                case WeightFunction::Kind::ExpDecay: return "age{g=exp,beta=" + num(g.param()) + "}";
                case WeightFunction::Kind::Constant: return "age{g=const,c=" + num(g.param()) + "}";
                case WeightFunction::Kind::Window: return "age{g=window,width=" + num(g.param()) + "}";
            }
            return "age{?}";
        }
        case Kind::Hybrid: return "hybrid{" + first->to_string() + "," + second->to_string() + "}";
    }
    return "?";
}

SiteId select_uniform(const TangleState& state, Rng& rng) {
    auto tips = state.tips();
    if (tips.empty()) fail("select_uniform: empty tip set");
    return tips[rng.uniform_below(tips.size())];
}

std::vector<double> mcmc_step_probabilities(const TangleState& state, SiteId current,
                                            double alpha, LinkFn link) {
    auto kids = state.children(current);
    if (kids.empty()) fail("mcmc_step: site has no attached children");
    if (alpha < 0.0) fail("mcmc_step: alpha must be >= 0");

    // The jump weight is link(-alpha*(w_cur - w_k)); with link = exp the
    // current site's weight cancels, so normalize against the heaviest child
    // for numerical range.
    std::vector<double> probs(kids.size());
    if (!link) {
        std::int64_t max_w = INT64_MIN;
        for (SiteId k : kids) max_w = std::max(max_w, state.cumulative_weight(k));
        double sum = 0.0;
        for (std::size_t i = 0; i < kids.size(); ++i) {
            probs[i] = std::exp(alpha * static_cast<double>(state.cumulative_weight(kids[i]) - max_w));
            sum += probs[i];
        }
        for (double& p : probs) p /= sum;
        return probs;
    }
    const std::int64_t w_cur = state.cumulative_weight(current);
    double sum = 0.0;
    for (std::size_t i = 0; i < kids.size(); ++i) {
        const double d = -alpha * static_cast<double>(w_cur - state.cumulative_weight(kids[i]));
        probs[i] = apply_link(link, d);
        if (probs[i] < 0.0) fail("mcmc_step: link function returned a negative weight");
        sum += probs[i];
    }
    if (sum <= 0.0) fail("mcmc_step: all jump weights vanished");
    for (double& p : probs) p /= sum;
    return probs;
}

SiteId mcmc_step(const TangleState& state, SiteId current, double alpha, Rng& rng, LinkFn link) {
    auto kids = state.children(current);
    const std::vector<double> probs = mcmc_step_probabilities(state, current, alpha, link);
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return kids[i];
    }
    return kids.back();
}

SiteId select_mcmc(const TangleState& state, double alpha, Rng& rng, SiteId start, LinkFn link) {
    if (state.site_count() == 0) fail("select_mcmc: empty tangle");
    SiteId current = start;
    if (!state.site(current).attached()) fail("select_mcmc: start site not attached");
    while (!state.children(current).empty()) {
        current = mcmc_step(state, current, alpha, rng, link);
    }
    return current;
}

SiteId select_age_weighted(const TangleState& state, const WeightFunction& g, Rng& rng,
                           std::int64_t* fallbacks) {
    auto tips = state.tips();
    if (tips.empty()) fail("select_age_weighted: empty tip set");
    const Time now = state.clock();
    double mass = 0.0;
    for (SiteId id : tips) mass += g(static_cast<double>(state.age(id, now)));
    if (mass <= 0.0) {
        if (fallbacks) ++*fallbacks;
        return tips[rng.uniform_below(tips.size())];
    }
    const double u = rng.uniform() * mass;
    double acc = 0.0;
    for (SiteId id : tips) {
        acc += g(static_cast<double>(state.age(id, now)));
        if (u < acc) return id;
    }
    return tips.back();
}

SelectionRecord select_m_tips(const TangleState& state, const SelectionPolicy& policy,
                              int m, Rng& rng) {
    if (m < 2) fail("select_m_tips: m must be >= 2");
    FrozenSelector sel(state, policy, m);
    return sel.draw(rng);
}

// --- FrozenSelector ---------------------------------------------------------

FrozenSelector::FrozenSelector(const TangleState& state, const SelectionPolicy& policy, int m)
    : state_(state), m_(m) {
    if (m < 2) fail("FrozenSelector: m must be >= 2");
    if (state.tips().empty()) fail("FrozenSelector: empty tip set");
    if (policy.kind == SelectionPolicy::Kind::Hybrid) {
        first_ = make_plan(*policy.first);
        rest_ = make_plan(*policy.second);
        split_ = true;
    } else {
        first_ = make_plan(policy);
    }
}

FrozenSelector::SlotPlan FrozenSelector::make_plan(const SelectionPolicy& component) const {
    SlotPlan plan;
    plan.policy = &component;
    if (component.kind == SelectionPolicy::Kind::AgeWeighted) {
        auto tips = state_.tips();
        const Time now = state_.clock();
        plan.cumulative.resize(tips.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < tips.size(); ++i) {
            acc += component.g(static_cast<double>(state_.age(tips[i], now)));
            plan.cumulative[i] = acc;
        }
        plan.mass = acc;
    }
    return plan;
}

SiteId FrozenSelector::draw_slot(const SlotPlan& plan, Rng& rng) const {
    auto tips = state_.tips();
    switch (plan.policy->kind) {
        case SelectionPolicy::Kind::Uniform:
            return tips[rng.uniform_below(tips.size())];
        case SelectionPolicy::Kind::McmcWalk:
            return select_mcmc(state_, plan.policy->alpha, rng, kGenesisId, plan.policy->link);
        case SelectionPolicy::Kind::AgeWeighted: {
            if (plan.mass <= 0.0) {
                ++fallbacks_;
                return tips[rng.uniform_below(tips.size())];
            }
            const double u = rng.uniform() * plan.mass;
            auto it = std::upper_bound(plan.cumulative.begin(), plan.cumulative.end(), u);
            std::size_t idx = static_cast<std::size_t>(it - plan.cumulative.begin());
            if (idx >= tips.size()) idx = tips.size() - 1;
            return tips[idx];
        }
        case SelectionPolicy::Kind::Hybrid:
            break;
    }
    fail("FrozenSelector: hybrid components cannot nest");
}

SelectionRecord FrozenSelector::draw(Rng& rng) const {
    SelectionRecord rec;
    rec.slots.reserve(static_cast<std::size_t>(m_));
    rec.slots.push_back(draw_slot(first_, rng));
    const SlotPlan& tail = split_ ? rest_ : first_;
    for (int j = 1; j < m_; ++j) rec.slots.push_back(draw_slot(tail, rng));
    return rec;
}

std::vector<double> FrozenSelector::slot_distribution(int slot) const {
    const SlotPlan& plan = (slot == 0 || !split_) ? first_ : rest_;
    auto tips = state_.tips();
    std::vector<double> probs(tips.size(), 0.0);
    switch (plan.policy->kind) {
        case SelectionPolicy::Kind::Uniform:
            std::fill(probs.begin(), probs.end(), 1.0 / static_cast<double>(tips.size()));
            return probs;
        case SelectionPolicy::Kind::AgeWeighted: {
            if (plan.mass <= 0.0) {
                std::fill(probs.begin(), probs.end(), 1.0 / static_cast<double>(tips.size()));
                return probs;
            }
            double prev = 0.0;
            for (std::size_t i = 0; i < tips.size(); ++i) {
                probs[i] = (plan.cumulative[i] - prev) / plan.mass;
                prev = plan.cumulative[i];
            }
            return probs;
        }
        default:
            fail("slot_distribution: only tabulated slots (uniform/age) have a tip table");
    }
}

}  // namespace tangle
