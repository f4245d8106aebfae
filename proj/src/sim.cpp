#include "tangle/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace tangle {

void ScenarioConfig::validate() const {
    if (lambda <= 0.0) throw std::invalid_argument("scenario: lambda must be > 0");
    if (lambda > 600.0) {
        throw std::invalid_argument("scenario: lambda beyond the inversion sampler's range (600)");
    }
    if (h < 1) throw std::invalid_argument("scenario: h must be >= 1");
    if (m < 2) throw std::invalid_argument("scenario: m must be >= 2");
    if (horizon <= 2 * h) throw std::invalid_argument("scenario: horizon must exceed 2h");
    if (runs < 1) throw std::invalid_argument("scenario: runs must be >= 1");
}

SimEngine::SimEngine(const ScenarioConfig& config, int run_index)
    : config_(config),
      run_index_(run_index),
      run_seed_(config.seed + static_cast<std::uint64_t>(run_index)),
      state_(config.h),
      arrival_rng_(derive_seed(run_seed_, 0x9a9a5e5eULL)),
      due_ring_(static_cast<std::size_t>(config.h) + 1) {
    state_.track_weights(config_.policy.needs_weights());
    state_.batch_weight_updates(true);
    state_.add_arrival(0); // genesis bootstrap
    const std::size_t n = static_cast<std::size_t>(config_.horizon);
    arrivals_by_step_.reserve(n);
    su_by_step_.reserve(n);
    arrivals_prefix_.reserve(n);
    su_prefix_.reserve(n);
    trace_.run_index = run_index;
    trace_.seed = run_seed_;
    trace_.L.reserve(n);
    trace_.X.reserve(n);
    trace_.W.reserve(n);
    trace_.N.reserve(n);
}

void SimEngine::step() {
    const Time t = state_.clock();
    const std::size_t slot = static_cast<std::size_t>(t % (config_.h + 1));

    // (1) attach everything whose PoW finishes now; parents leave the tip sets.
    for (PendingCommit& pc : due_ring_[slot]) {
        state_.commit_attachment(pc.site, pc.parents, t);
    }
    due_ring_[slot].clear();

    // (2) new transactions this step.
    const std::int64_t k = arrival_rng_.poisson(config_.lambda);

    // (3) selections against the start-of-step snapshot. Tip membership and
    // weights only change at commits, so the live state *is* the snapshot;
    // only the free/pending split moves while arrivals are processed.
    std::int64_t su = 0;
    if (k > 0) {
        FrozenSelector selector(state_, config_.policy, config_.m);
        for (std::int64_t i = 0; i < k; ++i) {
            const SiteId id = state_.add_arrival(t);
            Rng slot_rng(derive_seed(run_seed_, static_cast<std::uint64_t>(t),
                                     static_cast<std::uint64_t>(i) + 1));
            SelectionRecord rec = selector.draw(slot_rng);
            rec.u = state_.mark_pending(rec.slots);
            su += rec.u;
            due_ring_[static_cast<std::size_t>((t + config_.h) % (config_.h + 1))].push_back(
                PendingCommit{id, std::move(rec.slots)});
        }
        age_fallbacks_ += selector.age_fallbacks();
    }

    arrivals_by_step_.push_back(k);
    su_by_step_.push_back(su);
    arrivals_prefix_.push_back((arrivals_prefix_.empty() ? 0 : arrivals_prefix_.back()) + k);
    su_prefix_.push_back((su_prefix_.empty() ? 0 : su_prefix_.back()) + su);

    // (4) trace row at the end of the step.
    trace_.L.push_back(state_.tip_count());
    trace_.X.push_back(state_.free_count());
    trace_.W.push_back(state_.pending_count());
    trace_.N.push_back(state_.arrival_count());

    if (config_.check_identities) verify_identities(t);

    // (5)
    state_.advance_clock();
}

// Exact integer identities tying the recorded sets to the logged U values:
//   X(t) = N(t-h) - sum_{T_a <= t} U,  W(t) = sum_{t-h < T_a <= t} U,
//   L(t) = N(t-h) - sum_{T_a + h <= t} U,  W(t) <= m * arrivals in (t-h, t].
void SimEngine::verify_identities(Time t) const {
    auto su_up_to = [&](Time u) -> std::int64_t {
        if (u < 0) return 0;
        const std::size_t i = std::min(static_cast<std::size_t>(u), su_prefix_.size() - 1);
        return su_prefix_[i];
    };
    auto arrivals_up_to = [&](Time u) -> std::int64_t {
        if (u < 0) return 0;
        const std::size_t i = std::min(static_cast<std::size_t>(u), arrivals_prefix_.size() - 1);
        return arrivals_prefix_[i];
    };

    const std::int64_t n_lag = 1 + arrivals_up_to(t - config_.h); // genesis + arrivals
    const std::int64_t x = trace_.X.back();
    const std::int64_t w = trace_.W.back();
    const std::int64_t l = trace_.L.back();

    const bool ok_x = x == n_lag - su_up_to(t);
    const bool ok_w = w == su_up_to(t) - su_up_to(t - config_.h);
    const bool ok_l = l == n_lag - su_up_to(t - config_.h);
    const bool ok_attached = state_.attached_count() == n_lag;
    const bool ok_bound = w <= static_cast<std::int64_t>(config_.m) *
                                   (arrivals_up_to(t) - arrivals_up_to(t - config_.h));
    if (!(ok_x && ok_w && ok_l && ok_attached && ok_bound)) {
        throw std::logic_error("bookkeeping identity violated at step " + std::to_string(t));
    }
}

void SimEngine::run_to_horizon() {
    while (state_.clock() < config_.horizon) step();
}

RunTrace SimEngine::take_trace() {
    RunTrace out = std::move(trace_);
    const std::size_t n = out.L.size();
    if (n > 0) {
        out.final_L = static_cast<double>(out.L.back());
        std::size_t win = static_cast<std::size_t>(
            config_.tail_fraction * static_cast<double>(config_.horizon) + 0.5);
        win = std::clamp<std::size_t>(win, 1, n);
        const std::size_t begin = n - win;
        double mean_t = 0.0, mean_l = 0.0;
        for (std::size_t i = begin; i < n; ++i) {
            mean_t += static_cast<double>(i);
            mean_l += static_cast<double>(out.L[i]);
        }
        mean_t /= static_cast<double>(win);
        mean_l /= static_cast<double>(win);
        double num = 0.0, den = 0.0;
        for (std::size_t i = begin; i < n; ++i) {
            const double dt = static_cast<double>(i) - mean_t;
            num += dt * (static_cast<double>(out.L[i]) - mean_l);
            den += dt * dt;
        }
        out.tail_mean_L = mean_l;
        out.tail_slope = den > 0.0 ? num / den : 0.0;
    }
    out.age_weight_fallbacks = age_fallbacks_;
    if (age_fallbacks_ > 0) {
        std::fprintf(stderr,
                     "run %d: age-weighted mass vanished %lld time(s); drew uniformly instead\n",
                     run_index_, static_cast<long long>(age_fallbacks_));
    }
    out.tip_ages = orphan_statistics(state_, state_.clock(), 20 * config_.h, config_.h);
    return out;
}

RunTrace run_single(const ScenarioConfig& config, int run_index) {
    SimEngine engine(config, run_index);
    engine.run_to_horizon();
    return engine.take_trace();
}

std::vector<RunTrace> run_batch(const ScenarioConfig& config) {
    config.validate();
    std::vector<RunTrace> traces(static_cast<std::size_t>(config.runs));
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned workers = std::min<unsigned>(hw, static_cast<unsigned>(config.runs));
    if (workers <= 1) {
        for (int i = 0; i < config.runs; ++i) traces[static_cast<std::size_t>(i)] = run_single(config, i);
        return traces;
    }
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            try {
                for (int i = next.fetch_add(1); i < config.runs; i = next.fetch_add(1)) {
                    traces[static_cast<std::size_t>(i)] = run_single(config, i);
                }
            } catch (...) {
                const std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(config.runs); // drain remaining work
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
    return traces;
}

OrphanStats orphan_statistics(const TangleState& state, Time now, Time age_threshold,
                              Time bin_width) {
    OrphanStats stats;
    stats.bin_width = bin_width > 0 ? bin_width : std::max<Time>(1, state.pow_delay());
    stats.threshold = age_threshold;
    for (SiteId id : state.tips()) {
        const Time age = state.age(id, now);
        const std::size_t bin = static_cast<std::size_t>(age / stats.bin_width);
        if (stats.histogram.size() <= bin) stats.histogram.resize(bin + 1, 0);
        ++stats.histogram[bin];
        ++stats.tip_count;
        if (age > age_threshold) ++stats.older_than_threshold;
    }
    return stats;
}

void write_trace_csv(std::ostream& out, const RunTrace& trace) {
    out << "t,L,X,W,N\n";
    for (std::size_t t = 0; t < trace.L.size(); ++t) {
        out << t << ',' << trace.L[t] << ',' << trace.X[t] << ',' << trace.W[t] << ','
            << trace.N[t] << '\n';
    }
}

void write_summary_csv(std::ostream& out, const std::vector<RunTrace>& traces) {
    out << "run,seed,final_L,tail_mean_L,tail_slope\n";
    for (const RunTrace& tr : traces) {
        out << tr.run_index << ',' << tr.seed << ',' << tr.final_L << ',' << tr.tail_mean_L
            << ',' << tr.tail_slope << '\n';
    }
}

}  // namespace tangle
