#include "tangle/core.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>
#include <string>

namespace tangle {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

}  // namespace

TangleState::TangleState(Time pow_delay) : pow_delay_(pow_delay) {
    if (pow_delay < 1) fail("TangleState: pow delay must be >= 1");
}

SiteId TangleState::add_arrival(Time t) {
    if (t != clock_) fail("add_arrival: t must equal the current clock");
    if (sites_.size() >= static_cast<std::size_t>(INT32_MAX)) fail("add_arrival: site id overflow");

    const SiteId id = static_cast<SiteId>(sites_.size());
    Site s;
    if (sites_.empty()) {
        // Genesis bootstrap: attached immediately, sole free tip, creation
        // back-dated so it is counted by N(t - h) for every t >= 0.
        s.created_at = t - pow_delay_;
        s.attached_at = t;
        s.is_genesis = true;
    } else {
        s.created_at = t;
    }
    sites_.push_back(std::move(s));
    states_.push_back(sites_.back().attached() ? SiteState::Free : SiteState::Created);
    children_.emplace_back();
    tip_pos_.push_back(-1);
    weights_.push_back(sites_.back().attached() ? 1 : 0);
    visit_stamp_.push_back(0);
    ++arrival_count_;

    if (sites_.back().attached()) {
        ++attached_count_;
        ++free_count_;
        tip_pos_[static_cast<std::size_t>(id)] = static_cast<std::int32_t>(tips_.size());
        tips_.push_back(id);
    }
    return id;
}

void TangleState::commit_attachment(SiteId id, std::span<const SiteId> parents, Time t) {
    if (id < 0 || static_cast<std::size_t>(id) >= sites_.size()) fail("commit: unknown site");
    Site& s = sites_[static_cast<std::size_t>(id)];
    if (s.is_genesis) fail("commit: genesis is attached at construction");
    if (s.attached()) fail("commit: duplicate commit");
    if (t != s.created_at + pow_delay_) fail("commit: t must equal created_at + pow_delay");
    if (parents.empty()) fail("commit: at least one parent required");

    // Validate before mutating.
    for (SiteId p : parents) {
        if (p < 0 || static_cast<std::size_t>(p) >= sites_.size()) fail("commit: unknown parent");
        if (!sites_[static_cast<std::size_t>(p)].attached()) fail("commit: parent was never attached");
        if (p >= id) fail("commit: parent must precede child");
    }

    // Distinct parents, first-selection order kept.
    s.parents.clear();
    for (SiteId p : parents) {
        if (std::find(s.parents.begin(), s.parents.end(), p) == s.parents.end()) {
            s.parents.push_back(p);
        }
    }
    s.attached_at = t;
    ++attached_count_;

    for (SiteId p : s.parents) {
        children_[static_cast<std::size_t>(p)].push_back(id);
        if (is_tip(p)) {
            if (states_[static_cast<std::size_t>(p)] == SiteState::Free) --free_count_;
            remove_tip(p);
            states_[static_cast<std::size_t>(p)] = SiteState::Internal;
        }
    }

    states_[static_cast<std::size_t>(id)] = SiteState::Free;
    ++free_count_;
    tip_pos_[static_cast<std::size_t>(id)] = static_cast<std::int32_t>(tips_.size());
    tips_.push_back(id);

    if (weights_enabled_) {
        if (batch_weights_) {
            weight_backlog_.push_back(id);
        } else {
            propagate_weight(id);
        }
    }
}

int TangleState::mark_pending(std::span<const SiteId> tips) {
    for (SiteId id : tips) {
        if (id < 0 || static_cast<std::size_t>(id) >= sites_.size() || !is_tip(id)) {
            fail("mark_pending: id is not a current tip");
        }
    }
    int moved = 0;
    for (SiteId id : tips) {
        if (states_[static_cast<std::size_t>(id)] == SiteState::Free) {
            states_[static_cast<std::size_t>(id)] = SiteState::Pending;
            --free_count_;
            ++moved;
        }
    }
    return moved;
}

std::int64_t TangleState::cumulative_weight(SiteId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= sites_.size()) fail("cumulative_weight: unknown site");
    if (!sites_[static_cast<std::size_t>(id)].attached()) fail("cumulative_weight: site not attached");
    if (weights_enabled_) {
        if (!weight_backlog_.empty()) flush_weights();
        return weights_[static_cast<std::size_t>(id)];
    }
    return count_reverse_reachable(id);
}

void TangleState::batch_weight_updates(bool enabled) {
    if (!enabled && !weight_backlog_.empty()) flush_weights();
    batch_weights_ = enabled;
}

// Applies the buffered +1 cone updates. Sites are id-ordered topologically
// (parents precede children), so one descending pass with a bit per new site
// completes every mask before its node is read; each site then gains the
// number of distinct new sites whose cone contains it.
void TangleState::flush_weights() const {
    sweep_mask_.resize(sites_.size(), 0);
    std::size_t done = 0;
    while (done < weight_backlog_.size()) {
        const std::size_t chunk = std::min<std::size_t>(64, weight_backlog_.size() - done);
        SiteId top = 0;
        for (std::size_t b = 0; b < chunk; ++b) {
            const SiteId c = weight_backlog_[done + b];
            sweep_mask_[static_cast<std::size_t>(c)] = 1ULL << b;
            top = std::max(top, c);
        }
        for (SiteId v = top; v >= 0; --v) {
            const std::uint64_t mask = sweep_mask_[static_cast<std::size_t>(v)];
            if (mask == 0) continue;
            sweep_mask_[static_cast<std::size_t>(v)] = 0;
            weights_[static_cast<std::size_t>(v)] +=
                static_cast<std::int64_t>(std::popcount(mask));
            for (SiteId p : sites_[static_cast<std::size_t>(v)].parents) {
                sweep_mask_[static_cast<std::size_t>(p)] |= mask;
            }
        }
        done += chunk;
    }
    weight_backlog_.clear();
}

void TangleState::track_weights(bool enabled) {
    if (enabled == weights_enabled_) return;
    weight_backlog_.clear();
    if (enabled) {
        // Rebuild from scratch so the cache is exact regardless of history.
        for (std::size_t i = 0; i < sites_.size(); ++i) {
            weights_[i] = sites_[i].attached()
                              ? count_reverse_reachable(static_cast<SiteId>(i))
                              : 0;
        }
    }
    weights_enabled_ = enabled;
}

bool TangleState::partition_consistent() const {
    for (std::size_t i = 0; i < sites_.size(); ++i) {
        const bool attached = sites_[i].attached();
        const bool should_be_tip = attached && children_[i].empty();
        const SiteState st = states_[i];
        const bool marked_tip = st == SiteState::Free || st == SiteState::Pending;
        if (should_be_tip != marked_tip) return false;
        if (!attached && st != SiteState::Created) return false;
        if (marked_tip) {
            const std::int32_t pos = tip_pos_[i];
            if (pos < 0 || static_cast<std::size_t>(pos) >= tips_.size()) return false;
            if (tips_[static_cast<std::size_t>(pos)] != static_cast<SiteId>(i)) return false;
        } else if (tip_pos_[i] != -1) {
            return false;
        }
    }
    std::int64_t free_seen = 0;
    for (SiteId id : tips_) {
        if (states_[static_cast<std::size_t>(id)] == SiteState::Free) ++free_seen;
    }
    return free_seen == free_count_;
}

void TangleState::remove_tip(SiteId id) {
    const std::int32_t pos = tip_pos_[static_cast<std::size_t>(id)];
    const SiteId last = tips_.back();
    tips_[static_cast<std::size_t>(pos)] = last;
    tip_pos_[static_cast<std::size_t>(last)] = pos;
    tips_.pop_back();
    tip_pos_[static_cast<std::size_t>(id)] = -1;
}

// +1 to every ancestor of `from` (itself included), each exactly once.
void TangleState::propagate_weight(SiteId from) {
    ++visit_epoch_;
    visit_stack_.clear();
    visit_stack_.push_back(from);
    while (!visit_stack_.empty()) {
        const SiteId v = visit_stack_.back();
        visit_stack_.pop_back();
        auto& stamp = visit_stamp_[static_cast<std::size_t>(v)];
        if (stamp == visit_epoch_) continue;
        stamp = visit_epoch_;
        ++weights_[static_cast<std::size_t>(v)];
        for (SiteId p : sites_[static_cast<std::size_t>(v)].parents) {
            if (visit_stamp_[static_cast<std::size_t>(p)] != visit_epoch_) {
                visit_stack_.push_back(p);
            }
        }
    }
}

// Sites that reach `site` along approval edges = BFS over children links.
std::int64_t TangleState::count_reverse_reachable(SiteId site) const {
    ++visit_epoch_;
    visit_stack_.clear();
    visit_stack_.push_back(site);
    std::int64_t count = 0;
    while (!visit_stack_.empty()) {
        const SiteId v = visit_stack_.back();
        visit_stack_.pop_back();
        auto& stamp = visit_stamp_[static_cast<std::size_t>(v)];
        if (stamp == visit_epoch_) continue;
        stamp = visit_epoch_;
        ++count;
        for (SiteId c : children_[static_cast<std::size_t>(v)]) {
            if (visit_stamp_[static_cast<std::size_t>(c)] != visit_epoch_) {
                visit_stack_.push_back(c);
            }
        }
    }
    return count;
}

}  // namespace tangle
