#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace tangle {

using SiteId = std::int32_t;
using Time = std::int64_t;

inline constexpr SiteId kGenesisId = 0;
inline constexpr Time kUnattached = INT64_MIN;

// One transaction. Ids are dense and creation-ordered, so every parent id is
// strictly smaller than its child's id and the graph is acyclic by
// construction.
struct Site {
    Time created_at = 0;            // PoW starts here
    Time attached_at = kUnattached; // created_at + pow_delay once committed
    std::vector<SiteId> parents;    // distinct approved sites (empty for genesis)
    bool is_genesis = false;

    bool attached() const { return attached_at != kUnattached; }
};

// Where a site currently stands in the tip lifecycle.
enum class SiteState : std::uint8_t {
    Created,  // exists, PoW in flight, not in the graph yet
    Free,     // attached tip, not selected by any in-flight transaction
    Pending,  // attached tip, selected but the selector's PoW is unfinished
    Internal, // attached and approved by an attached child; no longer a tip
};

// The growing DAG plus the free/pending tip partition and cached cumulative
// weights. Single-writer; distinct states may live on distinct threads.
class TangleState {
public:
    // pow_delay is the fixed creation->attachment lag h.
    explicit TangleState(Time pow_delay);

    // Registers a transaction created at time t (t must equal clock()).
    // On an empty state this bootstraps the genesis instead: it attaches
    // immediately as the sole free tip, with created_at back-dated by h so
    // the attached-count identity |G(t)| = N(t-h) holds from t = 0 on.
    SiteId add_arrival(Time t);

    // Attaches `site` at time t = created_at + pow_delay with the given
    // parents (tips at selection time). The new site becomes a free tip of
    // age 0; parents still in a tip set are removed, parents that already
    // ceased to be tips are left alone. Rejects unattached parents and
    // duplicate commits.
    void commit_attachment(SiteId site, std::span<const SiteId> parents, Time t);

    // Moves every listed tip that is currently free into the pending set and
    // returns how many moved (the selector's U value). Duplicates in `tips`
    // count once; already-pending tips are left pending. Throws if an id is
    // not a tip.
    int mark_pending(std::span<const SiteId> tips);

    // Number of attached sites with a directed path (length >= 0) to `site`;
    // counts the site itself, so tips weigh 1 and genesis weighs the whole
    // attached graph. Throws for unattached sites.
    std::int64_t cumulative_weight(SiteId site) const;

    // --- observers -------------------------------------------------------

    Time clock() const { return clock_; }
    void advance_clock() { ++clock_; }

    std::int64_t arrival_count() const { return arrival_count_; }   // N
    std::int64_t attached_count() const { return attached_count_; } // |G|
    std::int64_t tip_count() const { return static_cast<std::int64_t>(tips_.size()); }
    std::int64_t free_count() const { return free_count_; }
    std::int64_t pending_count() const { return tip_count() - free_count_; }

    std::size_t site_count() const { return sites_.size(); }
    const Site& site(SiteId id) const { return sites_.at(static_cast<std::size_t>(id)); }
    SiteState state_of(SiteId id) const { return states_.at(static_cast<std::size_t>(id)); }
    bool is_tip(SiteId id) const {
        SiteState s = state_of(id);
        return s == SiteState::Free || s == SiteState::Pending;
    }

    // Current tips in internal order (stable across one step; free and
    // pending mixed). Selection distributions range over exactly this set.
    std::span<const SiteId> tips() const { return tips_; }

    // Attached direct approvers of `site`, i.e. the outgoing moves of the
    // weight-biased walk.
    std::span<const SiteId> children(SiteId site) const {
        return children_.at(static_cast<std::size_t>(site));
    }

    Time pow_delay() const { return pow_delay_; }
    Time age(SiteId id, Time now) const { return now - site(id).attached_at; }

    // Cumulative-weight maintenance can be turned off for policies that never
    // look at weights; queries then fall back to an on-demand count.
    void track_weights(bool enabled);
    bool tracking_weights() const { return weights_enabled_; }

    // Batched weight maintenance: commits buffer their +1 ancestor updates,
    // and flush_weights() applies them in one reverse-id sweep (64 sites per
    // pass, a bit each). Exactly equivalent to the per-commit propagation;
    // queries flush lazily, so observable weights never differ.
    void batch_weight_updates(bool enabled);
    void flush_weights() const;

    // --- test support ----------------------------------------------------

    // Full rescan of the tip partition; true iff free/pending statuses agree
    // with "attached and no attached child" for every site.
    bool partition_consistent() const;

private:
    void remove_tip(SiteId id);
    void propagate_weight(SiteId from);
    std::int64_t count_reverse_reachable(SiteId site) const;

    Time pow_delay_;
    Time clock_ = 0;
    std::int64_t arrival_count_ = 0;
    std::int64_t attached_count_ = 0;
    std::int64_t free_count_ = 0;

    std::vector<Site> sites_;
    std::vector<SiteState> states_;
    std::vector<std::vector<SiteId>> children_;

    std::vector<SiteId> tips_;     // compact tip list
    std::vector<std::int32_t> tip_pos_; // index into tips_, -1 when absent

    bool weights_enabled_ = true;
    bool batch_weights_ = false;
    mutable std::vector<std::int64_t> weights_;
    mutable std::vector<SiteId> weight_backlog_; // committed, +1 sweep still pending
    mutable std::vector<std::uint64_t> sweep_mask_;
    mutable std::vector<std::uint32_t> visit_stamp_;
    mutable std::uint32_t visit_epoch_ = 0;
    mutable std::vector<SiteId> visit_stack_;
};

}  // namespace tangle
