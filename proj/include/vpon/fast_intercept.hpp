#pragma once

// In-NIC eNF emulation.  Upstream, DBRus in transit are copied into a
// bounded register store while the burst passes through untouched.
// Downstream, the next BWMAP from the CPU is rewritten in flight: pending
// low-latency demand is granted from the reserved window, leftover reserve
// is spare-filled with lower-priority demand, and excess low-latency demand
// may preempt best-effort grants.
//
// Intercept and rewrite may run from different logical tasks; each operation
// is atomic with respect to the store, and callers serialize access to it.

#include "vpon/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace vpon {

inline constexpr std::size_t kDefaultStoreCapacity = 64;

struct InterceptPolicy {
    bool spare_fill_enabled = true;
    bool preempt_enabled = false;
    double max_preempt_fraction = 0.0;

    void validate() const {
        if (!(max_preempt_fraction >= 0.0 && max_preempt_fraction <= 1.0)) {
            throw Error(Errc::ConfigError, "max_preempt_fraction must lie in [0,1]");
        }
    }

    bool operator==(const InterceptPolicy&) const = default;
};

// Fast-memory snapshot of in-transit DBRus, modeling the P4 register: a
// bounded map from Alloc-ID to the latest reported occupancy.  New entries
// beyond the capacity are dropped and counted, mirroring a fixed-size
// hardware table; existing entries always take overwrites.
class RegisterStore {
public:
    struct Entry {
        std::uint32_t occupancy_bytes = 0;
        std::uint32_t arrival_frame_sn = 0; // diagnostics only
        bool low_latency = false;
    };

    explicit RegisterStore(std::size_t capacity = kDefaultStoreCapacity)
        : m_capacity(capacity) {}

    // Records every DBRu of the burst; the burst itself continues unmodified.
    // A zero-occupancy report clears the Alloc-ID's entry.
    void intercept(const UpstreamBurst& burst) {
        for (const Dbru& d : burst.dbrus) {
            auto it = m_pending.find(d.alloc_id);
            if (d.occupancy_bytes == 0) {
                if (it != m_pending.end()) m_pending.erase(it);
                continue;
            }
            if (it != m_pending.end()) {
                it->second = Entry{d.occupancy_bytes, burst.frame_sn, d.low_latency};
            } else if (m_pending.size() < m_capacity) {
                m_pending.emplace(d.alloc_id,
                                  Entry{d.occupancy_bytes, burst.frame_sn, d.low_latency});
            } else {
                ++m_dropped;
            }
        }
    }

    // Removes served bytes; the entry disappears once fully served.
    void consume(AllocId id, std::uint32_t bytes) {
        auto it = m_pending.find(id);
        if (it == m_pending.end()) return;
        if (it->second.occupancy_bytes <= bytes) {
            m_pending.erase(it);
        } else {
            it->second.occupancy_bytes -= bytes;
        }
    }

    const std::map<AllocId, Entry>& pending() const noexcept { return m_pending; }
    std::size_t size() const noexcept { return m_pending.size(); }
    bool empty() const noexcept { return m_pending.empty(); }
    std::size_t capacity() const noexcept { return m_capacity; }
    std::uint64_t dropped() const noexcept { return m_dropped; }

private:
    std::map<AllocId, Entry> m_pending;
    std::size_t m_capacity;
    std::uint64_t m_dropped = 0;
};

struct FastPlan {
    std::vector<Allocation> grants;
    // Low-latency demand the reserve could not hold, ascending Alloc-ID.
    // Candidates for preemption at rewrite time; otherwise left in the store
    // for the next cycle.
    std::vector<std::pair<AllocId, std::uint32_t>> ll_overflow;
};

// Packs grants into the reserved window: low-latency entries first, then
// (policy permitting) spare-fill from remaining demand.  Ascending Alloc-ID
// within each phase.  Served bytes leave the store; partial service keeps
// the residual.
inline FastPlan plan_fast_grants(RegisterStore& store, ReservedWindow window,
                                 const InterceptPolicy& policy) {
    FastPlan plan;
    std::uint32_t cursor = window.offset_bytes;
    std::uint32_t remaining = window.length_bytes;

    const auto serve_phase = [&](bool low_latency, Origin origin) {
        std::vector<std::pair<AllocId, std::uint32_t>> served;
        for (const auto& [id, entry] : store.pending()) {
            if (entry.low_latency != low_latency) continue;
            if (remaining < kMinGrantBytes) break;
            const std::uint32_t want = std::max(entry.occupancy_bytes, kMinGrantBytes);
            const std::uint32_t grant = std::min(want, remaining);
            plan.grants.push_back(Allocation{id, cursor, grant, false, origin});
            served.emplace_back(id, std::min(entry.occupancy_bytes, grant));
            cursor += grant;
            remaining -= grant;
        }
        for (const auto& [id, bytes] : served) store.consume(id, bytes);
    };

    serve_phase(true, Origin::FastIntercept);
    for (const auto& [id, entry] : store.pending()) {
        if (entry.low_latency) plan.ll_overflow.emplace_back(id, entry.occupancy_bytes);
    }
    if (policy.spare_fill_enabled) {
        serve_phase(false, Origin::SpareFill);
    }
    return plan;
}

struct RewriteResult {
    Bwmap map;
    // Low-latency bytes served through preemption, per Alloc-ID; the caller
    // clears these from the register store.
    std::vector<std::pair<AllocId, std::uint32_t>> preempt_served;
    std::uint64_t reclaimed_bytes = 0;
};

// Inserts planned fast grants into the reserved window and, when enabled,
// preempts best-effort grants for overflow low-latency demand: targets are
// shrunk largest-first (never below the minimum grant, dbru_requested kept)
// and the vacated tail space is re-granted with origin Preempting, capped at
// max_preempt_fraction of the map's best-effort bytes.
inline RewriteResult rewrite_bwmap(const Bwmap& map, const FastPlan& plan,
                                   const InterceptPolicy& policy, const AllocTable& table,
                                   std::uint32_t frame_capacity_bytes) {
    policy.validate();
    RewriteResult out;
    out.map = map;

    for (const auto& g : plan.grants) {
        if (!map.reserved_window.contains(g.start_time_bytes, g.grant_size_bytes)) {
            throw Error(Errc::InvariantViolation, "planned grant outside reserved window");
        }
        out.map.allocations.push_back(g);
    }

    if (policy.preempt_enabled && !plan.ll_overflow.empty()) {
        std::uint64_t be_total = 0;
        std::vector<std::size_t> targets;
        for (std::size_t idx = 0; idx < out.map.allocations.size(); ++idx) {
            const auto& a = out.map.allocations[idx];
            if (a.origin == Origin::StandardDba && table.contains(a.alloc_id) &&
                table.class_of(a.alloc_id) == TcontClass::BestEffort) {
                be_total += a.grant_size_bytes;
                targets.push_back(idx);
            }
        }
        std::sort(targets.begin(), targets.end(), [&](std::size_t lhs, std::size_t rhs) {
            const auto& a = out.map.allocations[lhs];
            const auto& b = out.map.allocations[rhs];
            if (a.grant_size_bytes != b.grant_size_bytes) {
                return a.grant_size_bytes > b.grant_size_bytes;
            }
            return a.alloc_id < b.alloc_id;
        });

        std::uint64_t reclaim_left =
            std::uint64_t(std::floor(policy.max_preempt_fraction * double(be_total)));
        auto needs = plan.ll_overflow;
        std::size_t need_idx = 0;

        for (std::size_t t : targets) {
            if (need_idx >= needs.size() || reclaim_left < kMinGrantBytes) break;
            auto& victim = out.map.allocations[t];
            std::uint32_t room = victim.grant_size_bytes > kMinGrantBytes
                                     ? victim.grant_size_bytes - kMinGrantBytes
                                     : 0;
            room = std::uint32_t(std::min<std::uint64_t>(room, reclaim_left));

            std::vector<Allocation> pieces;
            std::uint32_t taken = 0;
            while (room >= kMinGrantBytes && need_idx < needs.size()) {
                auto& [id, amount] = needs[need_idx];
                const std::uint32_t piece = std::min(std::max(amount, kMinGrantBytes), room);
                const std::uint32_t served = std::min(amount, piece);
                pieces.push_back(Allocation{id, 0, piece, false, Origin::Preempting});
                out.preempt_served.emplace_back(id, served);
                amount -= served;
                if (amount == 0) ++need_idx;
                taken += piece;
                room -= piece;
                reclaim_left -= piece;
            }
            if (taken == 0) continue;

            victim.grant_size_bytes -= taken;
            std::uint32_t at = victim.end_bytes();
            for (auto& p : pieces) {
                p.start_time_bytes = at;
                at += p.grant_size_bytes;
                out.map.allocations.push_back(p);
            }
            out.reclaimed_bytes += taken;
        }
    }

    std::sort(out.map.allocations.begin(), out.map.allocations.end(),
              [](const Allocation& a, const Allocation& b) {
                  return a.start_time_bytes < b.start_time_bytes;
              });
    check_bwmap(out.map, frame_capacity_bytes);
    return out;
}

// One downstream pass of the eNF: plan against the map's reserved window,
// rewrite, and clear preempted demand from the store.
inline Bwmap enf_process_downstream(RegisterStore& store, const Bwmap& map,
                                    const InterceptPolicy& policy, const AllocTable& table,
                                    std::uint32_t frame_capacity_bytes) {
    const FastPlan plan = plan_fast_grants(store, map.reserved_window, policy);
    RewriteResult result = rewrite_bwmap(map, plan, policy, table, frame_capacity_bytes);
    for (const auto& [id, bytes] : result.preempt_served) {
        store.consume(id, bytes);
    }
    return std::move(result.map);
}

} // namespace vpon
