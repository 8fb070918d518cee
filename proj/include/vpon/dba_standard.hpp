#pragma once

// CPU/VNF-side standard DBA: status-reporting demand ledger plus a
// deterministic weighted-round-robin scheduler.  Each frame it emits a BWMAP
// whose leading reserved window is left unallocated for the fast path.
//
// Scheduling order is strict priority Assured > BestEffort, per-byte
// round-robin within a class, ascending Alloc-ID.  Low-latency Alloc-IDs are
// excluded from data grants whenever a reserved window exists (their demand
// is served there); with a zero reserve they form the top-priority tier so
// traffic cannot strand.

#include "vpon/types.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

namespace vpon {

struct ClassWeights {
    double low_latency = 1.0;
    double assured = 1.0;
    double best_effort = 1.0;

    double of(TcontClass c) const noexcept {
        switch (c) {
        case TcontClass::LowLatency: return low_latency;
        case TcontClass::Assured: return assured;
        case TcontClass::BestEffort: return best_effort;
        }
        return 1.0;
    }

    bool operator==(const ClassWeights&) const = default;
};

struct DbaConfig {
    std::uint32_t frame_capacity_bytes = kDefaultFrameCapacityBytes;
    double reserved_fraction = 0.1;
    std::uint32_t service_interval_frames = 1;
    ClassWeights weights;

    std::uint32_t reserve_length_bytes() const noexcept {
        return std::uint32_t(std::floor(reserved_fraction * double(frame_capacity_bytes)));
    }

    void validate() const {
        if (!(reserved_fraction >= 0.0 && reserved_fraction <= 1.0)) {
            throw Error(Errc::ConfigError, "reserved_fraction must lie in [0,1]");
        }
        if (service_interval_frames < 1) {
            throw Error(Errc::ConfigError, "service_interval_frames must be >= 1");
        }
        if (frame_capacity_bytes < kMinGrantBytes) {
            throw Error(Errc::ConfigError, "frame capacity below minimum grant size");
        }
        if (reserved_fraction > 0.0 && reserve_length_bytes() < kMinGrantBytes) {
            throw Error(Errc::ConfigError,
                        "reserved window smaller than the minimum grant size");
        }
        if (!(weights.low_latency > 0.0) || !(weights.assured > 0.0) ||
            !(weights.best_effort > 0.0)) {
            throw Error(Errc::ConfigError, "class weights must be positive");
        }
    }

    bool operator==(const DbaConfig&) const = default;
};

// Outstanding upstream demand per Alloc-ID, fed by status reports.  Reports
// carry absolute occupancy, so ingest overwrites; grants debit.
class DemandLedger {
public:
    struct Entry {
        std::uint64_t demand_bytes = 0;
        std::uint32_t last_update_sn = 0;

        bool operator==(const Entry&) const = default;
    };

    void ingest(const Dbru& dbru, std::uint32_t frame_sn, const AllocTable& table) {
        if (!table.contains(dbru.alloc_id)) {
            throw Error(Errc::UnknownAllocId,
                        "dbru for unregistered alloc_id " + std::to_string(dbru.alloc_id.value));
        }
        auto& e = m_entries[dbru.alloc_id];
        e.demand_bytes = dbru.occupancy_bytes;
        e.last_update_sn = frame_sn;
    }

    void debit(AllocId id, std::uint64_t bytes) noexcept {
        auto it = m_entries.find(id);
        if (it == m_entries.end()) return;
        it->second.demand_bytes = it->second.demand_bytes > bytes
                                      ? it->second.demand_bytes - bytes
                                      : 0;
    }

    std::uint64_t demand(AllocId id) const noexcept {
        auto it = m_entries.find(id);
        return it == m_entries.end() ? 0 : it->second.demand_bytes;
    }

    const std::map<AllocId, Entry>& entries() const noexcept { return m_entries; }

    bool operator==(const DemandLedger&) const = default;

private:
    std::map<AllocId, Entry> m_entries;
};

struct WrrEntry {
    AllocId id;
    std::uint64_t demand_bytes = 0;
    std::uint32_t quantum = 1; // bytes handed out per round
};

// Closed-form equivalent of per-byte weighted round-robin: after T complete
// rounds entry i holds min(demand_i, quantum_i * T); the final partial round
// hands out the leftover in ascending entry order.  Entries must be sorted
// ascending by id.  Returns grants aligned with the input.
inline std::vector<std::uint64_t> wrr_allocate(const std::vector<WrrEntry>& entries,
                                               std::uint64_t capacity_bytes) {
    std::vector<std::uint64_t> grants(entries.size(), 0);
    if (entries.empty() || capacity_bytes == 0) return grants;

    const auto served_after = [&](std::uint64_t rounds) {
        std::uint64_t sum = 0;
        for (const auto& e : entries) {
            sum += std::min<std::uint64_t>(e.demand_bytes, std::uint64_t(e.quantum) * rounds);
        }
        return sum;
    };

    std::uint64_t hi = 0;
    for (const auto& e : entries) {
        const std::uint64_t rounds_needed = (e.demand_bytes + e.quantum - 1) / e.quantum;
        hi = std::max(hi, rounds_needed);
    }

    // Largest T whose complete-round total still fits the capacity.
    std::uint64_t lo = 0;
    while (lo < hi) {
        const std::uint64_t mid = lo + (hi - lo + 1) / 2;
        if (served_after(mid) <= capacity_bytes) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }

    std::uint64_t leftover = capacity_bytes - served_after(lo);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        grants[i] = std::min<std::uint64_t>(entries[i].demand_bytes,
                                            std::uint64_t(entries[i].quantum) * lo);
    }
    for (std::size_t i = 0; i < entries.size() && leftover > 0; ++i) {
        const std::uint64_t step =
            std::min<std::uint64_t>({std::uint64_t(entries[i].quantum),
                                     entries[i].demand_bytes - grants[i], leftover});
        grants[i] += step;
        leftover -= step;
    }
    return grants;
}

// Computes the BWMAP for one downstream frame and debits granted demand.
//
// Every registered Alloc-ID receives a minimum-size dbru_requested grant on
// polling frames (frame_sn multiple of the service interval) so reports can
// always be piggy-backed; data grants top these up per the WRR shares.
inline Bwmap compute_bwmap(DemandLedger& ledger, const DbaConfig& cfg, const AllocTable& table,
                           std::uint32_t frame_sn) {
    cfg.validate();

    const std::uint32_t capacity = cfg.frame_capacity_bytes;
    const std::uint32_t reserve_len = cfg.reserve_length_bytes();
    const bool polling = (frame_sn % cfg.service_interval_frames) == 0;
    const std::uint32_t base = polling ? kMinGrantBytes : 0;

    std::uint64_t budget = capacity - reserve_len;
    const std::uint64_t mandatory = std::uint64_t(base) * table.size();
    if (mandatory > budget) {
        throw Error(Errc::CapacityExhausted,
                    "polling grants need " + std::to_string(mandatory) + " bytes, frame has " +
                        std::to_string(budget) + " outside the reserve");
    }
    budget -= mandatory;

    // Tier order: low-latency demand goes through the standard scheduler only
    // when there is no reserved window to serve it.
    std::vector<TcontClass> tiers;
    if (reserve_len == 0) tiers.push_back(TcontClass::LowLatency);
    tiers.push_back(TcontClass::Assured);
    tiers.push_back(TcontClass::BestEffort);

    std::map<AllocId, std::uint64_t> data_grant;
    for (TcontClass tier : tiers) {
        std::vector<WrrEntry> entries;
        for (const auto& [id, info] : table.entries()) {
            if (info.tcont != tier) continue;
            const std::uint64_t d = ledger.demand(id);
            const std::uint64_t residual = d > base ? d - base : 0;
            if (residual == 0) continue;
            // Tiers hold a single class, so weight-normalized quanta reduce
            // to one byte per round.
            entries.push_back(WrrEntry{id, residual, 1});
        }
        const auto grants = wrr_allocate(entries, budget);
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (grants[i] > 0) data_grant[entries[i].id] = grants[i];
            budget -= grants[i];
        }
    }

    Bwmap map;
    map.frame_sn = frame_sn;
    map.reserved_window = ReservedWindow{0, reserve_len};

    std::uint32_t cursor = reserve_len;
    for (const auto& [id, info] : table.entries()) {
        std::uint64_t size = base;
        if (auto it = data_grant.find(id); it != data_grant.end()) size += it->second;
        if (size == 0) continue;
        if (size < kMinGrantBytes) size = kMinGrantBytes;
        if (std::uint64_t(cursor) + size > capacity) {
            // Minimum-grant rounding can overrun the budget; undersized tail
            // grants are dropped and their demand stays in the ledger.
            break;
        }
        map.allocations.push_back(Allocation{id, cursor, std::uint32_t(size), true,
                                             Origin::StandardDba});
        ledger.debit(id, size);
        cursor += std::uint32_t(size);
    }

    check_bwmap(map, capacity);
    return map;
}

} // namespace vpon
