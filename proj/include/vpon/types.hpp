#pragma once

#include "vpon/errors.hpp"

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace vpon {

// Upstream frame capacity at the XGS-PON symmetric line rate:
// 9.95328 Gb/s * 125 us / 8 bit.  Configurable per scenario.
inline constexpr std::uint32_t kDefaultFrameCapacityBytes = 155520;

// Smallest grant an allocation may carry; leaves room for a piggy-backed DBRu.
inline constexpr std::uint32_t kMinGrantBytes = 8;

// 14-bit Alloc-ID naming one T-CONT queue; upper two bits are reserved.
struct AllocId {
    std::uint16_t value = 0;

    static constexpr std::uint16_t kMax = 0x3fff;

    constexpr bool valid() const noexcept { return value <= kMax; }
    auto operator<=>(const AllocId&) const = default;
};

enum class TcontClass : std::uint8_t {
    LowLatency,
    Assured,
    BestEffort,
};

inline const char* tcont_class_name(TcontClass c) noexcept {
    switch (c) {
    case TcontClass::LowLatency: return "low_latency";
    case TcontClass::Assured: return "assured";
    case TcontClass::BestEffort: return "best_effort";
    }
    return "?";
}

// Buffer-occupancy report for one Alloc-ID, piggy-backed on an upstream burst.
struct Dbru {
    AllocId alloc_id;
    std::uint32_t occupancy_bytes = 0;
    bool low_latency = false;

    bool operator==(const Dbru&) const = default;
};

enum class Origin : std::uint8_t {
    StandardDba = 0,
    FastIntercept = 1,
    SpareFill = 2,
    Preempting = 3,
};

inline const char* origin_name(Origin o) noexcept {
    switch (o) {
    case Origin::StandardDba: return "standard_dba";
    case Origin::FastIntercept: return "fast_intercept";
    case Origin::SpareFill: return "spare_fill";
    case Origin::Preempting: return "preempting";
    }
    return "?";
}

// One upstream grant: a byte window [start_time, start_time + grant_size)
// within the upstream frame, assigned to one Alloc-ID.
struct Allocation {
    AllocId alloc_id;
    std::uint32_t start_time_bytes = 0;
    std::uint32_t grant_size_bytes = 0;
    bool dbru_requested = false;
    Origin origin = Origin::StandardDba;

    bool operator==(const Allocation&) const = default;

    constexpr std::uint32_t end_bytes() const noexcept {
        return start_time_bytes + grant_size_bytes;
    }
};

// Region of the frame the standard DBA leaves unallocated for the fast path.
struct ReservedWindow {
    std::uint32_t offset_bytes = 0;
    std::uint32_t length_bytes = 0;

    bool operator==(const ReservedWindow&) const = default;

    constexpr std::uint32_t end_bytes() const noexcept { return offset_bytes + length_bytes; }
    constexpr bool contains(std::uint32_t start, std::uint32_t size) const noexcept {
        return start >= offset_bytes && start + size <= end_bytes();
    }
};

// Per-downstream-frame list of upstream grants.
struct Bwmap {
    std::uint32_t frame_sn = 0;
    ReservedWindow reserved_window;
    std::vector<Allocation> allocations;

    bool operator==(const Bwmap&) const = default;

    std::uint64_t total_grant_bytes() const noexcept {
        std::uint64_t sum = 0;
        for (const auto& a : allocations) sum += a.grant_size_bytes;
        return sum;
    }
};

// Validates every Bwmap invariant against the given frame capacity.
// Throws Error{InvariantViolation} naming the first violated condition.
inline void check_bwmap(const Bwmap& map, std::uint32_t frame_capacity_bytes) {
    const auto fail = [&](const std::string& why) {
        throw Error(Errc::InvariantViolation, "bwmap frame_sn=" + std::to_string(map.frame_sn) + ": " + why);
    };
    if (std::uint64_t(map.reserved_window.offset_bytes) + map.reserved_window.length_bytes >
        frame_capacity_bytes) {
        fail("reserved window exceeds frame capacity");
    }
    std::uint64_t sum = 0;
    std::uint64_t prev_end = 0;
    bool first = true;
    for (const auto& a : map.allocations) {
        if (!a.alloc_id.valid()) fail("alloc_id out of 14-bit range");
        if (a.grant_size_bytes < kMinGrantBytes) fail("grant below minimum size");
        const std::uint64_t end = std::uint64_t(a.start_time_bytes) + a.grant_size_bytes;
        if (end > frame_capacity_bytes) fail("allocation extends past frame capacity");
        if (!first && a.start_time_bytes < prev_end) {
            fail("allocations overlap or are unsorted");
        }
        if (a.origin == Origin::FastIntercept || a.origin == Origin::SpareFill) {
            if (!map.reserved_window.contains(a.start_time_bytes, a.grant_size_bytes)) {
                fail("fast-path allocation outside reserved window");
            }
        }
        sum += a.grant_size_bytes;
        prev_end = end;
        first = false;
    }
    if (sum > frame_capacity_bytes) fail("grant bytes exceed frame capacity");
}

// Upstream transmission of one ONU within one frame: opaque payload byte
// count plus the DBRus piggy-backed on it.
struct UpstreamBurst {
    std::uint32_t frame_sn = 0;
    std::uint16_t onu_id = 0;
    std::vector<Dbru> dbrus;
    std::uint32_t payload_bytes = 0;

    bool operator==(const UpstreamBurst&) const = default;
};

struct AllocInfo {
    std::uint16_t onu_id = 0;
    TcontClass tcont = TcontClass::BestEffort;
};

// Scenario-wide registration of Alloc-IDs: which ONU owns each and its
// traffic class.  Fixed for a scenario's duration.
class AllocTable {
public:
    void add(AllocId id, std::uint16_t onu_id, TcontClass tcont) {
        if (!id.valid()) {
            throw Error(Errc::InvariantViolation,
                        "alloc_id " + std::to_string(id.value) + " out of range");
        }
        if (m_entries.contains(id)) {
            throw Error(Errc::ConfigError,
                        "alloc_id " + std::to_string(id.value) + " registered twice");
        }
        m_entries.emplace(id, AllocInfo{onu_id, tcont});
    }

    bool contains(AllocId id) const noexcept { return m_entries.contains(id); }

    const AllocInfo& info(AllocId id) const {
        auto it = m_entries.find(id);
        if (it == m_entries.end()) {
            throw Error(Errc::UnknownAllocId, "alloc_id " + std::to_string(id.value));
        }
        return it->second;
    }

    TcontClass class_of(AllocId id) const { return info(id).tcont; }
    bool low_latency(AllocId id) const { return class_of(id) == TcontClass::LowLatency; }

    const std::map<AllocId, AllocInfo>& entries() const noexcept { return m_entries; }
    std::size_t size() const noexcept { return m_entries.size(); }
    bool empty() const noexcept { return m_entries.empty(); }

private:
    std::map<AllocId, AllocInfo> m_entries;
};

} // namespace vpon
