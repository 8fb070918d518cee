#pragma once

// Bit-exact binary serialization of BWMAPs and upstream bursts.
//
// All integers are big-endian, fixed width.  Layouts:
//   Bwmap  = header {frame_sn:4, reserved_offset:4, reserved_length:4, alloc_count:2}
//            then per allocation {alloc_id:2, flags:1, start_time:4, grant_size:4,
//            reserved:4} -- 15 bytes per record, reserved word must be zero
//            flags: bit0 = dbru_requested, bits1-2 = origin, bits3-7 reserved zero
//   Burst  = header {frame_sn:4, onu_id:2, payload_bytes:4, dbru_count:2}
//            then per DBRu {alloc_id:2, occupancy:4, flags:1}
//            flags: bit0 = low_latency, bits1-7 reserved zero

#include "vpon/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace vpon {

inline constexpr std::size_t kBwmapHeaderBytes = 14;
inline constexpr std::size_t kBwmapAllocBytes = 15;
inline constexpr std::size_t kBurstHeaderBytes = 12;
inline constexpr std::size_t kBurstDbruBytes = 7;

using Bytes = std::vector<std::uint8_t>;

namespace detail {

inline void put_u16(Bytes& out, std::uint16_t v) {
    out.push_back(std::uint8_t(v >> 8));
    out.push_back(std::uint8_t(v));
}

inline void put_u32(Bytes& out, std::uint32_t v) {
    out.push_back(std::uint8_t(v >> 24));
    out.push_back(std::uint8_t(v >> 16));
    out.push_back(std::uint8_t(v >> 8));
    out.push_back(std::uint8_t(v));
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : m_in(in) {}

    std::uint16_t u16() {
        need(2);
        std::uint16_t v = std::uint16_t(m_in[m_pos] << 8) | m_in[m_pos + 1];
        m_pos += 2;
        return v;
    }

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = (std::uint32_t(m_in[m_pos]) << 24) | (std::uint32_t(m_in[m_pos + 1]) << 16) |
                          (std::uint32_t(m_in[m_pos + 2]) << 8) | m_in[m_pos + 3];
        m_pos += 4;
        return v;
    }

    std::uint8_t u8() {
        need(1);
        return m_in[m_pos++];
    }

    std::size_t remaining() const noexcept { return m_in.size() - m_pos; }

private:
    void need(std::size_t n) const {
        if (m_in.size() - m_pos < n) {
            throw Error(Errc::Truncated, "need " + std::to_string(n) + " bytes, have " +
                                             std::to_string(m_in.size() - m_pos));
        }
    }

    std::span<const std::uint8_t> m_in;
    std::size_t m_pos = 0;
};

} // namespace detail

inline Bytes encode_bwmap(const Bwmap& map,
                          std::uint32_t frame_capacity_bytes = kDefaultFrameCapacityBytes) {
    check_bwmap(map, frame_capacity_bytes);
    Bytes out;
    out.reserve(kBwmapHeaderBytes + kBwmapAllocBytes * map.allocations.size());
    detail::put_u32(out, map.frame_sn);
    detail::put_u32(out, map.reserved_window.offset_bytes);
    detail::put_u32(out, map.reserved_window.length_bytes);
    detail::put_u16(out, std::uint16_t(map.allocations.size()));
    for (const auto& a : map.allocations) {
        detail::put_u16(out, a.alloc_id.value);
        const std::uint8_t flags =
            std::uint8_t((a.dbru_requested ? 1 : 0) | (std::uint8_t(a.origin) << 1));
        out.push_back(flags);
        detail::put_u32(out, a.start_time_bytes);
        detail::put_u32(out, a.grant_size_bytes);
        detail::put_u32(out, 0); // reserved
    }
    return out;
}

inline Bwmap decode_bwmap(std::span<const std::uint8_t> bytes,
                          std::uint32_t frame_capacity_bytes = kDefaultFrameCapacityBytes) {
    detail::Reader r(bytes);
    Bwmap map;
    map.frame_sn = r.u32();
    map.reserved_window.offset_bytes = r.u32();
    map.reserved_window.length_bytes = r.u32();
    const std::uint16_t count = r.u16();
    if (r.remaining() < std::size_t(count) * kBwmapAllocBytes) {
        throw Error(Errc::Truncated, "alloc_count " + std::to_string(count) +
                                         " needs more bytes than provided");
    }
    if (r.remaining() > std::size_t(count) * kBwmapAllocBytes) {
        throw Error(Errc::LengthMismatch, "trailing bytes after " + std::to_string(count) +
                                              " allocation records");
    }
    map.allocations.reserve(count);
    for (std::uint16_t i = 0; i < count; ++i) {
        Allocation a;
        a.alloc_id.value = r.u16();
        const std::uint8_t flags = r.u8();
        if (flags & ~0x07) {
            throw Error(Errc::BadFlags, "allocation flags 0x" + std::to_string(flags));
        }
        a.dbru_requested = (flags & 0x01) != 0;
        a.origin = Origin((flags >> 1) & 0x03);
        a.start_time_bytes = r.u32();
        a.grant_size_bytes = r.u32();
        if (r.u32() != 0) {
            throw Error(Errc::BadFlags, "allocation reserved word not zero");
        }
        map.allocations.push_back(a);
    }
    check_bwmap(map, frame_capacity_bytes);
    return map;
}

inline Bytes encode_burst(const UpstreamBurst& burst) {
    Bytes out;
    out.reserve(kBurstHeaderBytes + kBurstDbruBytes * burst.dbrus.size());
    detail::put_u32(out, burst.frame_sn);
    detail::put_u16(out, burst.onu_id);
    detail::put_u32(out, burst.payload_bytes);
    detail::put_u16(out, std::uint16_t(burst.dbrus.size()));
    for (const auto& d : burst.dbrus) {
        detail::put_u16(out, d.alloc_id.value);
        detail::put_u32(out, d.occupancy_bytes);
        out.push_back(d.low_latency ? 0x01 : 0x00);
    }
    return out;
}

inline UpstreamBurst decode_burst(std::span<const std::uint8_t> bytes) {
    detail::Reader r(bytes);
    UpstreamBurst burst;
    burst.frame_sn = r.u32();
    burst.onu_id = r.u16();
    burst.payload_bytes = r.u32();
    const std::uint16_t count = r.u16();
    if (r.remaining() < std::size_t(count) * kBurstDbruBytes) {
        throw Error(Errc::Truncated, "dbru_count " + std::to_string(count) +
                                         " needs more bytes than provided");
    }
    if (r.remaining() > std::size_t(count) * kBurstDbruBytes) {
        throw Error(Errc::LengthMismatch, "trailing bytes after " + std::to_string(count) +
                                              " DBRu records");
    }
    burst.dbrus.reserve(count);
    for (std::uint16_t i = 0; i < count; ++i) {
        Dbru d;
        d.alloc_id.value = r.u16();
        if (!d.alloc_id.valid()) {
            throw Error(Errc::InvariantViolation,
                        "dbru alloc_id " + std::to_string(d.alloc_id.value) + " out of range");
        }
        d.occupancy_bytes = r.u32();
        const std::uint8_t flags = r.u8();
        if (flags & ~0x01) {
            throw Error(Errc::BadFlags, "dbru flags 0x" + std::to_string(flags));
        }
        d.low_latency = (flags & 0x01) != 0;
        burst.dbrus.push_back(d);
    }
    return burst;
}

} // namespace vpon
