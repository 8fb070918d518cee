#pragma once

// Frame-synchronous upstream simulator.
//
// The engine advances in 125 us frames.  Each frame it computes the standard
// BWMAP (with the fast path rewriting it in FastIntercept mode), transmits
// against the grants, and piggy-backs DBRus on the resulting bursts.  The
// frame ledger is the scheduler of record: reports from burst n reach the
// fast path in time for BWMAP n+1 and the CPU DBA in time for BWMAP n+2.
//
// Per-packet latency samples compose the analytic stage model: fixed stages
// come from LatencyParams, stochastic stages (a, d, f, i) are drawn uniform
// on [0, 2*mean] (or pinned to the mean), and whole frames spent waiting
// beyond a packet's first serviceable BWMAP are charged to queue_wait.
// Breakdowns therefore sum exactly to transmit - arrival.

#include "vpon/dba_standard.hpp"
#include "vpon/fast_intercept.hpp"
#include "vpon/latency_model.hpp"
#include "vpon/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace vpon {

// Frames between an upstream report and the first BWMAP that can reflect it
// through the CPU DBA (fibre + host transfer + collection window + compute
// span two frame boundaries at the calibrated timings).  The fast path needs
// only the next frame.
inline constexpr std::uint32_t kStdPipelineFrames = 2;
inline constexpr std::uint32_t kFastPipelineFrames = 1;

struct TrafficSpec {
    enum class Kind : std::uint8_t { Poisson, Periodic };

    AllocId alloc_id;
    Kind kind = Kind::Poisson;
    double rate_pps = 0.0;    // Poisson arrival rate
    double period_us = 0.0;   // Periodic inter-arrival
    double phase_us = 0.0;    // Periodic first arrival
    std::uint32_t packet_bytes = 0;
    std::uint64_t max_packets = 0; // 0 = unbounded

    void validate() const {
        if (packet_bytes == 0) {
            throw Error(Errc::ConfigError, "traffic packet_bytes must be positive");
        }
        if (kind == Kind::Poisson && !(rate_pps > 0.0)) {
            throw Error(Errc::ConfigError, "poisson traffic needs rate_pps > 0");
        }
        if (kind == Kind::Periodic && !(period_us > 0.0)) {
            throw Error(Errc::ConfigError, "periodic traffic needs period_us > 0");
        }
        if (phase_us < 0.0) {
            throw Error(Errc::ConfigError, "phase_us must be non-negative");
        }
    }
};

struct OnuAlloc {
    AllocId id;
    TcontClass tcont = TcontClass::BestEffort;
};

struct OnuSpec {
    std::uint16_t onu_id = 0;
    std::vector<OnuAlloc> allocs;
};

struct Scenario {
    std::uint64_t seed = 1;
    std::uint32_t duration_frames = 100;
    Mode mode = Mode::FastIntercept;
    bool pin_variance = false;
    bool record_trace = false;
    std::vector<OnuSpec> onus;
    std::vector<TrafficSpec> traffic;
    DbaConfig dba;
    InterceptPolicy policy;
    std::size_t store_capacity = kDefaultStoreCapacity;
    LatencyParams params;
    std::uint64_t queue_depth_bytes = 0; // 0 = unbounded

    AllocTable alloc_table() const {
        AllocTable table;
        for (const auto& onu : onus) {
            for (const auto& a : onu.allocs) {
                table.add(a.id, onu.onu_id, a.tcont);
            }
        }
        return table;
    }

    void validate() const {
        if (duration_frames < 10) {
            throw Error(Errc::ConfigError, "duration_frames must be >= 10");
        }
        if (onus.empty()) {
            throw Error(Errc::ConfigError, "scenario declares no ONUs");
        }
        for (const auto& onu : onus) {
            if (onu.allocs.empty()) {
                throw Error(Errc::ConfigError,
                            "onu " + std::to_string(onu.onu_id) + " declares no alloc_ids");
            }
        }
        const AllocTable table = alloc_table();
        for (const auto& t : traffic) {
            t.validate();
            if (!table.contains(t.alloc_id)) {
                throw Error(Errc::ConfigError, "traffic references undeclared alloc_id " +
                                                   std::to_string(t.alloc_id.value));
            }
        }
        if (store_capacity == 0) {
            throw Error(Errc::ConfigError, "store_capacity must be >= 1");
        }
        dba.validate();
        policy.validate();
        params.validate();
    }
};

struct StageBreakdown {
    double a = 0, b = 0, c = 0, d = 0, e = 0, f = 0, f2 = 0, g = 0, h = 0, i = 0;
    double queue_wait = 0;

    double sum() const noexcept { return a + b + c + d + e + f + f2 + g + h + i + queue_wait; }
};

inline const char* const kStageColumns[] = {"a", "b", "c",  "d", "e",         "f",
                                            "f2", "g", "h", "i", "queue_wait"};

inline double stage_value(const StageBreakdown& s, std::size_t idx) noexcept {
    const double v[] = {s.a, s.b, s.c, s.d, s.e, s.f, s.f2, s.g, s.h, s.i, s.queue_wait};
    return v[idx];
}

struct Sample {
    AllocId alloc_id;
    TcontClass tcont = TcontClass::BestEffort;
    double arrival_us = 0;
    double transmit_us = 0;
    Origin served_by = Origin::StandardDba;
    StageBreakdown stages;

    double latency_us() const noexcept { return transmit_us - arrival_us; }
};

struct ClassSummary {
    TcontClass tcont = TcontClass::BestEffort;
    std::uint64_t count = 0;
    double mean_us = 0;
    double p50_us = 0;
    double p99_us = 0;
};

struct FrameTrace {
    std::uint32_t frame_sn = 0;
    Bwmap map;
    std::vector<Dbru> dbrus; // reports sent upstream during this frame
};

struct RunResult {
    std::vector<Sample> samples;
    std::vector<ClassSummary> summary;
    std::uint64_t dropped_packets = 0;  // finite ONU queue overflow
    std::uint64_t store_drops = 0;      // register store evictions
    std::uint64_t unserved_packets = 0; // still queued when the drain cap hit
    std::uint64_t frames_run = 0;
    std::vector<FrameTrace> trace;

    const ClassSummary* summary_for(TcontClass c) const noexcept {
        for (const auto& s : summary) {
            if (s.tcont == c) return &s;
        }
        return nullptr;
    }
};

namespace detail {

struct QueuedPacket {
    double arrival_us = 0;
    double a_us = 0;
    std::uint32_t remaining_bytes = 0;
};

// Per-Alloc-ID queue bucketed by report frame: grants consume buckets in
// report order, FIFO within a bucket.
struct AllocQueue {
    std::map<std::uint32_t, std::deque<QueuedPacket>> by_report_frame;
    std::uint64_t queued_bytes = 0;

    std::uint64_t reported_bytes(std::uint32_t frame_sn) const {
        std::uint64_t sum = 0;
        for (const auto& [rf, bucket] : by_report_frame) {
            if (rf > frame_sn) break;
            for (const auto& p : bucket) sum += p.remaining_bytes;
        }
        return sum;
    }
};

inline double percentile(std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const std::size_t rank = std::size_t(std::ceil(q * double(sorted.size())));
    return sorted[std::min(sorted.size() - 1, rank > 0 ? rank - 1 : 0)];
}

} // namespace detail

class SimEngine {
public:
    explicit SimEngine(const Scenario& scenario)
        : m_sc(scenario), m_table(scenario.alloc_table()), m_rng(scenario.seed),
          m_store(scenario.store_capacity) {
        m_sc.validate();
        // The reservation is a dual-DBA mechanism; baseline modes run the
        // plain standard DBA over the whole frame.
        m_cfg = m_sc.dba;
        if (m_sc.mode != Mode::FastIntercept) m_cfg.reserved_fraction = 0.0;
        m_fast_path_active = m_sc.mode == Mode::FastIntercept && m_cfg.reserve_length_bytes() > 0;
    }

    RunResult run() {
        const double T = m_sc.params.frame_period_us;
        std::uint32_t n = 0;
        for (;; ++n) {
            if (n >= m_sc.duration_frames && m_queued_packets == 0) break;
            if (n >= m_sc.duration_frames + kDrainCapFrames) {
                m_result.unserved_packets = m_queued_packets;
                break;
            }

            if (n < m_sc.duration_frames) generate_arrivals(n, T);

            if (n >= kStdPipelineFrames) {
                if (auto it = m_pending_reports.find(n - kStdPipelineFrames);
                    it != m_pending_reports.end()) {
                    for (const Dbru& d : it->second) m_ledger.ingest(d, it->first, m_table);
                    m_pending_reports.erase(it);
                }
            }

            Bwmap map = compute_bwmap(m_ledger, m_cfg, m_table, n);
            if (m_sc.mode == Mode::FastIntercept) {
                map = enf_process_downstream(m_store, map, m_sc.policy, m_table,
                                             m_cfg.frame_capacity_bytes);
            }

            transmit(map, n);
            send_bursts(map, n);
        }

        m_result.frames_run = n;
        m_result.store_drops = m_store.dropped();
        summarize();
        return std::move(m_result);
    }

private:
    static constexpr std::uint32_t kDrainCapFrames = 65536;

    double draw_stage(double mean_us) {
        if (m_sc.pin_variance || mean_us == 0.0) return mean_us;
        return std::uniform_real_distribution<double>(0.0, 2.0 * mean_us)(m_rng);
    }

    void generate_arrivals(std::uint32_t n, double T) {
        const double start = double(n) * T;
        struct Pending {
            double t;
            std::size_t stream;
            std::uint32_t bytes;
        };
        std::vector<Pending> arrivals;
        for (std::size_t s = 0; s < m_sc.traffic.size(); ++s) {
            const TrafficSpec& ts = m_sc.traffic[s];
            auto& st = stream_state(s, ts);
            if (ts.kind == TrafficSpec::Kind::Poisson) {
                const double mean = ts.rate_pps * T * 1e-6;
                const std::uint32_t count = std::poisson_distribution<std::uint32_t>(mean)(m_rng);
                std::vector<double> offsets(count);
                for (auto& o : offsets) {
                    o = std::uniform_real_distribution<double>(0.0, T)(m_rng);
                }
                std::sort(offsets.begin(), offsets.end());
                for (double o : offsets) {
                    if (ts.max_packets && st.emitted >= ts.max_packets) break;
                    arrivals.push_back({start + o, s, ts.packet_bytes});
                    ++st.emitted;
                }
            } else {
                while (st.next_us < start + T && (!ts.max_packets || st.emitted < ts.max_packets)) {
                    if (st.next_us >= start) {
                        arrivals.push_back({st.next_us, s, ts.packet_bytes});
                        ++st.emitted;
                    }
                    st.next_us += ts.period_us;
                }
            }
        }
        std::stable_sort(arrivals.begin(), arrivals.end(), [](const Pending& x, const Pending& y) {
            if (x.t != y.t) return x.t < y.t;
            return x.stream < y.stream;
        });

        for (const Pending& p : arrivals) {
            const AllocId id = m_sc.traffic[p.stream].alloc_id;
            auto& q = m_queues[id];
            if (m_sc.queue_depth_bytes && q.queued_bytes + p.bytes > m_sc.queue_depth_bytes) {
                ++m_result.dropped_packets;
                continue;
            }
            const double a = draw_stage(m_sc.params.piggyback_wait_mean_us);
            const auto rf = std::uint32_t((p.t + a) / T);
            q.by_report_frame[rf].push_back(detail::QueuedPacket{p.t, a, p.bytes});
            q.queued_bytes += p.bytes;
            ++m_queued_packets;
        }
    }

    // LL polling grants carry only the report while the reserve serves the
    // data, keeping standard grants off the fast queue.
    bool report_only_grant(const Allocation& alloc) const {
        return m_fast_path_active && alloc.origin == Origin::StandardDba &&
               m_table.class_of(alloc.alloc_id) == TcontClass::LowLatency;
    }

    void transmit(const Bwmap& map, std::uint32_t n) {
        m_tx_by_onu.clear();
        for (const Allocation& alloc : map.allocations) {
            if (report_only_grant(alloc)) continue;
            auto qit = m_queues.find(alloc.alloc_id);
            if (qit == m_queues.end()) continue;

            const bool fast_grant = alloc.origin != Origin::StandardDba;
            const std::uint32_t lead = fast_grant ? kFastPipelineFrames : kStdPipelineFrames;
            if (n < lead) continue;
            const std::uint32_t max_rf = n - lead;

            std::uint64_t granted = alloc.grant_size_bytes;
            auto& q = qit->second;
            auto bucket = q.by_report_frame.begin();
            while (granted > 0 && bucket != q.by_report_frame.end() && bucket->first <= max_rf) {
                auto& fifo = bucket->second;
                while (granted > 0 && !fifo.empty()) {
                    auto& pkt = fifo.front();
                    const std::uint32_t take =
                        std::uint32_t(std::min<std::uint64_t>(pkt.remaining_bytes, granted));
                    pkt.remaining_bytes -= take;
                    granted -= take;
                    q.queued_bytes -= take;
                    m_tx_by_onu[m_table.info(alloc.alloc_id).onu_id] += take;
                    if (pkt.remaining_bytes == 0) {
                        finalize(alloc.alloc_id, pkt, bucket->first, alloc.origin, n);
                        fifo.pop_front();
                        --m_queued_packets;
                    }
                }
                if (fifo.empty()) {
                    bucket = q.by_report_frame.erase(bucket);
                } else {
                    ++bucket;
                }
            }
        }
    }

    void finalize(AllocId id, const detail::QueuedPacket& pkt, std::uint32_t report_frame,
                  Origin origin, std::uint32_t n) {
        const LatencyParams& p = m_sc.params;
        Sample s;
        s.alloc_id = id;
        s.tcont = m_table.class_of(id);
        s.arrival_us = pkt.arrival_us;
        s.served_by = origin;

        StageBreakdown& br = s.stages;
        br.a = pkt.a_us;
        br.b = p.fiber_one_way_us;
        const bool fast_grant = origin != Origin::StandardDba;
        std::uint32_t first_frame;
        if (fast_grant) {
            first_frame = report_frame + kFastPipelineFrames;
            br.f = draw_stage(p.bwmap_wait_mean_us);
            br.f2 = p.fast_excess_us() + p.bwmap_modify_us;
        } else {
            first_frame = report_frame + kStdPipelineFrames;
            if (m_sc.mode != Mode::ClassicalOem) {
                br.c = p.nic_cpu_one_way_us;
                br.g = p.nic_cpu_one_way_us;
            }
            br.d = draw_stage(p.dba_window_mean_us);
            br.e = p.dba_compute_us;
            br.f = draw_stage(p.bwmap_wait_mean_us);
        }
        br.h = p.fiber_one_way_us;
        br.i = draw_stage(p.grant_offset_mean_us);
        br.queue_wait =
            double(std::int64_t(n) - std::int64_t(first_frame)) * p.frame_period_us;

        s.transmit_us = s.arrival_us + br.sum();
        m_result.samples.push_back(s);
    }

    void send_bursts(const Bwmap& map, std::uint32_t n) {
        std::vector<Dbru> frame_dbrus;
        for (const auto& onu : m_sc.onus) {
            UpstreamBurst burst;
            burst.frame_sn = n;
            burst.onu_id = onu.onu_id;
            if (auto it = m_tx_by_onu.find(onu.onu_id); it != m_tx_by_onu.end()) {
                burst.payload_bytes = std::uint32_t(std::min<std::uint64_t>(it->second, 0xffffffffu));
            }
            for (const auto& oa : onu.allocs) {
                bool requested = false;
                for (const Allocation& a : map.allocations) {
                    if (a.alloc_id == oa.id && a.dbru_requested) {
                        requested = true;
                        break;
                    }
                }
                if (!requested) continue;
                std::uint64_t occ = 0;
                if (auto qit = m_queues.find(oa.id); qit != m_queues.end()) {
                    occ = qit->second.reported_bytes(n);
                }
                burst.dbrus.push_back(Dbru{oa.id,
                                           std::uint32_t(std::min<std::uint64_t>(occ, 0xffffffffu)),
                                           oa.tcont == TcontClass::LowLatency});
            }
            if (burst.dbrus.empty() && burst.payload_bytes == 0) continue;
            if (m_sc.mode == Mode::FastIntercept) m_store.intercept(burst);
            frame_dbrus.insert(frame_dbrus.end(), burst.dbrus.begin(), burst.dbrus.end());
        }
        if (m_sc.record_trace) {
            m_result.trace.push_back(FrameTrace{n, map, frame_dbrus});
        }
        if (!frame_dbrus.empty()) {
            m_pending_reports.emplace(n, std::move(frame_dbrus));
        }
    }

    void summarize() {
        for (TcontClass c :
             {TcontClass::LowLatency, TcontClass::Assured, TcontClass::BestEffort}) {
            std::vector<double> lat;
            for (const Sample& s : m_result.samples) {
                if (s.tcont == c) lat.push_back(s.latency_us());
            }
            if (lat.empty()) continue;
            std::sort(lat.begin(), lat.end());
            ClassSummary cs;
            cs.tcont = c;
            cs.count = lat.size();
            double sum = 0;
            for (double v : lat) sum += v;
            cs.mean_us = sum / double(lat.size());
            cs.p50_us = detail::percentile(lat, 0.50);
            cs.p99_us = detail::percentile(lat, 0.99);
            m_result.summary.push_back(cs);
        }
    }

    struct StreamState {
        bool init = false;
        double next_us = 0;
        std::uint64_t emitted = 0;
    };

    StreamState& stream_state(std::size_t idx, const TrafficSpec& ts) {
        if (m_streams.size() <= idx) m_streams.resize(idx + 1);
        auto& st = m_streams[idx];
        if (!st.init) {
            st.init = true;
            st.next_us = ts.phase_us;
        }
        return st;
    }

    Scenario m_sc;
    AllocTable m_table;
    std::mt19937_64 m_rng;
    DbaConfig m_cfg;
    bool m_fast_path_active = false;
    DemandLedger m_ledger;
    RegisterStore m_store;
    std::map<AllocId, detail::AllocQueue> m_queues;
    std::map<std::uint32_t, std::vector<Dbru>> m_pending_reports;
    std::map<std::uint16_t, std::uint64_t> m_tx_by_onu;
    std::vector<StreamState> m_streams;
    std::uint64_t m_queued_packets = 0;
    RunResult m_result;
};

inline RunResult run(const Scenario& scenario) { return SimEngine(scenario).run(); }

struct SweepOutcome {
    std::optional<RunResult> result;
    std::string error; // empty on success
};

// Runs each scenario independently; per-scenario config failures are
// collected while the rest still run.
inline std::vector<SweepOutcome> sweep(const std::vector<Scenario>& scenarios) {
    std::vector<SweepOutcome> out;
    out.reserve(scenarios.size());
    for (const auto& sc : scenarios) {
        SweepOutcome item;
        try {
            item.result = run(sc);
        } catch (const Error& e) {
            item.error = e.what();
        }
        out.push_back(std::move(item));
    }
    return out;
}

} // namespace vpon
