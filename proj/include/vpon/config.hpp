#pragma once

// Scenario configuration files: a strict JSON schema mirroring Scenario.
// Unknown keys are rejected with their full path; see docs/config.md for
// every key and default.

#include "vpon/sim_engine.hpp"

#include <json.hpp>

#include <fstream>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace vpon {

namespace cfgdetail {

using nlohmann::json;

inline void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) {
        throw Error(Errc::ConfigError, where + ": expected an object");
    }
}

inline void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                       const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed) {
            if (it.key() == k) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw Error(Errc::ConfigError, where + ": unknown key '" + it.key() + "'");
        }
    }
}

template <typename T>
T get_as(const json& obj, const char* key, T fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(Errc::ConfigError, where + "." + key + ": " + e.what());
    }
}

// nlohmann narrows integers silently; config values get explicit bounds.
template <typename T>
T get_uint(const json& obj, const char* key, T fallback, const std::string& where,
           std::uint64_t max_value = std::numeric_limits<T>::max()) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    const bool negative = v.is_number_integer() && v.get<std::int64_t>() < 0;
    if (negative || (!v.is_number_integer() && !v.is_number_unsigned())) {
        throw Error(Errc::ConfigError, where + "." + key + ": expected a non-negative integer");
    }
    const std::uint64_t val = v.get<std::uint64_t>();
    if (val > max_value) {
        throw Error(Errc::ConfigError, where + "." + key + ": " + std::to_string(val) +
                                           " exceeds the maximum " + std::to_string(max_value));
    }
    return T(val);
}

inline TcontClass parse_class(const std::string& s, const std::string& where) {
    if (s == "low_latency") return TcontClass::LowLatency;
    if (s == "assured") return TcontClass::Assured;
    if (s == "best_effort") return TcontClass::BestEffort;
    throw Error(Errc::ConfigError,
                where + ": unknown class '" + s + "' (low_latency, assured, best_effort)");
}

inline Mode parse_mode(const std::string& s, const std::string& where) {
    if (s == "classical_oem") return Mode::ClassicalOem;
    if (s == "virtual_pon") return Mode::VirtualPon;
    if (s == "fast_intercept") return Mode::FastIntercept;
    throw Error(Errc::ConfigError,
                where + ": unknown mode '" + s +
                    "' (classical_oem, virtual_pon, fast_intercept)");
}

inline LatencyParams parse_params(const json& j, LatencyParams base, const std::string& where) {
    require_object(j, where);
    check_keys(j,
               {"frame_period_us", "piggyback_wait_mean_us", "fiber_one_way_us",
                "nic_cpu_one_way_us", "dba_window_mean_us", "dba_compute_us",
                "bwmap_wait_mean_us", "fast_dba_compute_us", "fast_head_start_us",
                "bwmap_modify_us", "grant_offset_mean_us"},
               where);
    base.frame_period_us = get_as<double>(j, "frame_period_us", base.frame_period_us, where);
    base.piggyback_wait_mean_us =
        get_as<double>(j, "piggyback_wait_mean_us", base.piggyback_wait_mean_us, where);
    base.fiber_one_way_us = get_as<double>(j, "fiber_one_way_us", base.fiber_one_way_us, where);
    base.nic_cpu_one_way_us =
        get_as<double>(j, "nic_cpu_one_way_us", base.nic_cpu_one_way_us, where);
    base.dba_window_mean_us =
        get_as<double>(j, "dba_window_mean_us", base.dba_window_mean_us, where);
    base.dba_compute_us = get_as<double>(j, "dba_compute_us", base.dba_compute_us, where);
    base.bwmap_wait_mean_us =
        get_as<double>(j, "bwmap_wait_mean_us", base.bwmap_wait_mean_us, where);
    base.fast_dba_compute_us =
        get_as<double>(j, "fast_dba_compute_us", base.fast_dba_compute_us, where);
    base.fast_head_start_us =
        get_as<double>(j, "fast_head_start_us", base.fast_head_start_us, where);
    base.bwmap_modify_us = get_as<double>(j, "bwmap_modify_us", base.bwmap_modify_us, where);
    base.grant_offset_mean_us =
        get_as<double>(j, "grant_offset_mean_us", base.grant_offset_mean_us, where);
    return base;
}

inline DbaConfig parse_dba(const json& j, const std::string& where) {
    require_object(j, where);
    check_keys(j,
               {"frame_capacity_bytes", "reserved_fraction", "service_interval_frames",
                "weights"},
               where);
    DbaConfig cfg;
    cfg.frame_capacity_bytes =
        get_uint<std::uint32_t>(j, "frame_capacity_bytes", cfg.frame_capacity_bytes, where);
    cfg.reserved_fraction = get_as<double>(j, "reserved_fraction", cfg.reserved_fraction, where);
    cfg.service_interval_frames =
        get_uint<std::uint32_t>(j, "service_interval_frames", cfg.service_interval_frames, where);
    if (j.contains("weights")) {
        const json& w = j.at("weights");
        const std::string wwhere = where + ".weights";
        require_object(w, wwhere);
        check_keys(w, {"low_latency", "assured", "best_effort"}, wwhere);
        cfg.weights.low_latency =
            get_as<double>(w, "low_latency", cfg.weights.low_latency, wwhere);
        cfg.weights.assured = get_as<double>(w, "assured", cfg.weights.assured, wwhere);
        cfg.weights.best_effort =
            get_as<double>(w, "best_effort", cfg.weights.best_effort, wwhere);
    }
    return cfg;
}

inline void parse_policy(const json& j, Scenario& sc, const std::string& where) {
    require_object(j, where);
    check_keys(j, {"spare_fill", "preempt", "max_preempt_fraction", "store_capacity"}, where);
    sc.policy.spare_fill_enabled =
        get_as<bool>(j, "spare_fill", sc.policy.spare_fill_enabled, where);
    sc.policy.preempt_enabled = get_as<bool>(j, "preempt", sc.policy.preempt_enabled, where);
    sc.policy.max_preempt_fraction =
        get_as<double>(j, "max_preempt_fraction", sc.policy.max_preempt_fraction, where);
    sc.store_capacity =
        get_uint<std::size_t>(j, "store_capacity", sc.store_capacity, where);
}

inline OnuSpec parse_onu(const json& j, const std::string& where) {
    require_object(j, where);
    check_keys(j, {"onu_id", "allocs"}, where);
    OnuSpec onu;
    onu.onu_id = get_uint<std::uint16_t>(j, "onu_id", 0, where);
    if (!j.contains("allocs") || !j.at("allocs").is_array()) {
        throw Error(Errc::ConfigError, where + ": needs an 'allocs' array");
    }
    std::size_t k = 0;
    for (const json& aj : j.at("allocs")) {
        const std::string awhere = where + ".allocs[" + std::to_string(k++) + "]";
        require_object(aj, awhere);
        check_keys(aj, {"alloc_id", "class"}, awhere);
        OnuAlloc oa;
        oa.id.value = get_uint<std::uint16_t>(aj, "alloc_id", 0, awhere, AllocId::kMax);
        oa.tcont = parse_class(get_as<std::string>(aj, "class", "best_effort", awhere), awhere);
        onu.allocs.push_back(oa);
    }
    return onu;
}

inline TrafficSpec parse_traffic(const json& j, const std::string& where) {
    require_object(j, where);
    check_keys(j,
               {"alloc_id", "kind", "rate_pps", "period_us", "phase_us", "packet_bytes",
                "max_packets"},
               where);
    TrafficSpec ts;
    ts.alloc_id.value = get_uint<std::uint16_t>(j, "alloc_id", 0, where);
    const std::string kind = get_as<std::string>(j, "kind", "poisson", where);
    if (kind == "poisson") {
        ts.kind = TrafficSpec::Kind::Poisson;
    } else if (kind == "periodic") {
        ts.kind = TrafficSpec::Kind::Periodic;
    } else {
        throw Error(Errc::ConfigError,
                    where + ": unknown kind '" + kind + "' (poisson, periodic)");
    }
    ts.rate_pps = get_as<double>(j, "rate_pps", 0.0, where);
    ts.period_us = get_as<double>(j, "period_us", 0.0, where);
    ts.phase_us = get_as<double>(j, "phase_us", 0.0, where);
    ts.packet_bytes = get_uint<std::uint32_t>(j, "packet_bytes", 0, where);
    ts.max_packets = get_uint<std::uint64_t>(j, "max_packets", 0, where);
    return ts;
}

} // namespace cfgdetail

inline Scenario scenario_from_json(const nlohmann::json& j, const std::string& where = "config") {
    using namespace cfgdetail;
    require_object(j, where);
    check_keys(j,
               {"seed", "duration_frames", "mode", "pin_variance", "preset", "params", "dba",
                "policy", "onus", "traffic", "queue_depth_bytes"},
               where);

    Scenario sc;
    sc.seed = get_uint<std::uint64_t>(j, "seed", sc.seed, where);
    sc.duration_frames = get_uint<std::uint32_t>(j, "duration_frames", sc.duration_frames, where);
    sc.pin_variance = get_as<bool>(j, "pin_variance", sc.pin_variance, where);
    if (j.contains("mode")) {
        sc.mode = parse_mode(get_as<std::string>(j, "mode", "", where), where + ".mode");
    }
    sc.params = preset_by_name(get_as<std::string>(j, "preset", "default", where));
    if (j.contains("params")) {
        sc.params = parse_params(j.at("params"), sc.params, where + ".params");
    }
    if (j.contains("dba")) {
        sc.dba = parse_dba(j.at("dba"), where + ".dba");
    }
    if (j.contains("policy")) {
        parse_policy(j.at("policy"), sc, where + ".policy");
    }
    if (!j.contains("onus") || !j.at("onus").is_array()) {
        throw Error(Errc::ConfigError, where + ": needs an 'onus' array");
    }
    std::size_t k = 0;
    for (const json& oj : j.at("onus")) {
        sc.onus.push_back(parse_onu(oj, where + ".onus[" + std::to_string(k++) + "]"));
    }
    if (j.contains("traffic")) {
        if (!j.at("traffic").is_array()) {
            throw Error(Errc::ConfigError, where + ".traffic: expected an array");
        }
        k = 0;
        for (const json& tj : j.at("traffic")) {
            sc.traffic.push_back(
                parse_traffic(tj, where + ".traffic[" + std::to_string(k++) + "]"));
        }
    }
    sc.queue_depth_bytes =
        get_uint<std::uint64_t>(j, "queue_depth_bytes", sc.queue_depth_bytes, where);

    sc.validate();
    return sc;
}

inline nlohmann::json parse_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::ConfigError, "cannot open config file '" + path + "'");
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(Errc::ConfigError, path + ": " + e.what());
    }
}

inline Scenario load_scenario_file(const std::string& path) {
    return scenario_from_json(parse_json_file(path), path);
}

// Sweep files hold {"scenarios": [...]}; each element is a full scenario
// object.  Elements that fail validation are reported by index without
// blocking the rest.
struct SweepConfig {
    std::vector<Scenario> scenarios;
    std::vector<std::size_t> original_indices; // aligned with scenarios
    std::vector<std::string> errors;           // commentary for failed entries
    std::vector<std::size_t> failed_indices;
};

inline SweepConfig load_sweep_file(const std::string& path) {
    using namespace cfgdetail;
    const nlohmann::json j = parse_json_file(path);
    require_object(j, path);
    check_keys(j, {"scenarios"}, path);
    if (!j.contains("scenarios") || !j.at("scenarios").is_array()) {
        throw Error(Errc::ConfigError, path + ": needs a 'scenarios' array");
    }
    SweepConfig out;
    std::size_t k = 0;
    for (const json& sj : j.at("scenarios")) {
        const std::string where = path + ".scenarios[" + std::to_string(k) + "]";
        try {
            out.scenarios.push_back(scenario_from_json(sj, where));
            out.original_indices.push_back(k);
        } catch (const Error& e) {
            out.failed_indices.push_back(k);
            out.errors.push_back(e.what());
        }
        ++k;
    }
    return out;
}

} // namespace vpon
