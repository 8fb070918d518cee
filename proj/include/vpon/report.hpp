#pragma once

// CSV and table rendering for the CLI.  Column orders are fixed; every file
// may start with a single "# generated <ISO-8601>" line, suppressible so
// repeated runs are byte-identical.

#include "vpon/config.hpp"
#include "vpon/latency_model.hpp"
#include "vpon/sim_engine.hpp"

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace vpon::report {

struct OutputOptions {
    std::string out_dir = ".";
    bool timestamp = true;
};

inline std::string fmt(double v, int precision = 4) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
    return buf;
}

inline std::string iso8601_now() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::string header_line(const OutputOptions& opts) {
    return opts.timestamp ? "# generated " + iso8601_now() + "\n" : "";
}

inline void write_text_file(const OutputOptions& opts, const std::string& name,
                            const std::string& content) {
    std::filesystem::create_directories(opts.out_dir);
    const auto path = std::filesystem::path(opts.out_dir) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(Errc::ConfigError, "cannot write " + path.string());
    }
    out << content;
}

// ---------------------------------------------------------------- budget --

struct BudgetRow {
    Mode mode;
    LatencyBudget budget;
    double red_vs_classical_pct = 0;
    double red_vs_virtual_pct = 0;
};

inline std::vector<BudgetRow> budget_rows(const LatencyParams& params,
                                          const std::vector<Mode>& modes) {
    const LatencyBudget classical = compute_budget(params, Mode::ClassicalOem);
    const LatencyBudget virt = compute_budget(params, Mode::VirtualPon);
    std::vector<BudgetRow> rows;
    for (Mode m : modes) {
        BudgetRow r;
        r.mode = m;
        r.budget = compute_budget(params, m);
        r.red_vs_classical_pct = reduction_percent(classical, r.budget);
        r.red_vs_virtual_pct = reduction_percent(virt, r.budget);
        rows.push_back(std::move(r));
    }
    return rows;
}

// f2 column carries the whole fast-path serial addition (unhidden compute
// excess plus the rewrite).
inline double budget_stage_column(const LatencyBudget& b, const std::string& label) {
    if (label == "f2") return b.stage_us("f2") + b.stage_us("fast_excess");
    return b.stage_us(label);
}

inline const char* const kBudgetStageColumns[] = {"a", "b", "c", "d", "e",
                                                  "f", "f2", "g", "h", "i"};

inline std::string budget_csv(const std::vector<BudgetRow>& rows, const OutputOptions& opts) {
    std::string out = header_line(opts);
    out += "mode";
    for (const char* c : kBudgetStageColumns) out += std::string(",") + c;
    out += ",total_us,reduction_vs_classical_pct,reduction_vs_virtual_pct\n";
    for (const auto& r : rows) {
        out += mode_name(r.mode);
        for (const char* c : kBudgetStageColumns) {
            out += "," + fmt(budget_stage_column(r.budget, c), 2);
        }
        out += "," + fmt(r.budget.total_us, 2);
        out += "," + fmt(r.red_vs_classical_pct, 2);
        out += "," + fmt(r.red_vs_virtual_pct, 2);
        out += "\n";
    }
    return out;
}

inline std::string budget_table(const std::vector<BudgetRow>& rows) {
    char line[256];
    std::string out;
    std::snprintf(line, sizeof(line), "%-15s %10s %13s %11s\n", "mode", "total_us",
                  "vs_classical", "vs_virtual");
    out += line;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof(line), "%-15s %10s %12ld%% %10ld%%\n", mode_name(r.mode),
                      fmt(r.budget.total_us, 2).c_str(), std::lround(r.red_vs_classical_pct),
                      std::lround(r.red_vs_virtual_pct));
        out += line;
        std::string stages;
        for (const auto& [label, us] : r.budget.stages) {
            if (!stages.empty()) stages += " + ";
            stages += label + ":" + fmt(us, 2);
        }
        out += "    " + stages + "\n";
    }
    return out;
}

// -------------------------------------------------------------- simulate --

inline std::string samples_csv(const RunResult& result, const OutputOptions& opts) {
    std::string out = header_line(opts);
    out += "alloc_id,class,arrival_us,transmit_us,latency_us";
    for (const char* c : kStageColumns) out += std::string(",") + c;
    out += "\n";
    for (const Sample& s : result.samples) {
        out += std::to_string(s.alloc_id.value);
        out += std::string(",") + tcont_class_name(s.tcont);
        out += "," + fmt(s.arrival_us);
        out += "," + fmt(s.transmit_us);
        out += "," + fmt(s.latency_us());
        for (std::size_t i = 0; i < std::size(kStageColumns); ++i) {
            out += "," + fmt(stage_value(s.stages, i));
        }
        out += "\n";
    }
    return out;
}

inline std::string summary_csv(const RunResult& result, Mode mode, const OutputOptions& opts) {
    std::string out = header_line(opts);
    out += "class,mode,mean_us,p50_us,p99_us,count\n";
    for (const ClassSummary& cs : result.summary) {
        out += tcont_class_name(cs.tcont);
        out += std::string(",") + mode_name(mode);
        out += "," + fmt(cs.mean_us);
        out += "," + fmt(cs.p50_us);
        out += "," + fmt(cs.p99_us);
        out += "," + std::to_string(cs.count);
        out += "\n";
    }
    return out;
}

inline std::string summary_table(const RunResult& result, Mode mode) {
    char line[256];
    std::string out;
    std::snprintf(line, sizeof(line), "%-13s %-15s %10s %10s %10s %8s\n", "class", "mode",
                  "mean_us", "p50_us", "p99_us", "count");
    out += line;
    for (const ClassSummary& cs : result.summary) {
        std::snprintf(line, sizeof(line), "%-13s %-15s %10s %10s %10s %8llu\n",
                      tcont_class_name(cs.tcont), mode_name(mode), fmt(cs.mean_us, 2).c_str(),
                      fmt(cs.p50_us, 2).c_str(), fmt(cs.p99_us, 2).c_str(),
                      static_cast<unsigned long long>(cs.count));
        out += line;
    }
    if (result.dropped_packets || result.store_drops || result.unserved_packets) {
        std::snprintf(line, sizeof(line), "drops: queue=%llu store=%llu unserved=%llu\n",
                      static_cast<unsigned long long>(result.dropped_packets),
                      static_cast<unsigned long long>(result.store_drops),
                      static_cast<unsigned long long>(result.unserved_packets));
        out += line;
    }
    return out;
}

// --------------------------------------------------------------- compare --

struct CompareEntry {
    Mode mode;
    RunResult result;
    LatencyBudget budget;
    double mean_us = 0;          // low-latency class mean
    double deviation_pct = 0;    // measured vs analytic budget
};

struct CompareReport {
    std::vector<CompareEntry> entries; // classical, virtual, fast
    double red_fast_vs_classical_pct = 0;
    double red_fast_vs_virtual_pct = 0;
    bool pinned = false;
    bool budget_deviation = false; // pinned run strayed >1% from a budget
    bool fast_degraded = false;    // fast mode shows no gain over virtual
};

inline CompareReport run_compare(const Scenario& base) {
    CompareReport rep;
    rep.pinned = base.pin_variance;
    for (Mode m : kAllModes) {
        Scenario sc = base;
        sc.mode = m;
        CompareEntry e;
        e.mode = m;
        e.result = run(sc);
        e.budget = compute_budget(base.params, m);
        const ClassSummary* ll = e.result.summary_for(TcontClass::LowLatency);
        if (ll == nullptr) {
            throw Error(Errc::ConfigError,
                        "compare needs low-latency traffic that produces samples");
        }
        e.mean_us = ll->mean_us;
        e.deviation_pct = 100.0 * (e.mean_us - e.budget.total_us) / e.budget.total_us;
        if (rep.pinned && std::abs(e.deviation_pct) > 1.0) rep.budget_deviation = true;
        rep.entries.push_back(std::move(e));
    }
    const double classical = rep.entries[0].mean_us;
    const double virt = rep.entries[1].mean_us;
    const double fast = rep.entries[2].mean_us;
    rep.red_fast_vs_classical_pct = 100.0 * (1.0 - fast / classical);
    rep.red_fast_vs_virtual_pct = 100.0 * (1.0 - fast / virt);
    rep.fast_degraded = fast >= 0.99 * virt;
    return rep;
}

inline std::string compare_csv(const CompareReport& rep, const OutputOptions& opts) {
    std::string out = header_line(opts);
    out += "mode,mean_us,budget_us,deviation_pct,reduction_vs_classical_pct,"
           "reduction_vs_virtual_pct\n";
    const double classical = rep.entries[0].mean_us;
    const double virt = rep.entries[1].mean_us;
    for (const auto& e : rep.entries) {
        out += mode_name(e.mode);
        out += "," + fmt(e.mean_us);
        out += "," + fmt(e.budget.total_us);
        out += "," + fmt(e.deviation_pct);
        out += "," + fmt(100.0 * (1.0 - e.mean_us / classical), 2);
        out += "," + fmt(100.0 * (1.0 - e.mean_us / virt), 2);
        out += "\n";
    }
    return out;
}

inline std::string compare_table(const CompareReport& rep) {
    char line[256];
    std::string out;
    std::snprintf(line, sizeof(line), "%-15s %12s %12s %12s\n", "mode", "mean_us", "budget_us",
                  "deviation");
    out += line;
    for (const auto& e : rep.entries) {
        std::snprintf(line, sizeof(line), "%-15s %12s %12s %11s%%%s\n", mode_name(e.mode),
                      fmt(e.mean_us, 2).c_str(), fmt(e.budget.total_us, 2).c_str(),
                      fmt(e.deviation_pct, 2).c_str(),
                      (rep.pinned && std::abs(e.deviation_pct) > 1.0) ? "  <-- DEVIATION" : "");
        out += line;
    }
    std::snprintf(line, sizeof(line),
                  "fast intercept reduction: %ld%% vs classical, %ld%% vs virtual\n",
                  std::lround(rep.red_fast_vs_classical_pct),
                  std::lround(rep.red_fast_vs_virtual_pct));
    out += line;
    if (rep.fast_degraded) {
        out += "WARNING: fast path degraded to standard-DBA latency "
               "(no usable reserve or preemption)\n";
    }
    return out;
}

// ----------------------------------------------------------------- sweep --

inline std::string sweep_csv(const std::vector<Scenario>& scenarios,
                             const std::vector<std::size_t>& indices,
                             const std::vector<SweepOutcome>& outcomes,
                             const OutputOptions& opts) {
    std::string out = header_line(opts);
    out += "scenario,mode,class,mean_us,p50_us,p99_us,count\n";
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (!outcomes[i].result) continue;
        for (const ClassSummary& cs : outcomes[i].result->summary) {
            out += std::to_string(i < indices.size() ? indices[i] : i);
            out += std::string(",") + mode_name(scenarios[i].mode);
            out += std::string(",") + tcont_class_name(cs.tcont);
            out += "," + fmt(cs.mean_us);
            out += "," + fmt(cs.p50_us);
            out += "," + fmt(cs.p99_us);
            out += "," + std::to_string(cs.count);
            out += "\n";
        }
    }
    return out;
}

} // namespace vpon::report
