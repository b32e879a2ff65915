#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "piuma/config.hpp"
#include "piuma/memory.hpp"
#include "piuma/sim.hpp"
#include "piuma/stats.hpp"

namespace piuma {

// Machine-wide CPI stack: thread-cycle-weighted decomposition of execution
// time into attribution categories, per instruction.
struct CpiStack {
    std::array<std::uint64_t, kAttrCount> cycles{};
    std::uint64_t instructions = 0;
    std::uint64_t thread_cycles = 0;  // sum of finished-thread lifetimes

    double per_instruction(int cat) const {
        return instructions ? (double)cycles[cat] / (double)instructions : 0.0;
    }
    double total_cpi() const {
        return instructions ? (double)thread_cycles / (double)instructions : 0.0;
    }
};

CpiStack cpi_stack(const StatsLedger& ledger);

// Cache-line usage histograms, merged by region name (a region may be
// allocated once per block), sorted by name; `total` aggregates everything.
struct LineReport {
    std::vector<std::pair<std::string, LineHistogram>> by_region;
    LineHistogram total{};
};

LineReport cacheline_histogram(const StatsLedger& ledger, const RegionRegistry& regions);
std::array<double, 9> histogram_fractions(const LineHistogram& h);

struct BandwidthReport {
    struct Ctrl {
        double utilization = 0.0;  // busy cycles / elapsed
        std::uint64_t fetched = 0, useful = 0, written = 0, requests = 0;
        double efficiency = 0.0;  // useful / fetched
    };
    std::vector<Ctrl> controllers;
    double mean_utilization = 0.0, min_utilization = 0.0, max_utilization = 0.0;
    double efficiency = 0.0;  // aggregate useful / fetched
    double mean_link_utilization = 0.0, max_link_utilization = 0.0;
    Cycles elapsed = 0;
};

BandwidthReport bandwidth_report(const StatsLedger& ledger, Cycles elapsed);

// Measured single-node quantities feeding the scale-out projection.
struct ScaleoutInputs {
    Cycles makespan = 0;
    std::uint64_t instructions = 0;
    std::uint64_t threads = 0;
    double remote_fraction = 0.0;      // cross-block payload / all payload
    std::uint64_t remote_bytes = 0;    // cross-block payload bytes
};

ScaleoutInputs scaleout_inputs(const StatsLedger& ledger, Cycles elapsed);

// Three-term projection, speedup(N) = min of:
//   compute    N                        (perfect strong scaling)
//   latency    N / (1 + f*(N-1)/N * dL / (C * t1))   with t1 = makespan*C/ops
//              (added remote latency amortized over C concurrent threads)
//   bandwidth  makespan * N^2 * BW / (remote_bytes * (N-1))
//              (fraction (N-1)/N of remote traffic leaves the node, served by
//               N node interfaces of BW bytes/cycle)
struct ScaleoutPoint {
    std::uint32_t nodes = 1;
    double speedup = 1.0;
    double compute_term = 1.0, latency_term = 1.0, bandwidth_term = 1.0;
};

ScaleoutPoint extrapolate_scaleout(const ScaleoutInputs& in, std::uint32_t nodes,
                                   const ScaleoutConfig& cfg);
std::vector<ScaleoutPoint> scaleout_sweep(const ScaleoutInputs& in, std::uint32_t max_nodes,
                                          const ScaleoutConfig& cfg);

// Deterministic report files: summary.txt, cpi.csv, lines.csv, bandwidth.csv,
// scaleout.csv. Same ledger and config -> byte-identical output.
struct RunResult {
    std::string workload_label;
    SimEngine::Stop stop = SimEngine::Stop::AllDone;
    Cycles elapsed = 0;
    bool verified = false;      // functional check against the reference
    std::string verify_note;
};

void write_reports(const std::string& dir, const RunConfig& cfg, const RunResult& result,
                   const StatsLedger& ledger, const RegionRegistry& regions);
void echo_config(std::ostream& os, const RunConfig& cfg);
std::string format_double(double v);  // fixed "%.6g" rendering used everywhere
const char* stop_name(SimEngine::Stop s);

}  // namespace piuma
