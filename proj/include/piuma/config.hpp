#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace piuma {

inline constexpr const char* kSimVersion = "piuma-sim 0.1.0";

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CacheConfig {
    std::uint32_t size_bytes = 16 * 1024;
    std::uint32_t ways = 4;
    std::uint32_t latency = 2;  // hit latency, cycles
};

struct SpadConfig {
    std::uint32_t size_bytes = 256 * 1024;
    std::uint32_t latency = 3;
};

struct DramConfig {
    std::uint32_t latency = 100;      // pipelined access latency, cycles
    double bandwidth = 8.0;           // bytes/cycle per controller
};

struct NetworkConfig {
    std::vector<std::uint32_t> dims = {4, 4};  // all-to-all per dimension
    double link_bandwidth = 16.0;              // bytes/cycle per link
    std::uint32_t hop_latency = 40;
    std::uint32_t header_bytes = 8;
};

struct MachineConfig {
    std::uint32_t mtc_per_block = 4;
    std::uint32_t threads_per_mtc = 16;
    std::uint32_t stc_per_block = 1;
    std::uint32_t stc_scoreboard_depth = 8;
    CacheConfig cache;
    SpadConfig spad;
    DramConfig dram;
    NetworkConfig network;
    std::uint32_t engine_concurrency = 8;   // outstanding 8B reads per DMA directive
    std::uint32_t collective_fanin = 4;
    bool prefetch_next_line = false;

    std::uint32_t blocks() const {
        std::uint32_t n = 1;
        for (auto d : network.dims) n *= d;
        return n;
    }
    std::uint32_t threads_per_block() const { return mtc_per_block * threads_per_mtc; }
    std::uint32_t total_threads() const { return blocks() * threads_per_block(); }

    // Aggregate per-block network bandwidth vs the local DRAM bandwidth.
    double block_network_bandwidth() const {
        double links = 0;
        for (auto d : network.dims) links += d > 0 ? d - 1 : 0;
        return links * network.link_bandwidth;
    }
    void validate() const;
};

struct WorkloadConfig {
    std::string kind = "spmv";      // spmv|bfs|random_access|indirection_chain|random_walk
    std::string variant = "base";   // spmv: base|selective|dma|cache_all
    std::uint32_t scale = 12;
    std::uint32_t edge_factor = 16;
    std::uint64_t seed = 1;
    std::string values_mode = "int";  // int|float
    double rmat_a = 0.57, rmat_b = 0.19, rmat_c = 0.19, rmat_d = 0.05;
    std::uint64_t micro_ops = 1 << 14;   // per-thread op count for microbenchmarks
    std::uint32_t walk_length = 64;
    std::string matrix_file;             // optional Matrix Market input
    void validate() const;
};

struct ScaleoutConfig {
    std::uint32_t latency_delta = 200;     // extra cycles per inter-node access
    double internode_bandwidth = 64.0;     // bytes/cycle per node
    std::uint32_t blocks_per_node = 16;
};

struct OutputConfig {
    std::string out_dir;
    std::string event_log;
};

struct RunConfig {
    MachineConfig machine;
    WorkloadConfig workload;
    ScaleoutConfig scaleout;
    OutputConfig outputs;
    std::vector<std::string> warnings;  // validation notes, echoed into reports

    void validate();
};

// Parses a JSON config file. Unknown keys are rejected with the offending
// path in the message; missing keys fall back to defaults.
RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text);

}  // namespace piuma
