#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "piuma/sim.hpp"

namespace piuma {

// Cycle attribution categories. Per live thread, these sum exactly to the
// thread's lifetime in cycles; the ledger self-check asserts it.
enum class Attr { Issue, MemLocal, MemRemote, EngineWait, SyncWait, Backpressure };
inline constexpr int kAttrCount = 6;
inline constexpr const char* kAttrNames[kAttrCount] = {
    "issue", "mem_local", "mem_remote", "engine_wait", "sync_wait", "backpressure"};

enum class PacketClass { Req, Resp, Atomic, Dma, DmaIndex, Collective, Writeback };
inline constexpr int kClassCount = 7;
inline constexpr const char* kClassNames[kClassCount] = {
    "req", "resp", "atomic", "dma", "dma_index", "collective", "writeback"};

struct ThreadStats {
    std::array<std::uint64_t, kAttrCount> cycles{};
    std::uint64_t instructions = 0;
    std::uint64_t start_time = 0;
    std::uint64_t finish_time = 0;
    bool finished = false;

    std::uint64_t lifetime() const { return finish_time - start_time; }
    std::uint64_t attributed() const {
        std::uint64_t s = 0;
        for (auto c : cycles) s += c;
        return s;
    }
};

struct ControllerStats {
    std::uint64_t useful_bytes = 0;
    std::uint64_t fetched_bytes = 0;
    std::uint64_t written_bytes = 0;
    std::uint64_t busy_cycles = 0;
    std::uint64_t requests = 0;
};

struct LinkStats {
    std::uint64_t busy_cycles = 0;
    std::uint64_t packets = 0;
    std::uint64_t header_bytes = 0;
    std::array<std::uint64_t, kClassCount> payload_bytes{};
};

struct BlockIngress {
    // Payload bytes delivered into a block, by packet class. Zero-hop (local)
    // deliveries count too: this tracks provenance, not link occupancy.
    std::array<std::uint64_t, kClassCount> payload_bytes{};
};

// 64-byte lines bucketed by bytes actually used: bucket i covers 8*i bytes.
using LineHistogram = std::array<std::uint64_t, 9>;

struct StatsLedger {
    std::vector<ThreadStats> threads;
    std::vector<ControllerStats> controllers;
    std::vector<LinkStats> links;
    std::vector<BlockIngress> block_ingress;
    std::map<int, LineHistogram> line_usage_by_region;  // region id -> histogram
    std::map<std::string, std::uint64_t> counters;       // workload-defined
    std::uint64_t packets_injected = 0;
    std::uint64_t packets_delivered = 0;
    std::uint64_t remote_payload_bytes = 0;  // payload on packets that crossed blocks
    std::uint64_t local_payload_bytes = 0;   // payload delivered within the source block

    void harvest_line(int region, unsigned bytes_used) {
        if (bytes_used > 64) throw std::logic_error("line mask overflow");
        line_usage_by_region[region][bytes_used / 8]++;
    }

    LineHistogram total_line_histogram() const {
        LineHistogram h{};
        for (const auto& [r, hist] : line_usage_by_region)
            for (int i = 0; i < 9; ++i) h[i] += hist[i];
        return h;
    }

    // Attribution conservation and controller byte sanity. Throws on violation.
    void self_check() const {
        for (std::size_t t = 0; t < threads.size(); ++t) {
            const auto& ts = threads[t];
            if (!ts.finished) continue;
            if (ts.attributed() != ts.lifetime())
                throw std::logic_error("attribution mismatch for thread " + std::to_string(t) +
                                       ": " + std::to_string(ts.attributed()) + " vs lifetime " +
                                       std::to_string(ts.lifetime()));
        }
        for (std::size_t c = 0; c < controllers.size(); ++c)
            if (controllers[c].useful_bytes > controllers[c].fetched_bytes)
                throw std::logic_error("useful > fetched at controller " + std::to_string(c));
        if (packets_injected != packets_delivered)
            throw std::logic_error("packet conservation violated");
    }
};

}  // namespace piuma
