#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "piuma/config.hpp"
#include "piuma/network.hpp"
#include "piuma/sim.hpp"
#include "piuma/stats.hpp"

namespace piuma {

struct SimFault : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class AtomicOp { Add, Min, Max, Cas, Exchange };

struct TranslateResult {
    int controller;
    std::uint64_t offset;
};

struct AttRule {
    enum class Scheme { Interleaved, Partitioned };
    std::uint64_t base = 0;
    std::uint64_t limit = 0;  // exclusive
    Scheme scheme = Scheme::Interleaved;
    std::uint64_t grain = 8;  // interleaved only; power of two, >= 8
    std::vector<int> controllers;
};

// Programmable DGAS translation rules. Frozen once the run starts.
class Att {
public:
    void add_rule(const AttRule& rule);
    TranslateResult translate(std::uint64_t addr) const;
    bool mapped(std::uint64_t addr) const;
    const std::vector<AttRule>& rules() const { return rules_; }

private:
    const AttRule* find(std::uint64_t addr) const;
    std::vector<AttRule> rules_;
};

// Named address ranges, used for per-stream cache-line histograms and for the
// cacheability convention checked by remote atomics.
class RegionRegistry {
public:
    int add(const std::string& name, std::uint64_t base, std::uint64_t limit, bool cacheable);
    int region_of(std::uint64_t addr) const;  // -1 when unknown
    const std::string& name(int id) const { return regions_[id].name; }
    bool cacheable(int id) const { return regions_[id].cacheable; }
    std::size_t size() const { return regions_.size(); }

private:
    struct Region {
        std::string name;
        std::uint64_t base, limit;
        bool cacheable;
    };
    std::vector<Region> regions_;
};

// Functional backing store, 8-byte words, zero-initialized.
class MainMemory {
public:
    std::uint64_t read64(std::uint64_t addr) const {
        auto it = words_.find(addr >> 3);
        return it == words_.end() ? 0 : it->second;
    }
    void write64(std::uint64_t addr, std::uint64_t value) { words_[addr >> 3] = value; }

private:
    std::unordered_map<std::uint64_t, std::uint64_t> words_;
};

// Completion callback: value is the loaded/old value (0 for stores),
// queue_delay is time spent waiting behind other traffic (link FIFOs and
// controller FIFO), remote tells local vs remote attribution.
using AccessDone = std::function<void(Cycles now, std::uint64_t value, Cycles queue_delay,
                                      bool remote)>;

class MemorySystem {
public:
    MemorySystem(SimEngine& engine, StatsLedger& ledger, NetworkModel& net,
                 RegionRegistry& regions, const MachineConfig& cfg);

    Att& att() { return att_; }
    const Att& att() const { return att_; }
    MainMemory& mem() { return mem_; }
    RegionRegistry& regions() { return regions_; }

    // Uncached scalar access: 8-byte message to the owning controller,
    // service, response. Sub-8-byte accesses are charged 8 bytes.
    void uncached(int origin_block, std::uint64_t addr, std::uint32_t size, bool is_store,
                  std::uint64_t store_value, PacketClass cls, AccessDone cb);

    // Read-modify-write executed at the owning controller; one round trip.
    void atomic(int origin_block, AtomicOp op, std::uint64_t addr, std::uint64_t a,
                std::uint64_t b, AccessDone cb);

    // Cached access through a per-core cache; misses fill a 64-byte line.
    void cached(int cache_id, int origin_block, std::uint64_t addr, std::uint32_t size,
                bool is_store, std::uint64_t store_value, AccessDone cb);

    // Controller-side read with no network traffic, used by DMA engines for
    // index streams: the index list never travels to the requesting block.
    void controller_read(std::uint64_t addr, PacketClass cls, AccessDone cb);

    // Scratchpad access; remote SPAD access costs a network round trip.
    void spad_access(int origin_block, int owner_block, std::uint32_t offset, bool is_store,
                     std::uint64_t value, AccessDone cb);

    std::uint64_t spad_read(int block, std::uint32_t offset) const;
    void spad_write(int block, std::uint32_t offset, std::uint64_t value);

    void flush_cache(int cache_id);  // functional writeback + histogram harvest
    void flush_all();

    int num_caches() const { return (int)caches_.size(); }
    static std::uint64_t apply_atomic(AtomicOp op, std::uint64_t old, std::uint64_t a,
                                      std::uint64_t b, std::uint64_t& result_out);

private:
    struct Line {
        bool valid = false;
        bool dirty = false;
        bool prefetched = false;
        std::uint64_t tag = 0;      // line base address
        std::uint64_t used_mask = 0;
        std::uint64_t lru = 0;
        std::uint64_t words[8] = {};
    };
    struct Cache {
        std::vector<Line> lines;  // sets * ways
        std::uint64_t lru_clock = 0;
        std::uint32_t sets = 0;
    };
    struct Controller {
        Cycles next_free = 0;
    };

    Cycles ctrl_service(int ctrl, Cycles arrival, std::uint32_t bytes, Cycles& queue_delay);
    void at_controller(int ctrl, int origin_block, std::uint64_t addr, std::uint32_t size,
                       bool is_store, std::uint64_t value, PacketClass cls, Cycles q,
                       bool remote, AccessDone cb);
    Line* lookup(Cache& c, std::uint64_t line_addr);
    Line& victim(Cache& c, std::uint64_t line_addr);
    void harvest(const Line& line);
    void install(int cache_id, std::uint64_t line_addr, bool prefetched);
    void fill(int cache_id, int origin_block, std::uint64_t line_addr, bool prefetched,
              std::function<void(Cycles, Cycles)> on_filled);
    void maybe_prefetch(int cache_id, int origin_block, std::uint64_t line_addr);
    void check_aligned(std::uint64_t addr, std::uint32_t size) const;

    SimEngine& engine_;
    StatsLedger& ledger_;
    NetworkModel& net_;
    RegionRegistry& regions_;
    MachineConfig cfg_;
    Att att_;
    MainMemory mem_;
    std::vector<Controller> controllers_;
    std::vector<Cache> caches_;
    std::vector<std::vector<std::uint64_t>> spads_;  // per block, words
};

}  // namespace piuma
