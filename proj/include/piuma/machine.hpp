#pragma once

#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "piuma/config.hpp"
#include "piuma/engines.hpp"
#include "piuma/kernel.hpp"
#include "piuma/memory.hpp"
#include "piuma/network.hpp"
#include "piuma/sim.hpp"
#include "piuma/stats.hpp"

namespace piuma {

// One block groups MTCs, one STC, a scratchpad, the offload engines and a
// memory controller; the machine wires blocks to the network and drives
// kernel threads through the event engine.
class Machine {
public:
    explicit Machine(const MachineConfig& cfg);

    SimEngine& engine() { return engine_; }
    StatsLedger& ledger() { return ledger_; }
    MemorySystem& memory() { return *mem_; }
    NetworkModel& network() { return *net_; }
    Engines& engines() { return *engines_; }
    RegionRegistry& regions() { return regions_; }
    const MachineConfig& config() const { return cfg_; }

    // DGAS allocation; every allocation installs an ATT rule and a region.
    std::uint64_t alloc_interleaved(const std::string& name, std::uint64_t bytes, bool cacheable,
                                    std::uint64_t grain = 8);
    std::uint64_t alloc_on_block(const std::string& name, std::uint64_t bytes, int block,
                                 bool cacheable);
    std::uint64_t alloc_partitioned(const std::string& name, std::uint64_t bytes, bool cacheable);

    // Threads. core is the MTC index within the block; STC threads go on the
    // block's single-threaded core.
    int add_mtc_thread(int block, int core, Program program);
    int add_stc_thread(int block, Program program);
    int num_threads() const { return (int)threads_.size(); }
    const ThreadContext& thread(int id) const { return *threads_[id]; }

    int create_group(const std::vector<int>& thread_ids);
    int create_queue(std::uint64_t base_addr, std::uint64_t capacity_elems);

    SimEngine::Stop run(Cycles cycle_limit = 0, std::uint64_t event_limit = 0);
    // End-of-run cache flush (histogram harvest) + ledger self-check.
    void finalize();

    bool all_threads_done() const;
    std::vector<std::string> blocked_thread_dump() const;

    // Functional convenience for setup and verification.
    void poke(std::uint64_t addr, std::uint64_t value) { mem_->mem().write64(addr, value); }
    std::uint64_t peek(std::uint64_t addr) const { return mem_->mem().read64(addr); }

    void set_event_log(std::vector<std::string>* log) { engine_.set_event_log(log); }

private:
    friend class CorePipeline;

    struct Core {
        int block = 0;
        int index = 0;  // within block, MTCs first then STC
        bool is_stc = false;
        int cache_id = 0;
        std::vector<int> thread_ids;
        std::size_t rr_next = 0;
        Cycles last_step = (Cycles)-1;
        Cycles scheduled = (Cycles)-1;
    };

    void start_threads();
    void schedule_step(Core& core, Cycles when);
    void step_core(Core& core, Cycles now);
    void issue(Core& core, ThreadContext& t, Cycles now);
    void resume_thread(ThreadContext& t);
    void finish_thread(ThreadContext& t);
    void unblock(ThreadContext& t, Attr cat, Cycles q, Cycles now);
    void charge(ThreadContext& t, Attr cat, Cycles upto);
    void on_handle_complete(int handle, Cycles now);
    Core& core_of(const ThreadContext& t);
    void issue_stc_load(Core& core, ThreadContext& t, const OpDescriptor& op, Cycles now);
    void launch_memory_op(Core& core, ThreadContext& t, const OpDescriptor& op, Cycles now);

    MachineConfig cfg_;
    SimEngine engine_;
    StatsLedger ledger_;
    RegionRegistry regions_;
    std::unique_ptr<NetworkModel> net_;
    std::unique_ptr<MemorySystem> mem_;
    std::unique_ptr<Engines> engines_;
    std::vector<Core> cores_;  // blocks * (mtc_per_block + stc_per_block)
    std::deque<std::unique_ptr<ThreadContext>> threads_;
    std::deque<std::unique_ptr<KernelCtx>> contexts_;
    std::uint64_t next_addr_ = 0;
    bool started_ = false;
    int live_threads_ = 0;
};

}  // namespace piuma
