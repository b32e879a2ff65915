#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <vector>

#include "piuma/kernel.hpp"
#include "piuma/memory.hpp"
#include "piuma/sim.hpp"

namespace piuma {

enum class HandleKind { Dma, Atomic, Queue, Barrier, Reduce };

struct EngineHandle {
    int id = -1;
    HandleKind kind = HandleKind::Dma;
    Cycles issue_time = 0;
    Cycles completion_time = 0;
    bool complete = false;
    std::uint64_t result = 0;
    QueueStatus status = QueueStatus::Ok;
    std::vector<int> waiters;  // thread ids blocked in a wait op
};

// Per-block DMA, queue, collective and remote-atomic engines. All engine work
// runs in the background against the DGAS; completion is signaled through
// handles, never by blocking the issuing core.
class Engines {
public:
    Engines(SimEngine& engine, StatsLedger& ledger, MemorySystem& mem, NetworkModel& net,
            const MachineConfig& cfg)
        : engine_(engine), ledger_(ledger), mem_(mem), net_(net), cfg_(cfg) {}

    // Invoked when a handle completes; the machine wakes waiting threads.
    void set_completion_hook(std::function<void(int handle, Cycles now)> hook) {
        on_complete_ = std::move(hook);
    }

    int dma_gather(int block, std::uint64_t base, std::uint64_t index_addr, std::uint64_t count,
                   std::uint32_t dest_offset);
    int dma_fill(int block, std::uint64_t src, std::uint64_t count, std::uint32_t dest_offset);
    int dma_copy(int block, std::uint64_t src, std::uint64_t dst, std::uint64_t count,
                 std::uint64_t src_stride);
    int dma_scatter(int block, std::uint64_t src, std::uint64_t index_addr,
                    std::uint64_t dst_base, std::uint64_t count);
    int remote_atomic(int block, AtomicOp op, std::uint64_t addr, std::uint64_t a,
                      std::uint64_t b);
    int queue_op(int origin_block, int queue, bool is_enqueue, std::uint64_t value);
    int barrier(int group, int thread_id, int thread_block);
    int reduce(int group, int thread_id, int thread_block, CollOp op, std::uint64_t contribution);

    int create_queue(std::uint64_t base_addr, std::uint64_t capacity_elems);
    int create_group(const std::vector<int>& thread_ids, const std::vector<int>& thread_blocks);

    EngineHandle& handle(int id) { return handles_[id]; }
    const EngineHandle& handle(int id) const { return handles_[id]; }

    Cycles collective_tree_latency(int group) const;

private:
    struct SharedQueue {
        std::uint64_t base = 0;
        std::uint64_t capacity = 0;
        int owner = 0;       // owning block / engine
        Cycles next_free = 0;  // engine serializes all ops on one queue
    };
    struct Group {
        std::vector<int> members;        // thread ids, sorted
        std::vector<int> member_blocks;  // aligned with members
        int distinct_blocks = 1;
        // per-generation state
        std::vector<bool> arrived;
        std::vector<int> pending_handles;  // aligned with members, -1 until issued
        std::vector<std::uint64_t> contributions;
        int arrived_count = 0;
        bool is_reduce = false;
        CollOp op = CollOp::Add;
        bool op_set = false;
    };

    int new_handle(HandleKind kind);
    void complete(int handle, Cycles now, std::uint64_t result, QueueStatus status);
    int collective_arrive(Group& g, int group_id, int thread_id, bool is_reduce, CollOp op,
                          std::uint64_t contribution);
    void collective_release(int group_id);

    SimEngine& engine_;
    StatsLedger& ledger_;
    MemorySystem& mem_;
    NetworkModel& net_;
    MachineConfig cfg_;
    std::function<void(int, Cycles)> on_complete_;
    std::deque<EngineHandle> handles_;
    std::vector<SharedQueue> queues_;
    std::vector<Group> groups_;
};

}  // namespace piuma
