#include "piuma/engines.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>

namespace piuma {

int Engines::new_handle(HandleKind kind) {
    EngineHandle h;
    h.id = (int)handles_.size();
    h.kind = kind;
    h.issue_time = engine_.now();
    handles_.push_back(h);
    return h.id;
}

void Engines::complete(int handle, Cycles now, std::uint64_t result, QueueStatus status) {
    EngineHandle& h = handles_[handle];
    if (h.complete) throw SimFault("engine handle completed twice");
    h.complete = true;
    h.completion_time = now;
    h.result = result;
    h.status = status;
    if (on_complete_) on_complete_(handle, now);
}

// ---------------------------------------------------------------------------
// DMA

int Engines::dma_gather(int block, std::uint64_t base, std::uint64_t index_addr,
                        std::uint64_t count, std::uint32_t dest_offset) {
    if ((std::uint64_t)dest_offset + count * 8 > cfg_.spad.size_bytes)
        throw SimFault("dma_gather: destination window exceeds SPAD capacity");
    int id = new_handle(HandleKind::Dma);
    if (count == 0) {
        engine_.schedule(1, block, "dma.done",
                         [this, id](Cycles now) { complete(id, now, 0, QueueStatus::Ok); });
        return id;
    }
    struct State {
        std::uint64_t next = 0, done = 0;
        int in_flight = 0;
    };
    auto st = std::make_shared<State>();
    // Pipelined 8-byte reads: index word at its owning controller (the index
    // stream never crosses the network), then the element to the requesting
    // block, up to the engine concurrency limit.
    auto pump = std::make_shared<std::function<void()>>();
    *pump = [this, st, pump, id, block, base, index_addr, count, dest_offset]() {
        while (st->in_flight < (int)cfg_.engine_concurrency && st->next < count) {
            std::uint64_t i = st->next++;
            st->in_flight++;
            mem_.controller_read(index_addr + 8 * i, PacketClass::DmaIndex,
                                 [this, st, pump, id, block, base, count, dest_offset,
                                  i](Cycles, std::uint64_t idx, Cycles, bool) {
                mem_.uncached(block, base + 8 * idx, 8, false, 0, PacketClass::Dma,
                              [this, st, pump, id, block, count, dest_offset,
                               i](Cycles now, std::uint64_t value, Cycles, bool) {
                    mem_.spad_write(block, dest_offset + (std::uint32_t)(8 * i), value);
                    ledger_.counters["dma_element_bytes"] += 8;
                    st->in_flight--;
                    if (++st->done == count)
                        complete(id, now, 0, QueueStatus::Ok);
                    else
                        (*pump)();
                });
            });
        }
    };
    (*pump)();
    return id;
}

// Streams a contiguous array into the block's scratchpad. The source is read
// at its owning controller word by word; nothing crosses the network, so this
// is only useful for block-local arrays.
int Engines::dma_fill(int block, std::uint64_t src, std::uint64_t count,
                      std::uint32_t dest_offset) {
    int id = new_handle(HandleKind::Dma);
    if (count == 0) {
        engine_.schedule(1, block, "dma.done",
                         [this, id](Cycles now) { complete(id, now, 0, QueueStatus::Ok); });
        return id;
    }
    struct State {
        std::uint64_t next = 0, done = 0;
        int in_flight = 0;
    };
    auto st = std::make_shared<State>();
    auto pump = std::make_shared<std::function<void()>>();
    *pump = [this, st, pump, id, block, src, count, dest_offset]() {
        while (st->in_flight < (int)cfg_.engine_concurrency && st->next < count) {
            std::uint64_t i = st->next++;
            st->in_flight++;
            mem_.controller_read(src + 8 * i, PacketClass::DmaIndex,
                                 [this, st, pump, id, block, count, dest_offset,
                                  i](Cycles now, std::uint64_t value, Cycles, bool) {
                mem_.spad_write(block, dest_offset + (std::uint32_t)(8 * i), value);
                st->in_flight--;
                if (++st->done == count)
                    complete(id, now, 0, QueueStatus::Ok);
                else
                    (*pump)();
            });
        }
    };
    (*pump)();
    return id;
}

int Engines::dma_copy(int block, std::uint64_t src, std::uint64_t dst, std::uint64_t count,
                      std::uint64_t src_stride) {
    std::uint64_t src_span = count ? (count - 1) * src_stride + 8 : 0;
    if (count && src < dst + count * 8 && dst < src + src_span)
        throw SimFault("dma_copy: overlapping source and destination");
    int id = new_handle(HandleKind::Dma);
    if (count == 0) {
        engine_.schedule(1, block, "dma.done",
                         [this, id](Cycles now) { complete(id, now, 0, QueueStatus::Ok); });
        return id;
    }
    struct State {
        std::uint64_t next = 0, done = 0;
        int in_flight = 0;
    };
    auto st = std::make_shared<State>();
    auto pump = std::make_shared<std::function<void()>>();
    *pump = [this, st, pump, id, block, src, dst, count, src_stride]() {
        while (st->in_flight < (int)cfg_.engine_concurrency && st->next < count) {
            std::uint64_t i = st->next++;
            st->in_flight++;
            mem_.uncached(block, src + i * src_stride, 8, false, 0, PacketClass::Dma,
                          [this, st, pump, id, block, dst, count,
                           i](Cycles, std::uint64_t value, Cycles, bool) {
                mem_.uncached(block, dst + 8 * i, 8, true, value, PacketClass::Dma,
                              [this, st, pump, id, count](Cycles now, std::uint64_t, Cycles,
                                                          bool) {
                    st->in_flight--;
                    if (++st->done == count)
                        complete(id, now, 0, QueueStatus::Ok);
                    else
                        (*pump)();
                });
            });
        }
    };
    (*pump)();
    return id;
}

int Engines::dma_scatter(int block, std::uint64_t src, std::uint64_t index_addr,
                         std::uint64_t dst_base, std::uint64_t count) {
    int id = new_handle(HandleKind::Dma);
    if (count == 0) {
        engine_.schedule(1, block, "dma.done",
                         [this, id](Cycles now) { complete(id, now, 0, QueueStatus::Ok); });
        return id;
    }
    struct State {
        std::uint64_t next = 0, committed = 0, done = 0;
        int in_flight = 0;
        std::vector<std::pair<bool, std::pair<std::uint64_t, std::uint64_t>>> staged;
    };
    auto st = std::make_shared<State>();
    st->staged.resize(count);
    auto pump = std::make_shared<std::function<void()>>();
    // Reads are pipelined; writes commit strictly in index order so repeated
    // destination indices resolve deterministically (last index wins).
    *pump = [this, st, pump, id, block, src, index_addr, dst_base, count]() {
        auto commit = [this, st, pump, id, block, dst_base, count]() {
            while (st->committed < count && st->staged[st->committed].first) {
                auto [idx, value] = st->staged[st->committed].second;
                st->committed++;
                mem_.uncached(block, dst_base + 8 * idx, 8, true, value, PacketClass::Dma,
                              [this, st, id, count](Cycles now, std::uint64_t, Cycles, bool) {
                    if (++st->done == count) complete(id, now, 0, QueueStatus::Ok);
                });
            }
        };
        while (st->in_flight < (int)cfg_.engine_concurrency && st->next < count) {
            std::uint64_t i = st->next++;
            st->in_flight++;
            mem_.controller_read(index_addr + 8 * i, PacketClass::DmaIndex,
                                 [this, st, pump, commit, id, block, src, count,
                                  i](Cycles, std::uint64_t idx, Cycles, bool) {
                mem_.uncached(block, src + 8 * i, 8, false, 0, PacketClass::Dma,
                              [st, pump, commit, idx, i](Cycles, std::uint64_t value, Cycles,
                                                         bool) {
                    st->staged[i] = {true, {idx, value}};
                    st->in_flight--;
                    commit();
                    (*pump)();
                });
            });
        }
    };
    (*pump)();
    return id;
}

// ---------------------------------------------------------------------------
// Remote atomics

int Engines::remote_atomic(int block, AtomicOp op, std::uint64_t addr, std::uint64_t a,
                           std::uint64_t b) {
    int id = new_handle(HandleKind::Atomic);
    mem_.atomic(block, op, addr, a, b,
                [this, id](Cycles now, std::uint64_t old, Cycles, bool) {
                    complete(id, now, old, QueueStatus::Ok);
                });
    return id;
}

// ---------------------------------------------------------------------------
// Queue engine

int Engines::create_queue(std::uint64_t base_addr, std::uint64_t capacity_elems) {
    SharedQueue q;
    q.base = base_addr;
    q.capacity = capacity_elems;
    q.owner = mem_.att().translate(base_addr).controller;
    queues_.push_back(q);
    return (int)queues_.size() - 1;
}

int Engines::queue_op(int origin_block, int queue, bool is_enqueue, std::uint64_t value) {
    if (queue < 0 || queue >= (int)queues_.size())
        throw SimFault("queue_op: unmapped queue descriptor");
    int id = new_handle(HandleKind::Queue);
    SharedQueue& q = queues_[queue];
    int owner = q.owner;
    // Request travels to the owning engine; the engine serializes all ops on
    // one queue, which makes the FIFO linearizable by construction.
    Packet req{origin_block, owner, PacketClass::Req, 8};
    auto at_owner = [this, id, queue, origin_block, owner, is_enqueue,
                     value](Cycles, Cycles) {
        SharedQueue& q = queues_[queue];
        constexpr Cycles kQueueService = 4;  // head/tail read-modify-write
        Cycles start = std::max(engine_.now(), q.next_free);
        q.next_free = start + kQueueService;
        Cycles done = start + kQueueService + cfg_.dram.latency;
        ledger_.controllers[owner].busy_cycles += kQueueService;
        engine_.schedule(done - engine_.now(), owner, "queue.op",
                         [this, id, queue, origin_block, owner, is_enqueue,
                          value](Cycles) {
            SharedQueue& q = queues_[queue];
            std::uint64_t head = mem_.mem().read64(q.base);
            std::uint64_t tail = mem_.mem().read64(q.base + 8);
            std::uint64_t result = 0;
            QueueStatus status = QueueStatus::Ok;
            if (is_enqueue) {
                if (tail - head >= q.capacity) {
                    status = QueueStatus::Full;
                } else {
                    mem_.mem().write64(q.base + 16 + (tail % q.capacity) * 8, value);
                    mem_.mem().write64(q.base + 8, tail + 1);
                }
            } else {
                if (tail == head) {
                    status = QueueStatus::Empty;
                } else {
                    result = mem_.mem().read64(q.base + 16 + (head % q.capacity) * 8);
                    mem_.mem().write64(q.base, head + 1);
                }
            }
            auto& cs = ledger_.controllers[owner];
            cs.fetched_bytes += 16;
            cs.useful_bytes += 16;
            cs.written_bytes += is_enqueue && status == QueueStatus::Ok ? 16 : 8;
            if (owner == origin_block) {
                complete(id, engine_.now(), result, status);
                return;
            }
            Packet resp{owner, origin_block, PacketClass::Resp, 8};
            net_.send(resp, [this, id, result, status](Cycles t, Cycles) {
                complete(id, t, result, status);
            });
        });
    };
    if (owner == origin_block)
        engine_.schedule(0, owner, "queue.local", [at_owner](Cycles) { at_owner(0, 0); });
    else
        net_.send(req, at_owner);
    return id;
}

// ---------------------------------------------------------------------------
// Collectives

int Engines::create_group(const std::vector<int>& thread_ids,
                          const std::vector<int>& thread_blocks) {
    Group g;
    g.members = thread_ids;
    g.member_blocks = thread_blocks;
    std::set<int> blocks(thread_blocks.begin(), thread_blocks.end());
    g.distinct_blocks = std::max<int>(1, (int)blocks.size());
    g.arrived.assign(g.members.size(), false);
    g.pending_handles.assign(g.members.size(), -1);
    g.contributions.assign(g.members.size(), 0);
    groups_.push_back(std::move(g));
    return (int)groups_.size() - 1;
}

Cycles Engines::collective_tree_latency(int group) const {
    const Group& g = groups_[group];
    int levels = 1;
    if (g.distinct_blocks > 1)
        levels = (int)std::ceil(std::log((double)g.distinct_blocks) /
                                std::log((double)cfg_.collective_fanin));
    // Fan-in tree up, broadcast down; one hop and one combine per level.
    return (Cycles)(2 * levels * (cfg_.network.hop_latency + 1));
}

int Engines::collective_arrive(Group& g, int group_id, int thread_id, bool is_reduce, CollOp op,
                               std::uint64_t contribution) {
    auto it = std::find(g.members.begin(), g.members.end(), thread_id);
    if (it == g.members.end()) throw SimFault("collective: thread not in group");
    std::size_t idx = it - g.members.begin();
    if (g.arrived[idx]) throw SimFault("collective: thread arrived twice before release");
    if (g.arrived_count == 0) {
        g.is_reduce = is_reduce;
        g.op = op;
        g.op_set = true;
    } else if (g.is_reduce != is_reduce || (is_reduce && g.op != op)) {
        throw SimFault("collective: mismatched operation within group");
    }
    g.arrived[idx] = true;
    g.contributions[idx] = contribution;
    int h = new_handle(is_reduce ? HandleKind::Reduce : HandleKind::Barrier);
    g.pending_handles[idx] = h;
    if (++g.arrived_count == (int)g.members.size()) collective_release(group_id);
    return h;
}

void Engines::collective_release(int group_id) {
    Group& g = groups_[group_id];
    std::uint64_t result = 0;
    if (g.is_reduce) {
        // Combine in member order (tree order) for bit reproducibility.
        result = g.contributions[0];
        for (std::size_t i = 1; i < g.contributions.size(); ++i) {
            std::uint64_t ignored;
            AtomicOp op = g.op == CollOp::Add   ? AtomicOp::Add
                          : g.op == CollOp::Min ? AtomicOp::Min
                                                : AtomicOp::Max;
            result = MemorySystem::apply_atomic(op, result, g.contributions[i], 0, ignored);
        }
    }
    Cycles latency = collective_tree_latency(group_id);
    std::vector<int> handles = g.pending_handles;
    g.arrived.assign(g.members.size(), false);
    g.pending_handles.assign(g.members.size(), -1);
    g.arrived_count = 0;
    g.op_set = false;
    engine_.schedule(latency, -1, "coll.release", [this, handles, result](Cycles now) {
        for (int h : handles) complete(h, now, result, QueueStatus::Ok);
    });
}

int Engines::barrier(int group, int thread_id, int) {
    if (group < 0 || group >= (int)groups_.size()) throw SimFault("barrier: unknown group");
    return collective_arrive(groups_[group], group, thread_id, false, CollOp::Add, 0);
}

int Engines::reduce(int group, int thread_id, int, CollOp op, std::uint64_t contribution) {
    if (group < 0 || group >= (int)groups_.size()) throw SimFault("reduce: unknown group");
    return collective_arrive(groups_[group], group, thread_id, true, op, contribution);
}

}  // namespace piuma
