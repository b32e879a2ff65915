#include "piuma/machine.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace piuma {

namespace {
constexpr Cycles kNever = (Cycles)-1;
}

Machine::Machine(const MachineConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    net_ = std::make_unique<NetworkModel>(engine_, ledger_, cfg_.network);
    mem_ = std::make_unique<MemorySystem>(engine_, ledger_, *net_, regions_, cfg_);
    engines_ = std::make_unique<Engines>(engine_, ledger_, *mem_, *net_, cfg_);
    engines_->set_completion_hook(
        [this](int handle, Cycles now) { on_handle_complete(handle, now); });

    int blocks = (int)cfg_.blocks();
    int cores_per_block = (int)(cfg_.mtc_per_block + cfg_.stc_per_block);
    for (int b = 0; b < blocks; ++b) {
        for (int c = 0; c < cores_per_block; ++c) {
            Core core;
            core.block = b;
            core.index = c;
            core.is_stc = c >= (int)cfg_.mtc_per_block;
            core.cache_id = b * cores_per_block + c;
            cores_.push_back(core);
        }
    }
}

// ---------------------------------------------------------------------------
// Allocation

std::uint64_t Machine::alloc_interleaved(const std::string& name, std::uint64_t bytes,
                                         bool cacheable, std::uint64_t grain) {
    std::uint64_t base = next_addr_;
    std::uint64_t size = (bytes + 63) & ~63ull;
    next_addr_ += size;
    AttRule rule;
    rule.base = base;
    rule.limit = base + size;
    rule.scheme = AttRule::Scheme::Interleaved;
    rule.grain = grain;
    rule.controllers.resize(cfg_.blocks());
    std::iota(rule.controllers.begin(), rule.controllers.end(), 0);
    mem_->att().add_rule(rule);
    regions_.add(name, base, base + size, cacheable);
    return base;
}

std::uint64_t Machine::alloc_on_block(const std::string& name, std::uint64_t bytes, int block,
                                      bool cacheable) {
    std::uint64_t base = next_addr_;
    std::uint64_t size = (bytes + 63) & ~63ull;
    next_addr_ += size;
    AttRule rule;
    rule.base = base;
    rule.limit = base + size;
    rule.scheme = AttRule::Scheme::Partitioned;
    rule.controllers = {block};
    mem_->att().add_rule(rule);
    regions_.add(name, base, base + size, cacheable);
    return base;
}

std::uint64_t Machine::alloc_partitioned(const std::string& name, std::uint64_t bytes,
                                         bool cacheable) {
    std::uint64_t blocks = cfg_.blocks();
    std::uint64_t base = next_addr_;
    std::uint64_t size = (bytes + 63 * blocks) / (64 * blocks) * 64 * blocks;
    if (size == 0) size = 64 * blocks;
    next_addr_ += size;
    AttRule rule;
    rule.base = base;
    rule.limit = base + size;
    rule.scheme = AttRule::Scheme::Partitioned;
    rule.controllers.resize(blocks);
    std::iota(rule.controllers.begin(), rule.controllers.end(), 0);
    mem_->att().add_rule(rule);
    regions_.add(name, base, base + size, cacheable);
    return base;
}

// ---------------------------------------------------------------------------
// Threads

int Machine::add_mtc_thread(int block, int core, Program program) {
    if (core < 0 || core >= (int)cfg_.mtc_per_block) throw ConfigError("bad MTC index");
    int cores_per_block = (int)(cfg_.mtc_per_block + cfg_.stc_per_block);
    Core& c = cores_[(std::size_t)block * cores_per_block + core];
    if (c.thread_ids.size() >= cfg_.threads_per_mtc)
        throw ConfigError("MTC thread slots exhausted");
    auto t = std::make_unique<ThreadContext>();
    t->id = (int)threads_.size();
    t->block = block;
    t->core_in_block = core;
    t->on_stc = false;
    threads_.push_back(std::move(t));
    contexts_.push_back(std::make_unique<KernelCtx>(*this, *threads_.back()));
    threads_.back()->task = program(*contexts_.back());
    c.thread_ids.push_back(threads_.back()->id);
    ledger_.threads.resize(threads_.size());
    ++live_threads_;
    return threads_.back()->id;
}

int Machine::add_stc_thread(int block, Program program) {
    if (cfg_.stc_per_block == 0) throw ConfigError("no STC configured");
    int cores_per_block = (int)(cfg_.mtc_per_block + cfg_.stc_per_block);
    Core& c = cores_[(std::size_t)block * cores_per_block + cfg_.mtc_per_block];
    if (!c.thread_ids.empty()) throw ConfigError("STC is single-threaded");
    auto t = std::make_unique<ThreadContext>();
    t->id = (int)threads_.size();
    t->block = block;
    t->core_in_block = (int)cfg_.mtc_per_block;
    t->on_stc = true;
    threads_.push_back(std::move(t));
    contexts_.push_back(std::make_unique<KernelCtx>(*this, *threads_.back()));
    threads_.back()->task = program(*contexts_.back());
    c.thread_ids.push_back(threads_.back()->id);
    ledger_.threads.resize(threads_.size());
    ++live_threads_;
    return threads_.back()->id;
}

int Machine::create_group(const std::vector<int>& thread_ids) {
    std::vector<int> ids = thread_ids;
    std::sort(ids.begin(), ids.end());
    std::vector<int> blocks;
    for (int id : ids) blocks.push_back(threads_[id]->block);
    return engines_->create_group(ids, blocks);
}

int Machine::create_queue(std::uint64_t base_addr, std::uint64_t capacity_elems) {
    return engines_->create_queue(base_addr, capacity_elems);
}

Machine::Core& Machine::core_of(const ThreadContext& t) {
    int cores_per_block = (int)(cfg_.mtc_per_block + cfg_.stc_per_block);
    return cores_[(std::size_t)t.block * cores_per_block + t.core_in_block];
}

// ---------------------------------------------------------------------------
// Attribution

void Machine::charge(ThreadContext& t, Attr cat, Cycles upto) {
    auto& ts = ledger_.threads[t.id];
    ts.cycles[(int)cat] += upto - t.last_time;
    t.last_time = upto;
}

void Machine::unblock(ThreadContext& t, Attr cat, Cycles q, Cycles now) {
    Cycles span = now > t.last_time ? now - t.last_time : 0;
    Cycles bp = std::min(q, span);
    auto& ts = ledger_.threads[t.id];
    ts.cycles[(int)Attr::Backpressure] += bp;
    ts.cycles[(int)cat] += span - bp;
    t.last_time = now;
    t.state = ThreadContext::State::Ready;
    t.ready_at = now;
}

// ---------------------------------------------------------------------------
// Scheduling

void Machine::start_threads() {
    if (started_) return;
    started_ = true;
    for (auto& tp : threads_) {
        resume_thread(*tp);  // stage the first op at time 0
        if (tp->state != ThreadContext::State::Done) schedule_step(core_of(*tp), 0);
    }
}

void Machine::schedule_step(Core& core, Cycles when) {
    if (core.scheduled != kNever && core.scheduled <= when) return;
    core.scheduled = when;
    Core* cp = &core;
    engine_.schedule(when - std::min(when, engine_.now()), core.block, "core.step",
                     [this, cp, when](Cycles now) {
                         if (cp->scheduled == when) cp->scheduled = kNever;
                         step_core(*cp, now);
                     });
}

void Machine::step_core(Core& core, Cycles now) {
    if (core.last_step == now) return;
    core.last_step = now;
    std::size_t n = core.thread_ids.size();
    if (n == 0) return;

    int issued_idx = -1;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t i = (core.rr_next + k) % n;
        ThreadContext& t = *threads_[core.thread_ids[i]];
        if (t.state == ThreadContext::State::Ready && t.has_op && t.ready_at <= now) {
            issued_idx = (int)i;
            break;
        }
    }
    if (issued_idx >= 0) {
        core.rr_next = ((std::size_t)issued_idx + 1) % n;
        issue(core, *threads_[core.thread_ids[issued_idx]], now);
    }
    // Next step: earliest future time any thread could issue.
    Cycles next = kNever;
    for (int id : core.thread_ids) {
        ThreadContext& t = *threads_[id];
        if (t.state == ThreadContext::State::Ready && t.has_op)
            next = std::min(next, std::max(t.ready_at, now + 1));
    }
    if (next != kNever) schedule_step(core, next);
}

void Machine::resume_thread(ThreadContext& t) {
    t.has_op = false;
    t.task.handle.resume();
    if (t.task.handle.promise().exception)
        std::rethrow_exception(t.task.handle.promise().exception);
    if (t.task.handle.done()) finish_thread(t);
}

void Machine::finish_thread(ThreadContext& t) {
    t.state = ThreadContext::State::Done;
    t.has_op = false;
    auto& ts = ledger_.threads[t.id];
    ts.finish_time = t.last_time;
    ts.finished = true;
    --live_threads_;
}

void Machine::on_handle_complete(int handle, Cycles now) {
    EngineHandle& h = engines_->handle(handle);
    Attr cat = (h.kind == HandleKind::Barrier || h.kind == HandleKind::Reduce)
                   ? Attr::SyncWait
                   : Attr::EngineWait;
    for (int tid : h.waiters) {
        ThreadContext& t = *threads_[tid];
        unblock(t, cat, 0, now);
        t.op_result = h.result;
        t.queue_status = h.status;
        resume_thread(t);
        if (t.state != ThreadContext::State::Done) schedule_step(core_of(t), now);
    }
    h.waiters.clear();
}

// ---------------------------------------------------------------------------
// Issue

void Machine::launch_memory_op(Core& core, ThreadContext& t, const OpDescriptor& op, Cycles) {
    bool is_store = op.kind == OpKind::Store;
    t.state = ThreadContext::State::Blocked;
    auto cb = [this, &core, &t](Cycles done, std::uint64_t value, Cycles q, bool remote) {
        unblock(t, remote ? Attr::MemRemote : Attr::MemLocal, q, done);
        t.op_result = value;
        resume_thread(t);
        if (t.state != ThreadContext::State::Done) schedule_step(core, done);
    };
    if (op.cached)
        mem_->cached(core.cache_id, t.block, op.addr, op.size, is_store, op.a, std::move(cb));
    else
        mem_->uncached(t.block, op.addr, op.size, is_store, op.a,
                       is_store ? PacketClass::Req : PacketClass::Resp, std::move(cb));
}

void Machine::issue_stc_load(Core& core, ThreadContext& t, const OpDescriptor& op, Cycles now) {
    // Scoreboarded load: posts the destination register and keeps issuing
    // until a use or a full scoreboard stalls the pipeline.
    int reg = op.reg;
    t.reg_pending[reg] = true;
    t.pending_regs++;
    auto cb = [this, &core, &t, reg](Cycles done, std::uint64_t value, Cycles q, bool remote) {
        t.regs[reg] = value;
        t.reg_pending[reg] = false;
        t.reg_queue_delay[reg] = q;
        t.reg_remote[reg] = remote;
        t.pending_regs--;
        if (t.state == ThreadContext::State::Blocked &&
            (t.blocked_reg == reg || t.blocked_sb_full)) {
            t.blocked_reg = -1;
            t.blocked_sb_full = false;
            unblock(t, remote ? Attr::MemRemote : Attr::MemLocal, q, done);
            if (t.has_op) {
                // stalled at issue (scoreboard full); the op is still staged
                schedule_step(core, done);
            } else {
                t.op_result = value;
                resume_thread(t);
                if (t.state != ThreadContext::State::Done) schedule_step(core, done);
            }
        }
    };
    if (op.cached)
        mem_->cached(core.cache_id, t.block, op.addr, op.size, false, 0, std::move(cb));
    else
        mem_->uncached(t.block, op.addr, op.size, false, 0, PacketClass::Resp, std::move(cb));
    t.op_result = (std::uint64_t)reg;
    t.ready_at = now + 1;
    resume_thread(t);
}

void Machine::issue(Core& core, ThreadContext& t, Cycles now) {
    charge(t, Attr::Issue, now + 1);
    ledger_.threads[t.id].instructions++;
    OpDescriptor op = t.op;

    // STC scoreboard gating happens before the op is consumed.
    if (core.is_stc && op.kind == OpKind::Load && op.reg >= 0) {
        if (t.pending_regs >= (int)cfg_.stc_scoreboard_depth) {
            t.state = ThreadContext::State::Blocked;
            t.blocked_sb_full = true;
            ledger_.threads[t.id].instructions--;  // not issued yet
            return;
        }
        t.has_op = false;
        issue_stc_load(core, t, op, now);
        return;
    }
    t.has_op = false;

    switch (op.kind) {
        case OpKind::Alu:
        case OpKind::Branch:
            t.ready_at = now + 1;
            resume_thread(t);
            break;
        case OpKind::Load:
            if (op.reg >= 0) {
                // On an MTC a scoreboarded load degrades to a blocking load:
                // one in-flight instruction per thread.
                t.state = ThreadContext::State::Blocked;
                int reg = op.reg;
                auto cb = [this, &core, &t, reg](Cycles done, std::uint64_t value, Cycles q,
                                                 bool remote) {
                    t.regs[reg] = value;
                    unblock(t, remote ? Attr::MemRemote : Attr::MemLocal, q, done);
                    t.op_result = (std::uint64_t)reg;
                    resume_thread(t);
                    if (t.state != ThreadContext::State::Done) schedule_step(core, done);
                };
                if (op.cached)
                    mem_->cached(core.cache_id, t.block, op.addr, op.size, false, 0,
                                 std::move(cb));
                else
                    mem_->uncached(t.block, op.addr, op.size, false, 0, PacketClass::Resp,
                                   std::move(cb));
                break;
            }
            [[fallthrough]];
        case OpKind::Store:
            launch_memory_op(core, t, op, now);
            break;
        case OpKind::UseReg:
            if (core.is_stc && t.reg_pending[op.reg]) {
                t.state = ThreadContext::State::Blocked;
                t.blocked_reg = op.reg;
                break;  // completion callback resumes with the value
            }
            t.op_result = t.regs[op.reg];
            t.ready_at = now + 1;
            resume_thread(t);
            break;
        case OpKind::SpadLoad:
        case OpKind::SpadStore: {
            t.state = ThreadContext::State::Blocked;
            int owner = op.owner_block < 0 ? t.block : op.owner_block;
            mem_->spad_access(t.block, owner, op.spad_offset, op.kind == OpKind::SpadStore,
                              op.a,
                              [this, &core, &t](Cycles done, std::uint64_t value, Cycles q,
                                                bool remote) {
                                  unblock(t, remote ? Attr::MemRemote : Attr::MemLocal, q,
                                          done);
                                  t.op_result = value;
                                  resume_thread(t);
                                  if (t.state != ThreadContext::State::Done)
                                      schedule_step(core, done);
                              });
            break;
        }
        case OpKind::DmaGather:
            t.op_result = engines_->dma_gather(t.block, op.addr, op.addr2, op.count,
                                               op.spad_offset);
            t.ready_at = now + 1;
            resume_thread(t);
            break;
        case OpKind::DmaFill:
            t.op_result = engines_->dma_fill(t.block, op.addr2, op.count, op.spad_offset);
            t.ready_at = now + 1;
            resume_thread(t);
            break;
        case OpKind::DmaCopy:
            t.op_result = engines_->dma_copy(t.block, op.addr2, op.addr, op.count, op.stride);
            t.ready_at = now + 1;
            resume_thread(t);
            break;
        case OpKind::DmaScatter:
            t.op_result = engines_->dma_scatter(t.block, op.addr2, op.a, op.addr, op.count);
            t.ready_at = now + 1;
            resume_thread(t);
            break;
        case OpKind::RemoteAtomic:
            t.op_result = engines_->remote_atomic(t.block, op.aop, op.addr, op.a, op.b);
            t.ready_at = now + 1;
            resume_thread(t);
            break;
        case OpKind::QueueOp:
            t.op_result = engines_->queue_op(t.block, op.queue, op.is_enqueue, op.a);
            t.ready_at = now + 1;
            resume_thread(t);
            break;
        case OpKind::Barrier:
            t.op_result = engines_->barrier(op.group, t.id, t.block);
            t.ready_at = now + 1;
            resume_thread(t);
            break;
        case OpKind::Reduce:
            t.op_result = engines_->reduce(op.group, t.id, t.block, op.cop, op.a);
            t.ready_at = now + 1;
            resume_thread(t);
            break;
        case OpKind::Poll: {
            EngineHandle& h = engines_->handle(op.handle);
            t.op_result = h.complete ? 1 : 0;
            t.queue_status = h.status;
            t.ready_at = now + 1;
            resume_thread(t);
            break;
        }
        case OpKind::Wait: {
            if (op.handle < 0) throw SimFault("wait on unknown handle");
            EngineHandle& h = engines_->handle(op.handle);
            if (h.complete) {
                t.op_result = h.result;
                t.queue_status = h.status;
                t.ready_at = now + 1;
                resume_thread(t);
            } else {
                t.state = ThreadContext::State::Blocked;
                h.waiters.push_back(t.id);
            }
            break;
        }
        case OpKind::Flush:
            mem_->flush_cache(core.cache_id);
            t.ready_at = now + 1;
            resume_thread(t);
            break;
        case OpKind::Halt:
            finish_thread(t);
            break;
    }
    if (t.state == ThreadContext::State::Done) return;
}

// ---------------------------------------------------------------------------
// Run

SimEngine::Stop Machine::run(Cycles cycle_limit, std::uint64_t event_limit) {
    start_threads();
    return engine_.run(cycle_limit, event_limit, [this]() { return live_threads_ == 0; });
}

bool Machine::all_threads_done() const { return live_threads_ == 0; }

std::vector<std::string> Machine::blocked_thread_dump() const {
    std::vector<std::string> dump;
    for (const auto& tp : threads_) {
        if (tp->state == ThreadContext::State::Done) continue;
        std::ostringstream os;
        os << "thread " << tp->id << " block " << tp->block << " core " << tp->core_in_block
           << " state="
           << (tp->state == ThreadContext::State::Blocked ? "blocked" : "ready")
           << " last_op_kind=" << (int)tp->op.kind;
        dump.push_back(os.str());
    }
    return dump;
}

void KernelCtx::bump(const std::string& counter, std::uint64_t by) {
    machine_.ledger().counters[counter] += by;
}

void Machine::finalize() {
    mem_->flush_all();
    ledger_.self_check();
}

}  // namespace piuma
