#pragma once

#include <array>
#include <coroutine>
#include <cstdint>
#include <exception>
#include <functional>
#include <utility>

#include "piuma/memory.hpp"
#include "piuma/sim.hpp"

namespace piuma {

class Machine;
class KernelCtx;

enum class OpKind {
    Alu,
    Branch,
    Load,
    Store,
    SpadLoad,
    SpadStore,
    DmaGather,
    DmaFill,
    DmaCopy,
    DmaScatter,
    RemoteAtomic,
    QueueOp,
    Barrier,
    Reduce,
    Poll,
    Wait,
    Flush,
    Halt,
    UseReg,
};

enum class CollOp { Add, Min, Max };
enum class QueueStatus { Ok, Empty, Full };

// One dynamic instruction or engine directive, staged by a kernel coroutine
// and consumed by a core pipeline.
struct OpDescriptor {
    OpKind kind = OpKind::Alu;
    std::uint64_t addr = 0;   // primary address / dma dst
    std::uint64_t addr2 = 0;  // index list / dma src
    std::uint64_t a = 0;      // store value / atomic operand / contribution
    std::uint64_t b = 0;      // cas desired value
    std::uint64_t count = 0;
    std::uint64_t stride = 8;
    std::uint32_t size = 8;
    std::uint32_t spad_offset = 0;
    int owner_block = -1;  // remote SPAD target; -1 = own block
    bool cached = false;
    AtomicOp aop = AtomicOp::Add;
    CollOp cop = CollOp::Add;
    int queue = -1;
    bool is_enqueue = false;
    int group = -1;
    int handle = -1;
    int reg = -1;  // STC scoreboard destination / source
};

// Resumable kernel procedure. Suspends at every co_await'ed op; the owning
// core resumes it when the op's result is available.
struct KernelTask {
    struct promise_type {
        std::exception_ptr exception;
        KernelTask get_return_object() {
            return KernelTask{std::coroutine_handle<promise_type>::from_promise(*this)};
        }
        std::suspend_always initial_suspend() noexcept { return {}; }
        std::suspend_always final_suspend() noexcept { return {}; }
        void return_void() {}
        void unhandled_exception() { exception = std::current_exception(); }
    };

    KernelTask() = default;
    explicit KernelTask(std::coroutine_handle<promise_type> h) : handle(h) {}
    KernelTask(KernelTask&& o) noexcept : handle(std::exchange(o.handle, nullptr)) {}
    KernelTask& operator=(KernelTask&& o) noexcept {
        if (handle) handle.destroy();
        handle = std::exchange(o.handle, nullptr);
        return *this;
    }
    KernelTask(const KernelTask&) = delete;
    KernelTask& operator=(const KernelTask&) = delete;
    ~KernelTask() {
        if (handle) handle.destroy();
    }

    std::coroutine_handle<promise_type> handle;
};

struct ThreadContext {
    enum class State { Ready, Blocked, Done };

    int id = -1;
    int block = 0;
    int core_in_block = 0;  // MTC index, or mtc_per_block + stc index
    bool on_stc = false;

    State state = State::Ready;
    Cycles ready_at = 0;
    bool has_op = false;
    OpDescriptor op;
    std::uint64_t op_result = 0;
    QueueStatus queue_status = QueueStatus::Ok;

    Cycles last_time = 0;  // attribution watermark
    KernelTask task;

    // STC scoreboard
    static constexpr int kRegs = 32;
    std::array<std::uint64_t, kRegs> regs{};
    std::array<bool, kRegs> reg_pending{};
    std::array<Cycles, kRegs> reg_queue_delay{};
    std::array<bool, kRegs> reg_remote{};
    int pending_regs = 0;
    int blocked_reg = -1;       // -1: not blocked on a register
    bool blocked_sb_full = false;
};

// Awaitable staging one op into the thread context.
struct OpAwait {
    ThreadContext* thread;
    OpDescriptor op;

    bool await_ready() const noexcept { return false; }
    void await_suspend(std::coroutine_handle<>) noexcept {
        thread->op = op;
        thread->has_op = true;
    }
    std::uint64_t await_resume() const noexcept { return thread->op_result; }
};

// The surface kernel programs use to talk to the machine. One instruction or
// engine directive per co_await.
class KernelCtx {
public:
    KernelCtx(Machine& machine, ThreadContext& thread) : machine_(machine), thread_(&thread) {}

    OpAwait alu() { return make({.kind = OpKind::Alu}); }
    OpAwait branch() { return make({.kind = OpKind::Branch}); }

    OpAwait load(std::uint64_t addr, bool cached = false) {
        return make({.kind = OpKind::Load, .addr = addr, .cached = cached});
    }
    OpAwait store(std::uint64_t addr, std::uint64_t value, bool cached = false) {
        return make({.kind = OpKind::Store, .addr = addr, .a = value, .cached = cached});
    }
    // Scoreboarded load: returns the register token; value via use_reg.
    OpAwait load_async(std::uint64_t addr, int reg, bool cached = false) {
        return make({.kind = OpKind::Load, .addr = addr, .cached = cached, .reg = reg});
    }
    OpAwait use_reg(int reg) { return make({.kind = OpKind::UseReg, .reg = reg}); }

    OpAwait spad_load(std::uint32_t offset, int owner_block = -1) {
        return make({.kind = OpKind::SpadLoad, .spad_offset = offset, .owner_block = owner_block});
    }
    OpAwait spad_store(std::uint32_t offset, std::uint64_t value, int owner_block = -1) {
        return make({.kind = OpKind::SpadStore, .a = value, .spad_offset = offset,
                     .owner_block = owner_block});
    }

    OpAwait dma_gather(std::uint64_t base, std::uint64_t index_addr, std::uint64_t count,
                       std::uint32_t dest_offset) {
        return make({.kind = OpKind::DmaGather, .addr = base, .addr2 = index_addr,
                     .count = count, .spad_offset = dest_offset});
    }
    OpAwait dma_fill(std::uint64_t src, std::uint64_t count, std::uint32_t dest_offset) {
        return make({.kind = OpKind::DmaFill, .addr2 = src, .count = count,
                     .spad_offset = dest_offset});
    }
    OpAwait dma_copy(std::uint64_t src, std::uint64_t dst, std::uint64_t count,
                     std::uint64_t src_stride = 8) {
        return make({.kind = OpKind::DmaCopy, .addr = dst, .addr2 = src, .count = count,
                     .stride = src_stride});
    }
    OpAwait dma_scatter(std::uint64_t src, std::uint64_t index_addr, std::uint64_t dst_base,
                        std::uint64_t count) {
        return make({.kind = OpKind::DmaScatter, .addr = dst_base, .addr2 = src,
                     .a = index_addr, .count = count});
    }
    OpAwait remote_atomic(AtomicOp op, std::uint64_t addr, std::uint64_t a,
                          std::uint64_t b = 0) {
        return make({.kind = OpKind::RemoteAtomic, .addr = addr, .a = a, .b = b, .aop = op});
    }
    OpAwait enqueue(int queue, std::uint64_t value) {
        return make({.kind = OpKind::QueueOp, .a = value, .queue = queue, .is_enqueue = true});
    }
    OpAwait dequeue(int queue) {
        return make({.kind = OpKind::QueueOp, .queue = queue, .is_enqueue = false});
    }
    OpAwait barrier(int group) { return make({.kind = OpKind::Barrier, .group = group}); }
    OpAwait reduce(int group, CollOp op, std::uint64_t contribution) {
        return make({.kind = OpKind::Reduce, .a = contribution, .cop = op, .group = group});
    }
    OpAwait poll(int handle) { return make({.kind = OpKind::Poll, .handle = handle}); }
    OpAwait wait(int handle) { return make({.kind = OpKind::Wait, .handle = handle}); }
    OpAwait flush() { return make({.kind = OpKind::Flush}); }

    QueueStatus queue_status() const { return thread_->queue_status; }
    int thread_id() const { return thread_->id; }
    int block() const { return thread_->block; }
    Machine& machine() { return machine_; }
    void bump(const std::string& counter, std::uint64_t by = 1);  // ledger counter

private:
    OpAwait make(OpDescriptor op) { return OpAwait{thread_, op}; }

    Machine& machine_;
    ThreadContext* thread_;
};

using Program = std::function<KernelTask(KernelCtx&)>;

}  // namespace piuma
