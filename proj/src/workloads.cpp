#include "piuma/workloads.hpp"

#include <algorithm>
#include <cstring>
#include <memory>
#include <random>
#include <stdexcept>

namespace piuma {

namespace {

double bits_to_d(std::uint64_t v) {
    double d;
    std::memcpy(&d, &v, 8);
    return d;
}
std::uint64_t d_to_bits(double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, 8);
    return v;
}

std::uint64_t lcg(std::uint64_t s) { return s * 6364136223846793005ull + 1442695040888963407ull; }

// Per-thread nonzero boundaries, balanced on nonzeros plus a per-row walking
// cost: each row crossed costs a row_ptr load and a branch, and threads whose
// range spans long empty-row runs otherwise straggle. Integer mode cuts
// mid-row (rows may split across threads); float mode snaps each cut up to a
// row boundary so every row has a single owner.
std::vector<std::uint64_t> partition_nnz(const CsrMatrix& A, std::uint64_t threads,
                                         bool row_aligned) {
    constexpr std::uint64_t kNnzWeight = 8, kRowWeight = 1;
    auto weight = [&](std::uint64_t j) {  // cumulative cost of nonzeros [0, j)
        auto it = std::upper_bound(A.row_ptr.begin(), A.row_ptr.end(), j);
        std::uint64_t row = (std::uint64_t)(it - A.row_ptr.begin()) - 1;
        return kNnzWeight * j + kRowWeight * row;
    };
    std::uint64_t total = weight(A.nnz);
    std::vector<std::uint64_t> bounds(threads + 1);
    for (std::uint64_t t = 0; t <= threads; ++t) {
        std::uint64_t target = total / threads * t + total % threads * t / threads;
        std::uint64_t lo = 0, hi = A.nnz;  // smallest j with weight(j) >= target
        while (lo < hi) {
            std::uint64_t mid = (lo + hi) / 2;
            if (weight(mid) < target)
                lo = mid + 1;
            else
                hi = mid;
        }
        std::uint64_t j = lo;
        if (row_aligned) {
            auto it = std::lower_bound(A.row_ptr.begin(), A.row_ptr.end(), j);
            j = *it;
        }
        bounds[t] = j;
    }
    bounds[0] = 0;
    bounds[threads] = A.nnz;
    return bounds;
}

// First row whose nonzeros extend past j.
std::uint64_t row_of(const CsrMatrix& A, std::uint64_t j) {
    auto it = std::upper_bound(A.row_ptr.begin(), A.row_ptr.end(), j);
    return (std::uint64_t)(it - A.row_ptr.begin()) - 1;
}

}  // namespace

SpmvVariant spmv_variant_from_string(const std::string& s) {
    if (s == "base") return SpmvVariant::Base;
    if (s == "selective") return SpmvVariant::Selective;
    if (s == "dma") return SpmvVariant::Dma;
    if (s == "cache_all") return SpmvVariant::CacheAll;
    throw ConfigError("unknown SpMV variant '" + s + "'");
}

std::string to_string(SpmvVariant v) {
    switch (v) {
        case SpmvVariant::Base: return "base";
        case SpmvVariant::Selective: return "selective";
        case SpmvVariant::Dma: return "dma";
        case SpmvVariant::CacheAll: return "cache_all";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// SpMV

namespace {

struct SpmvArgs {
    SpmvVariant variant = SpmvVariant::Base;
    bool float_mode = false;
    bool atomic_combine = false;  // rows may be split across threads
    std::uint64_t j0 = 0, j1 = 0;
    std::uint64_t r0 = 0;       // row containing j0
    std::uint64_t blk_row0 = 0, blk_nnz0 = 0;  // slice offsets
    std::uint64_t rp_base = 0, ci_base = 0, va_base = 0;
    std::uint64_t x_base = 0, y_base = 0;
    bool cache_matrix = false, cache_vector = false;
    std::uint64_t chunk = 0;
    int depth = 2;
    std::uint32_t spad_off = 0;
};

KernelTask spmv_thread(KernelCtx& ctx, SpmvArgs a) {
    if (a.j0 >= a.j1) co_return;
    std::uint64_t r = a.r0;
    std::uint64_t rp1 =
        co_await ctx.load(a.rp_base + 8 * (r + 1 - a.blk_row0), a.cache_matrix);
    std::uint64_t j = a.j0;
    while (j < a.j1) {
        while (rp1 <= j) {  // advance past empty rows
            ++r;
            rp1 = co_await ctx.load(a.rp_base + 8 * (r + 1 - a.blk_row0), a.cache_matrix);
            co_await ctx.branch();
        }
        std::uint64_t row_end = std::min(rp1, a.j1);
        std::uint64_t acc = 0;
        double facc = 0.0;
        for (std::uint64_t k = j; k < row_end; ++k) {
            std::uint64_t ci =
                co_await ctx.load(a.ci_base + 8 * (k - a.blk_nnz0), a.cache_matrix);
            std::uint64_t av =
                co_await ctx.load(a.va_base + 8 * (k - a.blk_nnz0), a.cache_matrix);
            std::uint64_t xv = co_await ctx.load(a.x_base + 8 * ci, a.cache_vector);
            if (a.float_mode)
                facc += bits_to_d(av) * bits_to_d(xv);
            else
                acc += av * xv;
            co_await ctx.alu();
            co_await ctx.alu();
        }
        if (a.atomic_combine) {
            // Posted update: nothing depends on the old value, so do not wait.
            co_await ctx.remote_atomic(AtomicOp::Add, a.y_base + 8 * r, acc);
        } else {
            co_await ctx.store(a.y_base + 8 * r, a.float_mode ? d_to_bits(facc) : acc);
        }
        co_await ctx.branch();
        j = row_end;
    }
}

// Double-buffered gather pipeline: contiguous ci segments (ignoring row
// boundaries) stream into two SPAD windows; rows are finished during
// post-processing as the walk crosses row_ptr boundaries.
KernelTask spmv_dma_thread(KernelCtx& ctx, SpmvArgs a) {
    if (a.j0 >= a.j1) co_return;
    std::uint64_t r = a.r0;
    std::uint64_t rp1 = 0;  // loaded after the first transfers are in flight
    bool have_rp = false;
    std::uint64_t acc = 0;
    double facc = 0.0;
    bool dirty = false;
    const int kDepth = a.depth;
    std::uint64_t gh[8] = {}, fh[8] = {}, gc0[8] = {}, gcnt[8] = {};
    std::uint64_t next = a.j0;
    int count = 0, head = 0;
    while (count > 0 || next < a.j1) {
        while (count < kDepth && next < a.j1) {
            int s = (head + count) % kDepth;
            std::uint64_t cnt = std::min(a.chunk, a.j1 - next);
            gh[s] = co_await ctx.dma_gather(
                a.x_base, a.ci_base + 8 * (next - a.blk_nnz0), cnt,
                a.spad_off + (std::uint32_t)(s * a.chunk * 8));
            fh[s] = co_await ctx.dma_fill(
                a.va_base + 8 * (next - a.blk_nnz0), cnt,
                a.spad_off + (std::uint32_t)((kDepth + s) * a.chunk * 8));
            gc0[s] = next;
            gcnt[s] = cnt;
            next += cnt;
            ++count;
        }
        int s = head;
        head = (head + 1) % kDepth;
        --count;
        if (!have_rp) {
            rp1 = co_await ctx.load(a.rp_base + 8 * (r + 1 - a.blk_row0), a.cache_matrix);
            have_rp = true;
        }
        co_await ctx.wait((int)gh[s]);
        co_await ctx.wait((int)fh[s]);
        for (std::uint64_t k = 0; k < gcnt[s]; ++k) {
            std::uint64_t jj = gc0[s] + k;
            while (jj >= rp1) {  // row r complete
                if (dirty) {
                    if (a.atomic_combine)
                        co_await ctx.remote_atomic(AtomicOp::Add, a.y_base + 8 * r, acc);
                    else
                        co_await ctx.store(a.y_base + 8 * r,
                                           a.float_mode ? d_to_bits(facc) : acc);
                    acc = 0;
                    facc = 0.0;
                    dirty = false;
                }
                ++r;
                rp1 = co_await ctx.load(a.rp_base + 8 * (r + 1 - a.blk_row0), a.cache_matrix);
                co_await ctx.branch();
            }
            std::uint64_t xv = co_await ctx.spad_load(
                a.spad_off + (std::uint32_t)(s * a.chunk * 8 + 8 * k));
            std::uint64_t av = co_await ctx.spad_load(
                a.spad_off + (std::uint32_t)((kDepth + s) * a.chunk * 8 + 8 * k));
            if (a.float_mode)
                facc += bits_to_d(av) * bits_to_d(xv);
            else
                acc += av * xv;
            dirty = true;
            co_await ctx.alu();
            co_await ctx.alu();
        }
    }
    if (dirty) {
        if (a.atomic_combine)
            co_await ctx.remote_atomic(AtomicOp::Add, a.y_base + 8 * r, acc);
        else
            co_await ctx.store(a.y_base + 8 * r, a.float_mode ? d_to_bits(facc) : acc);
    }
}

}  // namespace

SpmvBuild build_spmv(Machine& m, const CsrMatrix& A, const std::vector<std::uint64_t>& x,
                     SpmvVariant variant, bool float_mode) {
    if (!A.valid()) throw std::invalid_argument("build_spmv: invalid CSR matrix");
    if (x.size() != A.n) throw std::invalid_argument("build_spmv: vector size mismatch");
    const MachineConfig& cfg = m.config();
    std::uint64_t blocks = cfg.blocks();
    std::uint64_t tpb = cfg.threads_per_block();
    std::uint64_t threads = blocks * tpb;

    SpmvBuild build;
    build.n = A.n;
    build.nnz = A.nnz;
    build.float_mode = float_mode;
    build.thread_bounds = partition_nnz(A, threads, /*row_aligned=*/float_mode);

    bool cache_matrix = variant != SpmvVariant::Base;
    bool cache_vector = variant == SpmvVariant::CacheAll;

    // The vector is stored permuted: RMAT hub columns cluster at small ids,
    // and under plain modulo interleave their reads would pile onto a few
    // controllers. col_idx stores the permuted slot, so kernels are unchanged.
    std::vector<std::uint64_t> slot(A.n);
    for (std::uint64_t i = 0; i < A.n; ++i) slot[i] = i;
    std::mt19937_64 scramble_rng(0x5ca1ab1eull);
    std::shuffle(slot.begin(), slot.end(), scramble_rng);

    build.x_base = m.alloc_interleaved("vector", A.n * 8, cache_vector);
    for (std::uint64_t i = 0; i < A.n; ++i) m.poke(build.x_base + 8 * slot[i], x[i]);
    // The output is never cached: per-core caches are incoherent and a
    // 64-byte line can span rows owned by different cores.
    build.y_base = m.alloc_interleaved("result", A.n * 8, false);

    // Double-buffered pairs of vector/values SPAD windows per thread. Small
    // segments (half the engine concurrency) keep every directive inside one
    // pipelined round, so completions stay spread out instead of arriving in
    // waves that leave the controllers idle between bursts.
    const int depth = 2;
    std::uint64_t chunk =
        cfg.spad.size_bytes / (16 * (std::uint64_t)depth * std::max<std::uint64_t>(tpb, 1));
    chunk = std::min(chunk, std::max<std::uint64_t>(cfg.engine_concurrency / 2, 1));
    chunk = std::max<std::uint64_t>(1, chunk);

    for (std::uint64_t b = 0; b < blocks; ++b) {
        SpmvBuild::BlockSlice s;
        s.nnz0 = build.thread_bounds[b * tpb];
        s.nnz1 = build.thread_bounds[(b + 1) * tpb];
        s.row0 = s.nnz0 < s.nnz1 ? row_of(A, s.nnz0) : 0;
        s.row1 = s.nnz0 < s.nnz1 ? row_of(A, s.nnz1 - 1) + 1 : 0;
        std::uint64_t rows = s.row1 - s.row0;
        std::uint64_t slice_nnz = s.nnz1 - s.nnz0;
        s.rp_base = m.alloc_on_block("row_ptr", (rows + 1) * 8, (int)b, cache_matrix);
        s.ci_base = m.alloc_on_block("col_idx", std::max<std::uint64_t>(slice_nnz, 1) * 8,
                                     (int)b, cache_matrix);
        s.va_base = m.alloc_on_block("values", std::max<std::uint64_t>(slice_nnz, 1) * 8,
                                     (int)b, cache_matrix);
        for (std::uint64_t r = 0; r <= rows; ++r)
            m.poke(s.rp_base + 8 * r, A.row_ptr[s.row0 + r]);
        for (std::uint64_t j = 0; j < slice_nnz; ++j) {
            m.poke(s.ci_base + 8 * j, slot[A.col_idx[s.nnz0 + j]]);
            m.poke(s.va_base + 8 * j, A.values[s.nnz0 + j]);
        }
        build.slices.push_back(s);

        // The dma variant gathers from a block-local replica of the vector:
        // element reads then hit every controller uniformly instead of piling
        // onto the home controllers of the hub columns.
        std::uint64_t xb = build.x_base;
        if (variant == SpmvVariant::Dma) {
            xb = m.alloc_on_block("vector", A.n * 8, (int)b, false);
            for (std::uint64_t i = 0; i < A.n; ++i) m.poke(xb + 8 * slot[i], x[i]);
        }

        for (std::uint64_t k = 0; k < tpb; ++k) {
            std::uint64_t t = b * tpb + k;
            SpmvArgs args;
            args.variant = variant;
            args.float_mode = float_mode;
            args.atomic_combine = !float_mode;
            args.j0 = build.thread_bounds[t];
            args.j1 = build.thread_bounds[t + 1];
            args.r0 = args.j0 < args.j1 ? row_of(A, args.j0) : 0;
            args.blk_row0 = s.row0;
            args.blk_nnz0 = s.nnz0;
            args.rp_base = s.rp_base;
            args.ci_base = s.ci_base;
            args.va_base = s.va_base;
            args.x_base = xb;
            args.y_base = build.y_base;
            args.cache_matrix = cache_matrix;
            args.cache_vector = cache_vector;
            args.chunk = chunk;
            args.depth = depth;
            args.spad_off = (std::uint32_t)(k * 2 * (std::uint64_t)depth * chunk * 8);
            if (variant == SpmvVariant::Dma)
                m.add_mtc_thread((int)b, (int)(k / cfg.threads_per_mtc),
                                 [args](KernelCtx& ctx) { return spmv_dma_thread(ctx, args); });
            else
                m.add_mtc_thread((int)b, (int)(k / cfg.threads_per_mtc),
                                 [args](KernelCtx& ctx) { return spmv_thread(ctx, args); });
        }
    }
    return build;
}

std::uint64_t SpmvBuild::result(const Machine& m, std::uint64_t row) const {
    return m.peek(y_base + 8 * row);
}

std::vector<std::uint64_t> SpmvBuild::result_vector(const Machine& m) const {
    std::vector<std::uint64_t> y(n, 0);
    for (std::uint64_t r = 0; r < n; ++r) y[r] = m.peek(y_base + 8 * r);
    return y;
}

std::vector<std::uint64_t> spmv_reference(const CsrMatrix& A,
                                          const std::vector<std::uint64_t>& x,
                                          bool float_mode) {
    std::vector<std::uint64_t> y(A.n, 0);
    for (std::uint64_t r = 0; r < A.n; ++r) {
        if (float_mode) {
            double acc = 0.0;
            for (std::uint64_t j = A.row_ptr[r]; j < A.row_ptr[r + 1]; ++j)
                acc += bits_to_d(A.values[j]) * bits_to_d(x[A.col_idx[j]]);
            y[r] = d_to_bits(acc);
        } else {
            std::uint64_t acc = 0;
            for (std::uint64_t j = A.row_ptr[r]; j < A.row_ptr[r + 1]; ++j)
                acc += A.values[j] * x[A.col_idx[j]];
            y[r] = acc;
        }
    }
    return y;
}

// ---------------------------------------------------------------------------
// BFS

namespace {

struct BfsArgs {
    std::uint64_t rp_base = 0, ci_base = 0, parent_base = 0, level_base = 0;
    int q_even = 0, q_odd = 0;
    // The group is created after every member thread exists, which is after
    // the coroutine frames (and their copy of the args) are built, so the id
    // arrives through a shared slot read when the kernel first needs it.
    std::shared_ptr<int> group;
};

KernelTask bfs_thread(KernelCtx& ctx, BfsArgs a) {
    std::uint64_t lvl = 0;
    int cur = a.q_even, nxt = a.q_odd;
    for (;;) {
        std::uint64_t enq = 0;
        for (;;) {
            std::uint64_t h = co_await ctx.dequeue(cur);
            std::uint64_t v = co_await ctx.wait((int)h);
            if (ctx.queue_status() == QueueStatus::Empty) break;
            std::uint64_t rp0 = co_await ctx.load(a.rp_base + 8 * v);
            std::uint64_t rp1 = co_await ctx.load(a.rp_base + 8 * (v + 1));
            for (std::uint64_t j = rp0; j < rp1; ++j) {
                std::uint64_t c = co_await ctx.load(a.ci_base + 8 * j);
                std::uint64_t ch = co_await ctx.remote_atomic(
                    AtomicOp::Cas, a.parent_base + 8 * c, kBfsNoParent, v);
                std::uint64_t old = co_await ctx.wait((int)ch);
                co_await ctx.branch();
                if (old == kBfsNoParent) {
                    co_await ctx.store(a.level_base + 8 * c, lvl + 1);
                    std::uint64_t eh = co_await ctx.enqueue(nxt, c);
                    co_await ctx.wait((int)eh);
                    ++enq;
                }
            }
        }
        std::uint64_t h = co_await ctx.reduce(*a.group, CollOp::Add, enq);
        std::uint64_t total = co_await ctx.wait((int)h);
        if (total == 0) co_return;
        ++lvl;
        std::swap(cur, nxt);
    }
}

}  // namespace

BfsBuild build_bfs(Machine& m, const CsrMatrix& graph, std::uint64_t root) {
    if (!graph.valid()) throw std::invalid_argument("build_bfs: invalid graph");
    if (root >= graph.n) throw std::out_of_range("build_bfs: root out of range");
    const MachineConfig& cfg = m.config();
    std::uint64_t blocks = cfg.blocks();
    std::uint64_t tpb = cfg.threads_per_block();

    BfsBuild build;
    build.n = graph.n;
    build.root = root;
    std::uint64_t rp = m.alloc_interleaved("bfs_row_ptr", (graph.n + 1) * 8, false);
    std::uint64_t ci = m.alloc_interleaved("bfs_col_idx",
                                           std::max<std::uint64_t>(graph.nnz, 1) * 8, false);
    build.parent_base = m.alloc_interleaved("bfs_parent", graph.n * 8, false);
    build.level_base = m.alloc_interleaved("bfs_level", graph.n * 8, false);
    for (std::uint64_t i = 0; i <= graph.n; ++i) m.poke(rp + 8 * i, graph.row_ptr[i]);
    for (std::uint64_t j = 0; j < graph.nnz; ++j) m.poke(ci + 8 * j, graph.col_idx[j]);
    for (std::uint64_t v = 0; v < graph.n; ++v) m.poke(build.parent_base + 8 * v, kBfsNoParent);
    m.poke(build.parent_base + 8 * root, root);
    m.poke(build.level_base + 8 * root, 0);

    std::uint64_t cap = graph.n + 1;
    std::uint64_t q0_mem = m.alloc_on_block("bfs_q_even", 16 + cap * 8, 0, false);
    std::uint64_t q1_mem = m.alloc_on_block("bfs_q_odd", 16 + cap * 8,
                                            blocks > 1 ? 1 : 0, false);
    int q0 = m.create_queue(q0_mem, cap);
    int q1 = m.create_queue(q1_mem, cap);
    // Seed the even-level frontier with the root.
    m.poke(q0_mem + 8, 1);
    m.poke(q0_mem + 16, root);

    std::vector<int> thread_ids;
    BfsArgs args;
    args.rp_base = rp;
    args.ci_base = ci;
    args.parent_base = build.parent_base;
    args.level_base = build.level_base;
    args.q_even = q0;
    args.q_odd = q1;
    args.group = std::make_shared<int>(-1);
    for (std::uint64_t b = 0; b < blocks; ++b)
        for (std::uint64_t k = 0; k < tpb; ++k)
            thread_ids.push_back(
                m.add_mtc_thread((int)b, (int)(k / cfg.threads_per_mtc),
                                 [args](KernelCtx& ctx) { return bfs_thread(ctx, args); }));
    *args.group = m.create_group(thread_ids);
    return build;
}

std::uint64_t BfsBuild::parent(const Machine& m, std::uint64_t v) const {
    return m.peek(parent_base + 8 * v);
}
std::uint64_t BfsBuild::level(const Machine& m, std::uint64_t v) const {
    return m.peek(level_base + 8 * v);
}

std::vector<std::uint64_t> bfs_reference_levels(const CsrMatrix& graph, std::uint64_t root) {
    std::vector<std::uint64_t> level(graph.n, kBfsNoParent);
    std::vector<std::uint64_t> frontier = {root};
    level[root] = 0;
    while (!frontier.empty()) {
        std::vector<std::uint64_t> next;
        for (auto v : frontier)
            for (std::uint64_t j = graph.row_ptr[v]; j < graph.row_ptr[v + 1]; ++j) {
                std::uint64_t c = graph.col_idx[j];
                if (level[c] == kBfsNoParent) {
                    level[c] = level[v] + 1;
                    next.push_back(c);
                }
            }
        frontier = std::move(next);
    }
    return level;
}

// ---------------------------------------------------------------------------
// Microbenchmarks

namespace {

struct RaArgs {
    std::uint64_t base = 0, words = 0, ops = 0, seed = 0;
};

KernelTask random_access_thread(KernelCtx& ctx, RaArgs a) {
    std::uint64_t s = a.seed;
    for (std::uint64_t k = 0; k < a.ops; ++k) {
        s = lcg(s);
        co_await ctx.load(a.base + 8 * (s % a.words));
        co_await ctx.alu();
    }
}

struct ChainArgs {
    std::uint64_t base = 0, start = 0, hops = 0;
};

KernelTask chain_thread(KernelCtx& ctx, ChainArgs a) {
    std::uint64_t cur = a.start;
    for (std::uint64_t k = 0; k < a.hops; ++k) cur = co_await ctx.load(a.base + 8 * cur);
    co_await ctx.store(a.base + 8 * a.start, cur);  // keep the chain observable
}

struct WalkArgs {
    std::uint64_t rp_base = 0, ci_base = 0, n = 0;
    std::uint64_t start = 0, steps = 0, seed = 0;
};

KernelTask walk_thread(KernelCtx& ctx, WalkArgs a) {
    std::uint64_t cur = a.start;
    std::uint64_t s = a.seed;
    std::uint64_t taken = 0;
    while (taken < a.steps) {
        std::uint64_t rp0 = co_await ctx.load(a.rp_base + 8 * cur);
        std::uint64_t rp1 = co_await ctx.load(a.rp_base + 8 * (cur + 1));
        co_await ctx.branch();
        if (rp0 == rp1) {  // dead end: restart elsewhere, not a traversal
            s = lcg(s);
            cur = s % a.n;
            continue;
        }
        s = lcg(s);
        cur = co_await ctx.load(a.ci_base + 8 * (rp0 + s % (rp1 - rp0)));
        ctx.bump("walk_steps");
        ++taken;
    }
}

}  // namespace

void build_random_access(Machine& m, std::uint64_t footprint_words,
                         std::uint64_t ops_per_thread, std::uint64_t seed) {
    const MachineConfig& cfg = m.config();
    std::uint64_t base = m.alloc_interleaved("ra_data", footprint_words * 8, false);
    std::uint64_t t = 0;
    for (std::uint64_t b = 0; b < cfg.blocks(); ++b)
        for (std::uint64_t k = 0; k < cfg.threads_per_block(); ++k, ++t) {
            RaArgs a{base, footprint_words, ops_per_thread, seed + t * 0x51ed2701u + 1};
            m.add_mtc_thread((int)b, (int)(k / cfg.threads_per_mtc),
                             [a](KernelCtx& ctx) { return random_access_thread(ctx, a); });
        }
}

void build_indirection_chain(Machine& m, std::uint64_t length, std::uint64_t hops_per_thread,
                             std::uint64_t seed, int num_threads) {
    std::uint64_t base = m.alloc_interleaved("chain", length * 8, false);
    std::vector<std::uint64_t> perm(length);
    for (std::uint64_t i = 0; i < length; ++i) perm[i] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::uint64_t i = 0; i < length; ++i)
        m.poke(base + 8 * perm[i], perm[(i + 1) % length]);
    const MachineConfig& cfg = m.config();
    for (int t = 0; t < num_threads; ++t) {
        ChainArgs a{base, perm[(std::uint64_t)t * length / num_threads], hops_per_thread};
        std::uint64_t slot = (std::uint64_t)t;
        std::uint64_t b = slot / cfg.threads_per_block();
        std::uint64_t k = slot % cfg.threads_per_block();
        m.add_mtc_thread((int)b, (int)(k / cfg.threads_per_mtc),
                         [a](KernelCtx& ctx) { return chain_thread(ctx, a); });
    }
}

void build_random_walk(Machine& m, const CsrMatrix& graph, std::uint32_t walk_length,
                       std::uint64_t seed) {
    if (!graph.valid()) throw std::invalid_argument("build_random_walk: invalid graph");
    const MachineConfig& cfg = m.config();
    std::uint64_t rp = m.alloc_interleaved("walk_row_ptr", (graph.n + 1) * 8, false);
    std::uint64_t ci = m.alloc_interleaved("walk_col_idx",
                                           std::max<std::uint64_t>(graph.nnz, 1) * 8, false);
    for (std::uint64_t i = 0; i <= graph.n; ++i) m.poke(rp + 8 * i, graph.row_ptr[i]);
    for (std::uint64_t j = 0; j < graph.nnz; ++j) m.poke(ci + 8 * j, graph.col_idx[j]);
    std::uint64_t t = 0;
    for (std::uint64_t b = 0; b < cfg.blocks(); ++b)
        for (std::uint64_t k = 0; k < cfg.threads_per_block(); ++k, ++t) {
            WalkArgs a;
            a.rp_base = rp;
            a.ci_base = ci;
            a.n = graph.n;
            a.start = (seed + t * 977) % graph.n;
            a.steps = walk_length;
            a.seed = seed ^ (t * 0x2545f4914f6cdd1dull);
            m.add_mtc_thread((int)b, (int)(k / cfg.threads_per_mtc),
                             [a](KernelCtx& ctx) { return walk_thread(ctx, a); });
        }
}

}  // namespace piuma
