// End-to-end acceptance gate. Each check prints one PASS/FAIL line; the
// process exits 0 only if every check passes.

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <vector>

#include "piuma/analysis.hpp"
#include "piuma/machine.hpp"
#include "piuma/workloads.hpp"

using namespace piuma;

namespace {

int failures = 0;

void report(bool ok, const std::string& what, const std::string& detail = "") {
    std::cout << (ok ? "PASS" : "FAIL") << ": " << what;
    if (!detail.empty()) std::cout << "  [" << detail << "]";
    std::cout << "\n";
    if (!ok) ++failures;
}

std::vector<std::uint64_t> make_x(std::uint64_t n, std::uint64_t seed, bool float_mode) {
    std::vector<std::uint64_t> x(n);
    std::mt19937_64 rng(seed ^ 0xa0761d6478bd642full);
    if (float_mode) {
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        for (auto& v : x) {
            double d = uni(rng);
            std::memcpy(&v, &d, 8);
        }
    } else {
        for (auto& v : x) v = 1 + rng() % 9;
    }
    return x;
}

CsrMatrix make_matrix(std::uint32_t scale, std::uint32_t ef, std::uint64_t seed,
                      bool float_mode) {
    EdgeList el = rmat_generate(scale, ef, 0.57, 0.19, 0.19, 0.05, seed);
    CsrMatrix A = csr_from_edges(el, el.n);
    assign_values(A, seed, float_mode);
    return A;
}

std::string fmt(double v) { return format_double(v); }

// Everything the checks need from one SpMV run.
struct SpmvRun {
    Cycles cycles = 0;
    bool verified = false;
    double mean_ctrl_util = 0.0;
    double fetch_efficiency = 0.0;
    std::uint64_t fetched_total = 0;
    std::uint64_t dma_ingress = 0;  // dma-class payload delivered into blocks
    LineHistogram vector_lines{};
    ScaleoutInputs scaleout;
};

SpmvRun run_spmv(const CsrMatrix& A, const std::vector<std::uint64_t>& x, SpmvVariant variant,
                 bool float_mode, bool prefetch = false) {
    MachineConfig mc;
    mc.prefetch_next_line = prefetch;
    Machine m(mc);
    SpmvBuild b = build_spmv(m, A, x, variant, float_mode);
    SpmvRun r;
    if (m.run() != SimEngine::Stop::AllDone) return r;
    m.finalize();
    r.cycles = m.engine().now();
    r.verified = b.result_vector(m) == spmv_reference(A, x, float_mode);
    BandwidthReport bw = bandwidth_report(m.ledger(), r.cycles);
    r.mean_ctrl_util = bw.mean_utilization;
    r.fetch_efficiency = bw.efficiency;
    for (const auto& c : m.ledger().controllers) r.fetched_total += c.fetched_bytes;
    for (const auto& bi : m.ledger().block_ingress)
        r.dma_ingress += bi.payload_bytes[(int)PacketClass::Dma];
    LineReport lines = cacheline_histogram(m.ledger(), m.regions());
    for (const auto& [name, hist] : lines.by_region)
        if (name == "vector")
            for (int i = 0; i < 9; ++i) r.vector_lines[i] += hist[i];
    r.scaleout = scaleout_inputs(m.ledger(), r.cycles);
    return r;
}

// ---------------------------------------------------------------------------
// Criterion 4 helpers: barrel pipeline throughput.

KernelTask load_loop(KernelCtx& ctx, std::uint64_t base, std::uint64_t n) {
    for (std::uint64_t i = 0; i < n; ++i) co_await ctx.load(base + 8 * (i % 8));
}

double barrel_throughput(int threads, std::uint32_t dram_latency) {
    MachineConfig cfg;
    cfg.network.dims = {1};
    cfg.mtc_per_block = 1;
    cfg.threads_per_mtc = 64;
    cfg.dram.latency = dram_latency;
    cfg.dram.bandwidth = 1e9;  // latency-only regime
    Machine m(cfg);
    std::uint64_t base = m.alloc_on_block("data", 4096, 0, false);
    const std::uint64_t per_thread = 200;
    for (int t = 0; t < threads; ++t)
        m.add_mtc_thread(0, 0, [base](KernelCtx& ctx) { return load_loop(ctx, base, 200); });
    if (m.run() != SimEngine::Stop::AllDone) return 0.0;
    return (double)((std::uint64_t)threads * per_thread) / (double)m.engine().now();
}

// ---------------------------------------------------------------------------
// Criterion 6 helpers: one shared counter, 64 contending threads.

KernelTask atomic_inc(KernelCtx& ctx, std::uint64_t ctr, std::uint64_t n) {
    for (std::uint64_t i = 0; i < n; ++i) {
        std::uint64_t h = co_await ctx.remote_atomic(AtomicOp::Add, ctr, 1);
        co_await ctx.wait((int)h);
    }
}

KernelTask locked_inc(KernelCtx& ctx, std::uint64_t lock, std::uint64_t ctr, std::uint64_t n) {
    for (std::uint64_t i = 0; i < n; ++i) {
        for (;;) {  // spin acquire
            std::uint64_t h = co_await ctx.remote_atomic(AtomicOp::Cas, lock, 0, 1);
            if (co_await ctx.wait((int)h) == 0) break;
        }
        std::uint64_t v = co_await ctx.load(ctr);
        co_await ctx.store(ctr, v + 1);
        co_await ctx.store(lock, 0);  // release
    }
}

struct ContendOutcome {
    Cycles cycles = 0;
    std::uint64_t network_bytes = 0;
    std::uint64_t final_count = 0;
};

ContendOutcome run_contention(bool use_lock, std::uint64_t incs_per_thread) {
    MachineConfig cfg;
    cfg.network.dims = {4, 4};
    cfg.mtc_per_block = 1;
    cfg.threads_per_mtc = 8;
    Machine m(cfg);
    std::uint64_t mem = m.alloc_on_block("counter", 64, 15, false);
    std::uint64_t ctr = mem, lock = mem + 8;
    int placed = 0;
    for (int b = 0; b < 8 && placed < 64; ++b)  // blocks 0..7: all remote from block 15
        for (int t = 0; t < 8 && placed < 64; ++t, ++placed)
            m.add_mtc_thread(b, 0, [=](KernelCtx& ctx) {
                return use_lock ? locked_inc(ctx, lock, ctr, incs_per_thread)
                                : atomic_inc(ctx, ctr, incs_per_thread);
            });
    ContendOutcome out;
    if (m.run() != SimEngine::Stop::AllDone) return out;
    m.finalize();
    out.cycles = m.engine().now();
    for (const auto& l : m.ledger().links) {
        out.network_bytes += l.header_bytes;
        for (auto p : l.payload_bytes) out.network_bytes += p;
    }
    out.final_count = m.peek(ctr);
    return out;
}

// ---------------------------------------------------------------------------
// Criterion 9 helpers.

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct ReplayArtifacts {
    std::map<std::string, std::string> reports;
    std::vector<std::string> event_log;
};

ReplayArtifacts run_for_replay(const std::string& dir) {
    CsrMatrix A = make_matrix(10, 16, 3, false);
    auto x = make_x(A.n, 3, false);
    MachineConfig mc;
    Machine m(mc);
    std::vector<std::string> log;
    m.set_event_log(&log);
    SpmvBuild b = build_spmv(m, A, x, SpmvVariant::Dma, false);
    if (m.run() != SimEngine::Stop::AllDone) throw std::runtime_error("replay run stalled");
    m.finalize();
    RunConfig cfg;
    cfg.machine = mc;
    cfg.workload.kind = "spmv";
    cfg.workload.variant = "dma";
    cfg.workload.scale = 10;
    cfg.workload.seed = 3;
    RunResult res{.workload_label = "spmv/dma", .stop = SimEngine::Stop::AllDone,
                  .elapsed = m.engine().now(),
                  .verified = b.result_vector(m) == spmv_reference(A, x, false),
                  .verify_note = ""};
    std::filesystem::remove_all(dir);
    write_reports(dir, cfg, res, m.ledger(), m.regions());
    ReplayArtifacts art;
    art.event_log = std::move(log);
    for (const auto& e : std::filesystem::directory_iterator(dir))
        art.reports[e.path().filename().string()] = slurp(e.path());
    std::filesystem::remove_all(dir);
    return art;
}

}  // namespace

int main() {
    std::cout << "acceptance: SpMV sweep on a scale-13, edge-factor-16 generated matrix\n";
    CsrMatrix A13 = make_matrix(13, 16, 1, false);
    auto x13 = make_x(A13.n, 1, false);
    SpmvRun base = run_spmv(A13, x13, SpmvVariant::Base, false);
    SpmvRun sel = run_spmv(A13, x13, SpmvVariant::Selective, false);
    SpmvRun dma = run_spmv(A13, x13, SpmvVariant::Dma, false);
    SpmvRun call = run_spmv(A13, x13, SpmvVariant::CacheAll, false);

    // 1. Variant ordering and throughput ratios.
    {
        bool order = dma.cycles < sel.cycles && sel.cycles < base.cycles &&
                     base.cycles < call.cycles && dma.cycles > 0;
        double sel_vs_base = (double)base.cycles / (double)sel.cycles;
        double dma_vs_sel = (double)sel.cycles / (double)dma.cycles;
        double call_vs_base = (double)base.cycles / (double)call.cycles;
        bool ratios = sel_vs_base >= 1.3 && sel_vs_base <= 3.0 && dma_vs_sel >= 1.2 &&
                      dma_vs_sel <= 2.0 && call_vs_base < 1.0;
        report(order && ratios,
               "variant throughput ordering dma > selective > base > cache_all with bounded "
               "ratios",
               "cycles base=" + std::to_string(base.cycles) + " sel=" +
                   std::to_string(sel.cycles) + " dma=" + std::to_string(dma.cycles) +
                   " cache_all=" + std::to_string(call.cycles) + "; sel/base=" +
                   fmt(sel_vs_base) + " dma/sel=" + fmt(dma_vs_sel) + " cache_all/base=" +
                   fmt(call_vs_base));
    }

    // 2. Bandwidth saturation and fetch efficiency.
    {
        bool util = dma.mean_ctrl_util >= 0.90;
        bool eff = dma.fetch_efficiency >= 0.95;
        bool waste = call.fetched_total >= 2 * base.fetched_total;
        report(util && eff && waste,
               "dma saturates controllers and fetches almost nothing it does not use",
               "mean util=" + fmt(dma.mean_ctrl_util) + " efficiency=" +
                   fmt(dma.fetch_efficiency) + " fetched cache_all/base=" +
                   fmt((double)call.fetched_total / (double)base.fetched_total));
    }

    // 3. Cache-line harvest of the cached, prefetched vector stream.
    {
        SpmvRun pf = run_spmv(A13, x13, SpmvVariant::CacheAll, false, /*prefetch=*/true);
        auto f = histogram_fractions(pf.vector_lines);
        double mass = f[0] + f[1] + f[8];
        int mode = 0;
        for (int i = 1; i < 9; ++i)
            if (pf.vector_lines[i] > pf.vector_lines[mode]) mode = i;
        report(pf.verified && mass >= 0.80 && mode == 1,
               "sparse vector lines are mostly 0-, 8- or 64-byte used, 8 bytes the mode",
               "mass{0,8,64}=" + fmt(mass) + " mode_bucket_bytes=" + std::to_string(8 * mode));
    }

    // 4. Barrel pipeline law: throughput = min(T / (L + 1), 1).
    {
        bool ok = true;
        std::string worst;
        double worst_err = 0.0;
        for (std::uint32_t L : {50u, 100u, 200u})
            for (int T : {1, 4, 16, 64}) {
                double got = barrel_throughput(T, L);
                double want = std::min((double)T / ((double)L + 1.0), 1.0);
                double err = std::abs(got - want) / want;
                if (err > worst_err) {
                    worst_err = err;
                    worst = "T=" + std::to_string(T) + ",L=" + std::to_string(L);
                }
                ok = ok && err <= 0.05;
            }
        report(ok, "throughput matches min(T/(L+1), 1) within 5%",
               "worst case " + worst + " err=" + fmt(worst_err));
    }

    // 5. Functional equivalence across ten seeds.
    {
        bool spmv_ok = true, bfs_ok = true;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            CsrMatrix A = make_matrix(10, 8, seed, false);
            auto x = make_x(A.n, seed, false);
            for (auto v : {SpmvVariant::Base, SpmvVariant::Selective, SpmvVariant::Dma,
                           SpmvVariant::CacheAll})
                spmv_ok = spmv_ok && run_spmv(A, x, v, false).verified;

            std::uint64_t root = 0;
            for (std::uint64_t u = 1; u < A.n; ++u)
                if (A.row_ptr[u + 1] - A.row_ptr[u] > A.row_ptr[root + 1] - A.row_ptr[root])
                    root = u;
            auto want = bfs_reference_levels(A, root);
            Machine m((MachineConfig()));
            BfsBuild b = build_bfs(m, A, root);
            bfs_ok = bfs_ok && m.run() == SimEngine::Stop::AllDone;
            for (std::uint64_t v = 0; bfs_ok && v < A.n; ++v) {
                std::uint64_t p = b.parent(m, v);
                if (want[v] == kBfsNoParent)
                    bfs_ok = p == kBfsNoParent;
                else
                    bfs_ok = p != kBfsNoParent && b.level(m, v) == want[v];
            }
        }
        report(spmv_ok && bfs_ok,
               "all SpMV variants and the graph search validate on ten seeds",
               std::string("spmv=") + (spmv_ok ? "ok" : "bad") + " bfs=" +
                   (bfs_ok ? "ok" : "bad"));
    }

    // 6. Remote atomics beat lock emulation under contention.
    {
        const std::uint64_t n = 16;
        ContendOutcome a = run_contention(false, n);
        ContendOutcome l = run_contention(true, n);
        bool exact = a.final_count == 64 * n && l.final_count == 64 * n;
        bool fewer = a.network_bytes < l.network_bytes && a.cycles < l.cycles &&
                     a.cycles > 0 && l.cycles > 0;
        report(exact && fewer,
               "64 contending threads: remote atomics use fewer bytes and cycles than a lock",
               "atomic " + std::to_string(a.cycles) + " cyc/" + std::to_string(a.network_bytes) +
                   " B vs lock " + std::to_string(l.cycles) + " cyc/" +
                   std::to_string(l.network_bytes) + " B, count=" +
                   std::to_string(a.final_count));
    }

    // 7. Gather payload accounting: exactly one 8-byte element per nonzero.
    {
        report(dma.dma_ingress == 8 * A13.nnz,
               "dma-class ingress equals 8 bytes per nonzero, exactly",
               std::to_string(dma.dma_ingress) + " vs 8*nnz=" + std::to_string(8 * A13.nnz));
    }

    // 8. Multi-node projection: sane, monotone, anchored at one.
    {
        ScaleoutConfig sc;
        ScaleoutPoint p1 = extrapolate_scaleout(dma.scaleout, 1, sc);
        ScaleoutPoint p16 = extrapolate_scaleout(dma.scaleout, 16, sc);
        bool monotone = true;
        double prev = 0.0;
        for (const auto& p : scaleout_sweep(dma.scaleout, 16, sc)) {
            monotone = monotone && p.speedup >= prev;
            prev = p.speedup;
        }
        report(p1.speedup == 1.0 && p16.speedup >= 8.0 && p16.speedup <= 16.0 && monotone,
               "projected speedup is 1 at one node, in [8,16] at sixteen, monotone",
               "speedup(16)=" + fmt(p16.speedup));
    }

    // 9. Bit-identical replay.
    {
        ReplayArtifacts a = run_for_replay("/tmp/piuma_accept_rep_a");
        ReplayArtifacts b = run_for_replay("/tmp/piuma_accept_rep_b");
        bool same = a.reports == b.reports && a.event_log == b.event_log &&
                    !a.reports.empty() && !a.event_log.empty();
        report(same, "reports and event logs are byte-identical across reruns",
               std::to_string(a.reports.size()) + " report files, " +
                   std::to_string(a.event_log.size()) + " log lines");
    }

    std::cout << (failures == 0 ? "all acceptance checks passed\n"
                                : std::to_string(failures) + " acceptance check(s) failed\n");
    return failures == 0 ? 0 : 1;
}
