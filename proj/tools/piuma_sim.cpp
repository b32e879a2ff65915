// Batch driver: load config, run one workload (or an SpMV variant sweep on
// identical input), emit reports. Exit 0 iff every run completes and every
// ledger self-check passes.

#include <CLI11.hpp>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include "piuma/analysis.hpp"
#include "piuma/machine.hpp"
#include "piuma/workloads.hpp"

using namespace piuma;

namespace {

struct RunOutcome {
    RunResult result;
    CpiStack cpi;
    ScaleoutInputs scaleout;
    bool ok = false;
};

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

CsrMatrix load_matrix(const WorkloadConfig& w) {
    if (!w.matrix_file.empty()) return read_matrix_market(w.matrix_file, w.values_mode == "float");
    EdgeList el = rmat_generate(w.scale, w.edge_factor, w.rmat_a, w.rmat_b, w.rmat_c, w.rmat_d,
                                w.seed);
    CsrMatrix m = csr_from_edges(el, el.n);
    assign_values(m, w.seed, w.values_mode == "float");
    return m;
}

void dump_blocked(const Machine& m) {
    for (const auto& line : m.blocked_thread_dump()) std::cerr << "  " << line << "\n";
}

RunOutcome run_one(RunConfig cfg, const CsrMatrix* matrix, const std::string& out_dir,
                   const std::string& event_log_path) {
    RunOutcome out;
    const WorkloadConfig& w = cfg.workload;
    bool float_mode = w.values_mode == "float";
    Machine m(cfg.machine);
    std::vector<std::string> event_log;
    if (!event_log_path.empty()) m.set_event_log(&event_log);

    std::optional<SpmvBuild> spmv;
    std::optional<BfsBuild> bfs;
    std::vector<std::uint64_t> x;
    std::uint64_t bfs_root = 0;

    if (w.kind == "spmv") {
        x = make_x(matrix->n, w.seed, float_mode);
        spmv = build_spmv(m, *matrix, x, spmv_variant_from_string(w.variant), float_mode);
    } else if (w.kind == "bfs") {
        std::uint64_t best = 0;
        for (std::uint64_t v = 0; v < matrix->n; ++v)
            if (matrix->row_ptr[v + 1] - matrix->row_ptr[v] >
                matrix->row_ptr[best + 1] - matrix->row_ptr[best])
                best = v;
        bfs_root = best;
        bfs = build_bfs(m, *matrix, bfs_root);
    } else if (w.kind == "random_access") {
        build_random_access(m, 1ull << w.scale, w.micro_ops, w.seed);
    } else if (w.kind == "indirection_chain") {
        build_indirection_chain(m, 1ull << w.scale, w.micro_ops, w.seed,
                                (int)cfg.machine.total_threads());
    } else if (w.kind == "random_walk") {
        build_random_walk(m, *matrix, w.walk_length, w.seed);
    } else {
        throw ConfigError("unknown workload kind '" + w.kind + "'");
    }

    SimEngine::Stop stop = m.run();
    out.result.stop = stop;
    out.result.elapsed = m.engine().now();
    out.result.workload_label = w.kind == "spmv" ? w.kind + "/" + w.variant : w.kind;

    if (stop != SimEngine::Stop::AllDone) {
        std::cerr << "run did not complete (" << stop_name(stop) << ")\n";
        if (stop == SimEngine::Stop::Deadlock) dump_blocked(m);
        return out;
    }

    try {
        m.finalize();
    } catch (const std::exception& e) {
        std::cerr << "ledger self-check failed: " << e.what() << "\n";
        return out;
    }

    out.result.verified = true;
    if (spmv) {
        auto ref = spmv_reference(*matrix, x, float_mode);
        if (spmv->result_vector(m) != ref) {
            out.result.verified = false;
            out.result.verify_note = "result vector differs from sequential product";
        }
    } else if (bfs) {
        auto ref = bfs_reference_levels(*matrix, bfs_root);
        for (std::uint64_t v = 0; v < matrix->n && out.result.verified; ++v) {
            std::uint64_t p = bfs->parent(m, v);
            if (ref[v] == kBfsNoParent) {
                if (p != kBfsNoParent) {
                    out.result.verified = false;
                    out.result.verify_note = "unreachable vertex claimed";
                }
            } else if (p == kBfsNoParent || bfs->level(m, v) != ref[v]) {
                out.result.verified = false;
                out.result.verify_note = "level mismatch at vertex " + std::to_string(v);
            }
        }
    } else {
        out.result.verify_note = "no functional oracle for this workload";
    }
    if (!out.result.verified) {
        std::cerr << "verification failed: " << out.result.verify_note << "\n";
        return out;
    }

    if (!out_dir.empty()) write_reports(out_dir, cfg, out.result, m.ledger(), m.regions());
    if (!event_log_path.empty()) {
        std::ofstream elog(event_log_path, std::ios::binary);
        if (!elog) throw std::runtime_error("cannot open " + event_log_path);
        for (const auto& line : event_log) elog << line << "\n";
    }
    out.cpi = cpi_stack(m.ledger());
    if (out.result.stop == SimEngine::Stop::AllDone) out.ok = true;

    out.scaleout = scaleout_inputs(m.ledger(), out.result.elapsed);
    std::cout << out.result.workload_label << ": " << out.result.elapsed << " cycles, "
              << out.cpi.instructions << " instructions, cpi "
              << format_double(out.cpi.total_cpi()) << "\n";
    return out;
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(item);
    return parts;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PIUMA-style graph machine simulator"};
    std::string config_path, workload, variant, out_dir, event_log, values_mode;
    std::uint32_t scale = 0;
    std::uint64_t seed = 0;
    std::uint32_t blocks = 0, nodes = 0;
    bool have_scale = false, have_seed = false;

    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--workload", workload, "spmv|bfs|random_access|indirection_chain|random_walk");
    app.add_option("--variant", variant, "SpMV variant(s), comma-separated for a sweep");
    app.add_option("--scale", scale, "RMAT scale / log2 footprint")->each([&](auto) {
        have_scale = true;
    });
    app.add_option("--seed", seed, "RNG seed")->each([&](auto) { have_seed = true; });
    app.add_option("--blocks", blocks, "override topology with a flat all-to-all of N blocks");
    app.add_option("--nodes", nodes, "print the multi-node projection for N nodes");
    app.add_option("--out", out_dir, "report directory");
    app.add_option("--event-log", event_log, "event trace output path");
    app.add_option("--values-mode", values_mode, "int|float matrix values");
    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = config_path.empty() ? RunConfig{} : parse_config(config_path);
        if (!workload.empty()) cfg.workload.kind = workload;
        if (have_scale) cfg.workload.scale = scale;
        if (have_seed) cfg.workload.seed = seed;
        if (!values_mode.empty()) cfg.workload.values_mode = values_mode;
        if (blocks) cfg.machine.network.dims = {blocks};
        if (!out_dir.empty()) cfg.outputs.out_dir = out_dir;
        if (!event_log.empty()) cfg.outputs.event_log = event_log;

        std::vector<std::string> variants;
        if (!variant.empty())
            variants = split_csv(variant);
        else if (cfg.workload.kind == "spmv")
            variants = {cfg.workload.variant};
        else
            variants = {""};

        cfg.validate();
        for (const auto& warn : cfg.warnings) std::cerr << "warning: " << warn << "\n";

        std::optional<CsrMatrix> matrix;
        if (cfg.workload.kind == "spmv" || cfg.workload.kind == "bfs" ||
            cfg.workload.kind == "random_walk")
            matrix = load_matrix(cfg.workload);

        bool all_ok = true;
        std::vector<std::pair<std::string, Cycles>> cycles_by_variant;
        for (const auto& v : variants) {
            RunConfig run_cfg = cfg;
            std::string sub_out = run_cfg.outputs.out_dir;
            std::string sub_log = run_cfg.outputs.event_log;
            if (!v.empty()) {
                run_cfg.workload.variant = v;
                if (variants.size() > 1) {
                    if (!sub_out.empty()) sub_out += "/" + v;
                    if (!sub_log.empty()) sub_log += "." + v;
                }
            }
            RunOutcome o = run_one(run_cfg, matrix ? &*matrix : nullptr, sub_out, sub_log);
            all_ok = all_ok && o.ok && o.result.verified;
            cycles_by_variant.emplace_back(v, o.result.elapsed);

            if (nodes >= 1 && o.ok) {
                auto p = extrapolate_scaleout(o.scaleout, nodes, cfg.scaleout);
                std::cout << "  projected speedup at " << nodes
                          << " nodes: " << format_double(p.speedup) << "\n";
            }
        }

        if (variants.size() > 1) {
            std::string norm = "base";
            bool has_base = false;
            for (const auto& [v, c] : cycles_by_variant) has_base |= v == norm;
            if (!has_base) norm = cycles_by_variant.front().first;
            Cycles base_cycles = 0;
            for (const auto& [v, c] : cycles_by_variant)
                if (v == norm) base_cycles = c;
            std::ostringstream table;
            table << "variant,cycles,speedup_vs_" << norm << "\n";
            for (const auto& [v, c] : cycles_by_variant)
                table << v << "," << c << ","
                      << format_double(c ? (double)base_cycles / (double)c : 0.0) << "\n";
            std::cout << table.str();
            if (!cfg.outputs.out_dir.empty()) {
                std::ofstream cmp(cfg.outputs.out_dir + "/comparison.csv", std::ios::binary);
                cmp << table.str();
            }
        }
        return all_ok ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
