#include "piuma/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>

namespace piuma {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

const char* stop_name(SimEngine::Stop s) {
    switch (s) {
        case SimEngine::Stop::Idle: return "idle";
        case SimEngine::Stop::AllDone: return "all_done";
        case SimEngine::Stop::Limit: return "limit";
        case SimEngine::Stop::Deadlock: return "deadlock";
    }
    return "?";
}

CpiStack cpi_stack(const StatsLedger& ledger) {
    CpiStack s;
    for (const auto& t : ledger.threads) {
        if (!t.finished) continue;
        for (int c = 0; c < kAttrCount; ++c) s.cycles[c] += t.cycles[c];
        s.instructions += t.instructions;
        s.thread_cycles += t.lifetime();
    }
    std::uint64_t attributed = 0;
    for (auto c : s.cycles) attributed += c;
    if (attributed != s.thread_cycles)
        throw std::logic_error("cpi_stack: attribution does not conserve thread cycles");
    return s;
}

LineReport cacheline_histogram(const StatsLedger& ledger, const RegionRegistry& regions) {
    std::map<std::string, LineHistogram> merged;
    for (const auto& [rid, hist] : ledger.line_usage_by_region) {
        auto& h = merged[regions.name(rid)];
        for (int i = 0; i < 9; ++i) h[i] += hist[i];
    }
    LineReport rep;
    for (auto& [name, h] : merged) {
        rep.by_region.emplace_back(name, h);
        for (int i = 0; i < 9; ++i) rep.total[i] += h[i];
    }
    return rep;
}

std::array<double, 9> histogram_fractions(const LineHistogram& h) {
    std::uint64_t total = 0;
    for (auto v : h) total += v;
    std::array<double, 9> f{};
    if (total)
        for (int i = 0; i < 9; ++i) f[i] = (double)h[i] / (double)total;
    return f;
}

BandwidthReport bandwidth_report(const StatsLedger& ledger, Cycles elapsed) {
    BandwidthReport rep;
    rep.elapsed = elapsed;
    std::uint64_t fetched = 0, useful = 0;
    double sum = 0.0, mn = 1e300, mx = 0.0;
    for (const auto& c : ledger.controllers) {
        BandwidthReport::Ctrl row;
        row.utilization = elapsed ? (double)c.busy_cycles / (double)elapsed : 0.0;
        row.fetched = c.fetched_bytes;
        row.useful = c.useful_bytes;
        row.written = c.written_bytes;
        row.requests = c.requests;
        row.efficiency = c.fetched_bytes ? (double)c.useful_bytes / (double)c.fetched_bytes : 0.0;
        sum += row.utilization;
        mn = std::min(mn, row.utilization);
        mx = std::max(mx, row.utilization);
        fetched += c.fetched_bytes;
        useful += c.useful_bytes;
        rep.controllers.push_back(row);
    }
    if (!rep.controllers.empty()) {
        rep.mean_utilization = sum / (double)rep.controllers.size();
        rep.min_utilization = mn;
        rep.max_utilization = mx;
    }
    rep.efficiency = fetched ? (double)useful / (double)fetched : 0.0;
    double lsum = 0.0, lmx = 0.0;
    for (const auto& l : ledger.links) {
        double u = elapsed ? (double)l.busy_cycles / (double)elapsed : 0.0;
        lsum += u;
        lmx = std::max(lmx, u);
    }
    if (!ledger.links.empty()) {
        rep.mean_link_utilization = lsum / (double)ledger.links.size();
        rep.max_link_utilization = lmx;
    }
    return rep;
}

ScaleoutInputs scaleout_inputs(const StatsLedger& ledger, Cycles elapsed) {
    ScaleoutInputs in;
    in.makespan = elapsed;
    std::uint64_t threads = 0;
    for (const auto& t : ledger.threads) {
        in.instructions += t.instructions;
        ++threads;
    }
    in.threads = threads;
    in.remote_bytes = ledger.remote_payload_bytes;
    std::uint64_t all = ledger.remote_payload_bytes + ledger.local_payload_bytes;
    in.remote_fraction = all ? (double)ledger.remote_payload_bytes / (double)all : 0.0;
    return in;
}

ScaleoutPoint extrapolate_scaleout(const ScaleoutInputs& in, std::uint32_t nodes,
                                   const ScaleoutConfig& cfg) {
    if (nodes < 1) throw std::invalid_argument("extrapolate_scaleout: nodes must be >= 1");
    ScaleoutPoint p;
    p.nodes = nodes;
    double N = (double)nodes;
    p.compute_term = N;

    p.latency_term = N;
    if (nodes > 1 && in.instructions && in.threads && in.makespan) {
        // Average pipeline time one thread spends per instruction.
        double t1 = (double)in.makespan * (double)in.threads / (double)in.instructions;
        double added = in.remote_fraction * (N - 1.0) / N * (double)cfg.latency_delta /
                       (double)in.threads;
        p.latency_term = N / (1.0 + added / t1);
    }

    p.bandwidth_term = N;
    if (nodes > 1 && in.remote_bytes && cfg.internode_bandwidth > 0.0 && in.makespan) {
        double off_node = (double)in.remote_bytes * (N - 1.0) / N;
        double t_bw = off_node / (N * cfg.internode_bandwidth);
        p.bandwidth_term = std::min(N, (double)in.makespan / t_bw);
    }

    p.speedup = std::min({p.compute_term, p.latency_term, p.bandwidth_term});
    return p;
}

std::vector<ScaleoutPoint> scaleout_sweep(const ScaleoutInputs& in, std::uint32_t max_nodes,
                                          const ScaleoutConfig& cfg) {
    std::vector<ScaleoutPoint> pts;
    for (std::uint32_t n = 1; n <= max_nodes; ++n)
        pts.push_back(extrapolate_scaleout(in, n, cfg));
    return pts;
}

void echo_config(std::ostream& os, const RunConfig& cfg) {
    const MachineConfig& m = cfg.machine;
    os << "version = " << kSimVersion << "\n";
    os << "machine.dims =";
    for (auto d : m.network.dims) os << " " << d;
    os << "\n";
    os << "machine.blocks = " << m.blocks() << "\n";
    os << "machine.mtc_per_block = " << m.mtc_per_block << "\n";
    os << "machine.threads_per_mtc = " << m.threads_per_mtc << "\n";
    os << "machine.stc_per_block = " << m.stc_per_block << "\n";
    os << "machine.stc_scoreboard_depth = " << m.stc_scoreboard_depth << "\n";
    os << "machine.cache.size_bytes = " << m.cache.size_bytes << "\n";
    os << "machine.cache.ways = " << m.cache.ways << "\n";
    os << "machine.cache.latency = " << m.cache.latency << "\n";
    os << "machine.spad.size_bytes = " << m.spad.size_bytes << "\n";
    os << "machine.spad.latency = " << m.spad.latency << "\n";
    os << "machine.dram.latency = " << m.dram.latency << "\n";
    os << "machine.dram.bandwidth = " << format_double(m.dram.bandwidth) << "\n";
    os << "machine.network.link_bandwidth = " << format_double(m.network.link_bandwidth) << "\n";
    os << "machine.network.hop_latency = " << m.network.hop_latency << "\n";
    os << "machine.network.header_bytes = " << m.network.header_bytes << "\n";
    os << "machine.engine_concurrency = " << m.engine_concurrency << "\n";
    os << "machine.collective_fanin = " << m.collective_fanin << "\n";
    os << "machine.prefetch_next_line = " << (m.prefetch_next_line ? 1 : 0) << "\n";
    const WorkloadConfig& w = cfg.workload;
    os << "workload.kind = " << w.kind << "\n";
    os << "workload.variant = " << w.variant << "\n";
    os << "workload.scale = " << w.scale << "\n";
    os << "workload.edge_factor = " << w.edge_factor << "\n";
    os << "workload.seed = " << w.seed << "\n";
    os << "workload.values_mode = " << w.values_mode << "\n";
    os << "workload.rmat = " << format_double(w.rmat_a) << " " << format_double(w.rmat_b) << " "
       << format_double(w.rmat_c) << " " << format_double(w.rmat_d) << "\n";
    os << "workload.micro_ops = " << w.micro_ops << "\n";
    os << "workload.walk_length = " << w.walk_length << "\n";
    if (!w.matrix_file.empty()) os << "workload.matrix_file = " << w.matrix_file << "\n";
    os << "scaleout.latency_delta = " << cfg.scaleout.latency_delta << "\n";
    os << "scaleout.internode_bandwidth = " << format_double(cfg.scaleout.internode_bandwidth)
       << "\n";
    os << "scaleout.blocks_per_node = " << cfg.scaleout.blocks_per_node << "\n";
    for (const auto& warn : cfg.warnings) os << "warning = " << warn << "\n";
}

namespace {

std::ofstream open_report(const std::string& dir, const std::string& file) {
    std::filesystem::create_directories(dir);
    std::string path = dir + "/" + file;
    std::ofstream out(path, std::ios::binary);  // identical bytes on all platforms
    if (!out) throw std::runtime_error("cannot open " + path);
    return out;
}

}  // namespace

void write_reports(const std::string& dir, const RunConfig& cfg, const RunResult& result,
                   const StatsLedger& ledger, const RegionRegistry& regions) {
    CpiStack cpi = cpi_stack(ledger);
    LineReport lines = cacheline_histogram(ledger, regions);
    BandwidthReport bw = bandwidth_report(ledger, result.elapsed);
    ScaleoutInputs sin = scaleout_inputs(ledger, result.elapsed);
    auto sweep = scaleout_sweep(sin, 32, cfg.scaleout);

    {
        auto out = open_report(dir, "cpi.csv");
        out << "category,cycles,per_instruction\n";
        for (int c = 0; c < kAttrCount; ++c)
            out << kAttrNames[c] << "," << cpi.cycles[c] << ","
                << format_double(cpi.per_instruction(c)) << "\n";
        out << "total," << cpi.thread_cycles << "," << format_double(cpi.total_cpi()) << "\n";
    }
    {
        auto out = open_report(dir, "lines.csv");
        out << "region,bytes_used,lines,fraction\n";
        auto emit = [&](const std::string& name, const LineHistogram& h) {
            auto f = histogram_fractions(h);
            for (int i = 0; i < 9; ++i)
                out << name << "," << i * 8 << "," << h[i] << "," << format_double(f[i]) << "\n";
        };
        for (const auto& [name, h] : lines.by_region) emit(name, h);
        emit("total", lines.total);
    }
    {
        auto out = open_report(dir, "bandwidth.csv");
        out << "controller,busy_cycles,utilization,requests,fetched_bytes,useful_bytes,"
               "written_bytes,efficiency\n";
        for (std::size_t c = 0; c < bw.controllers.size(); ++c) {
            const auto& row = bw.controllers[c];
            out << c << "," << ledger.controllers[c].busy_cycles << ","
                << format_double(row.utilization) << "," << row.requests << "," << row.fetched
                << "," << row.useful << "," << row.written << ","
                << format_double(row.efficiency) << "\n";
        }
    }
    {
        auto out = open_report(dir, "scaleout.csv");
        out << "nodes,speedup,compute_term,latency_term,bandwidth_term\n";
        for (const auto& p : sweep)
            out << p.nodes << "," << format_double(p.speedup) << ","
                << format_double(p.compute_term) << "," << format_double(p.latency_term) << ","
                << format_double(p.bandwidth_term) << "\n";
    }
    {
        auto out = open_report(dir, "summary.txt");
        out << "# " << result.workload_label << "\n";
        echo_config(out, cfg);
        out << "\n";
        out << "stop = " << stop_name(result.stop) << "\n";
        out << "cycles = " << result.elapsed << "\n";
        out << "instructions = " << cpi.instructions << "\n";
        out << "threads = " << ledger.threads.size() << "\n";
        out << "verified = " << (result.verified ? "yes" : "no") << "\n";
        if (!result.verify_note.empty()) out << "verify_note = " << result.verify_note << "\n";
        out << "\ncpi_total = " << format_double(cpi.total_cpi()) << "\n";
        for (int c = 0; c < kAttrCount; ++c)
            out << "cpi." << kAttrNames[c] << " = " << format_double(cpi.per_instruction(c))
                << "\n";
        auto f = histogram_fractions(lines.total);
        out << "\nline_usage_fractions =";
        for (int i = 0; i < 9; ++i) out << " " << format_double(f[i]);
        out << "\n";
        out << "\nmean_controller_utilization = " << format_double(bw.mean_utilization) << "\n";
        out << "min_controller_utilization = " << format_double(bw.min_utilization) << "\n";
        out << "max_controller_utilization = " << format_double(bw.max_utilization) << "\n";
        out << "fetch_efficiency = " << format_double(bw.efficiency) << "\n";
        out << "mean_link_utilization = " << format_double(bw.mean_link_utilization) << "\n";
        out << "max_link_utilization = " << format_double(bw.max_link_utilization) << "\n";
        out << "\nremote_payload_bytes = " << ledger.remote_payload_bytes << "\n";
        out << "local_payload_bytes = " << ledger.local_payload_bytes << "\n";
        out << "packets = " << ledger.packets_delivered << "\n";
        auto s16 = extrapolate_scaleout(sin, 16, cfg.scaleout);
        out << "scaleout_speedup_16 = " << format_double(s16.speedup) << "\n";
        if (!ledger.counters.empty()) {
            out << "\n";
            for (const auto& [k, v] : ledger.counters) out << "counter." << k << " = " << v << "\n";
        }
    }
}

}  // namespace piuma
