#include "piuma/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace piuma {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& path) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key()))
            throw ConfigError("unknown config key: " + path + it.key());
    }
}

template <typename T>
void get(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void parse_machine(const json& j, MachineConfig& m) {
    reject_unknown(j, {"mtc_per_block", "threads_per_mtc", "stc_per_block",
                       "stc_scoreboard_depth", "cache", "spad", "dram", "network",
                       "engine_concurrency", "collective_fanin", "prefetch_next_line"},
                   "machine.");
    get(j, "mtc_per_block", m.mtc_per_block);
    get(j, "threads_per_mtc", m.threads_per_mtc);
    get(j, "stc_per_block", m.stc_per_block);
    get(j, "stc_scoreboard_depth", m.stc_scoreboard_depth);
    get(j, "engine_concurrency", m.engine_concurrency);
    get(j, "collective_fanin", m.collective_fanin);
    get(j, "prefetch_next_line", m.prefetch_next_line);
    if (j.contains("cache")) {
        const auto& c = j.at("cache");
        reject_unknown(c, {"size_bytes", "ways", "latency"}, "machine.cache.");
        get(c, "size_bytes", m.cache.size_bytes);
        get(c, "ways", m.cache.ways);
        get(c, "latency", m.cache.latency);
    }
    if (j.contains("spad")) {
        const auto& s = j.at("spad");
        reject_unknown(s, {"size_bytes", "latency"}, "machine.spad.");
        get(s, "size_bytes", m.spad.size_bytes);
        get(s, "latency", m.spad.latency);
    }
    if (j.contains("dram")) {
        const auto& d = j.at("dram");
        reject_unknown(d, {"latency", "bandwidth"}, "machine.dram.");
        get(d, "latency", m.dram.latency);
        get(d, "bandwidth", m.dram.bandwidth);
    }
    if (j.contains("network")) {
        const auto& n = j.at("network");
        reject_unknown(n, {"dims", "link_bandwidth", "hop_latency", "header_bytes"},
                       "machine.network.");
        get(n, "dims", m.network.dims);
        get(n, "link_bandwidth", m.network.link_bandwidth);
        get(n, "hop_latency", m.network.hop_latency);
        get(n, "header_bytes", m.network.header_bytes);
    }
}

void parse_workload(const json& j, WorkloadConfig& w) {
    reject_unknown(j, {"kind", "variant", "scale", "edge_factor", "seed", "values_mode",
                       "rmat_a", "rmat_b", "rmat_c", "rmat_d", "micro_ops", "walk_length",
                       "matrix_file"},
                   "workload.");
    get(j, "kind", w.kind);
    get(j, "variant", w.variant);
    get(j, "scale", w.scale);
    get(j, "edge_factor", w.edge_factor);
    get(j, "seed", w.seed);
    get(j, "values_mode", w.values_mode);
    get(j, "rmat_a", w.rmat_a);
    get(j, "rmat_b", w.rmat_b);
    get(j, "rmat_c", w.rmat_c);
    get(j, "rmat_d", w.rmat_d);
    get(j, "micro_ops", w.micro_ops);
    get(j, "walk_length", w.walk_length);
    get(j, "matrix_file", w.matrix_file);
}

}  // namespace

void MachineConfig::validate() const {
    if (network.dims.empty()) throw ConfigError("machine.network.dims: must not be empty");
    for (auto d : network.dims)
        if (d < 1) throw ConfigError("machine.network.dims: entries must be >= 1");
    if (mtc_per_block < 1) throw ConfigError("machine.mtc_per_block: must be >= 1");
    if (threads_per_mtc < 1) throw ConfigError("machine.threads_per_mtc: must be >= 1");
    if (cache.ways < 1 || cache.size_bytes % (cache.ways * 64) != 0)
        throw ConfigError("machine.cache: size must be a multiple of ways*64");
    if (dram.bandwidth <= 0 || network.link_bandwidth <= 0)
        throw ConfigError("machine: bandwidths must be positive");
    if (engine_concurrency < 1) throw ConfigError("machine.engine_concurrency: must be >= 1");
    if (collective_fanin < 2) throw ConfigError("machine.collective_fanin: must be >= 2");
}

void WorkloadConfig::validate() const {
    static const std::set<std::string> kinds = {"spmv", "bfs", "random_access",
                                               "indirection_chain", "random_walk"};
    if (!kinds.count(kind)) throw ConfigError("workload.kind: unknown kind '" + kind + "'");
    static const std::set<std::string> variants = {"base", "selective", "dma", "cache_all"};
    if (kind == "spmv" && !variants.count(variant))
        throw ConfigError("workload.variant: unknown variant '" + variant + "'");
    if (values_mode != "int" && values_mode != "float")
        throw ConfigError("workload.values_mode: must be 'int' or 'float'");
    double p = rmat_a + rmat_b + rmat_c + rmat_d;
    if (p < 1.0 - 1e-9 || p > 1.0 + 1e-9)
        throw ConfigError("workload.rmat_*: probabilities must sum to 1");
    if (scale > 26) throw ConfigError("workload.scale: desk-scale limit is 26");
}

void RunConfig::validate() {
    machine.validate();
    workload.validate();
    // Provisioning check from the architecture: per-block network bandwidth
    // should exceed the local DRAM bandwidth. Warn, do not reject.
    if (machine.block_network_bandwidth() <= machine.dram.bandwidth) {
        std::ostringstream os;
        os << "network bandwidth (" << machine.block_network_bandwidth()
           << " B/cyc per block) does not exceed local DRAM bandwidth ("
           << machine.dram.bandwidth << " B/cyc); remote-heavy workloads will be network-bound";
        warnings.push_back(os.str());
    }
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
        cfg.validate();
        return cfg;  // empty file: all defaults
    }
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    try {
        reject_unknown(j, {"machine", "workload", "scaleout", "outputs"}, "");
        if (j.contains("machine")) parse_machine(j.at("machine"), cfg.machine);
        if (j.contains("workload")) parse_workload(j.at("workload"), cfg.workload);
        if (j.contains("scaleout")) {
            const auto& s = j.at("scaleout");
            reject_unknown(s, {"latency_delta", "internode_bandwidth", "blocks_per_node"},
                           "scaleout.");
            get(s, "latency_delta", cfg.scaleout.latency_delta);
            get(s, "internode_bandwidth", cfg.scaleout.internode_bandwidth);
            get(s, "blocks_per_node", cfg.scaleout.blocks_per_node);
        }
        if (j.contains("outputs")) {
            const auto& o = j.at("outputs");
            reject_unknown(o, {"out_dir", "event_log"}, "outputs.");
            get(o, "out_dir", cfg.outputs.out_dir);
            get(o, "event_log", cfg.outputs.event_log);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config type error: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

}  // namespace piuma
