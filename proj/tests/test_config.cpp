#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "piuma/config.hpp"

using namespace piuma;

namespace {

std::string error_of(const std::string& text) {
    try {
        parse_config_text(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("empty input yields the default configuration") {
    RunConfig cfg = parse_config_text("  \n\t ");
    CHECK(cfg.machine.network.dims == std::vector<std::uint32_t>{4, 4});
    CHECK(cfg.machine.mtc_per_block == 4);
    CHECK(cfg.machine.threads_per_mtc == 16);
    CHECK(cfg.workload.kind == "spmv");
    CHECK(cfg.workload.values_mode == "int");
    CHECK(cfg.scaleout.blocks_per_node == 16);
}

TEST_CASE("known keys override defaults") {
    RunConfig cfg = parse_config_text(R"({
        "machine": {"threads_per_mtc": 8, "dram": {"latency": 50},
                    "network": {"dims": [2, 3]}},
        "workload": {"kind": "bfs", "scale": 10, "seed": 42},
        "scaleout": {"latency_delta": 500},
        "outputs": {"out_dir": "/tmp/x"}
    })");
    CHECK(cfg.machine.threads_per_mtc == 8);
    CHECK(cfg.machine.dram.latency == 50);
    CHECK(cfg.machine.blocks() == 6);
    CHECK(cfg.workload.kind == "bfs");
    CHECK(cfg.workload.seed == 42);
    CHECK(cfg.scaleout.latency_delta == 500);
    CHECK(cfg.outputs.out_dir == "/tmp/x");
}

TEST_CASE("unknown keys are rejected with their full path") {
    std::string e = error_of(R"({"machine": {"dram": {"lateny": 5}}})");
    CHECK(e.find("unknown config key") != std::string::npos);
    CHECK(e.find("machine.dram.lateny") != std::string::npos);
    e = error_of(R"({"wurkload": {}})");
    CHECK(e.find("wurkload") != std::string::npos);
}

TEST_CASE("malformed JSON is reported as a config error") {
    CHECK(error_of("{ not json").find("parse error") != std::string::npos);
}

TEST_CASE("type mismatches are reported as config errors") {
    CHECK(error_of(R"({"machine": {"threads_per_mtc": "many"}})").find("type error") !=
          std::string::npos);
}

TEST_CASE("validation rejects out-of-range machine parameters") {
    CHECK(error_of(R"({"machine": {"network": {"dims": []}}})").find("dims") !=
          std::string::npos);
    CHECK(error_of(R"({"machine": {"network": {"dims": [4, 0]}}})").find("dims") !=
          std::string::npos);
    CHECK(error_of(R"({"machine": {"mtc_per_block": 0}})").find("mtc_per_block") !=
          std::string::npos);
    CHECK(error_of(R"({"machine": {"cache": {"size_bytes": 100}}})").find("cache") !=
          std::string::npos);
    CHECK(error_of(R"({"machine": {"engine_concurrency": 0}})").find("engine_concurrency") !=
          std::string::npos);
    CHECK(error_of(R"({"machine": {"collective_fanin": 1}})").find("collective_fanin") !=
          std::string::npos);
}

TEST_CASE("validation rejects bad workload parameters") {
    CHECK(error_of(R"({"workload": {"kind": "sort"}})").find("kind") != std::string::npos);
    CHECK(error_of(R"({"workload": {"variant": "fast"}})").find("variant") !=
          std::string::npos);
    CHECK(error_of(R"({"workload": {"values_mode": "fixed"}})").find("values_mode") !=
          std::string::npos);
    CHECK(error_of(R"({"workload": {"rmat_a": 0.9}})").find("sum to 1") != std::string::npos);
    CHECK(error_of(R"({"workload": {"scale": 30}})").find("scale") != std::string::npos);
}

TEST_CASE("variant names only constrain the matrix workload") {
    RunConfig cfg = parse_config_text(R"({"workload": {"kind": "bfs", "variant": "anything"}})");
    CHECK(cfg.workload.kind == "bfs");
}

TEST_CASE("underprovisioned network produces a warning, not an error") {
    RunConfig cfg = parse_config_text(
        R"({"machine": {"network": {"dims": [2], "link_bandwidth": 1.0}}})");
    REQUIRE(!cfg.warnings.empty());
    CHECK(cfg.warnings[0].find("DRAM bandwidth") != std::string::npos);
    RunConfig ok = parse_config_text("");
    CHECK(ok.warnings.empty());
}

TEST_CASE("missing config files are reported by name") {
    try {
        parse_config("/tmp/definitely_missing_piuma.json");
        CHECK(false);
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("definitely_missing_piuma") != std::string::npos);
    }
}
