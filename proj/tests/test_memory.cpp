#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "piuma/machine.hpp"
#include "piuma/memory.hpp"

using namespace piuma;

namespace {

MachineConfig tiny_config(std::vector<std::uint32_t> dims = {4}) {
    MachineConfig cfg;
    cfg.network.dims = std::move(dims);
    cfg.mtc_per_block = 1;
    cfg.threads_per_mtc = 4;
    return cfg;
}

}  // namespace

TEST_CASE("interleaved translation walks controllers at the grain") {
    Att att;
    att.add_rule({.base = 0, .limit = 1 << 20, .scheme = AttRule::Scheme::Interleaved,
                  .grain = 8, .controllers = {0, 1, 2, 3}});
    for (std::uint64_t i = 0; i < 4; ++i) CHECK(att.translate(8 * i).controller == (int)i);
    CHECK(att.translate(0x18).controller == 3);
    CHECK(att.translate(0x18).offset == 0);
    CHECK(att.translate(0).offset == 0);
}

TEST_CASE("partitioned translation splits the range evenly") {
    Att att;
    att.add_rule({.base = 0, .limit = 1 << 20, .scheme = AttRule::Scheme::Partitioned,
                  .controllers = {0, 1}});
    CHECK(att.translate(0x80000).controller == 1);
    CHECK(att.translate(0x7fff8).controller == 0);
}

TEST_CASE("overlapping rules and bad grains are rejected") {
    Att att;
    att.add_rule({.base = 0, .limit = 4096, .scheme = AttRule::Scheme::Interleaved,
                  .grain = 8, .controllers = {0}});
    CHECK_THROWS(att.add_rule({.base = 2048, .limit = 8192,
                               .scheme = AttRule::Scheme::Interleaved, .grain = 8,
                               .controllers = {0}}));
    CHECK_THROWS(att.add_rule({.base = 8192, .limit = 16384,
                               .scheme = AttRule::Scheme::Interleaved, .grain = 24,
                               .controllers = {0}}));
    CHECK_THROWS(att.add_rule({.base = 8192, .limit = 16384,
                               .scheme = AttRule::Scheme::Interleaved, .grain = 8,
                               .controllers = {}}));
}

TEST_CASE("unmapped addresses fault") {
    Att att;
    att.add_rule({.base = 0, .limit = 64, .scheme = AttRule::Scheme::Interleaved,
                  .grain = 8, .controllers = {0}});
    CHECK_THROWS_AS(att.translate(128), SimFault);
    CHECK(att.mapped(63));
    CHECK(!att.mapped(64));
}

TEST_CASE("translation is injective per controller within a rule") {
    Att att;
    att.add_rule({.base = 0, .limit = 1 << 17, .scheme = AttRule::Scheme::Interleaved,
                  .grain = 64, .controllers = {0, 1, 2}});
    std::set<std::pair<int, std::uint64_t>> seen;
    for (std::uint64_t a = 0; a < (1 << 17); a += 8) {
        auto tr = att.translate(a);
        CHECK(seen.insert({tr.controller, tr.offset}).second);
    }
}

TEST_CASE("uncached local load costs the DRAM latency plus service") {
    MachineConfig cfg = tiny_config({1});
    Machine m(cfg);
    std::uint64_t addr = m.alloc_on_block("data", 64, 0, false);
    m.poke(addr, 42);
    std::uint64_t got = 0;
    Cycles done = 0;
    m.memory().uncached(0, addr, 8, false, 0, PacketClass::Req,
                        [&](Cycles now, std::uint64_t v, Cycles, bool remote) {
                            done = now;
                            got = v;
                            CHECK(!remote);
                        });
    m.engine().run();
    CHECK(got == 42);
    // ceil(8 bytes / 8 B/cyc) service + 100 pipelined DRAM cycles, no hops.
    CHECK(done == cfg.dram.latency + 1);
}

TEST_CASE("remote uncached access pays the network round trip") {
    MachineConfig cfg = tiny_config({4});
    Machine m(cfg);
    std::uint64_t addr = m.alloc_on_block("data", 64, 3, false);
    Cycles done = 0;
    bool was_remote = false;
    m.memory().uncached(0, addr, 8, false, 0, PacketClass::Req,
                        [&](Cycles now, std::uint64_t, Cycles, bool remote) {
                            done = now;
                            was_remote = remote;
                        });
    m.engine().run();
    CHECK(was_remote);
    // One hop each way: serialization + hop latency, plus controller service.
    Cycles hop = cfg.network.hop_latency + (Cycles)((8.0 + cfg.network.header_bytes) /
                                                    cfg.network.link_bandwidth);
    CHECK(done == 2 * hop + cfg.dram.latency + 1);
}

TEST_CASE("cache hit is cheap and generates no traffic") {
    MachineConfig cfg = tiny_config({1});
    Machine m(cfg);
    std::uint64_t addr = m.alloc_on_block("data", 4096, 0, true);
    m.poke(addr, 7);
    Cycles first_done = 0, second_done = 0;
    m.memory().cached(0, 0, addr, 8, false, 0,
                      [&](Cycles now, std::uint64_t v, Cycles, bool) {
                          first_done = now;
                          CHECK(v == 7);
                          m.memory().cached(0, 0, addr, 8, false, 0,
                                            [&](Cycles t, std::uint64_t v2, Cycles, bool) {
                                                second_done = t;
                                                CHECK(v2 == 7);
                                            });
                      });
    m.engine().run();
    CHECK(first_done >= cfg.dram.latency);  // miss: line fill
    CHECK(second_done - first_done == cfg.cache.latency);
    std::uint64_t fetched = 0;
    for (auto& c : m.ledger().controllers) fetched += c.fetched_bytes;
    CHECK(fetched == 64);
}

TEST_CASE("one touched word of a fetched line lands in the 8-byte bucket") {
    MachineConfig cfg = tiny_config({1});
    Machine m(cfg);
    std::uint64_t addr = m.alloc_on_block("stream", 4096, 0, true);
    m.memory().cached(0, 0, addr, 8, false, 0, [](Cycles, std::uint64_t, Cycles, bool) {});
    m.engine().run();
    m.memory().flush_all();
    auto h = m.ledger().total_line_histogram();
    CHECK(h[1] == 1);  // 8 bytes used
    CHECK(h[8] == 0);
}

TEST_CASE("fully touched lines land in the 64-byte bucket") {
    MachineConfig cfg = tiny_config({1});
    Machine m(cfg);
    std::uint64_t addr = m.alloc_on_block("stream", 4096, 0, true);
    for (int w = 0; w < 8; ++w)
        m.memory().cached(0, 0, addr + 8 * w, 8, false, 0,
                          [](Cycles, std::uint64_t, Cycles, bool) {});
    m.engine().run();
    m.memory().flush_all();
    auto h = m.ledger().total_line_histogram();
    CHECK(h[8] == 1);
    CHECK(h[1] == 0);
}

TEST_CASE("scratchpad accesses touch no controller") {
    MachineConfig cfg = tiny_config({1});
    Machine m(cfg);
    m.memory().spad_write(0, 0, 5);
    CHECK(m.memory().spad_read(0, 0) == 5);
    Cycles done = 0;
    m.memory().spad_access(0, 0, 16, true, 99, [&](Cycles now, std::uint64_t, Cycles, bool) {
        done = now;
    });
    m.engine().run();
    CHECK(done == cfg.spad.latency);
    CHECK(m.memory().spad_read(0, 16) == 99);
    for (auto& c : m.ledger().controllers) CHECK(c.fetched_bytes == 0);
}

TEST_CASE("atomics to cacheable regions fault") {
    MachineConfig cfg = tiny_config({1});
    Machine m(cfg);
    std::uint64_t addr = m.alloc_on_block("shared", 64, 0, true);
    CHECK_THROWS_AS(m.memory().atomic(0, AtomicOp::Add, addr, 1, 0,
                                      [](Cycles, std::uint64_t, Cycles, bool) {}),
                    SimFault);
}

TEST_CASE("atomic operators match their definitions") {
    std::uint64_t out = 0;
    CHECK(MemorySystem::apply_atomic(AtomicOp::Add, 10, 5, 0, out) == 15);
    CHECK(out == 10);
    CHECK(MemorySystem::apply_atomic(AtomicOp::Min, 10, 5, 0, out) == 5);
    CHECK(MemorySystem::apply_atomic(AtomicOp::Max, 10, 5, 0, out) == 10);
    CHECK(MemorySystem::apply_atomic(AtomicOp::Cas, 10, 10, 77, out) == 77);
    CHECK(MemorySystem::apply_atomic(AtomicOp::Cas, 10, 9, 77, out) == 10);
    CHECK(MemorySystem::apply_atomic(AtomicOp::Exchange, 10, 3, 0, out) == 3);
    CHECK(out == 10);
}

TEST_CASE("misaligned accesses fault") {
    MachineConfig cfg = tiny_config({1});
    Machine m(cfg);
    std::uint64_t addr = m.alloc_on_block("data", 64, 0, false);
    CHECK_THROWS_AS(m.memory().uncached(0, addr + 3, 8, false, 0, PacketClass::Req,
                                        [](Cycles, std::uint64_t, Cycles, bool) {}),
                    SimFault);
}
