#include "piuma/memory.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace piuma {

namespace {
constexpr std::uint64_t kLineBytes = 64;
std::uint64_t line_base(std::uint64_t addr) { return addr & ~(kLineBytes - 1); }
// Hashed set index: streams marching in lockstep at power-of-two strides
// (parallel array segments) would otherwise collide in the same sets.
std::uint32_t set_of(std::uint64_t line_addr, std::uint32_t sets) {
    std::uint64_t v = line_addr / kLineBytes;
    v ^= v / sets;
    v ^= v / ((std::uint64_t)sets * sets);
    return (std::uint32_t)(v % sets);
}
}  // namespace

// ---------------------------------------------------------------------------
// Att

void Att::add_rule(const AttRule& rule) {
    if (rule.limit <= rule.base) throw ConfigError("ATT rule: empty range");
    if (rule.controllers.empty()) throw ConfigError("ATT rule: empty controller list");
    if (rule.scheme == AttRule::Scheme::Interleaved) {
        if (rule.grain < 8 || (rule.grain & (rule.grain - 1)) != 0)
            throw ConfigError("ATT rule: grain must be a power of two >= 8");
    }
    for (const auto& r : rules_) {
        if (rule.base < r.limit && r.base < rule.limit)
            throw ConfigError("ATT rule: overlapping ranges");
    }
    rules_.push_back(rule);
}

const AttRule* Att::find(std::uint64_t addr) const {
    for (const auto& r : rules_)
        if (addr >= r.base && addr < r.limit) return &r;
    return nullptr;
}

bool Att::mapped(std::uint64_t addr) const { return find(addr) != nullptr; }

TranslateResult Att::translate(std::uint64_t addr) const {
    const AttRule* r = find(addr);
    if (!r) throw SimFault("unmapped DGAS address 0x" + std::to_string(addr));
    std::uint64_t rel = addr - r->base;
    std::uint64_t k = r->controllers.size();
    if (r->scheme == AttRule::Scheme::Interleaved) {
        std::uint64_t chunk = rel / r->grain;
        int ctrl = r->controllers[chunk % k];
        std::uint64_t offset = (chunk / k) * r->grain + rel % r->grain;
        return {ctrl, offset};
    }
    std::uint64_t len = r->limit - r->base;
    std::uint64_t span = (len + k - 1) / k;
    std::uint64_t idx = rel / span;
    return {r->controllers[idx], rel - idx * span};
}

// ---------------------------------------------------------------------------
// RegionRegistry

int RegionRegistry::add(const std::string& name, std::uint64_t base, std::uint64_t limit,
                        bool cacheable) {
    regions_.push_back({name, base, limit, cacheable});
    return (int)regions_.size() - 1;
}

int RegionRegistry::region_of(std::uint64_t addr) const {
    for (std::size_t i = 0; i < regions_.size(); ++i)
        if (addr >= regions_[i].base && addr < regions_[i].limit) return (int)i;
    return -1;
}

// ---------------------------------------------------------------------------
// MemorySystem

MemorySystem::MemorySystem(SimEngine& engine, StatsLedger& ledger, NetworkModel& net,
                           RegionRegistry& regions, const MachineConfig& cfg)
    : engine_(engine), ledger_(ledger), net_(net), regions_(regions), cfg_(cfg) {
    int blocks = (int)cfg_.blocks();
    controllers_.resize(blocks);
    ledger_.controllers.resize(blocks);
    spads_.assign(blocks, std::vector<std::uint64_t>(cfg_.spad.size_bytes / 8, 0));
    int cores_per_block = (int)(cfg_.mtc_per_block + cfg_.stc_per_block);
    caches_.resize((std::size_t)blocks * cores_per_block);
    std::uint32_t sets = cfg_.cache.size_bytes / (cfg_.cache.ways * kLineBytes);
    for (auto& c : caches_) {
        c.sets = sets;
        c.lines.assign((std::size_t)sets * cfg_.cache.ways, Line{});
    }
}

void MemorySystem::check_aligned(std::uint64_t addr, std::uint32_t size) const {
    if (size != 1 && size != 2 && size != 4 && size != 8 && size != 64)
        throw SimFault("unsupported access size " + std::to_string(size));
    if (addr % size != 0)
        throw SimFault("misaligned access: addr 0x" + std::to_string(addr) + " size " +
                       std::to_string(size));
}

Cycles MemorySystem::ctrl_service(int ctrl, Cycles arrival, std::uint32_t bytes,
                                  Cycles& queue_delay) {
    Controller& c = controllers_[ctrl];
    Cycles start = std::max(arrival, c.next_free);
    Cycles ser = (Cycles)std::ceil((double)bytes / cfg_.dram.bandwidth);
    c.next_free = start + ser;
    queue_delay += start - arrival;
    ledger_.controllers[ctrl].busy_cycles += ser;
    ledger_.controllers[ctrl].requests++;
    return start + ser + cfg_.dram.latency;  // pipelined fixed latency after service
}

void MemorySystem::at_controller(int ctrl, int origin_block, std::uint64_t addr,
                                 std::uint32_t size, bool is_store, std::uint64_t value,
                                 PacketClass cls, Cycles q, bool remote, AccessDone cb) {
    std::uint32_t charged = std::max<std::uint32_t>(size, 8);
    Cycles done = ctrl_service(ctrl, engine_.now(), charged, q);
    auto& cs = ledger_.controllers[ctrl];
    if (is_store) {
        cs.written_bytes += size;
    } else {
        cs.fetched_bytes += charged;
        cs.useful_bytes += size;
    }
    engine_.schedule(done - engine_.now(), ctrl, "mem.service",
                     [this, ctrl, origin_block, addr, size, is_store, value, cls, q, remote,
                      cb = std::move(cb)](Cycles now) {
        // Functional effect happens at service completion, in event order.
        std::uint64_t result = 0;
        if (is_store) {
            mem_.write64(addr & ~7ull, value);
        } else if (size == 64) {
            result = 0;  // line data is read word-wise by the cache fill path
        } else {
            result = mem_.read64(addr & ~7ull);
        }
        if (!remote) {
            // Provenance accounting matches what the zero-hop packets would
            // have carried: request payload for stores, response for reads.
            if (is_store)
                ledger_.block_ingress[origin_block].payload_bytes[(int)PacketClass::Req] += size;
            else
                ledger_.block_ingress[origin_block].payload_bytes[(int)cls] += size;
            cb(now, result, q, false);
            return;
        }
        Packet resp;
        resp.src = ctrl;
        resp.dst = origin_block;
        resp.cls = cls;
        resp.payload_bytes = is_store ? 0 : size;
        net_.send(resp, [result, q, cb](Cycles t, Cycles q2) { cb(t, result, q + q2, true); });
    });
}

void MemorySystem::uncached(int origin_block, std::uint64_t addr, std::uint32_t size,
                            bool is_store, std::uint64_t store_value, PacketClass cls,
                            AccessDone cb) {
    check_aligned(addr, size);
    auto tr = att_.translate(addr);
    bool remote = tr.controller != origin_block;
    if (!remote) {
        at_controller(tr.controller, origin_block, addr, size, is_store, store_value, cls, 0,
                      false, std::move(cb));
        return;
    }
    Packet req;
    req.src = origin_block;
    req.dst = tr.controller;
    req.cls = PacketClass::Req;
    req.payload_bytes = is_store ? size : 0;
    // Response travels under the caller's class so provenance is visible
    // per-link and per-block.
    net_.send(req, [this, tr, origin_block, addr, size, is_store, store_value, cls,
                    cb = std::move(cb)](Cycles, Cycles q) {
        at_controller(tr.controller, origin_block, addr, size, is_store, store_value, cls, q,
                      true, cb);
    });
}

std::uint64_t MemorySystem::apply_atomic(AtomicOp op, std::uint64_t old, std::uint64_t a,
                                         std::uint64_t b, std::uint64_t& result_out) {
    result_out = old;
    switch (op) {
        case AtomicOp::Add: return old + a;
        case AtomicOp::Min: return std::min<std::int64_t>((std::int64_t)old, (std::int64_t)a);
        case AtomicOp::Max: return std::max<std::int64_t>((std::int64_t)old, (std::int64_t)a);
        case AtomicOp::Cas: return old == a ? b : old;
        case AtomicOp::Exchange: return a;
    }
    return old;
}

void MemorySystem::atomic(int origin_block, AtomicOp op, std::uint64_t addr, std::uint64_t a,
                          std::uint64_t b, AccessDone cb) {
    check_aligned(addr, 8);
    int region = regions_.region_of(addr);
    if (region >= 0 && regions_.cacheable(region))
        throw SimFault("remote atomic to cacheable region '" + regions_.name(region) + "'");
    auto tr = att_.translate(addr);
    bool remote = tr.controller != origin_block;
    auto rmw = [this, op, addr, a, b, origin_block, tr, remote,
                cb = std::move(cb)](Cycles, Cycles q) {
        Cycles q2 = q;
        Cycles done = ctrl_service(tr.controller, engine_.now(), 8, q2);
        auto& cs = ledger_.controllers[tr.controller];
        cs.fetched_bytes += 8;
        cs.useful_bytes += 8;
        cs.written_bytes += 8;
        engine_.schedule(done - engine_.now(), tr.controller, "mem.atomic",
                         [this, op, addr, a, b, origin_block, tr, remote, q2,
                          cb](Cycles now) {
            std::uint64_t old;
            std::uint64_t fresh = apply_atomic(op, mem_.read64(addr), a, b, old);
            mem_.write64(addr, fresh);
            if (!remote) {
                cb(now, old, q2, false);
                return;
            }
            Packet resp{tr.controller, origin_block, PacketClass::Atomic, 8};
            net_.send(resp, [old, q2, cb](Cycles t, Cycles q3) { cb(t, old, q2 + q3, true); });
        });
    };
    if (!remote) {
        engine_.schedule(0, origin_block, "mem.atomic_local",
                         [rmw = std::move(rmw)](Cycles) { rmw(0, 0); });
        return;
    }
    Packet req{origin_block, tr.controller, PacketClass::Atomic,
               op == AtomicOp::Cas ? 16u : 8u};
    net_.send(req, std::move(rmw));
}

void MemorySystem::controller_read(std::uint64_t addr, PacketClass cls, AccessDone cb) {
    check_aligned(addr, 8);
    auto tr = att_.translate(addr);
    Cycles q = 0;
    Cycles done = ctrl_service(tr.controller, engine_.now(), 8, q);
    auto& cs = ledger_.controllers[tr.controller];
    cs.fetched_bytes += 8;
    cs.useful_bytes += 8;
    (void)cls;
    engine_.schedule(done - engine_.now(), tr.controller, "mem.idx_read",
                     [this, addr, q, cb = std::move(cb)](Cycles now) {
                         cb(now, mem_.read64(addr), q, false);
                     });
}

// ---------------------------------------------------------------------------
// Caches

MemorySystem::Line* MemorySystem::lookup(Cache& c, std::uint64_t line_addr) {
    std::uint32_t set = set_of(line_addr, c.sets);
    for (std::uint32_t w = 0; w < cfg_.cache.ways; ++w) {
        Line& l = c.lines[(std::size_t)set * cfg_.cache.ways + w];
        if (l.valid && l.tag == line_addr) return &l;
    }
    return nullptr;
}

MemorySystem::Line& MemorySystem::victim(Cache& c, std::uint64_t line_addr) {
    std::uint32_t set = set_of(line_addr, c.sets);
    Line* best = nullptr;
    for (std::uint32_t w = 0; w < cfg_.cache.ways; ++w) {
        Line& l = c.lines[(std::size_t)set * cfg_.cache.ways + w];
        if (!l.valid) return l;
        if (!best || l.lru < best->lru) best = &l;
    }
    return *best;
}

void MemorySystem::harvest(const Line& line) {
    unsigned used = (unsigned)std::popcount(line.used_mask);
    int region = regions_.region_of(line.tag);
    ledger_.harvest_line(region, used);
    auto tr = att_.translate(line.tag);
    ledger_.controllers[tr.controller].useful_bytes += used;
}

void MemorySystem::fill(int cache_id, int origin_block, std::uint64_t line_addr, bool prefetched,
                        std::function<void(Cycles, Cycles)> on_filled) {
    auto tr = att_.translate(line_addr);
    bool remote = tr.controller != origin_block;
    auto fetch = [this, cache_id, line_addr, tr, origin_block, remote, prefetched,
                  on_filled = std::move(on_filled)](Cycles, Cycles q) {
        Cycles q2 = q;
        Cycles done = ctrl_service(tr.controller, engine_.now(), (std::uint32_t)kLineBytes, q2);
        ledger_.controllers[tr.controller].fetched_bytes += kLineBytes;
        engine_.schedule(done - engine_.now(), tr.controller, "mem.fill",
                         [this, cache_id, line_addr, origin_block, tr, remote, prefetched, q2,
                          on_filled](Cycles now) {
            install(cache_id, line_addr, prefetched);
            if (!remote) {
                on_filled(now, q2);
                return;
            }
            Packet resp{tr.controller, origin_block, PacketClass::Resp, (std::uint32_t)kLineBytes};
            net_.send(resp, [q2, on_filled](Cycles t, Cycles q3) { on_filled(t, q2 + q3); });
        });
    };
    if (!remote) {
        engine_.schedule(0, origin_block, "mem.fill_local",
                         [fetch = std::move(fetch)](Cycles) { fetch(0, 0); });
        return;
    }
    Packet req{origin_block, tr.controller, PacketClass::Req, 0};
    net_.send(req, std::move(fetch));
}

void MemorySystem::install(int cache_id, std::uint64_t line_addr, bool prefetched) {
    Cache& c = caches_[cache_id];
    if (lookup(c, line_addr)) return;  // raced fill, keep the resident copy
    Line& v = victim(c, line_addr);
    if (v.valid) {
        harvest(v);
        if (v.dirty) {
            auto tr = att_.translate(v.tag);
            for (int i = 0; i < 8; ++i) mem_.write64(v.tag + 8ull * i, v.words[i]);
            ledger_.controllers[tr.controller].written_bytes += kLineBytes;
        }
    }
    v.valid = true;
    v.dirty = false;
    v.prefetched = prefetched;
    v.tag = line_addr;
    v.used_mask = 0;
    v.lru = ++c.lru_clock;
    for (int i = 0; i < 8; ++i) v.words[i] = mem_.read64(line_addr + 8ull * i);
}

void MemorySystem::maybe_prefetch(int cache_id, int origin_block, std::uint64_t line_addr) {
    if (!cfg_.prefetch_next_line) return;
    std::uint64_t next = line_addr + kLineBytes;
    if (!att_.mapped(next)) return;
    if (lookup(caches_[cache_id], next)) return;
    fill(cache_id, origin_block, next, /*prefetched=*/true, [](Cycles, Cycles) {});
}

void MemorySystem::cached(int cache_id, int origin_block, std::uint64_t addr, std::uint32_t size,
                          bool is_store, std::uint64_t store_value, AccessDone cb) {
    check_aligned(addr, size);
    std::uint64_t lb = line_base(addr);
    Cache& c = caches_[cache_id];
    std::uint64_t byte_off = addr - lb;
    std::uint64_t mask = size >= 64 ? ~0ull : ((1ull << size) - 1) << byte_off;

    auto access_line = [this, cache_id, addr, lb, size, is_store, store_value, mask](Line& l)
        -> std::uint64_t {
        l.used_mask |= mask;
        l.lru = ++caches_[cache_id].lru_clock;
        l.prefetched = false;
        unsigned w = (unsigned)((addr - lb) / 8);
        if (is_store) {
            l.words[w] = store_value;
            l.dirty = true;
            return 0;
        }
        (void)size;
        return l.words[w];
    };

    if (Line* l = lookup(c, lb)) {
        std::uint64_t value = access_line(*l);
        engine_.schedule(cfg_.cache.latency, origin_block, "mem.hit",
                         [value, cb = std::move(cb)](Cycles now) { cb(now, value, 0, false); });
        return;
    }
    bool remote = att_.translate(lb).controller != origin_block;
    fill(cache_id, origin_block, lb, false,
         [this, cache_id, addr, lb, remote, access_line, origin_block, is_store, store_value,
          cb = std::move(cb)](Cycles now, Cycles q) {
             Line* l = lookup(caches_[cache_id], lb);
             std::uint64_t value = 0;
             if (l) {
                 value = access_line(*l);
             } else if (is_store) {
                 // Line evicted while the fill response was in flight; the
                 // eviction already wrote back, so apply the store directly.
                 mem_.write64(addr & ~7ull, store_value);
             } else {
                 value = mem_.read64(addr & ~7ull);
             }
             maybe_prefetch(cache_id, origin_block, lb);
             cb(now, value, q, remote);
         });
}

void MemorySystem::flush_cache(int cache_id) {
    Cache& c = caches_[cache_id];
    for (Line& l : c.lines) {
        if (!l.valid) continue;
        harvest(l);
        if (l.dirty)
            for (int i = 0; i < 8; ++i) mem_.write64(l.tag + 8ull * i, l.words[i]);
        l = Line{};
    }
}

void MemorySystem::flush_all() {
    for (int i = 0; i < (int)caches_.size(); ++i) flush_cache(i);
}

// ---------------------------------------------------------------------------
// Scratchpads

std::uint64_t MemorySystem::spad_read(int block, std::uint32_t offset) const {
    if (offset + 8 > cfg_.spad.size_bytes) throw SimFault("SPAD offset out of window");
    return spads_[block][offset / 8];
}

void MemorySystem::spad_write(int block, std::uint32_t offset, std::uint64_t value) {
    if (offset + 8 > cfg_.spad.size_bytes) throw SimFault("SPAD offset out of window");
    spads_[block][offset / 8] = value;
}

void MemorySystem::spad_access(int origin_block, int owner_block, std::uint32_t offset,
                               bool is_store, std::uint64_t value, AccessDone cb) {
    if (offset + 8 > cfg_.spad.size_bytes) throw SimFault("SPAD offset out of window");
    if (origin_block == owner_block) {
        engine_.schedule(cfg_.spad.latency, owner_block, "spad",
                         [this, owner_block, offset, is_store, value,
                          cb = std::move(cb)](Cycles now) {
                             std::uint64_t result = 0;
                             if (is_store)
                                 spad_write(owner_block, offset, value);
                             else
                                 result = spad_read(owner_block, offset);
                             cb(now, result, 0, false);
                         });
        return;
    }
    // Remote SPAD: a normal remote request, minus the DRAM controller.
    Packet req{origin_block, owner_block, PacketClass::Req, is_store ? 8u : 0u};
    net_.send(req, [this, origin_block, owner_block, offset, is_store, value,
                    cb = std::move(cb)](Cycles, Cycles q) {
        engine_.schedule(cfg_.spad.latency, owner_block, "spad.remote",
                         [this, origin_block, owner_block, offset, is_store, value, q,
                          cb](Cycles) {
            std::uint64_t result = 0;
            if (is_store)
                spad_write(owner_block, offset, value);
            else
                result = spad_read(owner_block, offset);
            Packet resp{owner_block, origin_block, PacketClass::Resp, is_store ? 0u : 8u};
            net_.send(resp, [result, q, cb](Cycles t, Cycles q2) {
                cb(t, result, q + q2, true);
            });
        });
    });
}

}  // namespace piuma
