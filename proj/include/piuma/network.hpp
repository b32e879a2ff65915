#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "piuma/config.hpp"
#include "piuma/sim.hpp"
#include "piuma/stats.hpp"

namespace piuma {

struct Packet {
    int src = 0;
    int dst = 0;
    PacketClass cls = PacketClass::Req;
    std::uint32_t payload_bytes = 8;
};

// HyperX-style hierarchical all-to-all: blocks are coordinates in a mixed-radix
// space; any two coordinates differing in one dimension are one hop apart.
// Routing is dimension-order, so path length <= number of dimensions.
// Each directed link is a FIFO server; queueing shows up as latency and is
// reported back to the sender as accumulated queue delay.
class NetworkModel {
public:
    NetworkModel(SimEngine& engine, StatsLedger& ledger, const NetworkConfig& cfg);

    using Delivered = std::function<void(Cycles now, Cycles queue_delay)>;

    // Dimension-order path as a list of link ids; empty when src == dst.
    std::vector<int> route(int src, int dst) const;

    void send(const Packet& pkt, Delivered on_delivered);

    int blocks() const { return blocks_; }
    int num_links() const { return (int)links_.size(); }
    std::vector<std::uint32_t> coords(int block) const;

private:
    struct Link {
        Cycles next_free = 0;
    };

    int link_id(int src, std::size_t dim, std::uint32_t to_coord) const;
    void hop(Packet pkt, std::vector<int> path, std::size_t idx, Cycles q,
             Delivered cb, Cycles now);
    void deliver(const Packet& pkt, Cycles q, const Delivered& cb, Cycles now);
    Cycles serialization(const Packet& pkt) const;

    SimEngine& engine_;
    StatsLedger& ledger_;
    NetworkConfig cfg_;
    int blocks_;
    int links_per_block_;
    std::vector<int> dim_link_base_;  // per-dimension offset into a block's link group
    std::vector<Link> links_;
};

}  // namespace piuma
