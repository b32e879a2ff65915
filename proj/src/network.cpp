#include "piuma/network.hpp"

#include <cmath>
#include <stdexcept>

namespace piuma {

NetworkModel::NetworkModel(SimEngine& engine, StatsLedger& ledger, const NetworkConfig& cfg)
    : engine_(engine), ledger_(ledger), cfg_(cfg) {
    blocks_ = 1;
    links_per_block_ = 0;
    for (auto d : cfg_.dims) {
        dim_link_base_.push_back(links_per_block_);
        blocks_ *= (int)d;
        links_per_block_ += (int)d - 1;
    }
    links_.resize((std::size_t)blocks_ * links_per_block_);
    ledger_.links.resize(links_.size());
    ledger_.block_ingress.resize(blocks_);
}

std::vector<std::uint32_t> NetworkModel::coords(int block) const {
    std::vector<std::uint32_t> c(cfg_.dims.size());
    for (std::size_t i = 0; i < cfg_.dims.size(); ++i) {
        c[i] = block % cfg_.dims[i];
        block /= cfg_.dims[i];
    }
    return c;
}

int NetworkModel::link_id(int src, std::size_t dim, std::uint32_t to_coord) const {
    // A block has (dim_size - 1) links per dimension, one to each peer
    // coordinate; skip the block's own coordinate when indexing.
    std::uint32_t own = coords(src)[dim];
    std::uint32_t slot = to_coord < own ? to_coord : to_coord - 1;
    return src * links_per_block_ + dim_link_base_[dim] + (int)slot;
}

std::vector<int> NetworkModel::route(int src, int dst) const {
    if (src < 0 || src >= blocks_ || dst < 0 || dst >= blocks_)
        throw std::out_of_range("route: invalid block coordinate");
    std::vector<int> path;
    auto sc = coords(src), dc = coords(dst);
    int cur = src;
    int stride = 1;
    for (std::size_t dim = 0; dim < cfg_.dims.size(); ++dim) {
        if (sc[dim] != dc[dim]) {
            path.push_back(link_id(cur, dim, dc[dim]));
            cur += ((int)dc[dim] - (int)sc[dim]) * stride;
        }
        stride *= (int)cfg_.dims[dim];
    }
    return path;
}

Cycles NetworkModel::serialization(const Packet& pkt) const {
    double bytes = (double)pkt.payload_bytes + cfg_.header_bytes;
    return (Cycles)std::ceil(bytes / cfg_.link_bandwidth);
}

void NetworkModel::deliver(const Packet& pkt, Cycles q, const Delivered& cb, Cycles now) {
    ledger_.packets_delivered++;
    ledger_.block_ingress[pkt.dst].payload_bytes[(int)pkt.cls] += pkt.payload_bytes;
    cb(now, q);
}

void NetworkModel::hop(Packet pkt, std::vector<int> path, std::size_t idx, Cycles q,
                       Delivered cb, Cycles now) {
    Link& link = links_[path[idx]];
    Cycles start = std::max(now, link.next_free);
    Cycles ser = serialization(pkt);
    link.next_free = start + ser;
    q += start - now;

    auto& ls = ledger_.links[path[idx]];
    ls.busy_cycles += ser;
    ls.packets++;
    ls.header_bytes += cfg_.header_bytes;
    ls.payload_bytes[(int)pkt.cls] += pkt.payload_bytes;

    Cycles depart = start + ser + cfg_.hop_latency;
    if (idx + 1 == path.size()) {
        engine_.schedule(depart - now, pkt.dst, "net.deliver",
                         [this, pkt, q, cb = std::move(cb)](Cycles t) { deliver(pkt, q, cb, t); });
    } else {
        engine_.schedule(depart - now, pkt.dst, "net.hop",
                         [this, pkt, path = std::move(path), idx, q,
                          cb = std::move(cb)](Cycles t) { hop(pkt, path, idx + 1, q, cb, t); });
    }
}

void NetworkModel::send(const Packet& pkt, Delivered on_delivered) {
    ledger_.packets_injected++;
    auto path = route(pkt.src, pkt.dst);
    if (path.empty())
        ledger_.local_payload_bytes += pkt.payload_bytes;
    else
        ledger_.remote_payload_bytes += pkt.payload_bytes;
    if (path.empty()) {
        // Same block: no network cycles, but the delivery still counts for
        // provenance accounting.
        engine_.schedule(0, pkt.dst, "net.deliver",
                         [this, pkt, cb = std::move(on_delivered)](Cycles t) {
                             deliver(pkt, 0, cb, t);
                         });
        return;
    }
    hop(pkt, std::move(path), 0, 0, std::move(on_delivered), engine_.now());
}

}  // namespace piuma
