#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace piuma {

struct EdgeList {
    std::uint64_t n = 0;  // vertex count
    std::vector<std::pair<std::uint64_t, std::uint64_t>> edges;
};

struct CsrMatrix {
    std::uint64_t n = 0;
    std::uint64_t nnz = 0;
    std::vector<std::uint64_t> row_ptr;  // n+1 entries
    std::vector<std::uint64_t> col_idx;
    std::vector<std::uint64_t> values;   // raw 8-byte payloads (int or double bits)

    bool valid() const;
};

// Recursive-matrix generator: 2^scale vertices, edge_factor * 2^scale edges,
// deterministic per seed. Duplicate edges are kept (repeated nonzeros).
EdgeList rmat_generate(std::uint32_t scale, std::uint32_t edge_factor, double a, double b,
                       double c, double d, std::uint64_t seed);

CsrMatrix csr_from_edges(const EdgeList& edges, std::uint64_t n);

// Fills values deterministically: small integers in int mode, uniform doubles
// (bit pattern) in float mode.
void assign_values(CsrMatrix& m, std::uint64_t seed, bool float_mode);

std::uint64_t max_out_degree(const CsrMatrix& m);

// Binary edge list: little-endian (u64 src, u64 dst) pairs.
void write_edges_binary(const std::string& path, const EdgeList& el);
EdgeList read_edges_binary(const std::string& path, std::uint64_t n);

// Matrix Market exchange format (coordinate, general).
void write_matrix_market(const std::string& path, const CsrMatrix& m, bool float_mode);
CsrMatrix read_matrix_market(const std::string& path, bool float_mode);

}  // namespace piuma
