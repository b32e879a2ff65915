#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "piuma/graph.hpp"
#include "piuma/machine.hpp"

namespace piuma {

enum class SpmvVariant { Base, Selective, Dma, CacheAll };

SpmvVariant spmv_variant_from_string(const std::string& s);
std::string to_string(SpmvVariant v);

// Matrix slices live on the owning threads' block; the dense vector and the
// result are interleaved across all controllers at 8-byte grain. Work is
// split by nonzero count: in integer mode a row may span threads, which then
// combine through atomic adds; float mode keeps rows whole so the
// accumulation order matches the sequential reference bit for bit.
struct SpmvBuild {
    std::uint64_t n = 0, nnz = 0;
    std::uint64_t x_base = 0, y_base = 0;
    bool float_mode = false;
    std::vector<std::uint64_t> thread_bounds;  // nonzero index per thread, size T+1

    struct BlockSlice {
        std::uint64_t row0 = 0, row1 = 0;  // rows covered, [row0, row1)
        std::uint64_t nnz0 = 0, nnz1 = 0;
        std::uint64_t rp_base = 0, ci_base = 0, va_base = 0;
    };
    std::vector<BlockSlice> slices;

    std::uint64_t result(const Machine& m, std::uint64_t row) const;
    std::vector<std::uint64_t> result_vector(const Machine& m) const;
};

SpmvBuild build_spmv(Machine& m, const CsrMatrix& A, const std::vector<std::uint64_t>& x,
                     SpmvVariant variant, bool float_mode);

// Reference sequential SpMV over the same raw 8-byte values.
std::vector<std::uint64_t> spmv_reference(const CsrMatrix& A,
                                          const std::vector<std::uint64_t>& x, bool float_mode);

inline constexpr std::uint64_t kBfsNoParent = ~0ull;

struct BfsBuild {
    std::uint64_t n = 0;
    std::uint64_t root = 0;
    std::uint64_t parent_base = 0, level_base = 0;

    std::uint64_t parent(const Machine& m, std::uint64_t v) const;
    std::uint64_t level(const Machine& m, std::uint64_t v) const;
};

// Frontier-queue BFS: two shared queues swapped per level, remote-atomic CAS
// parent claims, collective reduce for termination.
BfsBuild build_bfs(Machine& m, const CsrMatrix& graph, std::uint64_t root);

std::vector<std::uint64_t> bfs_reference_levels(const CsrMatrix& graph, std::uint64_t root);

// Microbenchmarks.
void build_random_access(Machine& m, std::uint64_t footprint_words,
                         std::uint64_t ops_per_thread, std::uint64_t seed);
void build_indirection_chain(Machine& m, std::uint64_t length, std::uint64_t hops_per_thread,
                             std::uint64_t seed, int num_threads = 1);
void build_random_walk(Machine& m, const CsrMatrix& graph, std::uint32_t walk_length,
                       std::uint64_t seed);

}  // namespace piuma
