#include "piuma/graph.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace piuma {

bool CsrMatrix::valid() const {
    if (row_ptr.size() != n + 1) return false;
    if (row_ptr.front() != 0 || row_ptr.back() != nnz) return false;
    for (std::size_t i = 0; i + 1 < row_ptr.size(); ++i)
        if (row_ptr[i] > row_ptr[i + 1]) return false;
    if (col_idx.size() != nnz || values.size() != nnz) return false;
    for (auto c : col_idx)
        if (c >= n) return false;
    return true;
}

EdgeList rmat_generate(std::uint32_t scale, std::uint32_t edge_factor, double a, double b,
                       double c, double d, std::uint64_t seed) {
    double sum = a + b + c + d;
    if (sum < 1.0 - 1e-9 || sum > 1.0 + 1e-9)
        throw std::invalid_argument("rmat: probabilities must sum to 1");
    EdgeList el;
    el.n = 1ull << scale;
    std::uint64_t m = (std::uint64_t)edge_factor << scale;
    el.edges.reserve(m);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (std::uint64_t e = 0; e < m; ++e) {
        std::uint64_t src = 0, dst = 0;
        for (std::uint32_t bit = 0; bit < scale; ++bit) {
            double r = uni(rng);
            src <<= 1;
            dst <<= 1;
            if (r < a) {
                // top-left quadrant
            } else if (r < a + b) {
                dst |= 1;
            } else if (r < a + b + c) {
                src |= 1;
            } else {
                src |= 1;
                dst |= 1;
            }
        }
        el.edges.emplace_back(src, dst);
    }
    return el;
}

CsrMatrix csr_from_edges(const EdgeList& el, std::uint64_t n) {
    CsrMatrix m;
    m.n = n;
    m.nnz = el.edges.size();
    m.row_ptr.assign(n + 1, 0);
    for (const auto& [s, d] : el.edges) {
        if (s >= n || d >= n) throw std::out_of_range("csr_from_edges: vertex id out of range");
        m.row_ptr[s + 1]++;
    }
    for (std::size_t i = 1; i <= n; ++i) m.row_ptr[i] += m.row_ptr[i - 1];
    m.col_idx.resize(m.nnz);
    m.values.assign(m.nnz, 0);
    std::vector<std::uint64_t> cursor(m.row_ptr.begin(), m.row_ptr.end() - 1);
    for (const auto& [s, d] : el.edges) m.col_idx[cursor[s]++] = d;
    return m;
}

void assign_values(CsrMatrix& m, std::uint64_t seed, bool float_mode) {
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + 1);
    if (float_mode) {
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        for (auto& v : m.values) {
            double x = uni(rng);
            std::memcpy(&v, &x, 8);
        }
    } else {
        for (auto& v : m.values) v = 1 + rng() % 9;
    }
}

std::uint64_t max_out_degree(const CsrMatrix& m) {
    std::uint64_t best = 0;
    for (std::size_t r = 0; r < m.n; ++r)
        best = std::max(best, m.row_ptr[r + 1] - m.row_ptr[r]);
    return best;
}

void write_edges_binary(const std::string& path, const EdgeList& el) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path);
    for (const auto& [s, d] : el.edges) {
        std::uint64_t buf[2] = {s, d};  // little-endian on all supported targets
        out.write(reinterpret_cast<const char*>(buf), 16);
    }
}

EdgeList read_edges_binary(const std::string& path, std::uint64_t n) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    EdgeList el;
    el.n = n;
    std::uint64_t buf[2];
    while (in.read(reinterpret_cast<char*>(buf), 16)) el.edges.emplace_back(buf[0], buf[1]);
    return el;
}

void write_matrix_market(const std::string& path, const CsrMatrix& m, bool float_mode) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "%%MatrixMarket matrix coordinate "
        << (float_mode ? "real" : "integer") << " general\n";
    out << m.n << " " << m.n << " " << m.nnz << "\n";
    for (std::uint64_t r = 0; r < m.n; ++r) {
        for (std::uint64_t j = m.row_ptr[r]; j < m.row_ptr[r + 1]; ++j) {
            out << r + 1 << " " << m.col_idx[j] + 1 << " ";
            if (float_mode) {
                double x;
                std::memcpy(&x, &m.values[j], 8);
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.17g", x);
                out << buf << "\n";
            } else {
                out << m.values[j] << "\n";
            }
        }
    }
}

CsrMatrix read_matrix_market(const std::string& path, bool float_mode) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("%%MatrixMarket", 0) != 0)
        throw std::runtime_error(path + ": not a Matrix Market file");
    while (std::getline(in, line) && (line.empty() || line[0] == '%')) {
    }
    std::istringstream hdr(line);
    std::uint64_t rows, cols, nnz;
    if (!(hdr >> rows >> cols >> nnz)) throw std::runtime_error(path + ": bad size line");
    EdgeList el;
    el.n = std::max(rows, cols);
    std::vector<std::uint64_t> vals;
    vals.reserve(nnz);
    for (std::uint64_t k = 0; k < nnz; ++k) {
        std::uint64_t r, c;
        if (!(in >> r >> c)) throw std::runtime_error(path + ": truncated entries");
        std::uint64_t v = 0;
        if (float_mode) {
            double x;
            in >> x;
            std::memcpy(&v, &x, 8);
        } else {
            long long x;
            in >> x;
            v = (std::uint64_t)x;
        }
        el.edges.emplace_back(r - 1, c - 1);
        vals.push_back(v);
    }
    // csr_from_edges uses a stable counting pass, so values line up by
    // replaying the same cursor walk.
    CsrMatrix m = csr_from_edges(el, el.n);
    std::vector<std::uint64_t> cursor(m.row_ptr.begin(), m.row_ptr.end() - 1);
    for (std::size_t k = 0; k < el.edges.size(); ++k)
        m.values[cursor[el.edges[k].first]++] = vals[k];
    return m;
}

}  // namespace piuma
