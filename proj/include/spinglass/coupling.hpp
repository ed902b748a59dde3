// Interaction matrices: construction for the standard model families,
// spectral norm, normalization, and the `jmat v1` file format.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "spinglass/rng.hpp"

namespace spinglass {

// Symmetric N x N interaction matrix with zero diagonal. Only the strict
// upper triangle is stored (row-major), so symmetry and the zero diagonal
// hold by construction, bit-exactly.
class CouplingMatrix {
public:
    explicit CouplingMatrix(int n) : n_(n) {
        if (n < 2) throw std::invalid_argument("CouplingMatrix: n must be >= 2");
        upper_.assign(static_cast<std::size_t>(n) * (n - 1) / 2, 0.0);
    }

    int size() const noexcept { return n_; }

    double at(int i, int j) const {
        check_index(i);
        check_index(j);
        if (i == j) return 0.0;
        return upper_[offset(std::min(i, j), std::max(i, j))];
    }

    void set(int i, int j, double value) {
        check_index(i);
        check_index(j);
        if (i == j) throw std::invalid_argument("CouplingMatrix: diagonal must stay zero");
        upper_[offset(std::min(i, j), std::max(i, j))] = value;
    }

    void add(int i, int j, double value) {
        check_index(i);
        check_index(j);
        if (i == j) throw std::invalid_argument("CouplingMatrix: diagonal must stay zero");
        upper_[offset(std::min(i, j), std::max(i, j))] += value;
    }

    bool is_zero() const noexcept {
        return std::all_of(upper_.begin(), upper_.end(), [](double v) { return v == 0.0; });
    }

    // Strict upper triangle, row-major: (0,1), (0,2), ..., (n-2,n-1).
    const std::vector<double>& upper() const noexcept { return upper_; }

    // y = J x in one pass over the stored triangle.
    void matvec(std::span<const double> x, std::span<double> y) const {
        std::fill(y.begin(), y.end(), 0.0);
        std::size_t p = 0;
        for (int i = 0; i < n_ - 1; ++i) {
            const double xi = x[static_cast<std::size_t>(i)];
            double acc = 0.0;
            for (int j = i + 1; j < n_; ++j, ++p) {
                const double v = upper_[p];
                acc += v * x[static_cast<std::size_t>(j)];
                y[static_cast<std::size_t>(j)] += v * xi;
            }
            y[static_cast<std::size_t>(i)] += acc;
        }
    }

    // Dense row-major mirror, for hot loops that need row access.
    std::vector<double> dense() const {
        std::vector<double> d(static_cast<std::size_t>(n_) * n_, 0.0);
        std::size_t p = 0;
        for (int i = 0; i < n_ - 1; ++i)
            for (int j = i + 1; j < n_; ++j, ++p) {
                d[static_cast<std::size_t>(i) * n_ + j] = upper_[p];
                d[static_cast<std::size_t>(j) * n_ + i] = upper_[p];
            }
        return d;
    }

    template <typename Fn>  // Fn(i, j, value) over the strict upper triangle
    void for_each_upper(Fn&& fn) const {
        std::size_t p = 0;
        for (int i = 0; i < n_ - 1; ++i)
            for (int j = i + 1; j < n_; ++j, ++p) fn(i, j, upper_[p]);
    }

private:
    void check_index(int i) const {
        if (i < 0 || i >= n_) throw std::out_of_range("CouplingMatrix: index out of range");
    }
    std::size_t offset(int i, int j) const noexcept {
        // i < j; row i of the strict upper triangle starts after
        // (n-1) + (n-2) + ... + (n-i) entries
        return static_cast<std::size_t>(i) * n_ - static_cast<std::size_t>(i) * (i + 1) / 2 +
               static_cast<std::size_t>(j - i - 1);
    }

    int n_;
    std::vector<double> upper_;
};

enum class ModelFamily { SK, Hopfield, CurieWeiss, Lattice2D, Custom };

inline const char* family_name(ModelFamily f) {
    switch (f) {
        case ModelFamily::SK: return "sk";
        case ModelFamily::Hopfield: return "hopfield";
        case ModelFamily::CurieWeiss: return "cw";
        case ModelFamily::Lattice2D: return "lattice2d";
        case ModelFamily::Custom: return "custom";
    }
    return "?";
}

struct ModelSpec {
    ModelFamily family = ModelFamily::CurieWeiss;
    int n = 0;
    int patterns = 0;         // Hopfield: number of stored patterns M >= 1
    int side = 0;             // Lattice2D: side length L, n == L*L
    double bond = 1.0;        // Lattice2D: bond strength
    std::string path;         // Custom: jmat file to load
    std::uint64_t seed = 0;   // disorder realization (SK, Hopfield)

    static ModelSpec sk(int n, std::uint64_t seed) {
        ModelSpec s;
        s.family = ModelFamily::SK;
        s.n = n;
        s.seed = seed;
        return s;
    }
    static ModelSpec hopfield(int n, int m, std::uint64_t seed) {
        ModelSpec s;
        s.family = ModelFamily::Hopfield;
        s.n = n;
        s.patterns = m;
        s.seed = seed;
        return s;
    }
    static ModelSpec curie_weiss(int n) {
        ModelSpec s;
        s.family = ModelFamily::CurieWeiss;
        s.n = n;
        return s;
    }
    static ModelSpec lattice2d(int side, double bond = 1.0) {
        ModelSpec s;
        s.family = ModelFamily::Lattice2D;
        s.n = side * side;
        s.side = side;
        s.bond = bond;
        return s;
    }

    void validate() const {
        if (n < 2) throw std::invalid_argument("ModelSpec: n must be >= 2");
        if (family == ModelFamily::Hopfield && patterns < 1)
            throw std::invalid_argument("ModelSpec: Hopfield requires patterns >= 1");
        if (family == ModelFamily::Lattice2D && n != side * side)
            throw std::invalid_argument("ModelSpec: Lattice2D requires n == side^2");
    }
};

// Hopfield pattern matrix eta[i*m + k] in {-1,+1}, drawn i-major from the seed.
inline std::vector<int> hopfield_patterns(int n, int m, std::uint64_t seed) {
    Xoshiro256pp rng(seed);
    std::vector<int> eta(static_cast<std::size_t>(n) * m);
    for (auto& e : eta) e = rng.coin_pm1();
    return eta;
}

// J_ij = (1/n) sum_k eta_ik eta_jk, diagonal zeroed.
inline CouplingMatrix hopfield_from_patterns(int n, int m, std::span<const int> eta) {
    CouplingMatrix j(n);
    for (int i = 0; i < n - 1; ++i)
        for (int k = i + 1; k < n; ++k) {
            long overlap = 0;
            for (int p = 0; p < m; ++p)
                overlap += eta[static_cast<std::size_t>(i) * m + p] *
                           eta[static_cast<std::size_t>(k) * m + p];
            j.set(i, k, static_cast<double>(overlap) / n);
        }
    return j;
}

CouplingMatrix read_matrix(std::istream& in);
CouplingMatrix read_matrix(const std::string& path);

inline CouplingMatrix build(const ModelSpec& spec) {
    spec.validate();
    const int n = spec.n;
    switch (spec.family) {
        case ModelFamily::SK: {
            // J_ij = g_ij / sqrt(n), g_ij iid standard normal over i < j
            CouplingMatrix j(n);
            GaussianSampler gauss(spec.seed);
            const double scale = 1.0 / std::sqrt(static_cast<double>(n));
            for (int i = 0; i < n - 1; ++i)
                for (int k = i + 1; k < n; ++k) j.set(i, k, gauss.next() * scale);
            return j;
        }
        case ModelFamily::Hopfield: {
            const auto eta = hopfield_patterns(n, spec.patterns, spec.seed);
            auto j = hopfield_from_patterns(n, spec.patterns, eta);
            if (j.is_zero()) throw std::runtime_error("build: degenerate all-zero Hopfield matrix");
            return j;
        }
        case ModelFamily::CurieWeiss: {
            CouplingMatrix j(n);
            const double v = 1.0 / n;
            for (int i = 0; i < n - 1; ++i)
                for (int k = i + 1; k < n; ++k) j.set(i, k, v);
            return j;
        }
        case ModelFamily::Lattice2D: {
            // periodic square lattice; wrap-around bonds accumulate, so L=2
            // doubles them (the torus multigraph convention)
            const int len = spec.side;
            CouplingMatrix j(n);
            auto site = [len](int r, int c) {
                return ((r % len) + len) % len * len + ((c % len) + len) % len;
            };
            for (int r = 0; r < len; ++r)
                for (int c = 0; c < len; ++c) {
                    j.add(site(r, c), site(r, c + 1), spec.bond);
                    j.add(site(r, c), site(r + 1, c), spec.bond);
                }
            if (j.is_zero()) throw std::runtime_error("build: zero lattice matrix");
            return j;
        }
        case ModelFamily::Custom: {
            auto j = read_matrix(spec.path);
            if (j.size() != n && n != 0)
                throw std::invalid_argument("build: custom file dimension disagrees with spec");
            return j;
        }
    }
    throw std::logic_error("build: unknown family");
}

// Largest |eigenvalue| of the symmetric matrix J, to relative accuracy tol.
//
// Power iteration on J*J (two matvecs per step), so paired +/- extreme
// eigenvalues, as in bipartite lattices, still converge. The start vector is
// all-ones with a fixed seeded perturbation: a pure all-ones start can be
// exactly orthogonal to the top eigenspace (balanced +-1 Hopfield patterns)
// and then converges cleanly to the wrong eigenvalue, which no stagnation
// test catches. If the iterate is annihilated outright, restart from a
// seeded random vector.
inline double operator_norm(const CouplingMatrix& j, double tol = 1e-10) {
    const int n = j.size();
    if (j.is_zero()) return 0.0;

    std::vector<double> x(static_cast<std::size_t>(n));
    {
        Xoshiro256pp rng(0x5EEDBA5Eu);
        double sq = 0.0;
        for (auto& v : x) {
            v = 1.0 + (rng.uniform01() - 0.5);
            sq += v * v;
        }
        for (auto& v : x) v /= std::sqrt(sq);
    }
    std::vector<double> y(static_cast<std::size_t>(n));
    std::vector<double> z(static_cast<std::size_t>(n));

    const int max_iterations = 10000;
    double lambda = 0.0;  // Rayleigh quotient of J^2
    int restarts = 0;
    for (int iter = 0; iter < max_iterations; ++iter) {
        j.matvec(x, y);
        j.matvec(y, z);
        double rq = 0.0, norm2 = 0.0;
        for (int i = 0; i < n; ++i) {
            rq += x[static_cast<std::size_t>(i)] * z[static_cast<std::size_t>(i)];
            norm2 += z[static_cast<std::size_t>(i)] * z[static_cast<std::size_t>(i)];
        }
        const double znorm = std::sqrt(norm2);
        if (znorm == 0.0 || rq <= 1e-300) {
            // start vector annihilated: restart from a deterministic random one
            if (++restarts > 4) return 0.0;
            Xoshiro256pp rng(derive_seed(0x9072E17ULL, 1000 + restarts));
            double s2 = 0.0;
            for (auto& v : x) {
                v = rng.uniform01() - 0.5;
                s2 += v * v;
            }
            for (auto& v : x) v /= std::sqrt(s2);
            lambda = 0.0;
            continue;
        }
        const bool converged = iter > 0 && std::abs(rq - lambda) <= tol * std::max(rq, 1e-300);
        lambda = rq;
        for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = z[static_cast<std::size_t>(i)] / znorm;
        if (converged) break;
    }
    return std::sqrt(lambda);
}

// (J / ||J||, ||J||). The reduction used throughout the finite-sample bounds.
inline std::pair<CouplingMatrix, double> normalize(const CouplingMatrix& j, double tol = 1e-10) {
    if (j.is_zero()) throw std::invalid_argument("normalize: zero matrix");
    const double norm = operator_norm(j, tol);
    CouplingMatrix out(j.size());
    j.for_each_upper([&](int a, int b, double v) { out.set(a, b, v / norm); });
    return {std::move(out), norm};
}

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {
[[noreturn]] inline void parse_fail(const std::string& what, int line) {
    throw ParseError("jmat parse error, line " + std::to_string(line) + ": " + what);
}
}  // namespace detail

// jmat v1: `jmat 1`, `n <N>`, then `<i> <j> <value>` triples with
// 0 <= i < j < N. `#` starts a comment. Omitted pairs are zero.
inline void write_matrix(const CouplingMatrix& j, std::ostream& out) {
    out << "jmat 1\n";
    out << "n " << j.size() << "\n";
    char buf[64];
    j.for_each_upper([&](int a, int b, double v) {
        if (v == 0.0) return;
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << a << ' ' << b << ' ' << buf << '\n';
    });
}

inline void write_matrix(const CouplingMatrix& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_matrix: cannot open " + path);
    write_matrix(j, out);
}

inline CouplingMatrix read_matrix(std::istream& in) {
    std::string line;
    int lineno = 0;

    auto next_content_line = [&](bool required) -> bool {
        while (std::getline(in, line)) {
            ++lineno;
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos || line[first] == '#') continue;
            return true;
        }
        if (required) detail::parse_fail("unexpected end of file", lineno + 1);
        return false;
    };

    next_content_line(true);
    {
        std::istringstream hdr(line);
        std::string magic;
        int version = 0;
        if (!(hdr >> magic >> version) || magic != "jmat" || version != 1)
            detail::parse_fail("malformed header, expected `jmat 1`", lineno);
    }
    next_content_line(true);
    int n = 0;
    {
        std::istringstream hdr(line);
        std::string key;
        if (!(hdr >> key >> n) || key != "n" || n < 2)
            detail::parse_fail("malformed size line, expected `n <N>` with N >= 2", lineno);
    }

    CouplingMatrix j(n);
    std::set<std::pair<int, int>> seen;
    while (next_content_line(false)) {
        std::istringstream row(line);
        long long a = 0, b = 0;
        double v = 0.0;
        std::string rest;
        if (!(row >> a >> b >> v)) detail::parse_fail("malformed entry, expected `<i> <j> <value>`", lineno);
        if (row >> rest) detail::parse_fail("trailing tokens after entry", lineno);
        if (a == b) detail::parse_fail("nonzero diagonal entry (" + std::to_string(a) + "," +
                                           std::to_string(b) + ")",
                                       lineno);
        if (a < 0 || b < 0 || a >= n || b >= n)
            detail::parse_fail("index out of range for n=" + std::to_string(n), lineno);
        if (a > b) detail::parse_fail("entries must have i < j", lineno);
        const auto key = std::make_pair(static_cast<int>(a), static_cast<int>(b));
        if (!seen.insert(key).second)
            detail::parse_fail("duplicate entry (" + std::to_string(a) + "," + std::to_string(b) + ")",
                               lineno);
        j.set(static_cast<int>(a), static_cast<int>(b), v);
    }
    if (j.is_zero())
        throw ParseError("jmat parse error: file declares no nonzero entries (zero matrix)");
    return j;
}

inline CouplingMatrix read_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_matrix: cannot open " + path);
    return read_matrix(in);
}

}  // namespace spinglass
