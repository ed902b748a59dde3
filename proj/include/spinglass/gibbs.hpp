// The Gibbs measure P_beta on {-1,+1}^N: Hamiltonian and local fields,
// exact enumeration for small N (log-partition psi and its derivatives),
// random-scan heat-bath (Glauber) sampling for large N, and thermodynamic
// integration of psi from MCMC energy estimates.
#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <istream>
#include <memory>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "spinglass/coupling.hpp"
#include "spinglass/numeric.hpp"
#include "spinglass/rng.hpp"

namespace spinglass {

// A configuration in {-1,+1}^N.
class SpinConfig {
public:
    SpinConfig() = default;
    explicit SpinConfig(int n, int fill = -1) : s_(static_cast<std::size_t>(n), check(fill)) {}

    static SpinConfig random(int n, Xoshiro256pp& rng) {
        SpinConfig c(n);
        for (auto& v : c.s_) v = static_cast<std::int8_t>(rng.coin_pm1());
        return c;
    }

    // state index convention: bit i set <=> spin i is +1
    static SpinConfig from_index(std::uint32_t state, int n) {
        SpinConfig c(n);
        for (int i = 0; i < n; ++i)
            c.s_[static_cast<std::size_t>(i)] = (state >> i) & 1u ? 1 : -1;
        return c;
    }
    std::uint32_t to_index() const {
        std::uint32_t state = 0;
        for (std::size_t i = 0; i < s_.size(); ++i)
            if (s_[i] > 0) state |= 1u << i;
        return state;
    }

    static SpinConfig from_pm_string(const std::string& text) {
        SpinConfig c(static_cast<int>(text.size()));
        for (std::size_t i = 0; i < text.size(); ++i) {
            if (text[i] == '+') c.s_[i] = 1;
            else if (text[i] == '-') c.s_[i] = -1;
            else throw std::invalid_argument("SpinConfig: expected only '+'/'-'");
        }
        return c;
    }
    std::string to_pm_string() const {
        std::string text(s_.size(), '-');
        for (std::size_t i = 0; i < s_.size(); ++i)
            if (s_[i] > 0) text[i] = '+';
        return text;
    }

    int size() const noexcept { return static_cast<int>(s_.size()); }
    int operator[](int i) const { return s_[static_cast<std::size_t>(i)]; }
    void set(int i, int value) { s_[static_cast<std::size_t>(i)] = check(value); }
    void flip(int i) { s_[static_cast<std::size_t>(i)] = -s_[static_cast<std::size_t>(i)]; }
    SpinConfig flipped(int i) const {
        SpinConfig c = *this;
        c.flip(i);
        return c;
    }
    SpinConfig negated() const {
        SpinConfig c = *this;
        for (auto& v : c.s_) v = -v;
        return c;
    }
    bool operator==(const SpinConfig&) const = default;

private:
    static std::int8_t check(int v) {
        if (v != 1 && v != -1) throw std::invalid_argument("SpinConfig: spins must be +1 or -1");
        return static_cast<std::int8_t>(v);
    }
    std::vector<std::int8_t> s_;
};

inline void check_dims(const CouplingMatrix& j, const SpinConfig& tau) {
    if (j.size() != tau.size())
        throw std::invalid_argument("dimension mismatch between coupling matrix and configuration");
}

// H(tau) = sum_{i<j} J_ij tau_i tau_j
inline double hamiltonian(const CouplingMatrix& j, const SpinConfig& tau) {
    check_dims(j, tau);
    double h = 0.0;
    j.for_each_upper([&](int a, int b, double v) {
        h += v * (tau[a] * tau[b]);
    });
    return h;
}

// m_i(tau) = sum_j J_ij tau_j; independent of tau_i since J_ii = 0
inline std::vector<double> local_fields(const CouplingMatrix& j, const SpinConfig& tau) {
    check_dims(j, tau);
    const int n = j.size();
    std::vector<double> x(static_cast<std::size_t>(n)), m(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = tau[i];
    j.matvec(x, m);
    return m;
}

// Heat-bath probability of flipping spin `site`:
//   p = e^{-beta tau_j m_j} / (e^{beta m_j} + e^{-beta m_j}) = 1/(1 + e^{2 beta tau_j m_j}).
// The logistic form stays stable for |beta*m_j| into the hundreds.
inline double flip_probability_from_field(double beta, int tau_j, double m_j) noexcept {
    return 1.0 / (1.0 + std::exp(2.0 * beta * tau_j * m_j));
}

inline double flip_probability(const CouplingMatrix& j, const SpinConfig& tau, int site, double beta) {
    check_dims(j, tau);
    if (site < 0 || site >= j.size()) throw std::out_of_range("flip_probability: site out of range");
    if (beta < 0) throw std::invalid_argument("flip_probability: beta must be >= 0");
    double m = 0.0;
    for (int k = 0; k < j.size(); ++k) m += j.at(site, k) * tau[k];
    return flip_probability_from_field(beta, tau[site], m);
}

// Random-scan heat-bath chain. Reversible for P_beta; matches the
// exchangeable-pair update: pick I uniformly, redraw spin I from its
// conditional law. Local fields are maintained incrementally.
class GlauberChain {
public:
    GlauberChain(const CouplingMatrix& j, double beta, std::uint64_t seed)
        : n_(j.size()), beta_(beta), dense_(j.dense()), rng_(seed) {
        if (beta < 0) throw std::invalid_argument("GlauberChain: beta must be >= 0");
        spins_ = SpinConfig::random(n_, rng_);
        fields_ = local_fields(j, spins_);
    }

    GlauberChain(const CouplingMatrix& j, double beta, std::uint64_t seed, SpinConfig init)
        : n_(j.size()), beta_(beta), dense_(j.dense()), rng_(seed), spins_(std::move(init)) {
        check_dims(j, spins_);
        fields_ = local_fields(j, spins_);
    }

    // one heat-bath update at a uniformly chosen site (two RNG draws, always)
    void step() {
        const int site = static_cast<int>(rng_.below(static_cast<std::uint64_t>(n_)));
        const double p =
            flip_probability_from_field(beta_, spins_[site], fields_[static_cast<std::size_t>(site)]);
        const double u = rng_.uniform01();
        if (u < p) {
            spins_.flip(site);
            const double* row = dense_.data() + static_cast<std::size_t>(site) * n_;
            const double two_tau = 2.0 * spins_[site];
            for (int i = 0; i < n_; ++i) fields_[static_cast<std::size_t>(i)] += two_tau * row[i];
            // row[site] == 0, so m_site is untouched
        }
    }

    void sweep() {
        for (int k = 0; k < n_; ++k) step();
        ++sweeps_;
    }
    void run_sweeps(long count) {
        for (long k = 0; k < count; ++k) sweep();
    }

    const SpinConfig& config() const noexcept { return spins_; }
    std::span<const double> fields() const noexcept { return fields_; }
    std::uint64_t sweeps() const noexcept { return sweeps_; }
    double beta() const noexcept { return beta_; }

    // H from the maintained fields, H = (1/2) sum_i m_i tau_i
    double energy() const noexcept {
        double acc = 0.0;
        for (int i = 0; i < n_; ++i) acc += fields_[static_cast<std::size_t>(i)] * spins_[i];
        return 0.5 * acc;
    }

private:
    int n_;
    double beta_;
    std::vector<double> dense_;
    Xoshiro256pp rng_;
    SpinConfig spins_;
    std::vector<double> fields_;
    std::uint64_t sweeps_ = 0;
};

struct SampleRun {
    std::vector<SpinConfig> configs;
    bool mixing_uncertain = false;  // beta * ||J|| > 1: Glauber mixing not guaranteed
    double j_norm = 0.0;
};

// Draw n_samples configurations from P_beta by Glauber dynamics:
// burn-in, then `thin_sweeps` sweeps before each recorded configuration.
inline SampleRun sample(const CouplingMatrix& j, double beta, long burnin_sweeps, long n_samples,
                        long thin_sweeps, std::uint64_t seed, double j_norm = std::nan("")) {
    if (burnin_sweeps < 0) throw std::invalid_argument("sample: burnin_sweeps must be >= 0");
    if (thin_sweeps < 1) throw std::invalid_argument("sample: thin_sweeps must be >= 1");
    SampleRun run;
    run.j_norm = std::isnan(j_norm) ? operator_norm(j) : j_norm;
    run.mixing_uncertain = beta * run.j_norm > 1.0;
    GlauberChain chain(j, beta, seed);
    chain.run_sweeps(burnin_sweeps);
    run.configs.reserve(static_cast<std::size_t>(n_samples));
    for (long s = 0; s < n_samples; ++s) {
        chain.run_sweeps(thin_sweeps);
        run.configs.push_back(chain.config());
    }
    return run;
}

inline constexpr int kMaxExactSites = 22;

// Gray-code walk over all 2^n states with incrementally maintained
// Hamiltonian and local fields: visit(state_index, tau, m, h) for every
// state, O(n 2^n) total. State index convention as in SpinConfig.
template <typename Visitor>
void enumerate_states(const CouplingMatrix& j, Visitor&& visit) {
    const int n = j.size();
    if (n > kMaxExactSites)
        throw std::invalid_argument("enumerate_states: n exceeds the exact-enumeration cap (22)");
    const std::size_t count = std::size_t{1} << n;

    SpinConfig tau(n, -1);
    std::vector<double> m = local_fields(j, tau);
    const auto dense = j.dense();
    double h = hamiltonian(j, tau);
    std::uint32_t gray = 0;
    visit(std::uint32_t{0}, std::as_const(tau), std::span<const double>(m), h);
    for (std::size_t b = 1; b < count; ++b) {
        const int site = std::countr_zero(b);
        // flipping spin j changes H by -2 tau_j m_j (pre-flip values)
        h += -2.0 * tau[site] * m[static_cast<std::size_t>(site)];
        tau.flip(site);
        const double* row = dense.data() + static_cast<std::size_t>(site) * n;
        const double two_tau = 2.0 * tau[site];
        for (int i = 0; i < n; ++i) m[static_cast<std::size_t>(i)] += two_tau * row[i];
        gray ^= std::uint32_t{1} << site;
        visit(gray, std::as_const(tau), std::span<const double>(m), h);
    }
}

// H(tau) for every state of an n-site system, n <= 22, computed once and
// reweighted per beta by enumerate_exact.
class StateEnumeration {
public:
    static constexpr int kMaxSites = kMaxExactSites;

    explicit StateEnumeration(const CouplingMatrix& j) : n_(j.size()) {
        if (n_ > kMaxSites)
            throw std::invalid_argument("StateEnumeration: n exceeds the exact-enumeration cap (22)");
        h_.assign(std::size_t{1} << n_, 0.0);
        enumerate_states(j, [this](std::uint32_t state, const SpinConfig&, std::span<const double>,
                                   double h) { h_[state] = h; });
    }

    int sites() const noexcept { return n_; }
    const std::vector<double>& hamiltonians() const noexcept { return h_; }
    std::size_t state_count() const noexcept { return h_.size(); }

private:
    int n_;
    std::vector<double> h_;
};

// Full description of P_beta for one beta, reweighted from a shared
// StateEnumeration: probabilities, psi and its first two derivatives.
struct ExactTable {
    int n = 0;
    double beta = 0.0;
    std::shared_ptr<const StateEnumeration> states;
    std::vector<double> log_prob;  // beta*H - log(sum_tau e^{beta H})
    std::vector<double> prob;
    double psi = 0.0;               // (1/n) log( 2^{-n} sum_tau e^{beta H} )
    double psi_prime = 0.0;         // E_beta[H] / n
    double psi_double_prime = 0.0;  // var_beta(H) / n

    double probability(std::uint32_t state) const { return prob[state]; }
    double h_value(std::uint32_t state) const { return states->hamiltonians()[state]; }

    // E_beta[sigma_i], zero for every i by global spin-flip symmetry
    double site_magnetization(int i) const {
        double acc = 0.0;
        for (std::size_t s = 0; s < prob.size(); ++s)
            acc += ((s >> i) & 1u ? 1.0 : -1.0) * prob[s];
        return acc;
    }
};

inline ExactTable enumerate_exact(std::shared_ptr<const StateEnumeration> states, double beta) {
    ExactTable t;
    t.n = states->sites();
    t.beta = beta;
    t.states = std::move(states);
    const auto& h = t.states->hamiltonians();
    const std::size_t count = h.size();

    double max_exp = -std::numeric_limits<double>::infinity();
    for (double v : h) max_exp = std::max(max_exp, beta * v);
    NeumaierSum z;
    for (double v : h) z.add(std::exp(beta * v - max_exp));
    const double lse = max_exp + std::log(z.value());  // log sum_tau e^{beta H}

    t.log_prob.resize(count);
    t.prob.resize(count);
    NeumaierSum mean_acc;
    for (std::size_t s = 0; s < count; ++s) {
        t.log_prob[s] = beta * h[s] - lse;
        t.prob[s] = std::exp(t.log_prob[s]);
        mean_acc.add(t.prob[s] * h[s]);
    }
    const double mean_h = mean_acc.value();
    NeumaierSum var_acc;
    for (std::size_t s = 0; s < count; ++s) {
        const double d = h[s] - mean_h;
        var_acc.add(t.prob[s] * d * d);
    }
    t.psi = (lse - t.n * std::log(2.0)) / t.n;
    t.psi_prime = mean_h / t.n;
    t.psi_double_prime = var_acc.value() / t.n;
    return t;
}

inline ExactTable enumerate_exact(const CouplingMatrix& j, double beta) {
    return enumerate_exact(std::make_shared<StateEnumeration>(j), beta);
}

// Inverse-CDF sampler over an exact table (small n), for replica experiments
// free of Markov-chain error.
class ExactSampler {
public:
    explicit ExactSampler(const ExactTable& table) : n_(table.n), cdf_(table.prob) {
        double acc = 0.0;
        for (auto& c : cdf_) {
            acc += c;
            c = acc;
        }
        cdf_.back() = 1.0;
    }

    std::uint32_t draw_index(Xoshiro256pp& rng) const {
        const double u = rng.uniform01();
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        return static_cast<std::uint32_t>(it == cdf_.end() ? cdf_.size() - 1 : it - cdf_.begin());
    }
    SpinConfig draw(Xoshiro256pp& rng) const {
        return SpinConfig::from_index(draw_index(rng), n_);
    }

private:
    int n_;
    std::vector<double> cdf_;
};

struct McmcOptions {
    long burnin_sweeps = 1000;
    long thin_sweeps = 10;
    long samples_per_node = 200;
};

struct PsiEstimate {
    double value = 0.0;
    double std_error = 0.0;
    int nodes = 0;
};

// psi(beta) = integral_0^beta psi'(u) du with psi'(u) = E_u[H]/n estimated by
// an independent Glauber chain per trapezoid node. The u = 0 node is exact
// (E_0[H] = 0 by spin-flip symmetry). Reported error combines the per-node
// standard errors through the quadrature weights; it ignores quadrature bias.
inline PsiEstimate psi_thermo(const CouplingMatrix& j, double beta, int n_grid_points,
                              const McmcOptions& opts, std::uint64_t seed) {
    if (beta <= 0) throw std::invalid_argument("psi_thermo: beta must be > 0");
    if (n_grid_points < 2) throw std::invalid_argument("psi_thermo: need at least 2 grid points");
    const int n = j.size();
    const double h_step = beta / (n_grid_points - 1);

    PsiEstimate est;
    est.nodes = n_grid_points;
    double value = 0.0, var_acc = 0.0;
    for (int node = 1; node < n_grid_points; ++node) {
        const double u = h_step * node;
        GlauberChain chain(j, u, child_seed(seed, static_cast<std::uint64_t>(node)));
        chain.run_sweeps(opts.burnin_sweeps);
        double mean = 0.0, m2 = 0.0;
        for (long s = 0; s < opts.samples_per_node; ++s) {
            chain.run_sweeps(opts.thin_sweeps);
            const double e = chain.energy() / n;
            const double delta = e - mean;
            mean += delta / (s + 1);
            m2 += delta * (e - mean);
        }
        const double count = static_cast<double>(opts.samples_per_node);
        const double se = std::sqrt(m2 / (count - 1) / count);
        const double weight = (node == n_grid_points - 1) ? h_step / 2 : h_step;
        value += weight * mean;
        var_acc += weight * weight * se * se;
    }
    est.value = value;
    est.std_error = std::sqrt(var_acc);
    return est;
}

// --- spins v1 file format ----------------------------------------------
// header `spins v1 n=<N> beta=<beta> seed=<seed>`, then one configuration
// per line as a +/- string.

struct SpinsFile {
    int n = 0;
    double beta = 0.0;
    std::uint64_t seed = 0;
    std::vector<SpinConfig> configs;
};

inline void write_spins(const SpinsFile& f, std::ostream& out) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", f.beta);
    out << "spins v1 n=" << f.n << " beta=" << buf << " seed=" << f.seed << "\n";
    for (const auto& c : f.configs) out << c.to_pm_string() << "\n";
}

inline void write_spins(const SpinsFile& f, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_spins: cannot open " + path);
    write_spins(f, out);
}

inline SpinsFile read_spins(std::istream& in) {
    auto fail = [](const std::string& what, int line) {
        throw ParseError("spins parse error, line " + std::to_string(line) + ": " + what);
    };
    std::string line;
    if (!std::getline(in, line)) fail("empty file", 1);

    SpinsFile f;
    {
        std::istringstream hdr(line);
        std::string magic, version, field;
        if (!(hdr >> magic >> version) || magic != "spins" || version != "v1")
            fail("malformed header, expected `spins v1 ...`", 1);
        while (hdr >> field) {
            const auto eq = field.find('=');
            if (eq == std::string::npos) fail("malformed header field `" + field + "`", 1);
            const std::string key = field.substr(0, eq), val = field.substr(eq + 1);
            try {
                if (key == "n") f.n = std::stoi(val);
                else if (key == "beta") f.beta = std::stod(val);
                else if (key == "seed") f.seed = std::stoull(val);
                else fail("unknown header field `" + key + "`", 1);
            } catch (const std::logic_error&) {
                fail("unparseable header value `" + val + "`", 1);
            }
        }
        if (f.n < 1) fail("header declares no sites", 1);
    }
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (static_cast<int>(line.size()) != f.n)
            fail("configuration has " + std::to_string(line.size()) + " spins, expected " +
                     std::to_string(f.n),
                 lineno);
        try {
            f.configs.push_back(SpinConfig::from_pm_string(line));
        } catch (const std::invalid_argument&) {
            fail("invalid spin character (need '+'/'-')", lineno);
        }
    }
    return f;
}

inline SpinsFile read_spins(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_spins: cannot open " + path);
    return read_spins(in);
}

}  // namespace spinglass
