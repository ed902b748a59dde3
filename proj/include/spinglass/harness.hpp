// Experiment orchestration: seeded replica runs, exact audits of the
// variance/probability/monotonicity bounds, the sqrt(N)-consistency sweep,
// the Curie-Weiss counterexample, and condition scans.
//
// Determinism contract: every output is a pure function of (spec,
// parameters, master seed). Replica r of a run uses child_seed(master, r);
// workers may execute replicas in any order, results are aggregated in
// replica-index order, so CSV bodies are byte-identical across schedules.
#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "spinglass/bounds.hpp"
#include "spinglass/coupling.hpp"
#include "spinglass/estimator.hpp"
#include "spinglass/gibbs.hpp"
#include "spinglass/numeric.hpp"
#include "spinglass/rng.hpp"

namespace spinglass {

// results[i] = fn(i); any number of workers, same results
template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    const int workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(jobs), count));
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

inline std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// One (model, n, beta, replica) experiment row.
struct SweepRecord {
    std::string model;
    int n = 0;
    double beta_true = 0.0;
    long replica = 0;
    std::uint64_t seed = 0;     // the replica's child seed
    double beta_hat = 0.0;      // +inf for infinite estimates
    MpleStatus status = MpleStatus::root_found;
    double score_at_true = 0.0;  // S_sigma(beta_true)
    double h_over_n = 0.0;
    std::string sampler;  // "exact" | "mcmc" | "mcmc_uncertain"
    long runtime_ms = 0;  // 0 unless timing was requested (keeps CSV bodies reproducible)
};

inline std::string sweep_csv_header() {
    return "model,n,beta_true,replica,seed,beta_hat,status,score_at_true,h_over_n,sampler,runtime_ms";
}

inline std::string to_csv_row(const SweepRecord& r) {
    std::string row;
    row += r.model;
    row += ',';
    row += std::to_string(r.n);
    row += ',';
    row += format_double(r.beta_true);
    row += ',';
    row += std::to_string(r.replica);
    row += ',';
    row += std::to_string(r.seed);
    row += ',';
    row += format_double(r.beta_hat);
    row += ',';
    row += to_string(r.status);
    row += ',';
    row += format_double(r.score_at_true);
    row += ',';
    row += format_double(r.h_over_n);
    row += ',';
    row += r.sampler;
    row += ',';
    row += std::to_string(r.runtime_ms);
    return row;
}

struct ReplicaOptions {
    long burnin_sweeps = 1000;
    long thin_sweeps = 10;  // unused by the one-config-per-replica path, kept for sample dumps
    int jobs = 1;
    bool timing = false;           // fill runtime_ms with wall time (breaks byte-stability)
    int exact_sampling_max_n = 20;  // exact inverse-CDF sampling at or below this size
};

// M replicas of: draw sigma ~ P_beta, estimate beta. Exact sampling from the
// enumerated measure when n <= 20, Glauber otherwise.
inline std::vector<SweepRecord> run_replicas(const ModelSpec& spec, double beta, long replicas,
                                             std::uint64_t master_seed,
                                             const ReplicaOptions& opts = {}) {
    if (replicas < 1) throw std::invalid_argument("run_replicas: need at least one replica");
    const CouplingMatrix j = build(spec);
    const double j_norm = operator_norm(j);
    const bool exact_mode = j.size() <= opts.exact_sampling_max_n;
    const bool uncertain = !exact_mode && beta * j_norm > 1.0;

    std::shared_ptr<const StateEnumeration> states;
    std::optional<ExactSampler> sampler;
    if (exact_mode) {
        states = std::make_shared<StateEnumeration>(j);
        sampler.emplace(enumerate_exact(states, beta));
    }

    std::vector<SweepRecord> records(static_cast<std::size_t>(replicas));
    parallel_for(static_cast<std::size_t>(replicas), opts.jobs, [&](std::size_t r) {
        const auto t0 = std::chrono::steady_clock::now();
        const std::uint64_t seed = child_seed(master_seed, r);
        SpinConfig sigma;
        if (exact_mode) {
            Xoshiro256pp rng(seed);
            sigma = sampler->draw(rng);
        } else {
            GlauberChain chain(j, beta, seed);
            chain.run_sweeps(opts.burnin_sweeps);
            sigma = chain.config();
        }
        MpleOptions mopts;
        mopts.j_norm = j_norm;
        const Estimate est = mple(j, sigma, mopts);

        SweepRecord rec;
        rec.model = family_name(spec.family);
        rec.n = j.size();
        rec.beta_true = beta;
        rec.replica = static_cast<long>(r);
        rec.seed = seed;
        rec.beta_hat = est.value;
        rec.status = est.status;
        rec.score_at_true = score(j, sigma, beta);
        rec.h_over_n = hamiltonian(j, sigma) / j.size();
        rec.sampler = exact_mode ? "exact" : (uncertain ? "mcmc_uncertain" : "mcmc");
        if (opts.timing)
            rec.runtime_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::steady_clock::now() - t0)
                                 .count();
        records[r] = std::move(rec);
    });
    return records;
}

enum class AuditMode { exact, monte_carlo };

// Lemma 1.2 audit: E_beta[S_sigma(beta)^2] against C/N. Exact mode sums over
// all 2^n states; Monte Carlo mode averages over M sampled configurations.
inline BoundReport variance_audit(const CouplingMatrix& j, double beta, AuditMode mode,
                                  long mc_samples = 0, std::uint64_t seed = 0) {
    const int n = j.size();
    const double j_norm = operator_norm(j);
    BoundReport report;
    report.name = "lemma_1_2_variance";
    report.inputs = {{"beta", beta}, {"j_norm", j_norm}, {"n", double(n)}};
    report.bound_value = lemma12_variance_bound(beta, j_norm, n);

    if (mode == AuditMode::exact) {
        if (n > 20) throw std::invalid_argument("variance_audit: exact mode requires n <= 20");
        const auto table = enumerate_exact(j, beta);
        NeumaierSum acc;
        enumerate_states(j, [&](std::uint32_t state, const SpinConfig& tau,
                                std::span<const double> m, double) {
            NeumaierSum s;
            for (int i = 0; i < n; ++i)
                s.add(m[static_cast<std::size_t>(i)] *
                      (tau[i] - sat_tanh(beta * m[static_cast<std::size_t>(i)])));
            const double score_val = s.value() / n;
            acc.add(table.prob[state] * score_val * score_val);
        });
        report.record_observation(acc.value());
    } else {
        if (mc_samples < 2) throw std::invalid_argument("variance_audit: mc mode needs samples");
        const auto run = sample(j, beta, 1000, mc_samples, 10, seed, j_norm);
        double mean = 0.0, m2 = 0.0;
        long count = 0;
        for (const auto& sigma : run.configs) {
            const double s = score(j, sigma, beta);
            const double sq = s * s;
            ++count;
            const double delta = sq - mean;
            mean += delta / count;
            m2 += delta * (sq - mean);
        }
        report.record_observation(mean);
        report.inputs["std_error"] = std::sqrt(m2 / (count - 1) / count);
        if (run.mixing_uncertain) report.inputs["mixing_uncertain"] = 1.0;
    }
    return report;
}

enum class AuditQuantity { score_tail, tanh_distance, h_threshold };

// Exact probability audits by full enumeration (n <= 16):
//  - score_tail:     P{|S(beta)| > delta}            vs C/(N delta^2)     (Lemma 1.2)
//  - tanh_distance:  P{|tanh(C bhat)-tanh(C beta)|>eps} vs K/(N eps^2)    (Theorem 2.1)
//  - h_threshold:    P{H/N <= psi/(4 beta)}          vs 8 beta^2/(N psi^3) (Lemma 2.5)
inline std::vector<BoundReport> probability_audit(const CouplingMatrix& j, double beta,
                                                  AuditQuantity quantity,
                                                  const std::vector<double>& grid = {}) {
    const int n = j.size();
    if (n > 16) throw std::invalid_argument("probability_audit: requires n <= 16");
    const double j_norm = operator_norm(j);
    const auto states = std::make_shared<StateEnumeration>(j);
    const auto table = enumerate_exact(states, beta);
    const double psi = table.psi;

    std::vector<BoundReport> reports;
    switch (quantity) {
        case AuditQuantity::score_tail: {
            if (grid.empty()) throw std::invalid_argument("probability_audit: need a delta grid");
            std::vector<double> abs_score(table.prob.size());
            enumerate_states(j, [&](std::uint32_t state, const SpinConfig& tau,
                                    std::span<const double> m, double) {
                NeumaierSum s;
                for (int i = 0; i < n; ++i)
                    s.add(m[static_cast<std::size_t>(i)] *
                          (tau[i] - sat_tanh(beta * m[static_cast<std::size_t>(i)])));
                abs_score[state] = std::abs(s.value() / n);
            });
            for (double delta : grid) {
                BoundReport r;
                r.name = "lemma_1_2_tail";
                r.inputs = {{"beta", beta}, {"j_norm", j_norm}, {"n", double(n)}, {"delta", delta}};
                r.bound_value = lemma12_tail_bound(beta, j_norm, n, delta);
                r.vacuous = r.bound_value > 1.0;
                NeumaierSum lhs;
                for (std::size_t s = 0; s < abs_score.size(); ++s)
                    if (abs_score[s] > delta) lhs.add(table.prob[s]);
                r.record_observation(lhs.value());
                reports.push_back(std::move(r));
            }
            break;
        }
        case AuditQuantity::tanh_distance: {
            if (grid.empty()) throw std::invalid_argument("probability_audit: need an eps grid");
            const auto consts = theorem21_constants(beta, j_norm, psi);
            std::vector<double> distance(table.prob.size());
            enumerate_states(j, [&](std::uint32_t state, const SpinConfig& tau,
                                    std::span<const double> m, double) {
                std::vector<FieldTerm> terms(static_cast<std::size_t>(n));
                for (int i = 0; i < n; ++i)
                    terms[static_cast<std::size_t>(i)] = {m[static_cast<std::size_t>(i)],
                                                          double(tau[i]), 1.0};
                MpleOptions mo;
                mo.j_norm = j_norm;
                const Estimate est = mple_from_terms(terms, n, mo);
                distance[state] = tanh_distance(consts.c, est.value, beta);
            });
            for (double eps : grid) {
                BoundReport r;
                r.name = "theorem_2_1_tanh_distance";
                r.inputs = {{"beta", beta},      {"j_norm", j_norm}, {"psi", psi},
                            {"n", double(n)},    {"eps", eps},       {"C", consts.c},
                            {"K", consts.k},     {"gamma", consts.gamma}};
                r.bound_value = consts.k / (n * eps * eps);
                r.vacuous = r.bound_value > 1.0;
                NeumaierSum lhs;
                for (std::size_t s = 0; s < distance.size(); ++s)
                    if (distance[s] > eps) lhs.add(table.prob[s]);
                r.record_observation(lhs.value());
                reports.push_back(std::move(r));
            }
            break;
        }
        case AuditQuantity::h_threshold: {
            const auto bound = lemma25_bound(beta, psi, n);
            BoundReport r;
            r.name = "lemma_2_5_h_threshold";
            r.inputs = {{"beta", beta},
                        {"j_norm", j_norm},
                        {"psi", psi},
                        {"n", double(n)},
                        {"threshold", bound.threshold}};
            r.bound_value = bound.probability_bound;
            r.vacuous = r.bound_value > 1.0;
            const auto& h = states->hamiltonians();
            NeumaierSum lhs;
            for (std::size_t s = 0; s < h.size(); ++s)
                if (h[s] / n <= bound.threshold) lhs.add(table.prob[s]);
            r.record_observation(lhs.value());
            reports.push_back(std::move(r));
            break;
        }
    }
    return reports;
}

// Nondecreasing test functions for the Lemma 2.3 audit.
struct MonotoneFn {
    enum class Kind { identity, clipped_linear, indicator_above };
    Kind kind = Kind::identity;
    double lo = 0.0, hi = 0.0;  // clipped_linear: clamp(h, lo, hi)
    double threshold = 0.0;     // indicator_above: 1{h >= threshold}

    double operator()(double h) const {
        switch (kind) {
            case Kind::identity: return h;
            case Kind::clipped_linear: return std::clamp(h, lo, hi);
            case Kind::indicator_above: return h >= threshold ? 1.0 : 0.0;
        }
        return h;
    }
    static MonotoneFn identity() { return {}; }
    static MonotoneFn clipped(double lo, double hi) {
        return {Kind::clipped_linear, lo, hi, 0.0};
    }
    static MonotoneFn indicator(double threshold) {
        return {Kind::indicator_above, 0.0, 0.0, threshold};
    }
};

struct MonotonicityReport {
    std::vector<double> beta_grid;
    std::vector<double> expectations;  // E_beta f(H)
    double max_violation = 0.0;        // largest decrease between consecutive grid points
    bool nondecreasing = false;
};

// Lemma 2.3 audit: E_beta f(H) along a beta grid, exact, with 1e-12 slack
// relative to the expectation scale.
inline MonotonicityReport monotonicity_audit(const CouplingMatrix& j, const MonotoneFn& fn,
                                             const std::vector<double>& beta_grid) {
    if (j.size() > 16) throw std::invalid_argument("monotonicity_audit: requires n <= 16");
    if (beta_grid.size() < 2) throw std::invalid_argument("monotonicity_audit: need >= 2 grid points");
    const auto states = std::make_shared<StateEnumeration>(j);
    const auto& h = states->hamiltonians();

    MonotonicityReport report;
    report.beta_grid = beta_grid;
    double scale = 1.0;
    for (double beta : beta_grid) {
        const auto table = enumerate_exact(states, beta);
        NeumaierSum acc;
        for (std::size_t s = 0; s < h.size(); ++s) acc.add(table.prob[s] * fn(h[s]));
        report.expectations.push_back(acc.value());
        scale = std::max(scale, std::abs(acc.value()));
    }
    for (std::size_t k = 0; k + 1 < report.expectations.size(); ++k)
        report.max_violation =
            std::max(report.max_violation, report.expectations[k] - report.expectations[k + 1]);
    report.nondecreasing = report.max_violation <= 1e-12 * scale;
    return report;
}

struct ConsistencyRow {
    int n = 0;
    double j_norm = 0.0;
    long finite_count = 0;
    long infinite_count = 0;
    double median_beta_hat = 0.0;  // over all replicas, inf sorts last
    double rmse = 0.0;             // over finite estimates only
    double sqrt_n_rmse = 0.0;
};

struct ConsistencySummary {
    double beta_true = 0.0;
    std::vector<ConsistencyRow> rows;
    std::vector<SweepRecord> records;
};

inline std::string consistency_csv_header() {
    return "n,j_norm,finite_count,infinite_count,median_beta_hat,rmse,sqrt_n_rmse";
}

inline std::string to_csv_row(const ConsistencyRow& r) {
    return std::to_string(r.n) + "," + format_double(r.j_norm) + "," +
           std::to_string(r.finite_count) + "," + std::to_string(r.infinite_count) + "," +
           format_double(r.median_beta_hat) + "," + format_double(r.rmse) + "," +
           format_double(r.sqrt_n_rmse);
}

inline double median_of(std::vector<double> values) {
    if (values.empty()) return std::nan("");
    std::sort(values.begin(), values.end());  // inf sorts last
    const std::size_t mid = values.size() / 2;
    if (values.size() % 2 == 1) return values[mid];
    return 0.5 * (values[mid - 1] + values[mid]);
}

// Theorem 1.1 scaling experiment: per n, M replicas of estimate-from-one-
// sample; reports sqrt(n) * RMSE across the n grid. Seeds: disorder for size
// n uses derive_seed(master, 2n), the per-n replica master derive_seed(master,
// 2n+1); replica r then uses child_seed(per-n master, r).
inline ConsistencySummary consistency_sweep(ModelFamily family, double beta,
                                            const std::vector<int>& n_grid, long replicas,
                                            std::uint64_t master_seed, int hopfield_patterns = 0,
                                            const ReplicaOptions& opts = {}) {
    ConsistencySummary summary;
    summary.beta_true = beta;
    for (int n : n_grid) {
        ModelSpec spec;
        spec.family = family;
        spec.n = n;
        spec.seed = derive_seed(master_seed, 2 * static_cast<std::uint64_t>(n));
        if (family == ModelFamily::Hopfield)
            spec.patterns = hopfield_patterns > 0 ? hopfield_patterns : std::max(1, n / 4);
        if (family == ModelFamily::Lattice2D) {
            spec.side = static_cast<int>(std::lround(std::sqrt(double(n))));
            if (spec.side * spec.side != n)
                throw std::invalid_argument("consistency_sweep: lattice sizes must be squares");
        }
        const std::uint64_t data_master = derive_seed(master_seed, 2 * static_cast<std::uint64_t>(n) + 1);
        auto records = run_replicas(spec, beta, replicas, data_master, opts);

        ConsistencyRow row;
        row.n = n;
        row.j_norm = operator_norm(build(spec));
        std::vector<double> all;
        NeumaierSum sq_err;
        for (const auto& rec : records) {
            all.push_back(rec.beta_hat);
            if (std::isfinite(rec.beta_hat)) {
                ++row.finite_count;
                sq_err.add((rec.beta_hat - beta) * (rec.beta_hat - beta));
            } else {
                ++row.infinite_count;
            }
        }
        row.median_beta_hat = median_of(std::move(all));
        row.rmse = row.finite_count > 0 ? std::sqrt(sq_err.value() / row.finite_count) : std::nan("");
        row.sqrt_n_rmse = row.rmse * std::sqrt(double(n));
        summary.rows.push_back(row);
        for (auto& rec : records) summary.records.push_back(std::move(rec));
    }
    return summary;
}

// --- Curie-Weiss counterexample ------------------------------------------
// With J_ij = 1/n the measure is exchangeable: the magnetization count k
// carries all structure, so the full distribution of beta_hat is computable
// in O(n) per beta with no sampling error.

// psi_n(beta) for Curie-Weiss, exact via the binomial magnetization sum.
inline double cw_exact_psi(int n, double beta) {
    std::vector<double> logw(static_cast<std::size_t>(n) + 1);
    double max_w = -std::numeric_limits<double>::infinity();
    for (int k = 0; k <= n; ++k) {
        const double m = (2.0 * k - n) / n;
        const double h = (n * m * m - 1.0) / 2.0;
        logw[static_cast<std::size_t>(k)] = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                                            std::lgamma(n - k + 1.0) + beta * h;
        max_w = std::max(max_w, logw[static_cast<std::size_t>(k)]);
    }
    NeumaierSum z;
    for (double lw : logw) z.add(std::exp(lw - max_w));
    const double lse = max_w + std::log(z.value());
    return (lse - n * std::log(2.0)) / n;
}

struct CwDistribution {
    int n = 0;
    double beta = 0.0;
    double psi = 0.0;
    std::vector<double> prob;         // P{k plus spins}, k = 0..n
    std::vector<double> beta_hat;     // MPLE per k (self-term m_i = m - tau_i/n); inf allowed
    std::vector<double> beta_hat_mf;  // root of tanh(x m) = m (the mean-field relation
                                      // behind the beta_hat -> 1 limit; self-term dropped)
};

struct CwSummaryRow {
    int n = 0;
    double median_mple = 0.0;
    double median_mf = 0.0;
    double prob_inf_mple = 0.0;
    double prob_near_one_mple = 0.0;  // P{|beta_hat - 1| < 0.2}
    double prob_near_one_mf = 0.0;
    double median_absdev_mple = 0.0;  // median |beta_hat - 1|
    double median_absdev_mf = 0.0;
};

struct CwAudit {
    double beta = 0.0;
    std::vector<CwDistribution> distributions;
    std::vector<CwSummaryRow> rows;
};

inline std::string cw_summary_csv_header() {
    return "n,median_mple,median_mf,prob_inf_mple,prob_near_one_mple,prob_near_one_mf,"
           "median_absdev_mple,median_absdev_mf";
}

inline std::string to_csv_row(const CwSummaryRow& r) {
    return std::to_string(r.n) + "," + format_double(r.median_mple) + "," +
           format_double(r.median_mf) + "," + format_double(r.prob_inf_mple) + "," +
           format_double(r.prob_near_one_mple) + "," + format_double(r.prob_near_one_mf) + "," +
           format_double(r.median_absdev_mple) + "," + format_double(r.median_absdev_mf);
}

// weighted median: smallest value whose cumulative probability reaches 1/2
inline double weighted_median(std::vector<std::pair<double, double>> value_prob) {
    std::sort(value_prob.begin(), value_prob.end());
    double acc = 0.0;
    for (const auto& [v, p] : value_prob) {
        acc += p;
        if (acc >= 0.5) return v;
    }
    return value_prob.empty() ? std::nan("") : value_prob.back().first;
}

inline CwAudit counterexample_cw(double beta, const std::vector<int>& n_grid) {
    if (beta < 0.0 || beta >= 1.0)
        throw std::invalid_argument("counterexample_cw: requires 0 <= beta < 1");
    CwAudit audit;
    audit.beta = beta;
    for (int n : n_grid) {
        if (n < 2) throw std::invalid_argument("counterexample_cw: n must be >= 2");
        CwDistribution dist;
        dist.n = n;
        dist.beta = beta;

        std::vector<double> logw(static_cast<std::size_t>(n) + 1);
        double max_w = -std::numeric_limits<double>::infinity();
        for (int k = 0; k <= n; ++k) {
            const double m = (2.0 * k - n) / n;
            const double h = (n * m * m - 1.0) / 2.0;
            logw[static_cast<std::size_t>(k)] = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                                                std::lgamma(n - k + 1.0) + beta * h;
            max_w = std::max(max_w, logw[static_cast<std::size_t>(k)]);
        }
        NeumaierSum z;
        for (double lw : logw) z.add(std::exp(lw - max_w));
        const double lse = max_w + std::log(z.value());
        dist.psi = (lse - n * std::log(2.0)) / n;
        dist.prob.resize(logw.size());
        for (std::size_t k = 0; k < logw.size(); ++k) dist.prob[k] = std::exp(logw[k] - lse);

        dist.beta_hat.resize(logw.size());
        dist.beta_hat_mf.resize(logw.size());
        const double j_norm = (n - 1.0) / n;
        for (int k = 0; k <= n; ++k) {
            const double m = (2.0 * k - n) / n;
            // all configurations with k plus spins share the score: two site
            // groups, m_i = m -+ 1/n
            const FieldTerm terms[2] = {{m - 1.0 / n, +1.0, double(k)},
                                        {m + 1.0 / n, -1.0, double(n - k)}};
            MpleOptions mo;
            mo.j_norm = j_norm;
            dist.beta_hat[static_cast<std::size_t>(k)] =
                mple_from_terms(std::span<const FieldTerm>(terms, 2), n, mo).value;
            double mf;
            if (m == 0.0) mf = 1.0;
            else if (std::abs(m) >= 1.0) mf = std::numeric_limits<double>::infinity();
            else mf = std::atanh(m) / m;
            dist.beta_hat_mf[static_cast<std::size_t>(k)] = mf;
        }

        CwSummaryRow row;
        row.n = n;
        std::vector<std::pair<double, double>> vp_mple, vp_mf, dev_mple, dev_mf;
        NeumaierSum p_inf, p_near_mple, p_near_mf;
        for (std::size_t k = 0; k < dist.prob.size(); ++k) {
            const double p = dist.prob[k];
            const double b_mple = dist.beta_hat[k];
            const double b_mf = dist.beta_hat_mf[k];
            vp_mple.emplace_back(b_mple, p);
            vp_mf.emplace_back(b_mf, p);
            dev_mple.emplace_back(std::abs(b_mple - 1.0), p);
            dev_mf.emplace_back(std::abs(b_mf - 1.0), p);
            if (std::isinf(b_mple)) p_inf.add(p);
            if (std::abs(b_mple - 1.0) < 0.2) p_near_mple.add(p);
            if (std::abs(b_mf - 1.0) < 0.2) p_near_mf.add(p);
        }
        row.median_mple = weighted_median(std::move(vp_mple));
        row.median_mf = weighted_median(std::move(vp_mf));
        row.prob_inf_mple = p_inf.value();
        row.prob_near_one_mple = p_near_mple.value();
        row.prob_near_one_mf = p_near_mf.value();
        row.median_absdev_mple = weighted_median(std::move(dev_mple));
        row.median_absdev_mf = weighted_median(std::move(dev_mf));
        audit.rows.push_back(row);
        audit.distributions.push_back(std::move(dist));
    }
    return audit;
}

// --- condition scan --------------------------------------------------------

struct ConditionScanRow {
    int n = 0;
    double j_norm = 0.0;
    double psi = 0.0;
    std::string psi_method;  // "exact" | "cw_exact" | "mcmc"
    double psi_std_error = 0.0;
};

struct ConditionScan {
    std::vector<ConditionScanRow> rows;
    ConditionReport report;
};

inline std::string condition_csv_header() { return "n,j_norm,psi,psi_method,psi_std_error"; }

inline std::string to_csv_row(const ConditionScanRow& r) {
    return std::to_string(r.n) + "," + format_double(r.j_norm) + "," + format_double(r.psi) + "," +
           r.psi_method + "," + format_double(r.psi_std_error);
}

// Theorem 1.1 conditions as finite-N proxies: ||J^N|| and psi_N(beta) along
// an n grid. psi is exact when possible (enumeration, or the O(n) Curie-Weiss
// magnetization sum), thermodynamic-integration MCMC otherwise.
inline ConditionScan condition_scan(ModelFamily family, double beta, const std::vector<int>& n_grid,
                                    std::uint64_t master_seed, int hopfield_patterns = 0,
                                    const McmcOptions& mcmc = {},
                                    ConditionThresholds thresholds = {}) {
    ConditionScan scan;
    std::map<int, double> norms, psis;
    for (int n : n_grid) {
        ModelSpec spec;
        spec.family = family;
        spec.n = n;
        spec.seed = derive_seed(master_seed, 2 * static_cast<std::uint64_t>(n));
        if (family == ModelFamily::Hopfield)
            spec.patterns = hopfield_patterns > 0 ? hopfield_patterns : std::max(1, n / 4);
        if (family == ModelFamily::Lattice2D)
            spec.side = static_cast<int>(std::lround(std::sqrt(double(n))));

        ConditionScanRow row;
        row.n = n;
        if (family == ModelFamily::CurieWeiss) {
            row.j_norm = (n - 1.0) / n;
            row.psi = cw_exact_psi(n, beta);
            row.psi_method = "cw_exact";
        } else {
            const CouplingMatrix j = build(spec);
            row.j_norm = operator_norm(j);
            if (n <= kMaxExactSites) {
                row.psi = enumerate_exact(j, beta).psi;
                row.psi_method = "exact";
            } else {
                const auto est = psi_thermo(j, beta, 21, mcmc,
                                            derive_seed(master_seed, 2 * static_cast<std::uint64_t>(n) + 1));
                row.psi = est.value;
                row.psi_std_error = est.std_error;
                row.psi_method = "mcmc";
            }
        }
        norms[n] = row.j_norm;
        psis[n] = row.psi;
        scan.rows.push_back(std::move(row));
    }
    scan.report = check_conditions(norms, psis, thresholds);
    return scan;
}

}  // namespace spinglass
