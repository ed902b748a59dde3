// Acceptance suite: one check per release criterion, each printing a
// single PASS/FAIL line. Run all, or a single one with --criterion N.
// Exact audits assert the theorem inequalities with zero tolerance.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "spinglass/bounds.hpp"
#include "spinglass/coupling.hpp"
#include "spinglass/estimator.hpp"
#include "spinglass/gibbs.hpp"
#include "spinglass/harness.hpp"

namespace sg = spinglass;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& label, bool pass, const std::string& detail,
            double seconds) {
    std::printf("[%s] criterion %d: %s (%s, %.1fs)\n", pass ? "PASS" : "FAIL", criterion,
                label.c_str(), detail.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

void run_criterion(int criterion, const std::string& label,
                   const std::function<bool(std::string&)>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool pass = false;
    try {
        pass = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(criterion, label, pass, detail, seconds);
}

// ---- criterion 1: Lemma 1.2 variance bound, exact, zero tolerance ----------

bool criterion1(std::string& detail) {
    const std::vector<int> sizes{8, 10, 12};
    const std::vector<double> betas{0.0, 0.2, 0.5, 1.0, 2.0, 5.0};
    long cases = 0, holds = 0;
    for (int n : sizes) {
        std::vector<sg::CouplingMatrix> instances;
        for (std::uint64_t seed = 1; seed <= 20; ++seed)
            instances.push_back(sg::build(sg::ModelSpec::sk(n, seed)));
        for (std::uint64_t seed = 1; seed <= 10; ++seed)
            instances.push_back(sg::build(sg::ModelSpec::hopfield(n, std::max(1, n / 4), seed)));
        for (const auto& j : instances)
            for (double beta : betas) {
                const auto r = sg::variance_audit(j, beta, sg::AuditMode::exact);
                ++cases;
                if (r.satisfied && *r.satisfied) ++holds;
            }
    }
    detail = std::to_string(holds) + "/" + std::to_string(cases) +
             " exact audits satisfy n*E[S^2] <= C";
    return holds == cases;
}

// ---- criterion 2: Theorem 2.1 tanh-distance bound, exact -------------------

bool criterion2(std::string& detail) {
    const std::vector<double> betas{0.5, 1.0, 2.0};
    const std::vector<double> epsilons{0.1, 0.3, 0.5};
    long cases = 0, holds = 0;
    for (int n : {8, 10}) {
        std::vector<sg::CouplingMatrix> instances;
        instances.push_back(sg::build(sg::ModelSpec::curie_weiss(n)));
        for (std::uint64_t seed = 1; seed <= 3; ++seed)
            instances.push_back(sg::build(sg::ModelSpec::sk(n, seed)));
        for (const auto& j : instances)
            for (double beta : betas)
                for (const auto& r :
                     sg::probability_audit(j, beta, sg::AuditQuantity::tanh_distance, epsilons)) {
                    ++cases;
                    if (r.satisfied && *r.satisfied) ++holds;
                }
    }
    detail = std::to_string(holds) + "/" + std::to_string(cases) +
             " exact tanh-distance tails within K/(n eps^2)";
    return holds == cases;
}

// ---- criterion 3: Lemma 2.5 and Lemma 2.3 exact audits ---------------------

bool criterion3(std::string& detail) {
    long cases = 0, holds = 0;

    std::vector<sg::CouplingMatrix> instances;
    for (int n : {8, 10}) {
        instances.push_back(sg::build(sg::ModelSpec::curie_weiss(n)));
        for (std::uint64_t seed = 1; seed <= 3; ++seed)
            instances.push_back(sg::build(sg::ModelSpec::sk(n, seed)));
    }
    instances.push_back(sg::build(sg::ModelSpec::curie_weiss(12)));

    for (const auto& j : instances)
        for (double beta : {0.5, 1.0, 2.0}) {
            for (const auto& r : sg::probability_audit(j, beta, sg::AuditQuantity::h_threshold)) {
                ++cases;
                if (r.satisfied && *r.satisfied) ++holds;
            }
        }

    std::vector<double> grid;
    for (int k = 0; k < 13; ++k) grid.push_back(3.0 * k / 12.0);
    for (const auto& j : instances) {
        auto h_sorted = sg::StateEnumeration(j).hamiltonians();
        std::sort(h_sorted.begin(), h_sorted.end());
        for (const auto& fn :
             {sg::MonotoneFn::identity(), sg::MonotoneFn::indicator(h_sorted[h_sorted.size() / 2])}) {
            ++cases;
            if (sg::monotonicity_audit(j, fn, grid).nondecreasing) ++holds;
        }
    }
    detail = std::to_string(holds) + "/" + std::to_string(cases) +
             " energy-threshold and monotonicity audits hold";
    return holds == cases;
}

// ---- criterion 4: Curie-Weiss counterexample, exact ------------------------

bool criterion4(std::string& detail) {
    const auto audit = sg::counterexample_cw(0.5, {100, 1000, 10000});
    const auto& r100 = audit.rows[0];
    const auto& r1k = audit.rows[1];
    const auto& r10k = audit.rows[2];

    const bool near_one = r10k.prob_near_one_mf >= 0.95;
    const bool median_in = r10k.median_mf >= 0.95 && r10k.median_mf <= 1.10;
    const bool shrinking = r100.median_absdev_mf > r1k.median_absdev_mf &&
                           r1k.median_absdev_mf > r10k.median_absdev_mf;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "P{|bh-1|<0.2}=%.4f median=%.5f absdev %.2e > %.2e > %.2e",
                  r10k.prob_near_one_mf, r10k.median_mf, r100.median_absdev_mf,
                  r1k.median_absdev_mf, r10k.median_absdev_mf);
    detail = buf;
    return near_one && median_in && shrinking;
}

// ---- criterion 5: SK free energy via thermodynamic integration -------------

bool criterion5(std::string& detail) {
    bool all = true;
    std::string parts;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto j = sg::build(sg::ModelSpec::sk(500, seed));
        sg::McmcOptions opts;  // burnin 1000, thin 10, 200 samples per node
        const auto est = sg::psi_thermo(j, 0.5, 21, opts, sg::derive_seed(seed, 0xDA7A));
        const bool ok = std::abs(est.value - 0.0625) <= 0.01;
        all = all && ok;
        char buf[64];
        std::snprintf(buf, sizeof buf, "%s%.5f", parts.empty() ? "" : " ", est.value);
        parts += buf;
    }
    detail = "psi(0.5) at n=500 across 3 disorder seeds: " + parts + " (target 0.0625 +- 0.01)";
    return all;
}

// ---- criterion 6: sqrt(N)-consistency proxy ---------------------------------

bool criterion6(std::string& detail) {
    sg::ReplicaOptions opts;
    opts.jobs = 2;
    const auto summary =
        sg::consistency_sweep(sg::ModelFamily::SK, 0.4, {128, 256, 512, 1024}, 50, 3, 0, opts);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& row : summary.rows) {
        lo = std::min(lo, row.sqrt_n_rmse);
        hi = std::max(hi, row.sqrt_n_rmse);
    }
    const double median_large = summary.rows.back().median_beta_hat;
    const bool ratio_ok = hi / lo <= 3.0;
    const bool median_ok = std::abs(median_large - 0.4) <= 0.1;
    char buf[256];
    std::snprintf(buf, sizeof buf, "sqrt(n)*RMSE in [%.3f, %.3f] ratio %.2f, median(1024)=%.4f",
                  lo, hi, hi / lo, median_large);
    detail = buf;
    return ratio_ok && median_ok;
}

// ---- criterion 7: sampler correctness ---------------------------------------

bool criterion7(std::string& detail) {
    double worst_tv = 0.0, worst_residual = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto j = sg::build(sg::ModelSpec::sk(8, seed));
        const double beta = 1.0;
        const auto table = sg::enumerate_exact(j, beta);

        const long count = 1000000;
        const auto run = sg::sample(j, beta, 500, count, 10, sg::derive_seed(seed, 7), sg::operator_norm(j));
        std::vector<long> hits(256, 0);
        for (const auto& c : run.configs) ++hits[c.to_index()];
        double tv = 0.0;
        for (int s = 0; s < 256; ++s) tv += std::abs(double(hits[s]) / count - table.prob[s]);
        worst_tv = std::max(worst_tv, tv / 2.0);

        // exact one-step stationarity of the random-scan heat-bath kernel
        double residual = 0.0;
        for (std::uint32_t s = 0; s < 256; ++s) {
            const auto tau = sg::SpinConfig::from_index(s, 8);
            double inflow = 0.0, stay = 1.0;
            for (int site = 0; site < 8; ++site) {
                const auto neighbor = s ^ (1u << site);
                const auto tau_n = sg::SpinConfig::from_index(neighbor, 8);
                inflow += table.prob[neighbor] * sg::flip_probability(j, tau_n, site, beta) / 8;
                stay -= sg::flip_probability(j, tau, site, beta) / 8;
            }
            inflow += table.prob[s] * stay;
            residual = std::max(residual, std::abs(inflow - table.prob[s]));
        }
        worst_residual = std::max(worst_residual, residual);
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "worst TV %.4f (<= 0.01), worst stationarity residual %.1e",
                  worst_tv, worst_residual);
    detail = buf;
    return worst_tv <= 0.01 && worst_residual <= 1e-12;
}

// ---- criterion 8: estimator unit properties ---------------------------------

bool criterion8(std::string& detail) {
    std::vector<std::string> problems;

    {  // monotone nonincreasing score
        const auto j = sg::build(sg::ModelSpec::sk(12, 61));
        sg::Xoshiro256pp rng(1);
        for (int rep = 0; rep < 10; ++rep) {
            const auto tau = sg::SpinConfig::random(12, rng);
            const auto terms = sg::field_terms(j, tau);
            double prev = sg::score(terms, 12.0, 0.0);
            for (double x = 0.2; x <= 5.0; x += 0.2) {
                const double s = sg::score(terms, 12.0, x);
                if (s > prev + 1e-14) problems.push_back("monotonicity violated");
                prev = s;
            }
        }
    }

    {  // derivative against central finite differences
        const auto j = sg::build(sg::ModelSpec::sk(10, 62));
        sg::Xoshiro256pp rng(2);
        const auto tau = sg::SpinConfig::random(10, rng);
        const auto terms = sg::field_terms(j, tau);
        const double h = 1e-6;
        for (double x : {0.0, 0.3, 1.0, 3.0}) {
            const double fd = (sg::score(terms, 10.0, x + h) - sg::score(terms, 10.0, x - h)) / (2 * h);
            const double d = sg::score_derivative(terms, 10.0, x);
            if (std::abs(d - fd) > 1e-6 * std::max(1e-12, std::abs(fd)))
                problems.push_back("finite-difference mismatch");
        }
    }

    {  // root certificate on finite estimates
        const auto j = sg::build(sg::ModelSpec::sk(16, 63));
        const double norm = sg::operator_norm(j);
        const auto run = sg::sample(j, 0.5, 300, 40, 3, 5, norm);
        sg::MpleOptions opts;
        opts.j_norm = norm;
        int finite = 0;
        for (const auto& tau : run.configs) {
            const auto est = sg::mple(j, tau, opts);
            if (!est.is_finite) continue;
            ++finite;
            if (std::abs(est.score_at_root) > 1e-10) problems.push_back("|S(root)| > 1e-10");
        }
        if (finite == 0) problems.push_back("no finite estimates in the batch");

        const int n = 1000;
        const auto cw = sg::build(sg::ModelSpec::curie_weiss(n));
        sg::SpinConfig tau(n, -1);
        for (int i = 0; i < 550; ++i) tau.set(i, 1);
        const auto est = sg::mple(cw, tau);
        if (!est.is_finite || std::abs(est.score_at_root) > 1e-10)
            problems.push_back("CW 550/1000 root not certified");
    }

    {  // scale equivariance
        const auto j = sg::build(sg::ModelSpec::sk(14, 64));
        sg::Xoshiro256pp rng(3);
        for (int rep = 0; rep < 12; ++rep) {
            const auto tau = sg::SpinConfig::random(14, rng);
            const auto base = sg::mple(j, tau);
            for (double s : {0.25, 4.0}) {
                sg::CouplingMatrix scaled(j.size());
                j.for_each_upper([&](int a, int b, double v) { scaled.set(a, b, v / s); });
                const auto est = sg::mple(scaled, tau);
                if (est.is_finite != base.is_finite) {
                    problems.push_back("scale equivariance: finiteness flipped");
                    continue;
                }
                if (base.is_finite && base.value > 0 &&
                    std::abs(est.value - s * base.value) > 1e-9 * s * base.value)
                    problems.push_back("scale equivariance beyond 1e-9");
            }
        }
    }

    {  // n=2 closed-form degenerate statuses
        sg::CouplingMatrix two(2);
        two.set(0, 1, 1.0);
        if (sg::mple(two, sg::SpinConfig::from_pm_string("++")).status !=
            sg::MpleStatus::infinite_no_crossing)
            problems.push_back("n=2 aligned status wrong");
        if (sg::mple(two, sg::SpinConfig::from_pm_string("+-")).status !=
            sg::MpleStatus::infinite_negative_at_zero)
            problems.push_back("n=2 split status wrong");
    }

    detail = problems.empty() ? "score, derivative, certificates, equivariance, degenerate cases"
                              : problems.front() + " (+" +
                                    std::to_string(problems.size() - 1) + " more)";
    return problems.empty();
}

// ---- criterion 9: byte-identical CSV bodies across jobs ---------------------

int run_shell(const std::string& cmd) {
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool criterion9(std::string& detail) {
    const fs::path dir = fs::temp_directory_path() / ("spinglass_accept_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const std::string cli = SPINGLASS_CLI_PATH;
    const std::string base = cli +
                             " sweep consistency --model sk --beta 0.4 --n 16,24 --replicas 8 "
                             "--burnin 100 --seed 3 ";
    bool ok = true;
    ok &= run_shell(base + "--jobs 1 -o " + (dir / "j1.csv").string() + " > /dev/null") == 0;
    ok &= run_shell(base + "--jobs 8 -o " + (dir / "j8.csv").string() + " > /dev/null") == 0;
    ok &= run_shell(base + "--jobs 1 -o " + (dir / "j1b.csv").string() + " > /dev/null") == 0;
    const bool consistency_equal = ok && slurp(dir / "j1.csv") == slurp(dir / "j8.csv") &&
                                   slurp(dir / "j1.csv") == slurp(dir / "j1b.csv");

    const std::string cw = cli + " sweep cw-counterexample --beta 0.5 --n 100,1000 -o ";
    ok &= run_shell(cw + (dir / "cw1.csv").string() + " > /dev/null") == 0;
    ok &= run_shell(cw + (dir / "cw2.csv").string() + " > /dev/null") == 0;
    const bool cw_equal = ok && slurp(dir / "cw1.csv") == slurp(dir / "cw2.csv");

    ok &= run_shell(cli + " audit lemma12 --model sk --n 10 --beta 1 --seed 5 --json > " +
                    (dir / "a1.json").string()) == 0;
    ok &= run_shell(cli + " audit lemma12 --model sk --n 10 --beta 1 --seed 5 --json > " +
                    (dir / "a2.json").string()) == 0;
    const bool audit_equal = ok && slurp(dir / "a1.json") == slurp(dir / "a2.json");

    fs::remove_all(dir);
    detail = std::string("consistency jobs1==jobs8: ") + (consistency_equal ? "yes" : "NO") +
             ", cw rerun: " + (cw_equal ? "yes" : "NO") + ", audit rerun: " +
             (audit_equal ? "yes" : "NO");
    return consistency_equal && cw_equal && audit_equal;
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) only = std::atoi(argv[i + 1]);
    }
    const std::vector<std::pair<std::string, std::function<bool(std::string&)>>> criteria{
        {"Lemma 1.2 exact variance audit", criterion1},
        {"Theorem 2.1 exact probability audit", criterion2},
        {"Lemma 2.5 / Lemma 2.3 exact audits", criterion3},
        {"Curie-Weiss counterexample (exact)", criterion4},
        {"SK free energy psi -> beta^2/4", criterion5},
        {"sqrt(N)-consistency proxy", criterion6},
        {"Glauber sampler correctness", criterion7},
        {"estimator unit properties", criterion8},
        {"deterministic CSV bodies across jobs", criterion9},
    };
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        if (only != 0 && only != static_cast<int>(k + 1)) continue;
        run_criterion(static_cast<int>(k + 1), criteria[k].first, criteria[k].second);
    }
    return g_failures == 0 ? 0 : 1;
}
