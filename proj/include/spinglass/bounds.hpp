// The explicit constants and finite-sample bounds from the consistency
// analysis, as pure functions, so experiments can audit each inequality
// numerically. Probability bounds larger than 1 are returned as-is and
// flagged vacuous, never clamped.
#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>

#include <json.hpp>

namespace spinglass {

// variance-bound constant: E_beta[S^2] <= C/N with
// C = 6||J||^2 + 6 beta ||J||^3 + 2 beta^2 ||J||^4
inline double lemma12_constant(double beta, double j_norm) {
    if (beta < 0) throw std::invalid_argument("lemma12_constant: beta must be >= 0");
    if (j_norm <= 0) throw std::invalid_argument("lemma12_constant: j_norm must be > 0");
    const double n2 = j_norm * j_norm;
    return 6.0 * n2 + 6.0 * beta * n2 * j_norm + 2.0 * beta * beta * n2 * n2;
}

inline double lemma12_variance_bound(double beta, double j_norm, double n) {
    return lemma12_constant(beta, j_norm) / n;
}

// tail bound P{|S_sigma(beta)| > delta} <= C/(N delta^2)
inline double lemma12_tail_bound(double beta, double j_norm, double n, double delta) {
    if (delta <= 0) throw std::invalid_argument("lemma12_tail_bound: delta must be > 0");
    return lemma12_constant(beta, j_norm) / (n * delta * delta);
}

struct Theorem21Constants {
    double c = 0.0;      // tanh scale, 8 beta ||J||^2 / psi
    double k = 0.0;      // tail constant, 8 gamma^2/psi^3 + 2^30 gamma^12/(9 psi^10)
    double gamma = 0.0;  // max(beta ||J||, 1)
};

// psi here is psi(beta) of the model itself; the ||J|| = 1 reduction leaves
// it unchanged (psi_normalized(beta ||J||) == psi(beta)), so either reading
// gives the same number.
inline Theorem21Constants theorem21_constants(double beta, double j_norm, double psi) {
    if (beta <= 0) throw std::invalid_argument("theorem21_constants: beta must be > 0");
    if (psi <= 0) throw std::invalid_argument("theorem21_constants: psi must be > 0 (bound vacuous)");
    Theorem21Constants out;
    out.gamma = std::max(beta * j_norm, 1.0);
    out.c = 8.0 * beta * j_norm * j_norm / psi;
    const double g2 = out.gamma * out.gamma;
    const double g12 = g2 * g2 * g2 * g2 * g2 * g2;
    const double p = psi;
    const double p3 = p * p * p;
    const double p10 = p3 * p3 * p3 * p;
    out.k = 8.0 * g2 / p3 + std::exp2(30.0) * g12 / (9.0 * p10);
    return out;
}

inline double theorem21_bound(double beta, double j_norm, double psi, double n, double eps) {
    if (eps <= 0) throw std::invalid_argument("theorem21_bound: eps must be > 0");
    return theorem21_constants(beta, j_norm, psi).k / (n * eps * eps);
}

struct Lemma26Constants {
    double c1 = 0.0;  // 8 beta / psi
    double c2 = 0.0;  // 8 beta^2 / psi^3
    double c3 = 0.0;  // 3 psi^5 / (2^13 beta^5)
};

inline Lemma26Constants lemma26_constants(double beta, double psi) {
    if (beta <= 0) throw std::invalid_argument("lemma26_constants: beta must be > 0");
    if (psi <= 0) throw std::invalid_argument("lemma26_constants: psi must be > 0");
    Lemma26Constants out;
    out.c1 = 8.0 * beta / psi;
    out.c2 = 8.0 * beta * beta / (psi * psi * psi);
    const double p5 = psi * psi * psi * psi * psi;
    const double b5 = beta * beta * beta * beta * beta;
    out.c3 = 3.0 * p5 / (8192.0 * b5);
    return out;
}

struct Lemma25Bound {
    double threshold = 0.0;          // c = psi/(4 beta)
    double probability_bound = 0.0;  // 8 beta^2 / (N psi^3)
};

// P_beta{ H/N <= psi/(4 beta) } <= 8 beta^2 / (N psi^3)
inline Lemma25Bound lemma25_bound(double beta, double psi, double n) {
    if (beta <= 0) throw std::invalid_argument("lemma25_bound: beta must be > 0");
    if (psi <= 0) throw std::invalid_argument("lemma25_bound: psi must be > 0");
    if (n < 1) throw std::invalid_argument("lemma25_bound: n must be >= 1");
    return {psi / (4.0 * beta), 8.0 * beta * beta / (n * psi * psi * psi)};
}

// |tanh(2 bhat/c) - tanh(2 beta/c)| <= 8|S_tau(beta)|/(3 c^5), valid under
// H/N >= c with ||J|| = 1 (the caller owns that normalization).
inline double lemma22_distance_bound(double c, double score_abs) {
    if (c <= 0) throw std::invalid_argument("lemma22_distance_bound: c must be > 0");
    if (score_abs < 0) throw std::invalid_argument("lemma22_distance_bound: |S| must be >= 0");
    const double c5 = c * c * c * c * c;
    return 8.0 * score_abs / (3.0 * c5);
}

// |tanh(C a) - tanh(C b)| with tanh(+inf) = 1
inline double tanh_distance(double c, double a, double b) {
    if (c <= 0) throw std::invalid_argument("tanh_distance: C must be > 0");
    const auto t = [c](double v) {
        return std::isinf(v) ? 1.0 : std::tanh(c * v);
    };
    return std::abs(t(a) - t(b));
}

// One audited inequality. `inputs` keeps whatever parameters produced the
// bound (beta, j_norm, psi, n, eps/delta, ...).
struct BoundReport {
    std::string name;
    std::map<std::string, double> inputs;
    double bound_value = 0.0;
    std::optional<double> observed_value;
    std::optional<bool> satisfied;
    bool vacuous = false;  // probability bound exceeding 1

    void record_observation(double observed) {
        observed_value = observed;
        satisfied = observed <= bound_value;
    }
};

inline nlohmann::json to_json(const BoundReport& r) {
    nlohmann::json j;
    j["name"] = r.name;
    j["inputs"] = r.inputs;
    j["bound"] = r.bound_value;
    j["observed"] = r.observed_value ? nlohmann::json(*r.observed_value) : nlohmann::json();
    j["satisfied"] = r.satisfied ? nlohmann::json(*r.satisfied) : nlohmann::json();
    j["vacuous"] = r.vacuous;
    return j;
}

struct ConditionThresholds {
    double norm_cap = 10.0;   // finite-N proxy for sup_N ||J^N|| < inf
    double psi_floor = 0.01;  // finite-N proxy for liminf psi_N(beta) > 0
};

struct ConditionReport {
    double sup_norm = 0.0;      // max of ||J^N|| over the grid
    double min_psi_tail = 0.0;  // min of psi_N over the largest half of the grid
    bool condition_a_pass = false;
    bool condition_b_pass = false;
    ConditionThresholds thresholds;
    // Finite-N proxies only; no finite grid can certify the N -> inf limits.
};

inline ConditionReport check_conditions(const std::map<int, double>& norm_by_n,
                                        const std::map<int, double>& psi_by_n,
                                        ConditionThresholds thresholds = {}) {
    if (norm_by_n.empty() || psi_by_n.empty())
        throw std::invalid_argument("check_conditions: empty input");
    if (norm_by_n.size() < 3 || psi_by_n.size() < 3)
        throw std::invalid_argument("check_conditions: need at least 3 values of N");

    ConditionReport r;
    r.thresholds = thresholds;
    for (const auto& [n, norm] : norm_by_n) r.sup_norm = std::max(r.sup_norm, norm);

    const std::size_t skip = psi_by_n.size() / 2;  // keep the largest half of the N grid
    double min_psi = std::numeric_limits<double>::infinity();
    std::size_t idx = 0;
    for (const auto& [n, psi] : psi_by_n) {
        if (idx++ >= skip) min_psi = std::min(min_psi, psi);
    }
    r.min_psi_tail = min_psi;
    r.condition_a_pass = r.sup_norm <= thresholds.norm_cap;
    r.condition_b_pass = r.min_psi_tail >= thresholds.psi_floor;
    return r;
}

inline nlohmann::json to_json(const ConditionReport& r) {
    return nlohmann::json{{"sup_norm", r.sup_norm},
                          {"min_psi_tail", r.min_psi_tail},
                          {"condition_a_pass", r.condition_a_pass},
                          {"condition_b_pass", r.condition_b_pass},
                          {"norm_cap", r.thresholds.norm_cap},
                          {"psi_floor", r.thresholds.psi_floor},
                          {"note", "finite-N proxy, not a proof"}};
}

}  // namespace spinglass
