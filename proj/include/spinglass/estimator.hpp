// Maximum pseudolikelihood estimation of the inverse temperature.
//
// The score S_tau(x) = (1/N) sum_i m_i(tau) (tau_i - tanh(x m_i(tau))) is
// continuous and nonincreasing on [0, inf]; the estimate is its smallest
// nonnegative root, +inf when the root set is empty (so an infinite
// estimate is a valid result, not an error).
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinglass/coupling.hpp"
#include "spinglass/gibbs.hpp"

namespace spinglass {

// tanh with hard saturation: beyond |x| = 20 the true value differs from
// +-1 by < 9e-18, below double resolution around 1
inline double sat_tanh(double x) noexcept {
    if (x > 20.0) return 1.0;
    if (x < -20.0) return -1.0;
    return std::tanh(x);
}

// One aggregated site group: `weight` sites sharing local field and spin.
// The general path uses weight 1 per site; exchangeable models (Curie-Weiss)
// collapse to two groups.
struct FieldTerm {
    double field = 0.0;
    double spin = 0.0;
    double weight = 1.0;
};

inline std::vector<FieldTerm> field_terms(const CouplingMatrix& j, const SpinConfig& tau) {
    const auto m = local_fields(j, tau);
    std::vector<FieldTerm> terms(m.size());
    for (std::size_t i = 0; i < m.size(); ++i)
        terms[i] = {m[i], static_cast<double>(tau[static_cast<int>(i)]), 1.0};
    return terms;
}

inline double score(std::span<const FieldTerm> terms, double n_sites, double x) {
    double acc = 0.0;
    for (const auto& t : terms) acc += t.weight * t.field * (t.spin - sat_tanh(x * t.field));
    return acc / n_sites;
}

// S_tau(inf) = (1/N) sum_i (m_i tau_i - |m_i|); always <= 0
inline double score_at_infinity(std::span<const FieldTerm> terms, double n_sites) {
    double acc = 0.0;
    for (const auto& t : terms) acc += t.weight * (t.field * t.spin - std::abs(t.field));
    return acc / n_sites;
}

// S'_tau(x) = -(1/N) sum_i m_i^2 / cosh^2(x m_i) <= 0
inline double score_derivative(std::span<const FieldTerm> terms, double n_sites, double x) {
    double acc = 0.0;
    for (const auto& t : terms) {
        const double c = std::cosh(std::min(std::abs(x * t.field), 350.0));
        acc += t.weight * t.field * t.field / (c * c);
    }
    return -acc / n_sites;
}

inline double score(const CouplingMatrix& j, const SpinConfig& tau, double x) {
    if (!(x >= 0) || !std::isfinite(x))
        throw std::invalid_argument("score: x must be finite and >= 0");
    const auto terms = field_terms(j, tau);
    return score(terms, j.size(), x);
}

inline double score_at_infinity(const CouplingMatrix& j, const SpinConfig& tau) {
    const auto terms = field_terms(j, tau);
    return score_at_infinity(terms, j.size());
}

inline double score_derivative(const CouplingMatrix& j, const SpinConfig& tau, double x) {
    if (x < 0) throw std::invalid_argument("score_derivative: x must be >= 0");
    const auto terms = field_terms(j, tau);
    return score_derivative(terms, j.size(), x);
}

enum class MpleStatus {
    root_found,
    at_zero,
    infinite_no_crossing,       // S(0) > 0 but S never reaches 0 (or bracket cap hit)
    infinite_negative_at_zero,  // S(0) < 0: the root set is empty outright
};

inline const char* to_string(MpleStatus s) {
    switch (s) {
        case MpleStatus::root_found: return "root_found";
        case MpleStatus::at_zero: return "at_zero";
        case MpleStatus::infinite_no_crossing: return "infinite_no_crossing";
        case MpleStatus::infinite_negative_at_zero: return "infinite_negative_at_zero";
    }
    return "?";
}

struct Estimate {
    double value = std::numeric_limits<double>::infinity();
    bool is_finite = false;
    double score_at_root = 0.0;  // S at the returned value (S(inf) for infinite estimates)
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    int iterations = 0;
    MpleStatus status = MpleStatus::infinite_no_crossing;
    bool bracket_capped = false;  // diagnostic: doubling hit x_cap without a sign change
};

struct MpleOptions {
    double score_tolerance = 1e-10;
    // defaults derived from ||J||: x_cap = 1e6/||J||, first bracket 1/||J||
    double x_cap = std::nan("");
    double bracket_init = std::nan("");
    double j_norm = std::nan("");
};

// Smallest nonnegative root of the score, by the monotone decision procedure:
//   (i) S(0) < -tol            -> +inf (empty root set)
//   (ii) |S(0)| <= tol         -> 0
//   (iii) S(inf) >= -tol       -> +inf (no crossing)
//   (iv) bracket by doubling, bisect, then Newton-polish inside the bracket.
inline Estimate mple_from_terms(std::span<const FieldTerm> terms, double n_sites,
                                MpleOptions opts = {}) {
    double scale = opts.j_norm;
    if (std::isnan(scale)) {
        // fall back to the largest field magnitude (<= ||J||) as the scale
        scale = 0.0;
        for (const auto& t : terms) scale = std::max(scale, std::abs(t.field));
        if (scale == 0.0) scale = 1.0;
    }
    const double x_cap = std::isnan(opts.x_cap) ? 1e6 / scale : opts.x_cap;
    const double bracket_init = std::isnan(opts.bracket_init) ? 1.0 / scale : opts.bracket_init;
    const double tol = opts.score_tolerance;

    Estimate est;
    const double s0 = score(terms, n_sites, 0.0);
    if (s0 < -tol) {
        est.status = MpleStatus::infinite_negative_at_zero;
        est.score_at_root = score_at_infinity(terms, n_sites);
        return est;
    }
    if (s0 <= tol) {
        est.status = MpleStatus::at_zero;
        est.value = 0.0;
        est.is_finite = true;
        est.score_at_root = s0;
        return est;
    }
    const double s_inf = score_at_infinity(terms, n_sites);
    if (s_inf >= -tol) {
        est.status = MpleStatus::infinite_no_crossing;
        est.score_at_root = s_inf;
        return est;
    }

    // bracket: S(lo) > 0, S(hi) <= 0
    double lo = 0.0, hi = bracket_init;
    int iterations = 0;
    while (score(terms, n_sites, hi) > 0.0) {
        ++iterations;
        lo = hi;
        hi *= 2.0;
        if (hi > x_cap) {
            est.status = MpleStatus::infinite_no_crossing;
            est.score_at_root = s_inf;
            est.bracket_capped = true;
            est.iterations = iterations;
            return est;
        }
    }
    est.bracket_lo = lo;
    est.bracket_hi = hi;

    while (hi - lo > 1e-12 * std::max(1.0, hi)) {
        ++iterations;
        const double mid = 0.5 * (lo + hi);
        if (score(terms, n_sites, mid) > 0.0) lo = mid;
        else hi = mid;
    }

    // Newton polish, clamped to the verified bracket
    double x = 0.5 * (lo + hi);
    double s = score(terms, n_sites, x);
    for (int k = 0; k < 8 && std::abs(s) > tol * 1e-3; ++k) {
        ++iterations;
        const double d = score_derivative(terms, n_sites, x);
        if (d == 0.0) break;
        double next = x - s / d;
        if (next < lo || next > hi) next = 0.5 * (lo + hi);
        x = next;
        s = score(terms, n_sites, x);
        if (s > 0.0) lo = x;
        else hi = x;
    }

    est.status = MpleStatus::root_found;
    est.value = x;
    est.is_finite = true;
    est.score_at_root = s;
    est.iterations = iterations;
    return est;
}

inline Estimate mple(const CouplingMatrix& j, const SpinConfig& tau, MpleOptions opts = {}) {
    check_dims(j, tau);
    if (j.is_zero()) throw std::invalid_argument("mple: zero coupling matrix");
    if (std::isnan(opts.j_norm)) opts.j_norm = operator_norm(j);
    const auto terms = field_terms(j, tau);
    return mple_from_terms(terms, j.size(), opts);
}

}  // namespace spinglass
