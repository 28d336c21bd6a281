#ifndef SYNTHDSE_VARIANCE_LAB_HPP
#define SYNTHDSE_VARIANCE_LAB_HPP
//! \file
//! \brief Two-state comparison of the census coverage factor (CCF) and the
//! data-defined coverage factor (DCF).
//!
//! One post-stratum is split across two states with observable counts CE,
//! EE, MN (matched non-movers), NN (unmatched non-movers) and II. The true
//! population of state j is taken as CE_j * NN_j / MN_j, exactly as the
//! two-by-two-table argument writes it (note: the textbook dual-system form
//! would use (MN + NN) / MN; the literal form is kept).
//!
//! Scenarios must be lambda-scaled: CE2 = lambda CE1, MN2 = lambda MN1,
//! NN2 = lambda NN1. lambda = 1 is the equal-size case for which the closed
//! forms were first written. With r = NN1 / MN1, a = lambda EE1 - EE2,
//! b = lambda II1 - II2, D = CE1 + CE2 + EE1 + EE2 and E = D + II1 + II2,
//!
//!     S_1^d - S_1^t = r CE1 a / D,        S_1^c - S_1^t = r CE1 (a + b) / E,
//!
//! with the state-2 errors equal and opposite, so
//!
//!     Delta_d - Delta_c = 2 (r CE1)^2 (a/D + (a+b)/E) (a/D - (a+b)/E).

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "synthdse/domain.hpp"

namespace synthdse {

enum class Winner { ccf, dcf, tie };

inline constexpr std::string_view to_string(Winner w) noexcept {
    switch (w) {
    case Winner::ccf:
        return "CCF";
    case Winner::dcf:
        return "DCF";
    case Winner::tie:
        return "tie";
    }
    return "?";
}

enum class Factor { ccf, dcf };

struct StatePair {
    double first = 0.0;
    double second = 0.0;
};

inline void validate_scenario(const TwoStateScenario &s) {
    for (Count v : {s.ce1, s.ce2, s.ee1, s.ee2, s.mn1, s.mn2, s.nn1, s.nn2, s.ii1, s.ii2}) {
        if (v < 0) {
            throw validation_error("two-state scenario counts must be nonnegative");
        }
    }
    if (s.mn1 <= 0 || s.mn2 <= 0) {
        throw undefined_rate_error("two-state scenario needs MN1 > 0 and MN2 > 0");
    }
    if (!(s.lambda > 0.0)) {
        throw validation_error("lambda must be positive");
    }
}

/// Per-state true populations CE_j * NN_j / MN_j.
inline StatePair true_dse(const TwoStateScenario &s) {
    if (s.mn1 <= 0 || s.mn2 <= 0) {
        throw undefined_rate_error("true DSE needs MN1 > 0 and MN2 > 0");
    }
    return {static_cast<double>(s.ce1) * static_cast<double>(s.nn1) / static_cast<double>(s.mn1),
            static_cast<double>(s.ce2) * static_cast<double>(s.nn2) / static_cast<double>(s.mn2)};
}

inline bool is_lambda_scaled(const TwoStateScenario &s, double tol = 1e-12) {
    auto close = [&](Count two, Count one) {
        const double expect = s.lambda * static_cast<double>(one);
        return std::abs(static_cast<double>(two) - expect) <=
               tol * std::max(1.0, std::abs(expect));
    };
    return close(s.ce2, s.ce1) && close(s.mn2, s.mn1) && close(s.nn2, s.nn1);
}

/// Synthetic state values in the equal-truth closed form:
/// S_i = size_i / (size_1 + size_2) x 2S, where size is CE + EE + II for CCF
/// and CE + EE for DCF. Rejects scenarios whose two true values differ.
inline StatePair synthetic_pair(const TwoStateScenario &s, Factor factor) {
    validate_scenario(s);
    const auto truth = true_dse(s);
    if (std::abs(truth.first - truth.second) >
        1e-12 * std::max(std::abs(truth.first), std::abs(truth.second))) {
        throw validation_error("closed-form synthetic pair needs equal true values in both states");
    }
    double n1 = static_cast<double>(s.ce1 + s.ee1);
    double n2 = static_cast<double>(s.ce2 + s.ee2);
    if (factor == Factor::ccf) {
        n1 += static_cast<double>(s.ii1);
        n2 += static_cast<double>(s.ii2);
    }
    if (n1 + n2 == 0.0) {
        throw undefined_rate_error("synthetic pair undefined: no enumerations in either state");
    }
    const double two_s = 2.0 * truth.first;
    return {n1 / (n1 + n2) * two_s, n2 / (n1 + n2) * two_s};
}

/// Synthetic state values from the pooled coverage factor applied to each
/// state's census (CCF) or data-defined (DCF) count:
///   CCF = sum CE / sum (CE + EE + II) x sum NN / sum MN
///   DCF = sum CE / sum (CE + EE)      x sum NN / sum MN
inline StatePair synthetic_pair_general(const TwoStateScenario &s, Factor factor) {
    validate_scenario(s);
    const double ce = static_cast<double>(s.ce1 + s.ce2);
    const double nn = static_cast<double>(s.nn1 + s.nn2);
    const double mn = static_cast<double>(s.mn1 + s.mn2);
    double n1 = static_cast<double>(s.ce1 + s.ee1);
    double n2 = static_cast<double>(s.ce2 + s.ee2);
    if (factor == Factor::ccf) {
        n1 += static_cast<double>(s.ii1);
        n2 += static_cast<double>(s.ii2);
    }
    if (n1 + n2 == 0.0) {
        throw undefined_rate_error("synthetic pair undefined: no enumerations in either state");
    }
    const double coverage = ce / (n1 + n2) * nn / mn;
    return {n1 * coverage, n2 * coverage};
}

/// Classification from the approximate-regime rules (valid when CE greatly
/// exceeds EE and II), with a = lambda EE1 - EE2 and b = lambda II1 - II2:
///   a = 0            -> DCF
///   b = 0            -> CCF
///   a > 0, b > 0     -> DCF
///   a > 0, b < 0     -> DCF if a <= -b / 2, else CCF
/// a < 0 is the same problem with the states swapped, which negates a and b.
/// a = b = 0 is a tie (both of the first two rules apply).
inline Winner decision_rule(const TwoStateScenario &s, double lambda) {
    double a = lambda * static_cast<double>(s.ee1) - static_cast<double>(s.ee2);
    double b = lambda * static_cast<double>(s.ii1) - static_cast<double>(s.ii2);
    if (a == 0.0 && b == 0.0) {
        return Winner::tie;
    }
    if (a == 0.0) {
        return Winner::dcf;
    }
    if (b == 0.0) {
        return Winner::ccf;
    }
    if (a < 0.0) {
        a = -a;
        b = -b;
    }
    if (b > 0.0) {
        return Winner::dcf;
    }
    return a <= -b / 2.0 ? Winner::dcf : Winner::ccf;
}

struct DeltaComparison {
    TwoStateScenario scenario;
    StatePair truth;
    StatePair ccf; // S^c per state
    StatePair dcf; // S^d per state
    double delta_c = 0.0;
    double delta_d = 0.0;
    double diff_exact = 0.0;  // closed form, product of sum and difference
    double diff_direct = 0.0; // delta_d - delta_c from the definitions
    double diff_approx = 0.0; // large-CE approximation
    bool forms_agree = true;  // |diff_exact - diff_direct| within 1e-9 relative
    Winner predicted = Winner::tie;
    Winner actual = Winner::tie;
};

inline constexpr double closed_form_tolerance = 1e-9;

/// Squared errors of the CCF- and DCF-based synthetic values, their exact
/// and approximate difference, and the predicted and actual winners.
inline DeltaComparison delta_comparison(const TwoStateScenario &s) {
    validate_scenario(s);
    if (!is_lambda_scaled(s)) {
        throw validation_error("two-state scenario is not lambda-scaled: CE2, MN2, NN2 must equal "
                               "lambda times CE1, MN1, NN1");
    }
    DeltaComparison out;
    out.scenario = s;
    out.truth = true_dse(s);
    const bool equal_size = s.lambda == 1.0 && s.ce1 == s.ce2 && s.mn1 == s.mn2 && s.nn1 == s.nn2;
    out.ccf = equal_size ? synthetic_pair(s, Factor::ccf) : synthetic_pair_general(s, Factor::ccf);
    out.dcf = equal_size ? synthetic_pair(s, Factor::dcf) : synthetic_pair_general(s, Factor::dcf);

    auto sq = [](double x) { return x * x; };
    out.delta_c = sq(out.ccf.first - out.truth.first) + sq(out.ccf.second - out.truth.second);
    out.delta_d = sq(out.dcf.first - out.truth.first) + sq(out.dcf.second - out.truth.second);
    out.diff_direct = out.delta_d - out.delta_c;

    const double lambda = s.lambda;
    const double ce1 = static_cast<double>(s.ce1);
    const double scale = static_cast<double>(s.nn1) / static_cast<double>(s.mn1) * ce1; // S_1^t
    const double a = equal_size ? static_cast<double>(s.ee1 - s.ee2)
                                : lambda * static_cast<double>(s.ee1) - static_cast<double>(s.ee2);
    const double b = equal_size ? static_cast<double>(s.ii1 - s.ii2)
                                : lambda * static_cast<double>(s.ii1) - static_cast<double>(s.ii2);
    const double d = static_cast<double>(s.ce1 + s.ce2 + s.ee1 + s.ee2);
    const double e = d + static_cast<double>(s.ii1 + s.ii2);
    if (d == 0.0 || e == 0.0) {
        throw undefined_rate_error("two-state scenario has no enumerations");
    }
    const double x = a / d;
    const double y = (a + b) / e;
    out.diff_exact = 2.0 * sq(scale) * ((x + y) * (x - y));

    const double size = (1.0 + lambda) * ce1; // 2 CE1 when lambda = 1
    out.diff_approx =
        -2.0 * sq(scale) * (size * (2.0 * a + b)) * (size * b) / (sq(d) * sq(e));

    const double magnitude = std::max({out.delta_c, out.delta_d, std::abs(out.diff_exact)});
    out.forms_agree = std::abs(out.diff_exact - out.diff_direct) <=
                      closed_form_tolerance * magnitude + 1e-300;

    out.actual = out.diff_exact < 0.0   ? Winner::dcf
                 : out.diff_exact > 0.0 ? Winner::ccf
                                        : Winner::tie;
    out.predicted = decision_rule(s, lambda);
    return out;
}

/// Counts of actual winners split by stratum size.
struct FrequencyTable {
    std::size_t small_ccf = 0, small_dcf = 0;
    std::size_t large_ccf = 0, large_dcf = 0;
    std::size_t ties = 0; // excluded from every cell and margin

    [[nodiscard]] std::size_t small_total() const { return small_ccf + small_dcf; }
    [[nodiscard]] std::size_t large_total() const { return large_ccf + large_dcf; }
    [[nodiscard]] std::size_t ccf_total() const { return small_ccf + large_ccf; }
    [[nodiscard]] std::size_t dcf_total() const { return small_dcf + large_dcf; }
    [[nodiscard]] std::size_t total() const { return small_total() + large_total(); }
};

/// A stratum is large when its total correct enumerations CE1 + CE2 reach
/// `size_threshold`.
inline FrequencyTable empirical_frequency(std::span<const DeltaComparison> comparisons,
                                          Count size_threshold) {
    if (size_threshold <= 0) {
        throw validation_error("size threshold must be positive");
    }
    FrequencyTable t;
    for (const auto &c : comparisons) {
        if (c.actual == Winner::tie) {
            ++t.ties;
            continue;
        }
        const bool large = c.scenario.ce1 + c.scenario.ce2 >= size_threshold;
        const bool dcf = c.actual == Winner::dcf;
        if (large) {
            ++(dcf ? t.large_dcf : t.large_ccf);
        } else {
            ++(dcf ? t.small_dcf : t.small_ccf);
        }
    }
    return t;
}

} // namespace synthdse

#endif
