#ifndef SYNTHDSE_TESTS_CHI_SQUARE_ORACLE_HPP
#define SYNTHDSE_TESTS_CHI_SQUARE_ORACLE_HPP
// Reference chi-square upper tail without Boost: closed forms in terms of
// exp and erfc, which cover every integer df by the standard recurrences
//   Q(x; k + 2) = Q(x; k) + (x/2)^(k/2) e^(-x/2) / Gamma(k/2 + 1).

#include <cmath>
#include <vector>

namespace oracle {

inline double chi_square_sf(double x, long df) {
    long double term; // (x/2)^(k/2) e^(-x/2) / Gamma(k/2 + 1) for the current k
    long double q;
    const long double half = static_cast<long double>(x) / 2.0L;
    long k;
    if (df % 2 == 0) {
        q = std::exp(-half); // k = 2
        term = half * std::exp(-half);
        k = 2;
    } else {
        q = std::erfc(std::sqrt(half)); // k = 1
        term = std::sqrt(half) * std::exp(-half) / std::tgamma(1.5L);
        k = 1;
    }
    while (k < df) {
        q += term;
        k += 2;
        term *= half / (static_cast<long double>(k) / 2.0L);
    }
    return static_cast<double>(q);
}

/// Pearson statistic of an r x c table of observed counts.
inline double pearson(const std::vector<std::vector<double>> &obs) {
    const std::size_t r = obs.size(), c = obs.front().size();
    std::vector<double> row(r, 0.0), col(c, 0.0);
    double n = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            row[i] += obs[i][j];
            col[j] += obs[i][j];
            n += obs[i][j];
        }
    }
    double stat = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            const double e = row[i] * col[j] / n;
            stat += (obs[i][j] - e) * (obs[i][j] - e) / e;
        }
    }
    return stat;
}

} // namespace oracle

#endif
