#ifndef SYNTHDSE_TESTS_VARIANCE_ORACLE_HPP
#define SYNTHDSE_TESTS_VARIANCE_ORACLE_HPP
// Equal-size two-state comparison in exact integer arithmetic.
//
// With CE1 = CE2, MN1 = MN2, NN1 = NN2 and both truths equal to S,
//   Delta_d - Delta_c = 2 S^2 [ (a/D)^2 - ((a+b)/E)^2 ],
// so its sign is the sign of a^2 E^2 - (a+b)^2 D^2, an integer.

#include <cstdint>

namespace oracle {

using i128 = __int128;

struct EqualSize {
    std::int64_t ce, ee1, ee2, ii1, ii2;
};

/// -1: DCF strictly better, +1: CCF strictly better, 0: tie.
inline int delta_sign(const EqualSize &s) {
    const i128 a = s.ee1 - s.ee2;
    const i128 b = s.ii1 - s.ii2;
    const i128 d = 2 * static_cast<i128>(s.ce) + s.ee1 + s.ee2;
    const i128 e = d + s.ii1 + s.ii2;
    const i128 v = a * a * e * e - (a + b) * (a + b) * d * d;
    return v > 0 ? 1 : v < 0 ? -1 : 0;
}

/// Squared errors by direct evaluation of the per-state synthetic values,
/// in long double, for an equal-size scenario with common truth s.
struct Deltas {
    long double delta_c, delta_d;
};

inline Deltas deltas(const EqualSize &x, long double s) {
    const long double n1c = x.ce + x.ee1 + x.ii1, n2c = x.ce + x.ee2 + x.ii2;
    const long double n1d = x.ce + x.ee1, n2d = x.ce + x.ee2;
    const long double c1 = n1c / (n1c + n2c) * 2 * s, c2 = n2c / (n1c + n2c) * 2 * s;
    const long double d1 = n1d / (n1d + n2d) * 2 * s, d2 = n2d / (n1d + n2d) * 2 * s;
    return {(c1 - s) * (c1 - s) + (c2 - s) * (c2 - s), (d1 - s) * (d1 - s) + (d2 - s) * (d2 - s)};
}

} // namespace oracle

#endif
