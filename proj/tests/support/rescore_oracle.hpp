#pragma once

// Direct restatement of the rescoring rule, kept apart from the library code.

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

inline std::vector<double> minmax(const std::vector<double>& v) {
    double lo = v[0], hi = v[0];
    for (double x : v) {
        lo = x < lo ? x : lo;
        hi = x > hi ? x : hi;
    }
    std::vector<double> out;
    for (double x : v) out.push_back(hi == lo ? 0.5 : (x - lo) / (hi - lo));
    return out;
}

inline double alpha_at(std::size_t t, double b, double d) {
    double p = 1.0;
    for (std::size_t i = 0; i < t; ++i) p *= d;
    return p > b ? p : b;
}

inline std::size_t pick(const std::vector<double>& p, const std::vector<double>& q, double alpha) {
    const auto pn = minmax(p), qn = minmax(q);
    std::size_t best = 0;
    double best_c = alpha * pn[0] + (1 - alpha) * qn[0];
    for (std::size_t i = 1; i < p.size(); ++i) {
        const double c = alpha * pn[i] + (1 - alpha) * qn[i];
        if (c > best_c || (c == best_c && pn[i] > pn[best])) {
            best = i;
            best_c = c;
        }
    }
    return best;
}

// First index holding the maximum.
inline std::size_t first_argmax(const std::vector<double>& v) {
    std::size_t b = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[b]) b = i;
    return b;
}

} // namespace oracle
