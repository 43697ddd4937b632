#pragma once

// Exhaustive reference for grounding: tries every subset of the unclaimed valid
// actions and keeps the one with the largest similarity total.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "agentcritic/grounding.hpp"

namespace oracle {

inline std::string folded(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    std::string out = s.substr(b, e - b);
    for (char& c : out) c = char(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

inline double dot_cos(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return na == 0 || nb == 0 ? 0.0 : d / std::sqrt(na * nb);
}

// Returns the grounded action texts as a sorted list.
inline std::vector<std::string> brute_force_grounding(const std::vector<std::string>& cands,
                                                      const std::vector<std::string>& valid, std::size_t k,
                                                      std::size_t dim = agentcritic::kDefaultEmbeddingDim) {
    std::vector<std::string> kept;
    std::set<std::string> kept_keys;
    std::vector<std::string> invalid;
    const std::size_t n = std::min(k, cands.size());
    for (std::size_t i = 0; i < n; ++i) {
        const std::string key = folded(cands[i]);
        const auto hit = std::find_if(valid.begin(), valid.end(), [&](const std::string& v) { return folded(v) == key; });
        if (hit == valid.end()) {
            invalid.push_back(cands[i]);
        } else if (kept_keys.insert(key).second) {
            kept.push_back(*hit);
        }
    }
    std::vector<std::string> rest;
    std::set<std::string> seen = kept_keys;
    for (const auto& v : valid)
        if (seen.insert(folded(v)).second) rest.push_back(v);

    std::vector<std::string> best;
    if (!invalid.empty() && !rest.empty()) {
        std::vector<double> score(rest.size(), 0.0);
        for (std::size_t r = 0; r < rest.size(); ++r)
            for (const auto& inv : invalid)
                score[r] += dot_cos(agentcritic::embed_text(rest[r], dim).vector, agentcritic::embed_text(inv, dim).vector);
        const std::size_t m = std::min(invalid.size(), rest.size());
        double best_total = -1e300;
        for (unsigned mask = 0; mask < (1u << rest.size()); ++mask) {
            if (std::size_t(__builtin_popcount(mask)) != m) continue;
            double total = 0;
            std::vector<std::string> pick;
            for (std::size_t r = 0; r < rest.size(); ++r)
                if (mask & (1u << r)) {
                    total += score[r];
                    pick.push_back(rest[r]);
                }
            std::sort(pick.begin(), pick.end());
            if (total > best_total + 1e-12 || (std::abs(total - best_total) <= 1e-12 && pick < best)) {
                best_total = std::max(total, best_total);
                best = pick;
            }
        }
    }
    std::vector<std::string> out = kept;
    out.insert(out.end(), best.begin(), best.end());
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace oracle
