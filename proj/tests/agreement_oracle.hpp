#pragma once

// Exact-rational Krippendorff's alpha (ordinal) straight from its
// pairable-values definition: every ordered pair of values inside a unit
// for observed disagreement, every ordered pair of pairable values in the
// whole reliability data for expected disagreement. No coincidence matrix.

#include <map>
#include <optional>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace oracle {

using boost::multiprecision::cpp_rational;

inline cpp_rational alpha_ordinal(const std::vector<std::vector<std::optional<int>>>& matrix) {
    std::vector<std::vector<int>> units;
    std::vector<int> pooled;
    for (const auto& row : matrix) {
        std::vector<int> u;
        for (const auto& r : row) {
            if (r) u.push_back(*r);
        }
        if (u.size() < 2) continue;
        pooled.insert(pooled.end(), u.begin(), u.end());
        units.push_back(std::move(u));
    }
    std::map<int, long long> freq;
    for (const int v : pooled) ++freq[v];
    auto delta2 = [&](int c, int k) -> cpp_rational {
        if (c == k) return cpp_rational(0);
        if (c > k) std::swap(c, k);
        cpp_rational s = 0;
        for (const auto& [g, n] : freq) {
            if (g >= c && g <= k) s += n;
        }
        s -= cpp_rational(freq[c] + freq[k], 2);
        return cpp_rational(s * s);
    };

    cpp_rational observed = 0;
    for (const auto& u : units) {
        cpp_rational within = 0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            for (std::size_t j = 0; j < u.size(); ++j) {
                if (i != j) within += delta2(u[i], u[j]);
            }
        }
        observed += within / cpp_rational(static_cast<long long>(u.size() - 1));
    }
    cpp_rational expected = 0;
    for (std::size_t a = 0; a < pooled.size(); ++a) {
        for (std::size_t b = 0; b < pooled.size(); ++b) {
            if (a != b) expected += delta2(pooled[a], pooled[b]);
        }
    }
    if (expected == 0) return 1;
    const long long n = static_cast<long long>(pooled.size());
    return 1 - cpp_rational(n - 1) * observed / expected;
}

}  // namespace oracle
