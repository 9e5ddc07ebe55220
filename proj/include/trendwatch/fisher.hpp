#pragma once

#include <cstdint>
#include <shared_mutex>
#include <vector>

namespace trendwatch::trend {

/// 2x2 table over events T (post mentions the claim) and D (post is from
/// the date under test):
///
///            D     ¬D
///     T      a      b      C(T)  = a + b
///     ¬T     c      d      C(¬T) = c + d
///          C(D)  C(¬D)     N
struct ContingencyTable {
    std::uint64_t a = 0;  // C(T, D)
    std::uint64_t b = 0;  // C(T, ¬D)
    std::uint64_t c = 0;  // C(¬T, D)
    std::uint64_t d = 0;  // C(¬T, ¬D)

    std::uint64_t n() const { return a + b + c + d; }
    std::uint64_t claim_total() const { return a + b; }     // C(T)
    std::uint64_t other_total() const { return c + d; }     // C(¬T)
    std::uint64_t day_total() const { return a + c; }       // C(D)
    std::uint64_t rest_total() const { return b + d; }      // C(¬D)

    /// Lowest and highest feasible `a` under the table's margins.
    std::uint64_t support_min() const;
    std::uint64_t support_max() const;

    /// The table with the same margins whose top-left cell is `k`.
    /// `k` must lie within [support_min, support_max].
    ContingencyTable with_joint(std::uint64_t k) const;

    bool operator==(const ContingencyTable&) const = default;
};

/// ln(n!) for n = 0..size-1, grown on demand. Safe to share between threads.
class LogFactorialTable {
public:
    long double operator()(std::uint64_t n) const;
    void reserve(std::uint64_t n) const;
    std::uint64_t size() const;

    static const LogFactorialTable& shared();

private:
    mutable std::shared_mutex mutex_;
    mutable std::vector<long double> values_{0.0L};
};

/// ln of C(T)!C(¬T)!C(D)!C(¬D)! / (N! a! b! c! d!). Throws DomainError when N = 0.
double log_hypergeometric_probability(const ContingencyTable& table);

/// The point probability of `table` under fixed margins, in [0, 1].
double hypergeometric_probability(const ContingencyTable& table);

/// Smallest p-value reported; keeps -log10(p) finite.
inline constexpr double kMinPValue = 1e-320;

/// One-tailed (upper) Fisher's exact test: the probability, under fixed
/// margins, of a joint count C(T, D) at least as large as observed.
/// Result lies in [kMinPValue, 1]. Throws DomainError when N = 0.
double fisher_one_tailed(const ContingencyTable& table);

/// -log10 of the clamped p-value.
double trendiness(double p_value);

}  // namespace trendwatch::trend
