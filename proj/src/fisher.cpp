#include "trendwatch/fisher.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "trendwatch/errors.hpp"

namespace trendwatch::trend {

std::uint64_t ContingencyTable::support_min() const {
    const std::uint64_t rows = claim_total() + day_total();
    return rows > n() ? rows - n() : 0;
}

std::uint64_t ContingencyTable::support_max() const { return std::min(claim_total(), day_total()); }

ContingencyTable ContingencyTable::with_joint(std::uint64_t k) const {
    if (k < support_min() || k > support_max()) throw DomainError("joint count outside the table support");
    ContingencyTable t;
    t.a = k;
    t.b = claim_total() - k;
    t.c = day_total() - k;
    t.d = n() - claim_total() - day_total() + k;
    return t;
}

long double LogFactorialTable::operator()(std::uint64_t n) const {
    {
        std::shared_lock lock(mutex_);
        if (n < values_.size()) return values_[n];
    }
    reserve(n);
    std::shared_lock lock(mutex_);
    return values_[n];
}

void LogFactorialTable::reserve(std::uint64_t n) const {
    std::unique_lock lock(mutex_);
    if (n < values_.size()) return;
    const std::uint64_t target = std::max<std::uint64_t>(n + 1, values_.size() * 2);
    values_.reserve(target);
    for (std::uint64_t k = values_.size(); k < target; ++k) {
        int sign = 0;
        values_.push_back(k < 2 ? 0.0L : ::lgammal_r(static_cast<long double>(k) + 1.0L, &sign));
    }
}

std::uint64_t LogFactorialTable::size() const {
    std::shared_lock lock(mutex_);
    return values_.size();
}

const LogFactorialTable& LogFactorialTable::shared() {
    static const LogFactorialTable table;
    return table;
}

namespace {

long double log_point(const ContingencyTable& t, const LogFactorialTable& lf) {
    lf.reserve(t.n());
    return lf(t.claim_total()) + lf(t.other_total()) + lf(t.day_total()) + lf(t.rest_total()) -
           lf(t.n()) - lf(t.a) - lf(t.b) - lf(t.c) - lf(t.d);
}

void require_nonempty(const ContingencyTable& t) {
    if (t.n() == 0) throw DomainError("contingency table is empty (N = 0)");
}

}  // namespace

double log_hypergeometric_probability(const ContingencyTable& table) {
    require_nonempty(table);
    return static_cast<double>(std::min(0.0L, log_point(table, LogFactorialTable::shared())));
}

double hypergeometric_probability(const ContingencyTable& table) {
    return std::exp(log_hypergeometric_probability(table));
}

namespace {

// Sum of P(k) walking away from `from` (inclusive when `inclusive`) in steps
// of `step` (+1 or -1), returned as a log. Terms are rescaled to stay finite.
long double log_tail(const ContingencyTable& table, std::uint64_t from, int step, bool inclusive) {
    const long double rows = static_cast<long double>(table.claim_total());
    const long double cols = static_cast<long double>(table.day_total());
    const long double rest = static_cast<long double>(table.n()) - rows - cols;  // may be negative
    const std::uint64_t stop = step > 0 ? table.support_max() : table.support_min();

    long double log_term = log_point(table.with_joint(from), LogFactorialTable::shared());
    long double ref = log_term;
    long double acc = inclusive ? 1.0L : 0.0L;
    for (std::uint64_t k = from; k != stop; k += step) {
        const long double kk = static_cast<long double>(k);
        // P(k+1)/P(k) = (C(T)-k)(C(D)-k) / ((k+1)(N-C(T)-C(D)+k+1))
        const long double ratio = step > 0 ? ((rows - kk) * (cols - kk)) / ((kk + 1.0L) * (rest + kk + 1.0L))
                                           : (kk * (rest + kk)) / ((rows - kk + 1.0L) * (cols - kk + 1.0L));
        log_term += std::log(ratio);
        long double rel = std::exp(log_term - ref);
        if (rel > 1e280L) {
            acc *= std::exp(ref - log_term);
            ref = log_term;
            rel = 1.0L;
        }
        acc += rel;
        // moving away from the mode the ratios only shrink: geometric bound
        if (ratio < 1.0L && rel * ratio / (1.0L - ratio) < 1e-19L * acc) break;
    }
    return ref + std::log(acc);
}

}  // namespace

double fisher_one_tailed(const ContingencyTable& table) {
    require_nonempty(table);
    const std::uint64_t lo = table.support_min();
    if (table.a <= lo) return 1.0;

    const long double mode = std::floor((static_cast<long double>(table.claim_total()) + 1.0L) *
                                        (static_cast<long double>(table.day_total()) + 1.0L) /
                                        (static_cast<long double>(table.n()) + 2.0L));
    double p;
    if (static_cast<long double>(table.a) <= mode) {
        // upper tail is large here; 1 - (small lower tail) keeps full precision
        const long double lower = std::exp(log_tail(table, table.a, -1, false));
        p = static_cast<double>(1.0L - lower);
    } else {
        p = static_cast<double>(std::exp(std::min(0.0L, log_tail(table, table.a, +1, true))));
    }
    return std::clamp(p, kMinPValue, 1.0);
}

double trendiness(double p_value) {
    const double z = -std::log10(std::clamp(p_value, kMinPValue, 1.0));
    return z == 0.0 ? 0.0 : z;  // no "-0"
}

}  // namespace trendwatch::trend
