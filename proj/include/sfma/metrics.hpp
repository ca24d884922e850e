#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sfma/bbo.hpp"

namespace sfma {

/// Equality predicate for objective values: decimal rounding at the 17th
/// fractional digit, realized through fixed formatting. This is how optimum
/// hits are detected; it is never a storage format.
inline std::string round17_key(double v) {
    if (std::isnan(v)) return "nan";
    if (v == 0.0) v = 0.0;  // collapse -0
    char buf[512];
    std::snprintf(buf, sizeof buf, "%.17f", v);
    return buf;
}

inline bool round17_equal(double a, double b) {
    return round17_key(a) == round17_key(b);
}

/// Exact fraction, used for success rates so comparisons and table output
/// never go through floating point.
struct Rational {
    long long num = 0;
    long long den = 1;

    double value() const { return static_cast<double>(num) / den; }
    std::string str() const {
        return std::to_string(num) + "/" + std::to_string(den);
    }
    bool operator==(const Rational& o) const {
        return num * o.den == o.num * den;
    }
    bool operator<(const Rational& o) const {
        return num * o.den < o.num * den;
    }
    bool operator>(const Rational& o) const { return o < *this; }
};

/// N_samp completed traces of one (problem, strategy) pair plus the oracle
/// optimum they are scored against.
struct TraceEnsemble {
    std::vector<RunTrace> traces;
    double y_star = 0.0;
};

/// Per-loop statistics over an ensemble, indexed by a = 0..n_ite.
struct BenchmarkSummary {
    std::vector<double> mean_min;
    std::vector<Rational> success_rate;
    std::vector<double> variance;
    std::vector<double> ci95_half_width;
    std::optional<int> n_conv;
    Rational final_success_rate;

    // context carried along for export
    int n_samp = 0;
    int initial_size = 0;
    int n_bit = 0;
    double y_star = 0.0;

    std::size_t length() const { return mean_min.size(); }  // n_ite + 1
};

/// Best objective value seen up to each loop: entry a is the minimum over
/// the initial dataset plus the first a queries.
inline std::vector<double> running_min(const RunTrace& trace) {
    if (trace.initial.empty())
        throw std::invalid_argument("running_min: trace has no initial dataset");
    double best = trace.initial.points[0].y;
    for (const auto& pt : trace.initial.points) best = std::min(best, pt.y);
    std::vector<double> out;
    out.reserve(trace.queries.size() + 1);
    out.push_back(best);
    for (const auto& q : trace.queries) {
        best = std::min(best, q.y);
        out.push_back(best);
    }
    return out;
}

/// Smallest index a (1-based) at which the success rate reaches 1/2; absent
/// when it never does. The input series starts at a = 1.
inline std::optional<int> n_conv(const std::vector<Rational>& success_from_a1) {
    for (std::size_t i = 0; i < success_from_a1.size(); ++i)
        if (2 * success_from_a1[i].num >= success_from_a1[i].den)
            return static_cast<int>(i + 1);
    return std::nullopt;
}

inline Rational final_success_rate(const BenchmarkSummary& summary) {
    if (summary.success_rate.empty())
        throw std::invalid_argument("final_success_rate: empty summary");
    return summary.success_rate.back();
}

/// Collapses an ensemble into the mean running minimum, the success-rate
/// fraction (optimum hits under round17 equality), the population variance
/// of the running minima, and the 1.96*sigma/sqrt(N) confidence half-width,
/// all per loop index.
inline BenchmarkSummary aggregate(const TraceEnsemble& ensemble) {
    if (ensemble.traces.empty())
        throw std::invalid_argument("aggregate: empty ensemble");
    const std::size_t n_queries = ensemble.traces[0].queries.size();
    const std::size_t n0 = ensemble.traces[0].initial.size();
    const int n_bit =
        static_cast<int>(ensemble.traces[0].initial.points.at(0).x.size());
    for (const auto& t : ensemble.traces) {
        if (t.queries.size() != n_queries || t.initial.size() != n0)
            throw std::invalid_argument(
                "aggregate: invalid ensemble (trace lengths differ)");
    }

    const int n_samp = static_cast<int>(ensemble.traces.size());
    std::vector<std::vector<double>> mins;
    mins.reserve(ensemble.traces.size());
    for (const auto& t : ensemble.traces) mins.push_back(running_min(t));

    const std::string star_key = round17_key(ensemble.y_star);
    BenchmarkSummary s;
    s.n_samp = n_samp;
    s.initial_size = static_cast<int>(n0);
    s.n_bit = n_bit;
    s.y_star = ensemble.y_star;
    for (std::size_t a = 0; a <= n_queries; ++a) {
        double mean = 0.0;
        long long hits = 0;
        for (const auto& rm : mins) {
            mean += rm[a];
            if (round17_key(rm[a]) == star_key) ++hits;
        }
        mean /= n_samp;
        double var = 0.0;
        for (const auto& rm : mins) var += (rm[a] - mean) * (rm[a] - mean);
        var /= n_samp;
        s.mean_min.push_back(mean);
        s.success_rate.push_back(Rational{hits, n_samp});
        s.variance.push_back(var);
        s.ci95_half_width.push_back(1.96 * std::sqrt(var / n_samp));
    }
    s.n_conv = n_conv({s.success_rate.begin() + 1, s.success_rate.end()});
    s.final_success_rate = s.success_rate.back();
    return s;
}

enum class Better { Smaller, Larger };

/// Cross-instance win counts: per instance the best present value wins and
/// every tied winner receives 1/n_winners. Absent entries never win, and a
/// zero value cannot win when larger is better (a 0/N success rate is not a
/// win). Results are summed over instances for every algorithm that appears
/// anywhere.
inline std::map<std::string, double> frequency_table(
    const std::map<std::string,
                   std::map<std::string, std::optional<Rational>>>& per_instance,
    Better better) {
    if (per_instance.empty())
        throw std::invalid_argument("frequency_table: no instances");

    std::map<std::string, double> freq;
    for (const auto& [instance, algs] : per_instance)
        for (const auto& [alg, value] : algs) freq.emplace(alg, 0.0);

    for (const auto& [instance, algs] : per_instance) {
        std::optional<Rational> best;
        for (const auto& [alg, value] : algs) {
            if (!value) continue;
            if (better == Better::Larger && value->num == 0) continue;
            if (!best || (better == Better::Smaller ? *value < *best
                                                    : *value > *best))
                best = *value;
        }
        if (!best) continue;
        std::vector<std::string> winners;
        for (const auto& [alg, value] : algs) {
            if (!value) continue;
            if (better == Better::Larger && value->num == 0) continue;
            if (*value == *best) winners.push_back(alg);
        }
        for (const auto& w : winners)
            freq[w] += 1.0 / static_cast<double>(winners.size());
    }
    return freq;
}

}  // namespace sfma
