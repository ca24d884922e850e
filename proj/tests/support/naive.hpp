// Independent reference implementations used only by tests. Everything here
// deliberately takes the slow, literal route (explicit double loops, SVD
// pseudoinverse, full rescans) so it cannot share a bug with the library's
// optimized paths.
#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sfma/annealer.hpp"
#include "sfma/bbo.hpp"
#include "sfma/fm.hpp"
#include "sfma/metrics.hpp"
#include "sfma/problem.hpp"
#include "sfma/training.hpp"

namespace naive {

// FM value as the literal pairwise double sum.
inline double fm_eval(const sfma::FmParams& p, const sfma::BinaryVector& x) {
    const int n = p.n_bit();
    double out = p.w0;
    for (int i = 0; i < n; ++i) out += p.w[i] * (x.bits[i] ? 1.0 : 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (int l = 0; l < p.k; ++l) s += p.v_at(i, l) * p.v_at(j, l);
            out += s * (x.bits[i] ? 1.0 : 0.0) * (x.bits[j] ? 1.0 : 0.0);
        }
    return out;
}

// QUBO value as the literal full double loop.
inline double qubo_eval(const sfma::QuboMatrix& q, const sfma::BinaryVector& x) {
    double out = 0.0;
    for (int i = 0; i < q.n_bit(); ++i)
        for (int j = i; j < q.n_bit(); ++j)
            out += q.at(i, j) * (x.bits[i] ? 1.0 : 0.0) *
                   (x.bits[j] ? 1.0 : 0.0);
    return out;
}

// Mean squared error recomputed from scratch.
inline double mse_loss(const sfma::FmParams& p, const sfma::Dataset& data) {
    double acc = 0.0;
    for (const auto& pt : data.points) {
        const double r = naive::fm_eval(p, pt.x) - pt.y;
        acc += r * r;
    }
    return acc / static_cast<double>(data.size());
}

// Central finite differences of fm_eval over every parameter.
inline sfma::GradVector finite_difference_gradient(const sfma::FmParams& p,
                                                   const sfma::BinaryVector& x,
                                                   double h = 1e-5) {
    sfma::GradVector g;
    g.d_w.assign(p.w.size(), 0.0);
    g.d_v.assign(p.v.size(), 0.0);
    auto probe = [&](const sfma::FmParams& q, double* slot) {
        const double saved = *slot;
        *slot = saved + h;
        const double up = naive::fm_eval(q, x);
        *slot = saved - h;
        const double down = naive::fm_eval(q, x);
        *slot = saved;
        return (up - down) / (2.0 * h);
    };
    {
        sfma::FmParams q = p;
        g.d_w0 = probe(q, &q.w0);
    }
    for (std::size_t i = 0; i < p.w.size(); ++i) {
        sfma::FmParams q = p;
        g.d_w[i] = probe(q, &q.w[i]);
    }
    for (std::size_t i = 0; i < p.v.size(); ++i) {
        sfma::FmParams q = p;
        g.d_v[i] = probe(q, &q.v[i]);
    }
    return g;
}

// Compression objective through an SVD pseudoinverse (the library uses a
// complete orthogonal decomposition) with the Frobenius sum spelled out.
inline double lossy_objective(const sfma::LossyCompressionProblem& p,
                              const sfma::BinaryVector& x) {
    const int n = p.w.rows();
    const int k = p.k_factor;
    Eigen::MatrixXd m(n, k);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j)
            m(i, j) = x.bits[static_cast<std::size_t>(i) * k + j] ? 1.0 : -1.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-10);
    Eigen::MatrixXd v = m * svd.solve(p.w.entries);
    double acc = 0.0;
    for (int i = 0; i < p.w.rows(); ++i)
        for (int j = 0; j < p.w.cols(); ++j) {
            const double r = p.w.entries(i, j) - v(i, j);
            acc += r * r;
        }
    return acc;
}

// Exhaustive minimum of an arbitrary function, written independently of
// sfma::brute_force_optima.
inline double exhaustive_min(
    const std::function<double(const sfma::BinaryVector&)>& fn, int n_bit) {
    double best = std::numeric_limits<double>::infinity();
    for (std::uint64_t idx = 0; idx < (1ull << n_bit); ++idx) {
        sfma::BinaryVector x(static_cast<std::size_t>(n_bit));
        for (int i = 0; i < n_bit; ++i) x.bits[i] = (idx >> i) & 1u;
        best = std::min(best, fn(x));
    }
    return best;
}

// Running minimum by rescanning every prefix.
inline std::vector<double> running_min(const sfma::RunTrace& trace) {
    std::vector<double> values;
    for (const auto& pt : trace.initial.points) values.push_back(pt.y);
    std::vector<double> out;
    for (std::size_t a = 0; a <= trace.queries.size(); ++a) {
        std::vector<double> prefix = values;
        for (std::size_t i = 0; i < a; ++i)
            prefix.push_back(trace.queries[i].y);
        out.push_back(*std::min_element(prefix.begin(), prefix.end()));
    }
    return out;
}

// Success numerators by a per-sample scan with string-rounded comparison.
inline std::vector<long long> success_numerators(
    const sfma::TraceEnsemble& ensemble) {
    const std::size_t len = ensemble.traces[0].queries.size() + 1;
    std::vector<long long> out(len, 0);
    for (const auto& t : ensemble.traces) {
        const auto rm = naive::running_min(t);
        for (std::size_t a = 0; a < len; ++a)
            if (sfma::round17_key(rm[a]) == sfma::round17_key(ensemble.y_star))
                ++out[a];
    }
    return out;
}

// Literal transcription of the convergence-count definition: the set of
// rates at least one half, its minimum, and the first index attaining it.
inline std::optional<int> n_conv(const std::vector<sfma::Rational>& rates) {
    std::optional<sfma::Rational> s_min;
    for (const auto& r : rates)
        if (2 * r.num >= r.den && (!s_min || r < *s_min)) s_min = r;
    if (!s_min) return std::nullopt;
    for (std::size_t i = 0; i < rates.size(); ++i)
        if (rates[i] == *s_min) return static_cast<int>(i + 1);
    return std::nullopt;
}

// Frequency accounting re-derived from scratch.
inline std::map<std::string, double> frequency_table(
    const std::map<std::string,
                   std::map<std::string, std::optional<sfma::Rational>>>& table,
    bool smaller_better) {
    std::map<std::string, double> freq;
    for (const auto& [inst, algs] : table)
        for (const auto& [alg, v] : algs) freq.emplace(alg, 0.0);
    for (const auto& [inst, algs] : table) {
        std::vector<std::pair<std::string, sfma::Rational>> eligible;
        for (const auto& [alg, v] : algs) {
            if (!v) continue;
            if (!smaller_better && v->num == 0) continue;
            eligible.emplace_back(alg, *v);
        }
        if (eligible.empty()) continue;
        sfma::Rational best = eligible[0].second;
        for (const auto& [alg, v] : eligible)
            if (smaller_better ? v < best : best < v) best = v;
        std::vector<std::string> winners;
        for (const auto& [alg, v] : eligible)
            if (v == best) winners.push_back(alg);
        for (const auto& w : winners) freq[w] += 1.0 / winners.size();
    }
    return freq;
}

}  // namespace naive
