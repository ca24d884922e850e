#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sfma/problem.hpp"
#include "sfma/rng.hpp"

namespace sfma {

/// Factorization Machine parameter set: bias w0, linear weights w, and the
/// latent factor matrix v (n_bit rows, k columns, stored row-major). The
/// pairwise interaction between bits i and j has weight sum_l v(i,l)*v(j,l).
struct FmParams {
    double w0 = 0.0;
    std::vector<double> w;
    std::vector<double> v;  // row-major n_bit x k
    int k = 0;

    int n_bit() const { return static_cast<int>(w.size()); }
    double v_at(int i, int l) const { return v[static_cast<std::size_t>(i) * k + l]; }
    double& v_at(int i, int l) { return v[static_cast<std::size_t>(i) * k + l]; }
};

inline void check_fm_shapes(const FmParams& p) {
    if (p.k < 1) throw std::invalid_argument("FmParams: k must be >= 1");
    if (p.v.size() != p.w.size() * static_cast<std::size_t>(p.k))
        throw std::invalid_argument("FmParams: v must be n_bit x k");
}

/// Upper-triangular QUBO coefficients plus a constant offset. The offset
/// carries the FM bias so surrogate values and annealer energies reconcile
/// exactly; annealing itself never reads it.
class QuboMatrix {
public:
    QuboMatrix() = default;
    explicit QuboMatrix(int n_bit, double offset = 0.0)
        : n_bit_(n_bit),
          offset_(offset),
          q_(static_cast<std::size_t>(n_bit) * (n_bit + 1) / 2, 0.0) {
        if (n_bit < 1)
            throw std::invalid_argument("QuboMatrix: n_bit must be >= 1");
    }

    int n_bit() const { return n_bit_; }
    double offset() const { return offset_; }
    void set_offset(double o) { offset_ = o; }

    // Coefficient of x_i * x_j, defined for 0 <= i <= j < n_bit.
    double at(int i, int j) const { return q_[index(i, j)]; }
    void set(int i, int j, double value) { q_[index(i, j)] = value; }

    const std::vector<double>& coefficients() const { return q_; }

private:
    std::size_t index(int i, int j) const {
        if (i < 0 || j < i || j >= n_bit_)
            throw std::out_of_range("QuboMatrix: index (" + std::to_string(i) +
                                    "," + std::to_string(j) + ")");
        // row-major packed upper triangle
        const std::size_t ii = static_cast<std::size_t>(i);
        return ii * n_bit_ - ii * (ii - 1) / 2 + (j - i);
    }

    int n_bit_ = 0;
    double offset_ = 0.0;
    std::vector<double> q_;
};

/// FM value w0 + sum_i w_i x_i + sum_{i<j} (sum_l v_il v_jl) x_i x_j,
/// computed in O(n_bit * k) via the squared-sums identity.
inline double fm_eval(const FmParams& p, const BinaryVector& x) {
    if (static_cast<int>(x.size()) != p.n_bit())
        throw std::invalid_argument("fm_eval: expected " +
                                    std::to_string(p.n_bit()) + " bits, got " +
                                    std::to_string(x.size()));
    double linear = 0.0;
    for (int i = 0; i < p.n_bit(); ++i)
        if (x.bits[i]) linear += p.w[i];

    double pair = 0.0;
    for (int l = 0; l < p.k; ++l) {
        double s = 0.0, s2 = 0.0;
        for (int i = 0; i < p.n_bit(); ++i) {
            if (!x.bits[i]) continue;
            const double vil = p.v_at(i, l);
            s += vil;
            s2 += vil * vil;
        }
        pair += s * s - s2;
    }
    return p.w0 + linear + 0.5 * pair;
}

/// Lowers FM parameters to QUBO: Q_ii = w_i, Q_ij = sum_l v_il v_jl (i < j),
/// offset = w0.
inline QuboMatrix fm_to_qubo(const FmParams& p) {
    check_fm_shapes(p);
    QuboMatrix q(p.n_bit(), p.w0);
    for (int i = 0; i < p.n_bit(); ++i) {
        q.set(i, i, p.w[i]);
        for (int j = i + 1; j < p.n_bit(); ++j) {
            double s = 0.0;
            for (int l = 0; l < p.k; ++l) s += p.v_at(i, l) * p.v_at(j, l);
            q.set(i, j, s);
        }
    }
    return q;
}

/// sum_{i<=j} Q_ij x_i x_j; the offset is not included.
inline double qubo_eval(const QuboMatrix& q, const BinaryVector& x) {
    if (static_cast<int>(x.size()) != q.n_bit())
        throw std::invalid_argument("qubo_eval: expected " +
                                    std::to_string(q.n_bit()) + " bits, got " +
                                    std::to_string(x.size()));
    double e = 0.0;
    for (int i = 0; i < q.n_bit(); ++i) {
        if (!x.bits[i]) continue;
        e += q.at(i, i);
        for (int j = i + 1; j < q.n_bit(); ++j)
            if (x.bits[j]) e += q.at(i, j);
    }
    return e;
}

/// Draws every FM parameter i.i.d. normal(0, std_dev^2) from the "fm-init"
/// stream of `seed`. Fill order: w0, w, then v row-major. std_dev = 0 gives
/// exact zeros without consuming randomness.
inline FmParams init_params(int n_bit, int k, double std_dev,
                            std::uint64_t seed) {
    if (n_bit < 1) throw std::invalid_argument("init_params: n_bit must be >= 1");
    if (k < 1) throw std::invalid_argument("init_params: k must be >= 1");
    if (!(std_dev >= 0.0))
        throw std::invalid_argument("init_params: std_dev must be >= 0");

    FmParams p;
    p.k = k;
    p.w.assign(static_cast<std::size_t>(n_bit), 0.0);
    p.v.assign(static_cast<std::size_t>(n_bit) * k, 0.0);
    if (std_dev == 0.0) return p;

    Rng rng(derive_seed(seed, "fm-init"));
    p.w0 = rng.normal(0.0, std_dev);
    for (auto& wi : p.w) wi = rng.normal(0.0, std_dev);
    for (auto& vil : p.v) vil = rng.normal(0.0, std_dev);
    return p;
}

}  // namespace sfma
