#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sfma/rng.hpp"

namespace sfma {

/// Fixed-length vector over {0,1}; the solution-space point.
struct BinaryVector {
    std::vector<std::uint8_t> bits;

    BinaryVector() = default;
    explicit BinaryVector(std::size_t n) : bits(n, 0) {}
    explicit BinaryVector(std::vector<std::uint8_t> b) : bits(std::move(b)) {}

    std::size_t size() const { return bits.size(); }

    bool operator==(const BinaryVector& o) const { return bits == o.bits; }
    bool operator!=(const BinaryVector& o) const { return bits != o.bits; }
    bool operator<(const BinaryVector& o) const { return bits < o.bits; }
};

inline std::string to_bit_string(const BinaryVector& x) {
    std::string s;
    s.reserve(x.size());
    for (auto b : x.bits) s.push_back(b ? '1' : '0');
    return s;
}

inline BinaryVector from_bit_string(const std::string& s) {
    BinaryVector x;
    x.bits.reserve(s.size());
    for (char c : s) {
        if (c != '0' && c != '1')
            throw std::invalid_argument("from_bit_string: character '" +
                                        std::string(1, c) + "' is not 0/1");
        x.bits.push_back(c == '1' ? 1 : 0);
    }
    return x;
}

// Bit i of `index` becomes element i. Only meaningful for n_bit <= 64.
inline BinaryVector vector_from_index(std::uint64_t index, int n_bit) {
    BinaryVector x(static_cast<std::size_t>(n_bit));
    for (int i = 0; i < n_bit; ++i) x.bits[i] = (index >> i) & 1u;
    return x;
}

/// Real target matrix of a compression instance.
struct WMatrix {
    Eigen::MatrixXd entries;

    int rows() const { return static_cast<int>(entries.rows()); }
    int cols() const { return static_cast<int>(entries.cols()); }
};

/// Approximate a target N x D matrix W by M * C where M is N x K with
/// entries in {-1,+1} and C is real. The binary decision variable is the
/// row-major flattening of M mapped through (1+m)/2.
struct LossyCompressionProblem {
    WMatrix w;
    int k_factor = 1;

    int n_bit() const { return w.rows() * k_factor; }
};

inline LossyCompressionProblem make_lossy_problem(WMatrix w, int k_factor) {
    if (w.rows() < 1 || w.cols() < 1)
        throw std::invalid_argument("make_lossy_problem: empty target matrix");
    if (k_factor < 1 || k_factor > w.rows())
        throw std::invalid_argument(
            "make_lossy_problem: k_factor must satisfy 1 <= K <= N");
    if (!w.entries.allFinite())
        throw std::invalid_argument("make_lossy_problem: non-finite entries");
    return LossyCompressionProblem{std::move(w), k_factor};
}

/// Deterministic synthetic target: entries i.i.d. standard normal, filled
/// row-major from the "instance" stream of `seed`.
inline WMatrix make_synthetic_w(int n, int d, std::uint64_t seed) {
    if (n < 1 || d < 1)
        throw std::invalid_argument("make_synthetic_w: n and d must be >= 1");
    Rng rng(derive_seed(seed, "instance"));
    WMatrix w;
    w.entries.resize(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) w.entries(i, j) = rng.normal(0.0, 1.0);
    return w;
}

inline BinaryVector spins_to_binary(const std::vector<int>& m) {
    BinaryVector x;
    x.bits.reserve(m.size());
    for (int s : m) {
        if (s != -1 && s != 1)
            throw std::invalid_argument("spins_to_binary: entry " +
                                        std::to_string(s) +
                                        " is not a spin (+1/-1)");
        x.bits.push_back(s == 1 ? 1 : 0);
    }
    return x;
}

inline std::vector<int> binary_to_spins(const BinaryVector& x) {
    std::vector<int> m;
    m.reserve(x.size());
    for (auto b : x.bits) m.push_back(b ? 1 : -1);
    return m;
}

/// Squared Frobenius residual || W - M pinv(M) W ||^2 where M is the spin
/// matrix encoded by x (row-major, element (i,j) at bit i*K + j).
///
/// pinv is the Moore-Penrose pseudoinverse, applied through a rank-revealing
/// least-squares solve, so rank-deficient M (duplicate or opposite columns)
/// still yields a finite, well-defined projection.
///
/// The spin matrix is canonicalized (globally flipped so its first entry is
/// +1) before the solve: the projection is invariant under M -> -M, and the
/// canonical form makes the two encodings of the same subspace evaluate
/// bit-identically.
inline double eval_lossy_compression(const LossyCompressionProblem& p,
                                     const BinaryVector& x) {
    const int n = p.w.rows();
    const int k = p.k_factor;
    if (static_cast<int>(x.size()) != n * k)
        throw std::invalid_argument(
            "eval_lossy_compression: expected " + std::to_string(n * k) +
            " bits, got " + std::to_string(x.size()));

    const double flip = x.bits[0] ? 1.0 : -1.0;
    Eigen::MatrixXd m(n, k);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j)
            m(i, j) = flip * (x.bits[static_cast<std::size_t>(i) * k + j] ? 1.0 : -1.0);

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(m);
    Eigen::MatrixXd c = cod.solve(p.w.entries);  // pinv(M) * W, K x D
    return (p.w.entries - m * c).squaredNorm();
}

/// Black-box function contract: everything downstream of the problem sees
/// only point evaluations over {0,1}^n_bit.
struct BlackBoxFunction {
    int n_bit = 0;
    std::function<double(const BinaryVector&)> fn;

    double operator()(const BinaryVector& x) const { return fn(x); }
};

inline BlackBoxFunction as_black_box(const LossyCompressionProblem& p) {
    return BlackBoxFunction{p.n_bit(), [p](const BinaryVector& x) {
                                return eval_lossy_compression(p, x);
                            }};
}

/// Result of exhaustive enumeration: global minimum, the smallest value
/// strictly above it, and every argmin input.
struct OracleResult {
    std::vector<std::pair<BinaryVector, double>> best;  // all argmins, ascending
    double y_opt_1st = 0.0;
    std::optional<double> y_opt_2nd;  // absent when all values coincide
};

inline constexpr int kBruteForceMaxBits = 24;

/// Evaluates all 2^n_bit inputs of `fn`. Refuses n_bit > 24.
inline OracleResult brute_force_optima(
    const std::function<double(const BinaryVector&)>& fn, int n_bit) {
    if (n_bit < 1)
        throw std::invalid_argument("brute_force_optima: n_bit must be >= 1");
    if (n_bit > kBruteForceMaxBits)
        throw std::invalid_argument(
            "brute_force_optima: n_bit = " + std::to_string(n_bit) +
            " exceeds the limit of " + std::to_string(kBruteForceMaxBits));

    const std::uint64_t total = 1ull << n_bit;
    BinaryVector x(static_cast<std::size_t>(n_bit));
    double y1 = std::numeric_limits<double>::infinity();
    double y2 = std::numeric_limits<double>::infinity();
    std::vector<std::uint64_t> argmin;
    for (std::uint64_t idx = 0; idx < total; ++idx) {
        for (int i = 0; i < n_bit; ++i) x.bits[i] = (idx >> i) & 1u;
        const double y = fn(x);
        if (y < y1) {
            if (y1 < y2) y2 = y1;
            y1 = y;
            argmin.clear();
            argmin.push_back(idx);
        } else if (y == y1) {
            argmin.push_back(idx);
        } else if (y < y2) {
            y2 = y;
        }
    }

    OracleResult out;
    out.y_opt_1st = y1;
    if (y2 < std::numeric_limits<double>::infinity()) out.y_opt_2nd = y2;
    out.best.reserve(argmin.size());
    for (auto idx : argmin)
        out.best.emplace_back(vector_from_index(idx, n_bit), y1);
    return out;
}

inline OracleResult brute_force_optima(const BlackBoxFunction& problem) {
    return brute_force_optima(problem.fn, problem.n_bit);
}

}  // namespace sfma
