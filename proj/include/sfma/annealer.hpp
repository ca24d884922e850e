#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sfma/fm.hpp"
#include "sfma/rng.hpp"

namespace sfma {

struct AnnealConfig {
    int n_reads = 10;
    int n_sweeps = 100;
    std::optional<double> beta_hot;
    std::optional<double> beta_cold;
};

inline void check_anneal_config(const AnnealConfig& c) {
    if (c.n_reads < 1)
        throw std::invalid_argument("AnnealConfig: n_reads must be >= 1");
    if (c.n_sweeps < 1)
        throw std::invalid_argument("AnnealConfig: n_sweeps must be >= 1");
    if (c.beta_hot && c.beta_cold && !(*c.beta_hot < *c.beta_cold))
        throw std::invalid_argument(
            "AnnealConfig: beta_hot must be < beta_cold");
    if ((c.beta_hot && !(*c.beta_hot > 0.0)) ||
        (c.beta_cold && !(*c.beta_cold > 0.0)))
        throw std::invalid_argument("AnnealConfig: betas must be > 0");
}

struct Read {
    BinaryVector x;
    double energy = 0.0;
};

/// All candidate solutions returned by one sampler call, ordered by read
/// index. Each energy equals qubo_eval of its vector.
struct ReadSet {
    std::vector<Read> reads;
};

/// Inverse-temperature range for the default schedule.
///
/// The hot end is set from the largest single-flip energy change bound
///   dE_i = |Q_ii| + sum_{j != i} |Q_{min(i,j),max(i,j)}|
/// as beta_hot = ln(2)/max_i dE_i, so the worst uphill move starts with
/// acceptance probability 1/2. The cold end is beta_cold = ln(100) divided
/// by the smallest nonzero |coefficient| (floored at 1e-12), so the weakest
/// coupling ends effectively frozen. beta_cold is doubled until it exceeds
/// beta_hot. An all-zero matrix falls back to (0.1, 10.0).
inline std::pair<double, double> default_beta_range(const QuboMatrix& q) {
    const int n = q.n_bit();
    double max_flip = 0.0;
    double min_abs = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        double flip = std::abs(q.at(i, i));
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            flip += std::abs(q.at(std::min(i, j), std::max(i, j)));
        }
        max_flip = std::max(max_flip, flip);
    }
    for (double c : q.coefficients()) {
        const double a = std::abs(c);
        if (a > 0.0) min_abs = std::min(min_abs, a);
    }
    if (max_flip == 0.0) return {0.1, 10.0};

    double beta_hot = std::log(2.0) / max_flip;
    double beta_cold = std::log(100.0) / std::max(min_abs, 1e-12);
    while (!(beta_hot < beta_cold)) beta_cold *= 2.0;
    return {beta_hot, beta_cold};
}

/// Single-flip Metropolis simulated annealing over a QUBO.
///
/// Each read is an independent restart on its own derived RNG stream:
/// the state starts uniformly random, every sweep proposes one flip per bit
/// in index order, and the inverse temperature follows a geometric ramp
/// from beta_hot to beta_cold across sweeps. Flip energies are computed
/// incrementally in O(n_bit). A read returns the lowest-energy state it
/// visited, so a late uphill acceptance cannot discard an already-found
/// minimum. Deterministic for fixed (q, cfg, seed).
inline ReadSet simulated_annealing(const QuboMatrix& q,
                                   const AnnealConfig& cfg,
                                   std::uint64_t seed) {
    check_anneal_config(cfg);
    const int n = q.n_bit();

    double beta_hot, beta_cold;
    if (cfg.beta_hot && cfg.beta_cold) {
        beta_hot = *cfg.beta_hot;
        beta_cold = *cfg.beta_cold;
    } else {
        std::tie(beta_hot, beta_cold) = default_beta_range(q);
    }

    ReadSet out;
    out.reads.reserve(cfg.n_reads);
    const double ratio = beta_cold / beta_hot;
    for (int r = 0; r < cfg.n_reads; ++r) {
        Rng rng(derive_seed(seed, "sa", static_cast<std::uint64_t>(r)));
        BinaryVector x(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) x.bits[i] = static_cast<std::uint8_t>(rng.bit());
        double energy = qubo_eval(q, x);
        BinaryVector best_x = x;
        double best_energy = energy;

        for (int s = 0; s < cfg.n_sweeps; ++s) {
            const double t = cfg.n_sweeps > 1
                                 ? static_cast<double>(s) / (cfg.n_sweeps - 1)
                                 : 1.0;
            const double beta = beta_hot * std::pow(ratio, t);
            for (int i = 0; i < n; ++i) {
                double partial = q.at(i, i);
                for (int j = 0; j < i; ++j)
                    if (x.bits[j]) partial += q.at(j, i);
                for (int j = i + 1; j < n; ++j)
                    if (x.bits[j]) partial += q.at(i, j);
                const double d_e = x.bits[i] ? -partial : partial;
                bool accept = d_e <= 0.0;
                if (!accept) accept = rng.uniform01() < std::exp(-beta * d_e);
                if (accept) {
                    x.bits[i] ^= 1u;
                    energy += d_e;
                    if (energy < best_energy) {
                        best_energy = energy;
                        best_x = x;
                    }
                }
            }
        }
        out.reads.push_back(Read{std::move(best_x), best_energy});
    }
    return out;
}

/// Sampler contract: anything that maps (QUBO, config, seed) to candidate
/// reads can drive the optimization loop. Simulated annealing is the one
/// sampler shipped here; external annealers plug in through this seam.
using Sampler =
    std::function<ReadSet(const QuboMatrix&, const AnnealConfig&, std::uint64_t)>;

inline const Sampler& simulated_annealing_sampler() {
    static const Sampler s = [](const QuboMatrix& q, const AnnealConfig& cfg,
                                std::uint64_t seed) {
        return simulated_annealing(q, cfg, seed);
    };
    return s;
}

/// Picks the read whose FM value is smallest; ties go to the lowest index.
inline BinaryVector best_read(const ReadSet& reads, const FmParams& params) {
    if (reads.reads.empty())
        throw std::invalid_argument("best_read: empty read set");
    std::size_t best = 0;
    double best_value = fm_eval(params, reads.reads[0].x);
    for (std::size_t i = 1; i < reads.reads.size(); ++i) {
        const double value = fm_eval(params, reads.reads[i].x);
        if (value < best_value) {
            best_value = value;
            best = i;
        }
    }
    return reads.reads[best].x;
}

}  // namespace sfma
