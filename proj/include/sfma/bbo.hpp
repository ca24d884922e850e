#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sfma/annealer.hpp"
#include "sfma/dataset.hpp"
#include "sfma/fm.hpp"
#include "sfma/problem.hpp"
#include "sfma/rng.hpp"
#include "sfma/training.hpp"

namespace sfma {

/// Ensemble mean and population variance of the objective, drawn from the
/// current dataset; the basis of target standardization.
struct StandardizationStats {
    double y_bar = 0.0;
    double var_y = 0.0;
    int n_g = 1;
};

enum class Mode { FMA, SFMA, RS };

inline std::string mode_name(Mode m) {
    switch (m) {
        case Mode::FMA: return "FMA";
        case Mode::SFMA: return "SFMA";
        case Mode::RS: return "RS";
    }
    return "?";
}

struct StrategyConfig {
    Mode mode = Mode::SFMA;
    bool standardize = true;
    double ratio_r = 0.4;  // subsample ratio, SFMA only
    int n_ite = 1;
    int k = 1;
    int n_g = 1;  // ensemble size for standardization stats
    TrainConfig train;
    AnnealConfig anneal;
};

inline void check_strategy_config(const StrategyConfig& c) {
    if (c.n_ite < 1)
        throw std::invalid_argument("StrategyConfig: n_ite must be >= 1");
    if (c.mode == Mode::RS) return;
    if (c.mode == Mode::SFMA && !(c.ratio_r > 0.0 && c.ratio_r < 1.0))
        throw std::invalid_argument(
            "StrategyConfig: ratio_r must lie in (0, 1)");
    if (c.k < 1) throw std::invalid_argument("StrategyConfig: k must be >= 1");
    if (c.n_g < 1)
        throw std::invalid_argument("StrategyConfig: n_g must be >= 1");
    check_train_config(c.train);
    check_anneal_config(c.anneal);
}

/// Record of one seeded run: the initial dataset snapshot plus every point
/// the loop queried, in order. Standardized runs also keep the per-loop
/// ensemble stats so the rescaling each surrogate saw can be audited.
struct RunTrace {
    Dataset initial;
    std::vector<DataPoint> queries;
    std::vector<std::optional<StandardizationStats>> loop_stats;  // per query
    std::uint64_t seed = 0;
    StrategyConfig config;
    std::optional<StrategyConfig> phase2;  // set by two-phase runs
};

/// Wraps any failure inside a BBO run with the loop index that failed.
class BboRunError : public std::runtime_error {
public:
    BboRunError(int loop_index, const std::string& what)
        : std::runtime_error("bbo loop " + std::to_string(loop_index) +
                             " failed: " + what),
          loop_index_(loop_index) {}
    int loop_index() const { return loop_index_; }

private:
    int loop_index_;
};

/// Draws n0 distinct inputs uniformly (stream "d0") and evaluates the
/// black box on each.
inline Dataset gen_initial_dataset(const BlackBoxFunction& problem, int n0,
                                   std::uint64_t seed) {
    if (n0 < 1)
        throw std::invalid_argument("gen_initial_dataset: n0 must be >= 1");
    const std::uint64_t space =
        problem.n_bit < 63 ? (1ull << problem.n_bit)
                           : std::numeric_limits<std::uint64_t>::max();
    if (static_cast<std::uint64_t>(n0) > space)
        throw std::invalid_argument(
            "gen_initial_dataset: n0 = " + std::to_string(n0) +
            " exceeds the solution space of size 2^" +
            std::to_string(problem.n_bit));

    Rng rng(derive_seed(seed, "d0"));
    std::set<std::vector<std::uint8_t>> seen;
    Dataset data;
    while (data.size() < static_cast<std::size_t>(n0)) {
        BinaryVector x(static_cast<std::size_t>(problem.n_bit));
        for (int i = 0; i < problem.n_bit; ++i)
            x.bits[i] = static_cast<std::uint8_t>(rng.bit());
        if (!seen.insert(x.bits).second) continue;  // redraw duplicates
        const double y = problem.fn(x);
        data.points.push_back(DataPoint{std::move(x), y});
    }
    return data;
}

/// Uniform sample of floor(ratio_r * |data|) points WITH replacement
/// (stream "subsample"/loop_index). A floor of zero is clamped up to one
/// point so tiny datasets with small ratios still yield a training set.
inline Dataset subsample(const Dataset& data, double ratio_r,
                         std::uint64_t seed, int loop_index) {
    if (data.empty()) throw std::invalid_argument("subsample: empty dataset");
    if (!(ratio_r > 0.0 && ratio_r < 1.0))
        throw std::invalid_argument("subsample: ratio_r must lie in (0, 1)");
    std::size_t size = static_cast<std::size_t>(
        std::floor(ratio_r * static_cast<double>(data.size())));
    if (size == 0) size = 1;

    Rng rng(derive_seed(seed, "subsample", static_cast<std::uint64_t>(loop_index)));
    Dataset out;
    out.points.reserve(size);
    for (std::size_t i = 0; i < size; ++i)
        out.points.push_back(data.points[rng.below(data.size())]);
    return out;
}

/// Draws n_g points WITH replacement (stream "ensemble"/loop_index) and
/// returns their mean and population variance.
inline StandardizationStats compute_standardization(const Dataset& data,
                                                    int n_g,
                                                    std::uint64_t seed,
                                                    int loop_index) {
    if (data.empty())
        throw std::invalid_argument("compute_standardization: empty dataset");
    if (n_g < 1)
        throw std::invalid_argument("compute_standardization: n_g must be >= 1");

    Rng rng(derive_seed(seed, "ensemble", static_cast<std::uint64_t>(loop_index)));
    std::vector<double> ys;
    ys.reserve(n_g);
    for (int i = 0; i < n_g; ++i)
        ys.push_back(data.points[rng.below(data.size())].y);

    double mean = 0.0;
    for (double y : ys) mean += y;
    mean /= static_cast<double>(n_g);
    double var = 0.0;
    for (double y : ys) var += (y - mean) * (y - mean);
    var /= static_cast<double>(n_g);
    return StandardizationStats{mean, var, n_g};
}

inline constexpr double kDegenerateVariance = 1e-24;

/// (y - y_bar) / (sqrt(var_y) * n_bit); degenerate variance falls back to
/// centering only.
inline double standardize_y(double y, const StandardizationStats& stats,
                            int n_bit) {
    if (stats.var_y < kDegenerateVariance) return y - stats.y_bar;
    return (y - stats.y_bar) / (std::sqrt(stats.var_y) * n_bit);
}

namespace detail {

// One surrogate-train-anneal-evaluate step on `data`; appends the queried
// point to both `data` and `trace`. `loop_index` selects the per-loop RNG
// streams; subsampling applies from loop 1 onward for SFMA.
inline void run_single_loop(const BlackBoxFunction& problem,
                            const StrategyConfig& cfg, std::uint64_t seed,
                            int loop_index, Dataset& data, RunTrace& trace,
                            const Sampler& sampler) {
    try {
        Dataset batch = (cfg.mode == Mode::SFMA && loop_index > 0)
                            ? subsample(data, cfg.ratio_r, seed, loop_index)
                            : data;
        double init_std = 1.0;
        std::optional<StandardizationStats> stats;
        if (cfg.standardize) {
            stats = compute_standardization(data, cfg.n_g, seed, loop_index);
            for (auto& pt : batch.points)
                pt.y = standardize_y(pt.y, *stats, problem.n_bit);
            // Parameters are rescaled like the targets: the ensemble
            // variance of the standardized values is 1/n_bit^2 whenever the
            // raw variance is nondegenerate.
            init_std = stats->var_y < kDegenerateVariance
                           ? 0.0
                           : 1.0 / problem.n_bit;
        }
        const FmParams params = train_fm(
            batch, problem.n_bit, cfg.k, init_std, cfg.train,
            derive_seed(seed, "train", static_cast<std::uint64_t>(loop_index)));
        const QuboMatrix q = fm_to_qubo(params);
        const ReadSet reads = sampler(
            q, cfg.anneal,
            derive_seed(seed, "anneal", static_cast<std::uint64_t>(loop_index)));
        BinaryVector xq = best_read(reads, params);
        const double yq = problem.fn(xq);
        data.points.push_back(DataPoint{xq, yq});
        trace.queries.push_back(DataPoint{std::move(xq), yq});
        trace.loop_stats.push_back(stats);
    } catch (const BboRunError&) {
        throw;
    } catch (const std::exception& e) {
        throw BboRunError(loop_index, e.what());
    }
}

}  // namespace detail

/// Random-search baseline: the same initial dataset as the optimizers
/// (shared "d0" stream), then n_ite uniformly random queries (stream "rs",
/// duplicates allowed).
inline RunTrace run_random_search(const BlackBoxFunction& problem, int n_ite,
                                  std::uint64_t seed) {
    if (n_ite < 0)
        throw std::invalid_argument("run_random_search: n_ite must be >= 0");
    RunTrace trace;
    trace.seed = seed;
    trace.config.mode = Mode::RS;
    trace.config.standardize = false;
    trace.config.n_ite = n_ite;
    trace.initial = gen_initial_dataset(problem, problem.n_bit, seed);

    Rng rng(derive_seed(seed, "rs"));
    for (int i = 0; i < n_ite; ++i) {
        BinaryVector x(static_cast<std::size_t>(problem.n_bit));
        for (int b = 0; b < problem.n_bit; ++b)
            x.bits[b] = static_cast<std::uint8_t>(rng.bit());
        const double y = problem.fn(x);
        trace.queries.push_back(DataPoint{std::move(x), y});
        trace.loop_stats.push_back(std::nullopt);
    }
    return trace;
}

/// Runs one full optimization: generate D_0 (n0 = n_bit), one full-dataset
/// loop to form D_1, then n_ite - 1 further loops which subsample first when
/// the mode is SFMA. Exactly n_ite black-box evaluations happen beyond D_0.
inline RunTrace run_bbo(const BlackBoxFunction& problem,
                        const StrategyConfig& cfg, std::uint64_t seed,
                        const Sampler& sampler = simulated_annealing_sampler()) {
    check_strategy_config(cfg);
    if (cfg.mode == Mode::RS) {
        RunTrace trace = run_random_search(problem, cfg.n_ite, seed);
        trace.config = cfg;
        return trace;
    }

    RunTrace trace;
    trace.seed = seed;
    trace.config = cfg;
    Dataset data = gen_initial_dataset(problem, problem.n_bit, seed);
    trace.initial = data;
    for (int a = 0; a < cfg.n_ite; ++a)
        detail::run_single_loop(problem, cfg, seed, a, data, trace, sampler);
    return trace;
}

/// Two-phase run: phase1 executes like run_bbo, then phase2 continues on the
/// accumulated dataset with its own ratio and loop count (no fresh initial
/// dataset, no full-dataset loop). Loop-stream indices keep counting across
/// the phase boundary.
inline RunTrace run_isfma2(const BlackBoxFunction& problem,
                           const StrategyConfig& phase1,
                           const StrategyConfig& phase2, std::uint64_t seed,
                           const Sampler& sampler = simulated_annealing_sampler()) {
    if (phase1.mode != Mode::SFMA || phase2.mode != Mode::SFMA)
        throw std::invalid_argument("run_isfma2: both phases must be SFMA");
    if (phase2.n_ite < 0)
        throw std::invalid_argument("run_isfma2: phase2.n_ite must be >= 0");
    if (phase2.n_ite == 0) return run_bbo(problem, phase1, seed, sampler);
    check_strategy_config(phase2);

    RunTrace trace = run_bbo(problem, phase1, seed, sampler);
    Dataset data = trace.initial;
    data.points.insert(data.points.end(), trace.queries.begin(),
                       trace.queries.end());
    for (int a = 0; a < phase2.n_ite; ++a)
        detail::run_single_loop(problem, phase2, seed, phase1.n_ite + a, data,
                                trace, sampler);
    trace.phase2 = phase2;
    return trace;
}

}  // namespace sfma
