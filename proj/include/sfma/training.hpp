#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sfma/dataset.hpp"
#include "sfma/fm.hpp"

namespace sfma {

struct TrainConfig {
    double learning_rate = 0.01;
    int n_epochs = 200;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
};

inline void check_train_config(const TrainConfig& c) {
    if (!(c.learning_rate > 0.0))
        throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (c.n_epochs < 1)
        throw std::invalid_argument("TrainConfig: n_epochs must be >= 1");
    if (!(c.adam_beta1 >= 0.0 && c.adam_beta1 < 1.0) ||
        !(c.adam_beta2 >= 0.0 && c.adam_beta2 < 1.0))
        throw std::invalid_argument("TrainConfig: betas must lie in [0, 1)");
    if (!(c.adam_eps > 0.0))
        throw std::invalid_argument("TrainConfig: eps must be > 0");
}

/// Gradient of the FM value at one input, with the same shapes as FmParams.
struct GradVector {
    double d_w0 = 0.0;
    std::vector<double> d_w;
    std::vector<double> d_v;  // row-major n_bit x k
};

/// Closed-form gradient of fm_eval:
///   df/dw0 = 1,  df/dw_i = x_i,  df/dv_il = x_i (sum_j v_jl x_j - v_il x_i).
inline GradVector fm_gradient(const FmParams& p, const BinaryVector& x) {
    if (static_cast<int>(x.size()) != p.n_bit())
        throw std::invalid_argument("fm_gradient: expected " +
                                    std::to_string(p.n_bit()) +
                                    " bits, got " + std::to_string(x.size()));
    GradVector g;
    g.d_w0 = 1.0;
    g.d_w.assign(p.w.size(), 0.0);
    g.d_v.assign(p.v.size(), 0.0);
    for (int i = 0; i < p.n_bit(); ++i) g.d_w[i] = x.bits[i] ? 1.0 : 0.0;

    for (int l = 0; l < p.k; ++l) {
        double s = 0.0;
        for (int i = 0; i < p.n_bit(); ++i)
            if (x.bits[i]) s += p.v_at(i, l);
        for (int i = 0; i < p.n_bit(); ++i)
            if (x.bits[i])
                g.d_v[static_cast<std::size_t>(i) * p.k + l] = s - p.v_at(i, l);
    }
    return g;
}

/// Mean squared error of the FM over a dataset.
inline double mse_loss(const FmParams& p, const Dataset& data) {
    if (data.empty()) throw std::invalid_argument("mse_loss: empty dataset");
    double acc = 0.0;
    for (const auto& pt : data.points) {
        const double r = fm_eval(p, pt.x) - pt.y;
        acc += r * r;
    }
    return acc / static_cast<double>(data.size());
}

/// Thrown when the training loss stops being finite.
class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(int epoch)
        : std::runtime_error("training diverged: non-finite loss at epoch " +
                             std::to_string(epoch)),
          epoch_(epoch) {}
    int epoch() const { return epoch_; }

private:
    int epoch_;
};

/// Full-batch Adam on the MSE of the FM. Initialization comes from
/// init_params(n_bit, k, init_std, seed); gradients are accumulated in data
/// order so the result is bit-reproducible for fixed inputs.
inline FmParams train_fm(const Dataset& data, int n_bit, int k,
                         double init_std, const TrainConfig& cfg,
                         std::uint64_t seed) {
    if (data.empty()) throw std::invalid_argument("train_fm: empty dataset");
    check_train_config(cfg);
    for (const auto& pt : data.points)
        if (static_cast<int>(pt.x.size()) != n_bit)
            throw std::invalid_argument("train_fm: data point width mismatch");

    FmParams p = init_params(n_bit, k, init_std, seed);
    const std::size_t n_params = 1 + p.w.size() + p.v.size();
    std::vector<double> m(n_params, 0.0), v2(n_params, 0.0);
    std::vector<double> grad(n_params, 0.0);
    std::vector<double> s(static_cast<std::size_t>(k), 0.0);
    std::vector<double> s2(static_cast<std::size_t>(k), 0.0);

    // set-bit indices per point, hoisted out of the epoch loop
    std::vector<std::vector<int>> active(data.size());
    for (std::size_t n = 0; n < data.size(); ++n)
        for (int i = 0; i < n_bit; ++i)
            if (data.points[n].x.bits[i]) active[n].push_back(i);

    const double inv_n = 1.0 / static_cast<double>(data.size());
    for (int epoch = 1; epoch <= cfg.n_epochs; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double loss = 0.0;
        for (std::size_t n = 0; n < data.size(); ++n) {
            // forward pass, reusing the per-factor sums for the gradient
            double linear = 0.0;
            std::fill(s.begin(), s.end(), 0.0);
            std::fill(s2.begin(), s2.end(), 0.0);
            for (int i : active[n]) {
                linear += p.w[i];
                const double* vrow =
                    p.v.data() + static_cast<std::size_t>(i) * k;
                for (int l = 0; l < k; ++l) {
                    s[l] += vrow[l];
                    s2[l] += vrow[l] * vrow[l];
                }
            }
            double pair = 0.0;
            for (int l = 0; l < k; ++l) pair += s[l] * s[l] - s2[l];
            const double f = p.w0 + linear + 0.5 * pair;
            const double r = f - data.points[n].y;
            loss += r * r;

            const double c = 2.0 * r * inv_n;
            grad[0] += c;
            double* gv = grad.data() + 1 + n_bit;
            for (int i : active[n]) {
                grad[1 + i] += c;
                const double* vrow =
                    p.v.data() + static_cast<std::size_t>(i) * k;
                double* grow = gv + static_cast<std::size_t>(i) * k;
                for (int l = 0; l < k; ++l) grow[l] += c * (s[l] - vrow[l]);
            }
        }
        loss *= inv_n;
        if (!std::isfinite(loss)) throw TrainingDiverged(epoch);

        const double bc1 = 1.0 - std::pow(cfg.adam_beta1, epoch);
        const double bc2 = 1.0 - std::pow(cfg.adam_beta2, epoch);
        auto step = [&](double& theta, std::size_t idx) {
            m[idx] = cfg.adam_beta1 * m[idx] + (1.0 - cfg.adam_beta1) * grad[idx];
            v2[idx] = cfg.adam_beta2 * v2[idx] +
                      (1.0 - cfg.adam_beta2) * grad[idx] * grad[idx];
            const double mhat = m[idx] / bc1;
            const double vhat = v2[idx] / bc2;
            theta -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
        };
        step(p.w0, 0);
        for (int i = 0; i < n_bit; ++i) step(p.w[i], 1 + i);
        for (std::size_t j = 0; j < p.v.size(); ++j)
            step(p.v[j], 1 + static_cast<std::size_t>(n_bit) + j);
    }
    return p;
}

}  // namespace sfma
