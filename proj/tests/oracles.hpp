#pragma once

// Reference implementations used only by tests. Everything here is written
// the slow, obvious way: plain loops and full joint enumeration. None of it
// shares code with src/, so agreement between the two is evidence.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <vector>

#include "adbn/rbm.hpp"

namespace oracle {

using adbn::ParamDelta;
using adbn::RbmParams;

inline double energy_loops(const RbmParams& p, const Eigen::VectorXd& v, const Eigen::VectorXd& h) {
    double e = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) e -= p.visible_bias[i] * v[i];
    for (Eigen::Index j = 0; j < h.size(); ++j) e -= p.hidden_bias[j] * h[j];
    for (Eigen::Index i = 0; i < v.size(); ++i)
        for (Eigen::Index j = 0; j < h.size(); ++j) e -= v[i] * p.weights(i, j) * h[j];
    return e;
}

inline std::vector<Eigen::VectorXd> all_bit_vectors(Eigen::Index n) {
    std::vector<Eigen::VectorXd> out;
    out.reserve(std::size_t{1} << n);
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = static_cast<double>((mask >> i) & 1u);
        out.push_back(std::move(v));
    }
    return out;
}

// log Z by enumerating every joint (v, h) state; max-shifted direct sum.
inline double log_partition_joint(const RbmParams& p) {
    std::vector<double> neg_energies;
    for (const Eigen::VectorXd& v : all_bit_vectors(p.visible_size()))
        for (const Eigen::VectorXd& h : all_bit_vectors(p.hidden_size()))
            neg_energies.push_back(-energy_loops(p, v, h));
    double top = neg_energies.front();
    for (double x : neg_energies) top = std::max(top, x);
    double sum = 0.0;
    for (double x : neg_energies) sum += std::exp(x - top);
    return top + std::log(sum);
}

inline double joint_probability(const RbmParams& p, const Eigen::VectorXd& v,
                                const Eigen::VectorXd& h) {
    return std::exp(-energy_loops(p, v, h) - log_partition_joint(p));
}

// p(v) = sum_h p(v, h).
inline double marginal_v(const RbmParams& p, const Eigen::VectorXd& v) {
    double sum = 0.0;
    for (const Eigen::VectorXd& h : all_bit_vectors(p.hidden_size()))
        sum += joint_probability(p, v, h);
    return sum;
}

// p(h_j = 1 | v) from the joint: mass of states with h_j = 1, normalized.
inline double hidden_conditional_joint(const RbmParams& p, const Eigen::VectorXd& v,
                                       Eigen::Index j) {
    double on = 0.0;
    double all = 0.0;
    for (const Eigen::VectorXd& h : all_bit_vectors(p.hidden_size())) {
        const double mass = std::exp(-energy_loops(p, v, h));
        all += mass;
        if (h[j] == 1.0) on += mass;
    }
    return on / all;
}

inline double visible_conditional_joint(const RbmParams& p, const Eigen::VectorXd& h,
                                        Eigen::Index i) {
    double on = 0.0;
    double all = 0.0;
    for (const Eigen::VectorXd& v : all_bit_vectors(p.visible_size())) {
        const double mass = std::exp(-energy_loops(p, v, h));
        all += mass;
        if (v[i] == 1.0) on += mass;
    }
    return on / all;
}

inline double loglik(const RbmParams& p, const std::vector<Eigen::VectorXd>& dataset) {
    double total = 0.0;
    for (const Eigen::VectorXd& v : dataset) total += std::log(marginal_v(p, v));
    return total;
}

// Central finite differences of loglik over every coordinate of (b, c, W).
inline ParamDelta finite_diff_gradient(const RbmParams& params,
                                       const std::vector<Eigen::VectorXd>& dataset, double step) {
    ParamDelta grad = ParamDelta::zeros(params.visible_size(), params.hidden_size());
    RbmParams probe = params;
    const auto central = [&](double& coord, double base) {
        coord = base + step;
        const double up = loglik(probe, dataset);
        coord = base - step;
        const double down = loglik(probe, dataset);
        coord = base;
        return (up - down) / (2.0 * step);
    };
    for (Eigen::Index i = 0; i < params.visible_size(); ++i)
        grad.visible_bias[i] = central(probe.visible_bias[i], params.visible_bias[i]);
    for (Eigen::Index j = 0; j < params.hidden_size(); ++j)
        grad.hidden_bias[j] = central(probe.hidden_bias[j], params.hidden_bias[j]);
    for (Eigen::Index j = 0; j < params.hidden_size(); ++j)
        for (Eigen::Index i = 0; i < params.visible_size(); ++i)
            grad.weights(i, j) = central(probe.weights(i, j), params.weights(i, j));
    return grad;
}

// ---------------------------------------------------------------------------
// Dataset-level baselines
// ---------------------------------------------------------------------------

// Plain logistic regression by full-batch gradient descent; returns training
// accuracy. Certifies that a dataset is linearly separable enough for a
// one-layer model to be a fair expectation.
inline double logistic_regression_accuracy(const std::vector<Eigen::VectorXd>& features,
                                           const std::vector<int>& labels, int epochs,
                                           double learning_rate) {
    const Eigen::Index dim = features.front().size();
    Eigen::VectorXd w = Eigen::VectorXd::Zero(dim);
    double b = 0.0;
    const double n = static_cast<double>(features.size());
    for (int epoch = 0; epoch < epochs; ++epoch) {
        Eigen::VectorXd grad_w = Eigen::VectorXd::Zero(dim);
        double grad_b = 0.0;
        for (std::size_t i = 0; i < features.size(); ++i) {
            const double p = adbn::sigmoid(w.dot(features[i]) + b);
            const double err = p - static_cast<double>(labels[i]);
            grad_w += err * features[i];
            grad_b += err;
        }
        w -= learning_rate / n * grad_w;
        b -= learning_rate / n * grad_b;
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < features.size(); ++i) {
        const int predicted = w.dot(features[i]) + b > 0.0 ? 1 : 0;
        if (predicted == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / n;
}

// Count-the-dark-pixels baseline: picks a darkness cutoff and a count split
// on the train features (values in [0, 1], label 1 = cracked), reports test
// accuracy. A floor on how learnable the synthetic crack data must be.
inline double darkest_pixel_baseline(const std::vector<Eigen::VectorXd>& train_features,
                                     const std::vector<int>& train_labels,
                                     const std::vector<Eigen::VectorXd>& test_features,
                                     const std::vector<int>& test_labels) {
    const auto dark_count = [](const Eigen::VectorXd& x, double cutoff) {
        int count = 0;
        for (Eigen::Index i = 0; i < x.size(); ++i)
            if (x[i] < cutoff) ++count;
        return count;
    };
    double best_cutoff = 0.0;
    int best_split = 0;
    std::size_t best_correct = 0;
    for (int c = 1; c <= 12; ++c) {
        const double cutoff = 0.05 * c;
        std::vector<int> counts(train_features.size());
        int max_count = 0;
        for (std::size_t i = 0; i < train_features.size(); ++i) {
            counts[i] = dark_count(train_features[i], cutoff);
            max_count = std::max(max_count, counts[i]);
        }
        for (int split = 0; split <= max_count; ++split) {
            std::size_t correct = 0;
            for (std::size_t i = 0; i < train_features.size(); ++i) {
                const int predicted = counts[i] > split ? 1 : 0;
                if (predicted == train_labels[i]) ++correct;
            }
            if (correct > best_correct) {
                best_correct = correct;
                best_cutoff = cutoff;
                best_split = split;
            }
        }
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test_features.size(); ++i) {
        const int predicted = dark_count(test_features[i], best_cutoff) > best_split ? 1 : 0;
        if (predicted == test_labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(test_features.size());
}

}  // namespace oracle
