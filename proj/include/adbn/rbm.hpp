#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

#include "adbn/errors.hpp"

namespace adbn {

// All stochastic operations draw from a caller-owned generator so that a run
// is a pure function of (inputs, seed).
using Rng = std::mt19937_64;

// One RBM: visible biases b (length I), hidden biases c (length J) and the
// I x J weight matrix W. Column j of W holds the weights into hidden unit j,
// which keeps structural edits (insert/remove hidden units) column-local.
struct RbmParams {
    Eigen::VectorXd visible_bias;
    Eigen::VectorXd hidden_bias;
    Eigen::MatrixXd weights;

    Eigen::Index visible_size() const { return visible_bias.size(); }
    Eigen::Index hidden_size() const { return hidden_bias.size(); }

    static RbmParams zeros(Eigen::Index visible, Eigen::Index hidden);

    // Weights ~ N(0, weight_stddev^2), biases zero.
    static RbmParams gaussian_init(Eigen::Index visible, Eigen::Index hidden,
                                   double weight_stddev, Rng& rng);

    // Full validation: dimension agreement plus finiteness of every entry.
    // Called at construction, after structural edits and after load; per-call
    // operations below only check dimensions.
    void check_consistent() const;
};

// A joint (v, h) configuration with entries in {0, 1}.
struct BinaryState {
    Eigen::VectorXd visible;
    Eigen::VectorXd hidden;
};

struct CdConfig {
    double learning_rate = 0.1;
    int cd_steps = 1;
    int batch_size = 32;

    void validate() const;
};

// Per-group parameter change of one update step. Feeds the walking-distance
// monitor and doubles as a gradient container.
struct ParamDelta {
    Eigen::VectorXd visible_bias;
    Eigen::VectorXd hidden_bias;
    Eigen::MatrixXd weights;

    static ParamDelta zeros(Eigen::Index visible, Eigen::Index hidden);
};

struct CdStepResult {
    RbmParams params;
    ParamDelta delta;
    // Mean-field energy of the negative-phase reconstructions, averaged over
    // the batch. Consumed by the layer-generation energy criterion.
    double mean_reconstruction_energy = 0.0;
};

double sigmoid(double x);
double softplus(double x);

// E(v, h) = -b.v - c.h - v^T W h. Accepts real-valued states so mean-field
// values can be scored with the same expression.
double energy(const RbmParams& params, const Eigen::VectorXd& v, const Eigen::VectorXd& h);
double energy(const RbmParams& params, const BinaryState& state);

// Exact enumeration is only allowed on models this small.
inline constexpr Eigen::Index kEnumerationGuard = 24;

// log Z with Z summed over all 2^(I+J) joint states. The hidden layer is
// marginalised analytically and the visible sum runs in log domain, so the
// value is exact but never overflows. Requires I + J <= kEnumerationGuard.
double log_partition_exact(const RbmParams& params);

// p(v, h) = exp(-E(v, h)) / Z, same guard as log_partition_exact.
double joint_probability(const RbmParams& params, const BinaryState& state);

// p(h_j = 1 | v) = sigmoid(c_j + sum_i W_ij v_i). Accepts v in [0, 1]^I.
Eigen::VectorXd hidden_conditional(const RbmParams& params, const Eigen::VectorXd& v);

// p(v_i = 1 | h) = sigmoid(b_i + sum_j W_ij h_j).
Eigen::VectorXd visible_conditional(const RbmParams& params, const Eigen::VectorXd& h);

// Exact gradient of sum_v log p(v) over the dataset: data expectation minus
// dataset-size times the model expectation, the latter by full enumeration.
// Training-correctness oracle only; same enumeration guard.
ParamDelta exact_loglik_gradient(const RbmParams& params,
                                 const std::vector<Eigen::VectorXd>& dataset);

// One CD-k step on a batch of visible vectors (entries in [0, 1]). Hidden
// states are sampled binary along the Gibbs chain; visible reconstructions
// and the final negative-phase statistics stay mean-field.
CdStepResult cd_update(const RbmParams& params, const std::vector<Eigen::VectorXd>& batch,
                       const CdConfig& config, Rng& rng);

}  // namespace adbn
