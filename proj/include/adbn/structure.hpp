#pragma once

#include <deque>
#include <optional>
#include <vector>

#include "adbn/rbm.hpp"

namespace adbn {

// Walking distance of one update step: how far each monitored parameter
// group moved. Only the hidden biases and weights are monitored; the visible
// biases track the input data and are excluded.
struct WalkingDistance {
    double wd_c = 0.0;  // L2 norm of the hidden-bias delta
    double wd_w = 0.0;  // Frobenius norm of the weight delta

    double total() const { return wd_c + wd_w; }
};

WalkingDistance walking_distance(const ParamDelta& delta);

// Per hidden neuron j: L2 norm of (delta c_j, delta W column j).
Eigen::VectorXd per_neuron_walking_distance(const ParamDelta& delta);

struct StructureThresholds {
    double theta_generation = 0.15;     // per-neuron smoothed WD above this grows a neuron
    double theta_annihilation = 1e-6;   // activation variance below this kills a neuron
    double theta_layer_wd = 0.05;        // layer generation: accumulated WD bound
    double theta_layer_energy = 0.05;    // layer generation: accumulated energy bound
    int min_epochs_before_edit = 10;
    int max_hidden = 256;
    int max_layers = 2;

    void validate() const;
};

// Raw WD series per parameter group plus moving statistics over the
// smoothing window. When fewer samples than the window are available the
// statistics run over the prefix seen so far.
class WdMonitor {
public:
    WdMonitor(int smoothing_window, int layer_index);

    void record(const WalkingDistance& wd);

    std::size_t size() const { return series_c_.size(); }
    int smoothing_window() const { return window_; }
    int layer_index() const { return layer_index_; }

    double moving_mean_c() const;
    double moving_mean_w() const;
    double moving_std_c() const;
    double moving_std_w() const;

    // Smoothed total WD (mean of wd_c + wd_w over the window); the per-layer
    // WD^l statistic at the end of a layer's training.
    double smoothed_total() const;

private:
    int window_;
    int layer_index_;
    std::vector<double> series_c_;
    std::vector<double> series_w_;
};

// Moving mean over the last `window` per-neuron WD vectors. Resets itself
// whenever the neuron count changes (a structural edit happened).
class PerNeuronWdTracker {
public:
    explicit PerNeuronWdTracker(int window);

    void record(const Eigen::VectorXd& per_neuron_wd);
    void reset();

    bool empty() const { return recent_.empty(); }
    Eigen::VectorXd smoothed() const;

private:
    int window_;
    std::deque<Eigen::VectorXd> recent_;
};

// Running record of batch-mean reconstruction energies for one layer. The
// layer-generation criterion wants a non-negative energy statistic, so the
// final value is shifted by the minimum batch energy observed in the run.
class EnergyTracker {
public:
    explicit EnergyTracker(int window);

    void record(double batch_mean_energy);

    std::size_t size() const { return series_.size(); }
    double moving_mean() const;
    double min_observed() const;
    double shifted_final() const;  // moving_mean() - min_observed(), always >= 0

private:
    int window_;
    std::vector<double> series_;
    double min_observed_;
};

// Returns the parent index for a generation, or nothing. Requires the warmup
// to have passed, the strongest smoothed per-neuron WD to exceed
// theta_generation, and headroom under max_hidden. Ties break to the lowest
// index.
std::optional<Eigen::Index> neuron_generation_check(const Eigen::VectorXd& smoothed_per_neuron_wd,
                                                    const StructureThresholds& thresholds,
                                                    int epoch);

// Inserts a copy of neuron `parent` at parent + 1. The child's bias equals
// the parent's; its weight column is the parent's plus N(0, noise_scale^2)
// perturbations. Every pre-existing column is preserved bit for bit.
RbmParams generate_neuron(const RbmParams& params, Eigen::Index parent, double noise_scale,
                          Rng& rng);

// Mean and population variance of p(h_j = 1 | v) over a monitoring batch.
struct ActivationMoments {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;
};

ActivationMoments activation_moments(const RbmParams& params,
                                     const std::vector<Eigen::VectorXd>& batch);

// All neurons whose activation variance falls below theta_annihilation,
// except that at least one neuron always survives: if everything qualifies,
// the highest-variance neuron is kept (lowest index on ties).
std::vector<Eigen::Index> neuron_annihilation_check(const ActivationMoments& moments,
                                                    const StructureThresholds& thresholds);

// Removes the listed hidden neurons; remaining columns keep their order.
RbmParams annihilate_neurons(const RbmParams& params, const std::vector<Eigen::Index>& indices);

// Layer generation fires only when both accumulated statistics strictly
// exceed their thresholds and another layer still fits.
bool layer_generation_check(double wd_sum, double energy_sum,
                            const StructureThresholds& thresholds, int layer_count);

}  // namespace adbn
