#include "adbn/structure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace adbn {
namespace {

struct WindowStats {
    double mean = 0.0;
    double stddev = 0.0;
};

// Statistics over the last min(window, n) values.
WindowStats tail_stats(const std::vector<double>& series, int window) {
    WindowStats stats;
    if (series.empty()) return stats;
    const std::size_t n = std::min<std::size_t>(series.size(), static_cast<std::size_t>(window));
    const auto first = series.end() - static_cast<std::ptrdiff_t>(n);
    const double mean = std::accumulate(first, series.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (auto it = first; it != series.end(); ++it) var += (*it - mean) * (*it - mean);
    stats.mean = mean;
    stats.stddev = std::sqrt(var / static_cast<double>(n));
    return stats;
}

}  // namespace

WalkingDistance walking_distance(const ParamDelta& delta) {
    if (delta.weights.cols() != delta.hidden_bias.size())
        throw ContractError("walking_distance: delta dimensions disagree");
    WalkingDistance wd;
    wd.wd_c = delta.hidden_bias.norm();
    wd.wd_w = delta.weights.norm();
    return wd;
}

Eigen::VectorXd per_neuron_walking_distance(const ParamDelta& delta) {
    if (delta.weights.cols() != delta.hidden_bias.size())
        throw ContractError("per_neuron_walking_distance: delta dimensions disagree");
    const Eigen::Index hidden = delta.hidden_bias.size();
    Eigen::VectorXd wd(hidden);
    for (Eigen::Index j = 0; j < hidden; ++j) {
        wd[j] = std::sqrt(delta.hidden_bias[j] * delta.hidden_bias[j] +
                          delta.weights.col(j).squaredNorm());
    }
    return wd;
}

void StructureThresholds::validate() const {
    // Zero thresholds are legal degenerate settings (always / never trigger).
    if (theta_generation < 0.0 || theta_annihilation < 0.0 || theta_layer_wd < 0.0 ||
        theta_layer_energy < 0.0)
        throw UsageError("structure thresholds must be non-negative");
    if (min_epochs_before_edit < 1) throw UsageError("struct.min_epochs_before_edit must be >= 1");
    if (max_hidden < 1) throw UsageError("struct.max_hidden must be >= 1");
    if (max_layers < 1) throw UsageError("struct.max_layers must be >= 1");
}

WdMonitor::WdMonitor(int smoothing_window, int layer_index)
    : window_(smoothing_window), layer_index_(layer_index) {
    if (smoothing_window < 1) throw UsageError("WdMonitor: smoothing window must be >= 1");
}

void WdMonitor::record(const WalkingDistance& wd) {
    if (wd.wd_c < 0.0 || wd.wd_w < 0.0 || !std::isfinite(wd.wd_c) || !std::isfinite(wd.wd_w))
        throw ContractError("WdMonitor: walking distances must be finite and non-negative");
    series_c_.push_back(wd.wd_c);
    series_w_.push_back(wd.wd_w);
}

double WdMonitor::moving_mean_c() const { return tail_stats(series_c_, window_).mean; }
double WdMonitor::moving_mean_w() const { return tail_stats(series_w_, window_).mean; }
double WdMonitor::moving_std_c() const { return tail_stats(series_c_, window_).stddev; }
double WdMonitor::moving_std_w() const { return tail_stats(series_w_, window_).stddev; }

double WdMonitor::smoothed_total() const { return moving_mean_c() + moving_mean_w(); }

PerNeuronWdTracker::PerNeuronWdTracker(int window) : window_(window) {
    if (window < 1) throw UsageError("PerNeuronWdTracker: window must be >= 1");
}

void PerNeuronWdTracker::record(const Eigen::VectorXd& per_neuron_wd) {
    if (!recent_.empty() && recent_.back().size() != per_neuron_wd.size()) reset();
    recent_.push_back(per_neuron_wd);
    while (recent_.size() > static_cast<std::size_t>(window_)) recent_.pop_front();
}

void PerNeuronWdTracker::reset() { recent_.clear(); }

Eigen::VectorXd PerNeuronWdTracker::smoothed() const {
    if (recent_.empty()) return Eigen::VectorXd();
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(recent_.back().size());
    for (const auto& v : recent_) sum += v;
    return sum / static_cast<double>(recent_.size());
}

EnergyTracker::EnergyTracker(int window)
    : window_(window), min_observed_(std::numeric_limits<double>::infinity()) {
    if (window < 1) throw UsageError("EnergyTracker: window must be >= 1");
}

void EnergyTracker::record(double batch_mean_energy) {
    if (!std::isfinite(batch_mean_energy))
        throw ContractError("EnergyTracker: non-finite energy");
    series_.push_back(batch_mean_energy);
    min_observed_ = std::min(min_observed_, batch_mean_energy);
}

double EnergyTracker::moving_mean() const { return tail_stats(series_, window_).mean; }

double EnergyTracker::min_observed() const {
    return series_.empty() ? 0.0 : min_observed_;
}

double EnergyTracker::shifted_final() const {
    if (series_.empty()) return 0.0;
    return moving_mean() - min_observed_;
}

std::optional<Eigen::Index> neuron_generation_check(const Eigen::VectorXd& smoothed_per_neuron_wd,
                                                    const StructureThresholds& thresholds,
                                                    int epoch) {
    if (epoch < thresholds.min_epochs_before_edit) return std::nullopt;
    const Eigen::Index hidden = smoothed_per_neuron_wd.size();
    if (hidden == 0 || hidden >= thresholds.max_hidden) return std::nullopt;

    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < hidden; ++j)
        if (smoothed_per_neuron_wd[j] > smoothed_per_neuron_wd[best]) best = j;
    if (smoothed_per_neuron_wd[best] > thresholds.theta_generation) return best;
    return std::nullopt;
}

RbmParams generate_neuron(const RbmParams& params, Eigen::Index parent, double noise_scale,
                          Rng& rng) {
    params.check_consistent();
    const Eigen::Index visible = params.visible_size();
    const Eigen::Index hidden = params.hidden_size();
    if (parent < 0 || parent >= hidden)
        throw UsageError("generate_neuron: parent index out of range");

    RbmParams grown;
    grown.visible_bias = params.visible_bias;
    grown.hidden_bias.resize(hidden + 1);
    grown.weights.resize(visible, hidden + 1);

    std::normal_distribution<double> unit(0.0, 1.0);
    for (Eigen::Index j = 0; j <= parent; ++j) {
        grown.hidden_bias[j] = params.hidden_bias[j];
        grown.weights.col(j) = params.weights.col(j);
    }
    grown.hidden_bias[parent + 1] = params.hidden_bias[parent];
    for (Eigen::Index i = 0; i < visible; ++i)
        grown.weights(i, parent + 1) = params.weights(i, parent) + noise_scale * unit(rng);
    for (Eigen::Index j = parent + 1; j < hidden; ++j) {
        grown.hidden_bias[j + 1] = params.hidden_bias[j];
        grown.weights.col(j + 1) = params.weights.col(j);
    }
    grown.check_consistent();
    return grown;
}

ActivationMoments activation_moments(const RbmParams& params,
                                     const std::vector<Eigen::VectorXd>& batch) {
    if (batch.empty()) throw UsageError("activation_moments: empty batch");
    const Eigen::Index hidden = params.hidden_size();
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(hidden);
    Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(hidden);
    for (const Eigen::VectorXd& v : batch) {
        const Eigen::VectorXd ph = hidden_conditional(params, v);
        sum += ph;
        sum_sq += ph.cwiseProduct(ph);
    }
    const double n = static_cast<double>(batch.size());
    ActivationMoments moments;
    moments.mean = sum / n;
    moments.variance = (sum_sq / n - moments.mean.cwiseProduct(moments.mean)).cwiseMax(0.0);
    return moments;
}

std::vector<Eigen::Index> neuron_annihilation_check(const ActivationMoments& moments,
                                                    const StructureThresholds& thresholds) {
    const Eigen::Index hidden = moments.variance.size();
    if (moments.mean.size() != hidden)
        throw ContractError("neuron_annihilation_check: moment dimensions disagree");
    std::vector<Eigen::Index> doomed;
    for (Eigen::Index j = 0; j < hidden; ++j)
        if (moments.variance[j] < thresholds.theta_annihilation) doomed.push_back(j);

    if (static_cast<Eigen::Index>(doomed.size()) == hidden && hidden > 0) {
        // Everything qualified; spare the neuron with the highest variance.
        Eigen::Index keep = 0;
        for (Eigen::Index j = 1; j < hidden; ++j)
            if (moments.variance[j] > moments.variance[keep]) keep = j;
        doomed.erase(doomed.begin() + keep);
    }
    return doomed;
}

RbmParams annihilate_neurons(const RbmParams& params, const std::vector<Eigen::Index>& indices) {
    params.check_consistent();
    if (indices.empty()) return params;

    const Eigen::Index hidden = params.hidden_size();
    std::vector<Eigen::Index> sorted(indices);
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    for (Eigen::Index j : sorted)
        if (j < 0 || j >= hidden) throw UsageError("annihilate_neurons: index out of range");
    if (static_cast<Eigen::Index>(sorted.size()) >= hidden)
        throw UsageError("annihilate_neurons: refusing to remove every hidden neuron");

    RbmParams pruned;
    pruned.visible_bias = params.visible_bias;
    const Eigen::Index kept = hidden - static_cast<Eigen::Index>(sorted.size());
    pruned.hidden_bias.resize(kept);
    pruned.weights.resize(params.visible_size(), kept);
    Eigen::Index out = 0;
    std::size_t next_doomed = 0;
    for (Eigen::Index j = 0; j < hidden; ++j) {
        if (next_doomed < sorted.size() && sorted[next_doomed] == j) {
            ++next_doomed;
            continue;
        }
        pruned.hidden_bias[out] = params.hidden_bias[j];
        pruned.weights.col(out) = params.weights.col(j);
        ++out;
    }
    pruned.check_consistent();
    return pruned;
}

bool layer_generation_check(double wd_sum, double energy_sum,
                            const StructureThresholds& thresholds, int layer_count) {
    if (layer_count < 1) throw ContractError("layer_generation_check: layer count must be >= 1");
    if (!std::isfinite(wd_sum) || !std::isfinite(energy_sum))
        throw ContractError("layer_generation_check: non-finite sums");
    return wd_sum > thresholds.theta_layer_wd && energy_sum > thresholds.theta_layer_energy &&
           layer_count < thresholds.max_layers;
}

}  // namespace adbn
