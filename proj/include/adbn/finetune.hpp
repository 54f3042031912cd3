#pragma once

#include <string>
#include <vector>

#include "adbn/dbn.hpp"

namespace adbn {

// Per-neuron activation behaviour of one layer over a dataset, overall and
// split by whether the sample was classified correctly.
struct LayerActivationStats {
    Eigen::VectorXd firing_frequency;  // fraction of samples with activation > 0.5
    Eigen::VectorXd mean_activation;
    Eigen::VectorXd activation_variance;  // population variance

    Eigen::VectorXd firing_frequency_correct;
    Eigen::VectorXd mean_activation_correct;
    Eigen::VectorXd activation_variance_correct;

    Eigen::VectorXd firing_frequency_incorrect;
    Eigen::VectorXd mean_activation_incorrect;
    Eigen::VectorXd activation_variance_incorrect;
};

struct ActivationStats {
    std::vector<LayerActivationStats> layers;
    std::size_t n_correct = 0;
    std::size_t n_incorrect = 0;

    std::size_t total() const { return n_correct + n_incorrect; }
    double accuracy() const {
        return total() == 0 ? 0.0 : static_cast<double>(n_correct) / static_cast<double>(total());
    }
};

// One deterministic forward pass per sample.
ActivationStats collect_activation_stats(const DbnModel& model, const LabeledPatchSet& data);

struct FinetuneConfig {
    int epochs = 30;
    double learning_rate = 0.1;
    int batch_size = 32;
    // omega: gradient weight of currently misclassified samples, >= 1.
    double misclassified_weight = 2.0;
    int patience = 10;

    void validate() const;
};

// Supervised fine-tune of the whole stack (every RBM layer and the head) by
// cross-entropy gradient descent. Misclassified samples are up-weighted by
// omega, recomputed at the start of every epoch. Returns the checkpoint with
// the best training accuracy, so the result never scores below the input.
DbnModel finetune_weights(const DbnModel& model, const LabeledPatchSet& data,
                          const FinetuneConfig& config, Rng& rng);

struct PruneConfig {
    double prune_threshold = 0.01;         // firing-frequency band half-width
    double activation_var_threshold = 1e-4;  // variance bound for saturated neurons

    void validate() const;
};

struct PruneReport {
    std::vector<Eigen::Index> before_sizes;
    std::vector<Eigen::Index> after_sizes;
    std::vector<std::vector<Eigen::Index>> removed;  // per layer
    double accuracy_before = -1.0;
    double accuracy_after = -1.0;  // filled by the caller after re-evaluation
    double latency_before_ms = -1.0;  // filled by the caller when benchmarked
    double latency_after_ms = -1.0;

    std::size_t total_removed() const;
    std::string to_text() const;
};

// Removes hidden neurons that are always off (firing frequency below the
// threshold) or saturated constant (frequency above 1 - threshold with tiny
// variance). Each removal folds the neuron's mean activation into the
// consumer's biases, so constant neurons go with no output change. A layer
// never loses its last neuron: if everything qualifies, the highest-variance
// neuron stays.
std::pair<DbnModel, PruneReport> prune_inactive_neurons(const DbnModel& model,
                                                        const ActivationStats& stats,
                                                        const PruneConfig& config);

}  // namespace adbn
