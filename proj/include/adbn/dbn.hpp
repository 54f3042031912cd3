#pragma once

#include <string>
#include <vector>

#include "adbn/data.hpp"
#include "adbn/rbm.hpp"
#include "adbn/structure.hpp"

namespace adbn {

// Softmax classification head on top of the deepest hidden layer.
struct OutputHead {
    Eigen::MatrixXd weights;  // top hidden dim x number of classes
    Eigen::VectorXd bias;     // number of classes

    Eigen::Index input_size() const { return weights.rows(); }
    Eigen::Index num_classes() const { return bias.size(); }

    static OutputHead zeros(Eigen::Index input, Eigen::Index classes);
    void check_consistent() const;
};

// One structural edit, stamped with the (per-layer) epoch it happened in.
// Events use epoch -1 for post-training edits (pruning).
struct StructureEvent {
    enum class Kind { layer_added, neuron_generated, neurons_annihilated, neurons_pruned, note };

    Kind kind = Kind::note;
    int layer = -1;
    int epoch = 0;
    Eigen::Index parent = -1;           // neuron_generated
    std::vector<Eigen::Index> removed;  // neurons_annihilated / neurons_pruned
    Eigen::Index size = 0;              // layer_added: initial hidden size
    std::string text;                   // note

    std::string to_line() const;
    static StructureEvent from_line(const std::string& line);
};

// Applies the log to an empty architecture and returns the hidden size of
// every layer. A model's log must replay to its actual sizes.
std::vector<Eigen::Index> replay_structure_log(const std::vector<StructureEvent>& log);

struct DbnModel {
    Eigen::Index input_dim = 0;
    std::vector<RbmParams> layers;
    OutputHead head;
    std::vector<StructureEvent> structure_log;
    std::uint32_t preprocess_hash = 0;

    std::vector<Eigen::Index> hidden_sizes() const;
    Eigen::Index num_classes() const { return head.num_classes(); }
    void check_consistent() const;
};

// Mean-field propagation through one layer; identical to hidden_conditional.
Eigen::VectorXd propagate_layer(const RbmParams& layer, const Eigen::VectorXd& h_prev);

// Numerically stable softmax (max subtraction).
Eigen::VectorXd softmax(const Eigen::VectorXd& z);

// Class probabilities for one input vector.
Eigen::VectorXd forward(const DbnModel& model, const Eigen::VectorXd& v);

// Forward pass that keeps every layer's activations, for activation
// statistics and backprop.
struct ForwardTrace {
    std::vector<Eigen::VectorXd> layer_activations;  // one entry per RBM layer
    Eigen::VectorXd probabilities;
};
ForwardTrace forward_trace(const DbnModel& model, const Eigen::VectorXd& v);

struct TrainConfig {
    CdConfig cd;
    int epochs_per_layer = 60;
    int initial_hidden = 64;
    int monitor_interval = 2;       // epochs between structural checks
    int monitor_batch = 256;        // samples behind the activation moments
    double generation_noise = 0.01; // stddev of the child column perturbation
    double weight_init_stddev = 0.1;
    // Hidden biases start at this value; slightly negative keeps fresh units
    // out of saturation and nudges them toward selective features.
    double hidden_bias_init = -2.0;
    double wd_floor = 1e-3;         // smoothed-WD convergence floor
    int patience = 5;               // epochs below the floor before convergence
    int smoothing_window = 10;
    int head_epochs = 1500;
    double head_learning_rate = 2.0;

    void validate() const;
};

// Greedy adaptive pre-training: trains RBM layers bottom-up with neuron
// generation/annihilation at every monitoring interval, stacks a new layer
// while the accumulated WD and energy statistics demand one, then fits the
// softmax head by full-batch gradient descent with all RBM layers frozen.
DbnModel train_adaptive_dbn(const LabeledPatchSet& data, const TrainConfig& config,
                            const StructureThresholds& thresholds, Rng& rng);

struct EvalMetrics {
    std::size_t total = 0;
    std::size_t correct = 0;
    double accuracy = 0.0;
    std::vector<std::size_t> per_class_total;
    std::vector<std::size_t> per_class_correct;
    std::vector<std::vector<std::size_t>> confusion;  // [actual][predicted]

    std::size_t per_class_incorrect(int k) const {
        return per_class_total[k] - per_class_correct[k];
    }
};

// Argmax classification over the dataset (ties break to the lowest class).
EvalMetrics evaluate(const DbnModel& model, const LabeledPatchSet& data);

// Mean cross-entropy of the model on the dataset.
double cross_entropy(const DbnModel& model, const LabeledPatchSet& data);

// Per-class report lines in "<accuracy>% (<incorrect>/<total>)" form.
std::string format_classification_report(const EvalMetrics& metrics,
                                         const std::vector<std::string>& class_names = {});

}  // namespace adbn
