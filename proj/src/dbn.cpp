#include "adbn/dbn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace adbn {
namespace {

std::string join_indices(const std::vector<Eigen::Index>& indices) {
    std::ostringstream out;
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (i > 0) out << ',';
        out << indices[i];
    }
    return out.str();
}

std::vector<Eigen::Index> parse_indices(const std::string& text) {
    std::vector<Eigen::Index> indices;
    std::istringstream in(text);
    std::string token;
    while (std::getline(in, token, ','))
        if (!token.empty()) indices.push_back(std::stoll(token));
    return indices;
}

// key=value token extraction; value runs to the next space.
std::string field(const std::string& line, const std::string& key) {
    const std::string needle = key + "=";
    const auto pos = line.find(needle);
    if (pos == std::string::npos)
        throw ModelIoError("structure log line missing field '" + key + "': " + line);
    const auto begin = pos + needle.size();
    const auto end = line.find(' ', begin);
    return line.substr(begin, end == std::string::npos ? std::string::npos : end - begin);
}

int argmax_lowest(const Eigen::VectorXd& v) {
    int best = 0;
    for (Eigen::Index k = 1; k < v.size(); ++k)
        if (v[k] > v[best]) best = static_cast<int>(k);
    return best;
}

}  // namespace

OutputHead OutputHead::zeros(Eigen::Index input, Eigen::Index classes) {
    OutputHead head;
    head.weights = Eigen::MatrixXd::Zero(input, classes);
    head.bias = Eigen::VectorXd::Zero(classes);
    head.check_consistent();
    return head;
}

void OutputHead::check_consistent() const {
    if (bias.size() < 2) throw ContractError("OutputHead: need at least 2 classes");
    if (weights.cols() != bias.size())
        throw ContractError("OutputHead: weight/bias class count mismatch");
    if (!weights.allFinite() || !bias.allFinite())
        throw ContractError("OutputHead: non-finite parameter entry");
}

std::string StructureEvent::to_line() const {
    std::ostringstream out;
    switch (kind) {
        case Kind::layer_added:
            out << "layer-add layer=" << layer << " epoch=" << epoch << " size=" << size;
            break;
        case Kind::neuron_generated:
            out << "neuron-gen layer=" << layer << " epoch=" << epoch << " parent=" << parent;
            break;
        case Kind::neurons_annihilated:
            out << "neuron-ann layer=" << layer << " epoch=" << epoch
                << " removed=" << join_indices(removed);
            break;
        case Kind::neurons_pruned:
            out << "prune layer=" << layer << " epoch=" << epoch
                << " removed=" << join_indices(removed);
            break;
        case Kind::note:
            out << "note epoch=" << epoch << " text=" << text;
            break;
    }
    return out.str();
}

StructureEvent StructureEvent::from_line(const std::string& line) {
    StructureEvent event;
    const auto space = line.find(' ');
    const std::string tag = line.substr(0, space);
    if (tag == "layer-add") {
        event.kind = Kind::layer_added;
        event.layer = std::stoi(field(line, "layer"));
        event.epoch = std::stoi(field(line, "epoch"));
        event.size = std::stoll(field(line, "size"));
    } else if (tag == "neuron-gen") {
        event.kind = Kind::neuron_generated;
        event.layer = std::stoi(field(line, "layer"));
        event.epoch = std::stoi(field(line, "epoch"));
        event.parent = std::stoll(field(line, "parent"));
    } else if (tag == "neuron-ann" || tag == "prune") {
        event.kind = tag == "prune" ? Kind::neurons_pruned : Kind::neurons_annihilated;
        event.layer = std::stoi(field(line, "layer"));
        event.epoch = std::stoi(field(line, "epoch"));
        event.removed = parse_indices(field(line, "removed"));
    } else if (tag == "note") {
        event.kind = Kind::note;
        event.epoch = std::stoi(field(line, "epoch"));
        const auto text_pos = line.find("text=");
        event.text = text_pos == std::string::npos ? "" : line.substr(text_pos + 5);
    } else {
        throw ModelIoError("unknown structure log event: " + line);
    }
    return event;
}

std::vector<Eigen::Index> replay_structure_log(const std::vector<StructureEvent>& log) {
    std::vector<Eigen::Index> sizes;
    for (const StructureEvent& event : log) {
        switch (event.kind) {
            case StructureEvent::Kind::layer_added:
                if (event.layer != static_cast<int>(sizes.size()))
                    throw ContractError("structure log: layers added out of order");
                sizes.push_back(event.size);
                break;
            case StructureEvent::Kind::neuron_generated:
                sizes.at(event.layer) += 1;
                break;
            case StructureEvent::Kind::neurons_annihilated:
            case StructureEvent::Kind::neurons_pruned:
                sizes.at(event.layer) -= static_cast<Eigen::Index>(event.removed.size());
                if (sizes.at(event.layer) < 1)
                    throw ContractError("structure log: layer emptied by removals");
                break;
            case StructureEvent::Kind::note:
                break;
        }
    }
    return sizes;
}

std::vector<Eigen::Index> DbnModel::hidden_sizes() const {
    std::vector<Eigen::Index> sizes;
    sizes.reserve(layers.size());
    for (const RbmParams& layer : layers) sizes.push_back(layer.hidden_size());
    return sizes;
}

void DbnModel::check_consistent() const {
    if (layers.empty()) throw ContractError("DbnModel: no layers");
    if (input_dim != layers.front().visible_size())
        throw ContractError("DbnModel: input dim does not match first layer");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        layers[l].check_consistent();
        if (l > 0 && layers[l].visible_size() != layers[l - 1].hidden_size())
            throw ContractError("DbnModel: layer " + std::to_string(l) +
                                " visible size does not chain");
    }
    head.check_consistent();
    if (head.input_size() != layers.back().hidden_size())
        throw ContractError("DbnModel: head input does not match top layer");
    if (replay_structure_log(structure_log) != hidden_sizes())
        throw ContractError("DbnModel: structure log does not replay to the current layer sizes");
}

Eigen::VectorXd propagate_layer(const RbmParams& layer, const Eigen::VectorXd& h_prev) {
    return hidden_conditional(layer, h_prev);
}

Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
    const double max_z = z.maxCoeff();
    Eigen::VectorXd y = (z.array() - max_z).exp();
    return y / y.sum();
}

Eigen::VectorXd forward(const DbnModel& model, const Eigen::VectorXd& v) {
    if (v.size() != model.input_dim)
        throw ContractError("forward: input length does not match model input dim");
    Eigen::VectorXd h = v;
    for (const RbmParams& layer : model.layers) h = propagate_layer(layer, h);
    return softmax(model.head.weights.transpose() * h + model.head.bias);
}

ForwardTrace forward_trace(const DbnModel& model, const Eigen::VectorXd& v) {
    if (v.size() != model.input_dim)
        throw ContractError("forward_trace: input length does not match model input dim");
    ForwardTrace trace;
    trace.layer_activations.reserve(model.layers.size());
    Eigen::VectorXd h = v;
    for (const RbmParams& layer : model.layers) {
        h = propagate_layer(layer, h);
        trace.layer_activations.push_back(h);
    }
    trace.probabilities = softmax(model.head.weights.transpose() * h + model.head.bias);
    return trace;
}

void TrainConfig::validate() const {
    cd.validate();
    if (epochs_per_layer < 1) throw UsageError("train.epochs_per_layer must be >= 1");
    if (initial_hidden < 1) throw UsageError("train.initial_hidden must be >= 1");
    if (monitor_interval < 1) throw UsageError("train.monitor_interval must be >= 1");
    if (monitor_batch < 1) throw UsageError("train.monitor_batch must be >= 1");
    if (generation_noise < 0.0) throw UsageError("train.generation_noise must be >= 0");
    if (weight_init_stddev < 0.0) throw UsageError("train.weight_init_stddev must be >= 0");
    if (wd_floor < 0.0) throw UsageError("train.wd_floor must be >= 0");
    if (patience < 1) throw UsageError("train.patience must be >= 1");
    if (smoothing_window < 1) throw UsageError("train.smoothing_window must be >= 1");
    if (head_epochs < 1) throw UsageError("train.head_epochs must be >= 1");
    if (head_learning_rate <= 0.0) throw UsageError("train.head_lr must be > 0");
}

DbnModel train_adaptive_dbn(const LabeledPatchSet& data, const TrainConfig& config,
                            const StructureThresholds& thresholds, Rng& rng) {
    config.validate();
    thresholds.validate();
    data.check_consistent();
    if (data.size() == 0) throw DataError("train_adaptive_dbn: empty dataset");
    const int num_classes = data.num_classes();
    if (num_classes < 2) throw DataError("train_adaptive_dbn: need at least two classes");

    DbnModel model;
    model.input_dim = data.feature_dim;
    model.preprocess_hash = data.preprocess_hash;

    const std::size_t n = data.size();
    std::vector<Eigen::VectorXd> repr = data.features;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    double wd_sum = 0.0;
    double energy_sum = 0.0;
    bool any_layer_converged = false;

    while (true) {
        const int layer_index = static_cast<int>(model.layers.size());
        RbmParams params =
            RbmParams::gaussian_init(repr.front().size(), config.initial_hidden,
                                     config.weight_init_stddev, rng);
        // Visible biases get the log-odds of the layer-input means so the
        // bias absorbs the mean and the weights model structure; without
        // this, every column chases the mean image and the hidden layer
        // saturates within an epoch.
        Eigen::VectorXd input_mean = Eigen::VectorXd::Zero(params.visible_size());
        for (const Eigen::VectorXd& v : repr) input_mean += v;
        input_mean /= static_cast<double>(n);
        for (Eigen::Index i = 0; i < input_mean.size(); ++i) {
            const double p = std::clamp(input_mean[i], 1e-3, 1.0 - 1e-3);
            params.visible_bias[i] = std::log(p / (1.0 - p));
        }
        params.hidden_bias.setConstant(config.hidden_bias_init);
        {
            StructureEvent event;
            event.kind = StructureEvent::Kind::layer_added;
            event.layer = layer_index;
            event.epoch = 0;
            event.size = config.initial_hidden;
            model.structure_log.push_back(event);
        }

        WdMonitor monitor(config.smoothing_window, layer_index);
        PerNeuronWdTracker neuron_tracker(config.smoothing_window);
        EnergyTracker energy_tracker(config.smoothing_window);
        const std::size_t monitor_count =
            std::min<std::size_t>(n, static_cast<std::size_t>(config.monitor_batch));
        std::vector<Eigen::VectorXd> monitor_slice(repr.begin(),
                                                   repr.begin() + static_cast<long>(monitor_count));

        int epochs_below_floor = 0;
        bool converged = false;
        std::vector<Eigen::VectorXd> batch;
        for (int epoch = 0; epoch < config.epochs_per_layer; ++epoch) {
            std::shuffle(order.begin(), order.end(), rng);
            for (std::size_t start = 0; start < n; start += config.cd.batch_size) {
                const std::size_t stop =
                    std::min(n, start + static_cast<std::size_t>(config.cd.batch_size));
                batch.clear();
                for (std::size_t i = start; i < stop; ++i) batch.push_back(repr[order[i]]);
                CdStepResult step = cd_update(params, batch, config.cd, rng);
                params = std::move(step.params);
                monitor.record(walking_distance(step.delta));
                neuron_tracker.record(per_neuron_walking_distance(step.delta));
                energy_tracker.record(step.mean_reconstruction_energy);
            }

            if ((epoch + 1) % config.monitor_interval == 0) {
                const auto parent =
                    neuron_generation_check(neuron_tracker.smoothed(), thresholds, epoch);
                if (parent) {
                    params = generate_neuron(params, *parent, config.generation_noise, rng);
                    neuron_tracker.reset();
                    StructureEvent event;
                    event.kind = StructureEvent::Kind::neuron_generated;
                    event.layer = layer_index;
                    event.epoch = epoch;
                    event.parent = *parent;
                    model.structure_log.push_back(event);
                } else if (epoch >= thresholds.min_epochs_before_edit) {
                    const ActivationMoments moments = activation_moments(params, monitor_slice);
                    const auto doomed = neuron_annihilation_check(moments, thresholds);
                    if (!doomed.empty()) {
                        params = annihilate_neurons(params, doomed);
                        neuron_tracker.reset();
                        StructureEvent event;
                        event.kind = StructureEvent::Kind::neurons_annihilated;
                        event.layer = layer_index;
                        event.epoch = epoch;
                        event.removed = doomed;
                        model.structure_log.push_back(event);
                    }
                }
            }

            if (monitor.smoothed_total() < config.wd_floor) {
                if (++epochs_below_floor >= config.patience) {
                    converged = true;
                    break;
                }
            } else {
                epochs_below_floor = 0;
            }
        }
        any_layer_converged = any_layer_converged || converged;

        model.layers.push_back(params);
        wd_sum += monitor.smoothed_total();
        energy_sum += energy_tracker.shifted_final();

        if (!layer_generation_check(wd_sum, energy_sum, thresholds,
                                    static_cast<int>(model.layers.size())))
            break;
        for (Eigen::VectorXd& v : repr) v = hidden_conditional(params, v);
    }

    if (!any_layer_converged) {
        StructureEvent event;
        event.kind = StructureEvent::Kind::note;
        event.epoch = config.epochs_per_layer;
        event.text = "warning: epoch budget exhausted before any layer reached the WD floor";
        model.structure_log.push_back(event);
    }

    // Softmax head on the frozen stack, full-batch gradient descent.
    std::vector<Eigen::VectorXd> top(n);
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::VectorXd h = data.features[i];
        for (const RbmParams& layer : model.layers) h = hidden_conditional(layer, h);
        top[i] = std::move(h);
    }
    const Eigen::Index top_dim = model.layers.back().hidden_size();
    OutputHead head = OutputHead::zeros(top_dim, num_classes);
    Eigen::MatrixXd grad_w(top_dim, num_classes);
    Eigen::VectorXd grad_b(num_classes);
    for (int epoch = 0; epoch < config.head_epochs; ++epoch) {
        grad_w.setZero();
        grad_b.setZero();
        for (std::size_t i = 0; i < n; ++i) {
            Eigen::VectorXd d = softmax(head.weights.transpose() * top[i] + head.bias);
            d[data.labels[i]] -= 1.0;
            grad_w += top[i] * d.transpose();
            grad_b += d;
        }
        const double scale = config.head_learning_rate / static_cast<double>(n);
        head.weights -= scale * grad_w;
        head.bias -= scale * grad_b;
    }
    model.head = head;
    model.check_consistent();
    return model;
}

EvalMetrics evaluate(const DbnModel& model, const LabeledPatchSet& data) {
    model.check_consistent();
    data.check_consistent();
    const int num_classes = static_cast<int>(model.num_classes());
    for (int label : data.labels)
        if (label >= num_classes)
            throw UsageError("evaluate: label " + std::to_string(label) +
                             " out of range for " + std::to_string(num_classes) + " classes");

    EvalMetrics metrics;
    metrics.total = data.size();
    metrics.per_class_total.assign(num_classes, 0);
    metrics.per_class_correct.assign(num_classes, 0);
    metrics.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
    for (std::size_t i = 0; i < data.size(); ++i) {
        const int predicted = argmax_lowest(forward(model, data.features[i]));
        const int actual = data.labels[i];
        metrics.per_class_total[actual]++;
        metrics.confusion[actual][predicted]++;
        if (predicted == actual) {
            metrics.per_class_correct[actual]++;
            metrics.correct++;
        }
    }
    metrics.accuracy =
        metrics.total == 0 ? 0.0
                           : static_cast<double>(metrics.correct) / static_cast<double>(metrics.total);
    return metrics;
}

double cross_entropy(const DbnModel& model, const LabeledPatchSet& data) {
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const Eigen::VectorXd y = forward(model, data.features[i]);
        total += -std::log(std::max(y[data.labels[i]], 1e-300));
    }
    return total / static_cast<double>(data.size());
}

std::string format_classification_report(const EvalMetrics& metrics,
                                         const std::vector<std::string>& class_names) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(1);
    out << "overall: " << 100.0 * metrics.accuracy << "% (" << (metrics.total - metrics.correct)
        << "/" << metrics.total << ")\n";
    for (std::size_t k = 0; k < metrics.per_class_total.size(); ++k) {
        const std::string name =
            k < class_names.size() ? class_names[k] : "class " + std::to_string(k);
        const std::size_t total = metrics.per_class_total[k];
        const double acc =
            total == 0 ? 0.0 : static_cast<double>(metrics.per_class_correct[k]) / total;
        out << name << ": " << 100.0 * acc << "% ("
            << metrics.per_class_incorrect(static_cast<int>(k)) << "/" << total << ")\n";
    }
    return out.str();
}

}  // namespace adbn
