#include "adbn/finetune.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace adbn {
namespace {

struct SplitAccumulator {
    Eigen::VectorXd fired;
    Eigen::VectorXd sum;
    Eigen::VectorXd sum_sq;
    std::size_t count = 0;

    explicit SplitAccumulator(Eigen::Index n)
        : fired(Eigen::VectorXd::Zero(n)), sum(Eigen::VectorXd::Zero(n)),
          sum_sq(Eigen::VectorXd::Zero(n)) {}

    void add(const Eigen::VectorXd& activation) {
        for (Eigen::Index j = 0; j < activation.size(); ++j)
            if (activation[j] > 0.5) fired[j] += 1.0;
        sum += activation;
        sum_sq += activation.cwiseProduct(activation);
        ++count;
    }

    void finalize(Eigen::VectorXd& freq, Eigen::VectorXd& mean, Eigen::VectorXd& variance) const {
        const Eigen::Index n = sum.size();
        if (count == 0) {
            freq = Eigen::VectorXd::Zero(n);
            mean = Eigen::VectorXd::Zero(n);
            variance = Eigen::VectorXd::Zero(n);
            return;
        }
        const double inv = 1.0 / static_cast<double>(count);
        freq = fired * inv;
        mean = sum * inv;
        variance = (sum_sq * inv - mean.cwiseProduct(mean)).cwiseMax(0.0);
    }
};

int argmax_lowest(const Eigen::VectorXd& v) {
    int best = 0;
    for (Eigen::Index k = 1; k < v.size(); ++k)
        if (v[k] > v[best]) best = static_cast<int>(k);
    return best;
}

Eigen::VectorXd remove_entries(const Eigen::VectorXd& v,
                               const std::vector<Eigen::Index>& sorted_doomed) {
    Eigen::VectorXd out(v.size() - static_cast<Eigen::Index>(sorted_doomed.size()));
    Eigen::Index write = 0;
    std::size_t next = 0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (next < sorted_doomed.size() && sorted_doomed[next] == i) {
            ++next;
            continue;
        }
        out[write++] = v[i];
    }
    return out;
}

Eigen::MatrixXd remove_rows(const Eigen::MatrixXd& m,
                            const std::vector<Eigen::Index>& sorted_doomed) {
    Eigen::MatrixXd out(m.rows() - static_cast<Eigen::Index>(sorted_doomed.size()), m.cols());
    Eigen::Index write = 0;
    std::size_t next = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        if (next < sorted_doomed.size() && sorted_doomed[next] == i) {
            ++next;
            continue;
        }
        out.row(write++) = m.row(i);
    }
    return out;
}

std::vector<bool> misclassified_flags(const DbnModel& model, const LabeledPatchSet& data,
                                      std::size_t& correct_out) {
    std::vector<bool> flags(data.size());
    correct_out = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const int predicted = argmax_lowest(forward(model, data.features[i]));
        flags[i] = predicted != data.labels[i];
        if (!flags[i]) ++correct_out;
    }
    return flags;
}

}  // namespace

ActivationStats collect_activation_stats(const DbnModel& model, const LabeledPatchSet& data) {
    model.check_consistent();
    data.check_consistent();
    if (data.size() == 0) throw DataError("collect_activation_stats: empty dataset");

    const std::size_t num_layers = model.layers.size();
    std::vector<SplitAccumulator> all;
    std::vector<SplitAccumulator> correct;
    std::vector<SplitAccumulator> incorrect;
    all.reserve(num_layers);
    for (std::size_t l = 0; l < num_layers; ++l) {
        const Eigen::Index hidden = model.layers[l].hidden_size();
        all.emplace_back(hidden);
        correct.emplace_back(hidden);
        incorrect.emplace_back(hidden);
    }

    ActivationStats stats;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const ForwardTrace trace = forward_trace(model, data.features[i]);
        const bool is_correct = argmax_lowest(trace.probabilities) == data.labels[i];
        if (is_correct)
            ++stats.n_correct;
        else
            ++stats.n_incorrect;
        for (std::size_t l = 0; l < num_layers; ++l) {
            all[l].add(trace.layer_activations[l]);
            (is_correct ? correct[l] : incorrect[l]).add(trace.layer_activations[l]);
        }
    }

    stats.layers.resize(num_layers);
    for (std::size_t l = 0; l < num_layers; ++l) {
        LayerActivationStats& layer = stats.layers[l];
        all[l].finalize(layer.firing_frequency, layer.mean_activation, layer.activation_variance);
        correct[l].finalize(layer.firing_frequency_correct, layer.mean_activation_correct,
                            layer.activation_variance_correct);
        incorrect[l].finalize(layer.firing_frequency_incorrect, layer.mean_activation_incorrect,
                              layer.activation_variance_incorrect);
    }
    return stats;
}

void FinetuneConfig::validate() const {
    if (epochs < 1) throw UsageError("finetune.epochs must be >= 1");
    if (learning_rate <= 0.0) throw UsageError("finetune.lr must be > 0");
    if (batch_size < 1) throw UsageError("finetune.batch_size must be >= 1");
    if (misclassified_weight < 1.0) throw UsageError("finetune.omega must be >= 1");
    if (patience < 1) throw UsageError("finetune.patience must be >= 1");
}

DbnModel finetune_weights(const DbnModel& model, const LabeledPatchSet& data,
                          const FinetuneConfig& config, Rng& rng) {
    config.validate();
    model.check_consistent();
    data.check_consistent();
    if (data.size() == 0) throw DataError("finetune_weights: empty dataset");
    if (data.num_classes() > model.num_classes())
        throw UsageError("finetune_weights: dataset has more classes than the model");

    const std::size_t n = data.size();
    const std::size_t num_layers = model.layers.size();

    std::size_t best_correct = 0;
    std::vector<bool> flags = misclassified_flags(model, data, best_correct);
    DbnModel best = model;
    DbnModel current = model;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    std::vector<Eigen::MatrixXd> grad_w(num_layers);
    std::vector<Eigen::VectorXd> grad_c(num_layers);

    int stall = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t stop = std::min(n, start + static_cast<std::size_t>(config.batch_size));
            for (std::size_t l = 0; l < num_layers; ++l) {
                grad_w[l] = Eigen::MatrixXd::Zero(current.layers[l].weights.rows(),
                                                  current.layers[l].weights.cols());
                grad_c[l] = Eigen::VectorXd::Zero(current.layers[l].hidden_size());
            }
            Eigen::MatrixXd grad_head_w = Eigen::MatrixXd::Zero(current.head.weights.rows(),
                                                                current.head.weights.cols());
            Eigen::VectorXd grad_head_b = Eigen::VectorXd::Zero(current.head.bias.size());

            for (std::size_t b = start; b < stop; ++b) {
                const std::size_t i = order[b];
                const double sample_weight = flags[i] ? config.misclassified_weight : 1.0;
                const ForwardTrace trace = forward_trace(current, data.features[i]);

                Eigen::VectorXd d = trace.probabilities;
                d[data.labels[i]] -= 1.0;
                d *= sample_weight;

                const Eigen::VectorXd& top = trace.layer_activations.back();
                grad_head_w += top * d.transpose();
                grad_head_b += d;

                Eigen::VectorXd dh = current.head.weights * d;
                for (std::size_t l = num_layers; l-- > 0;) {
                    const Eigen::VectorXd& h = trace.layer_activations[l];
                    const Eigen::VectorXd da =
                        dh.cwiseProduct(h).cwiseProduct(Eigen::VectorXd::Ones(h.size()) - h);
                    const Eigen::VectorXd& below =
                        l == 0 ? data.features[i] : trace.layer_activations[l - 1];
                    grad_c[l] += da;
                    grad_w[l] += below * da.transpose();
                    if (l > 0) dh = current.layers[l].weights * da;
                }
            }

            const double scale = config.learning_rate / static_cast<double>(stop - start);
            for (std::size_t l = 0; l < num_layers; ++l) {
                current.layers[l].weights -= scale * grad_w[l];
                current.layers[l].hidden_bias -= scale * grad_c[l];
            }
            current.head.weights -= scale * grad_head_w;
            current.head.bias -= scale * grad_head_b;
        }

        std::size_t correct = 0;
        flags = misclassified_flags(current, data, correct);
        if (correct > best_correct) {
            best_correct = correct;
            best = current;
            stall = 0;
        } else {
            ++stall;
        }
        if (stall >= config.patience) break;
    }
    return best;
}

void PruneConfig::validate() const {
    if (prune_threshold < 0.0 || prune_threshold > 1.0)
        throw UsageError("finetune.prune_threshold must lie in [0, 1]");
    if (activation_var_threshold < 0.0)
        throw UsageError("prune activation variance threshold must be >= 0");
}

std::size_t PruneReport::total_removed() const {
    std::size_t n = 0;
    for (const auto& layer : removed) n += layer.size();
    return n;
}

std::string PruneReport::to_text() const {
    std::ostringstream out;
    auto arrow_line = [](const std::vector<Eigen::Index>& sizes) {
        std::ostringstream line;
        for (std::size_t i = 0; i < sizes.size(); ++i) {
            if (i > 0) line << " -> ";
            line << sizes[i];
        }
        return line.str();
    };
    out << "neurons before: " << arrow_line(before_sizes) << "\n";
    out << "neurons after:  " << arrow_line(after_sizes) << "\n";
    for (std::size_t l = 0; l < removed.size(); ++l) {
        out << "layer " << l << ": before=" << before_sizes[l] << " after=" << after_sizes[l]
            << " removed=";
        for (std::size_t i = 0; i < removed[l].size(); ++i) {
            if (i > 0) out << ',';
            out << removed[l][i];
        }
        out << "\n";
    }
    out << "total_removed=" << total_removed() << "\n";
    if (accuracy_before >= 0.0) out << "accuracy_before=" << accuracy_before << "\n";
    if (accuracy_after >= 0.0) out << "accuracy_after=" << accuracy_after << "\n";
    if (latency_before_ms >= 0.0) out << "latency_before_ms=" << latency_before_ms << "\n";
    if (latency_after_ms >= 0.0) out << "latency_after_ms=" << latency_after_ms << "\n";
    return out.str();
}

std::pair<DbnModel, PruneReport> prune_inactive_neurons(const DbnModel& model,
                                                        const ActivationStats& stats,
                                                        const PruneConfig& config) {
    config.validate();
    model.check_consistent();
    if (stats.layers.size() != model.layers.size())
        throw UsageError("prune_inactive_neurons: stats do not match the model's layer count");
    for (std::size_t l = 0; l < model.layers.size(); ++l)
        if (stats.layers[l].firing_frequency.size() != model.layers[l].hidden_size())
            throw UsageError("prune_inactive_neurons: stats do not match layer " +
                             std::to_string(l) + " size");

    DbnModel pruned = model;
    PruneReport report;
    report.before_sizes = model.hidden_sizes();
    report.removed.resize(model.layers.size());
    report.accuracy_before = stats.accuracy();

    const double t = config.prune_threshold;
    for (std::size_t l = 0; l < pruned.layers.size(); ++l) {
        const LayerActivationStats& layer_stats = stats.layers[l];
        const Eigen::Index hidden = pruned.layers[l].hidden_size();

        std::vector<Eigen::Index> doomed;
        for (Eigen::Index j = 0; j < hidden; ++j) {
            const double freq = layer_stats.firing_frequency[j];
            const double variance = layer_stats.activation_variance[j];
            const bool always_off = freq < t;
            const bool saturated = freq > 1.0 - t && variance < config.activation_var_threshold;
            if (always_off || saturated) doomed.push_back(j);
        }
        if (static_cast<Eigen::Index>(doomed.size()) == hidden && hidden > 0) {
            Eigen::Index keep = 0;
            for (Eigen::Index j = 1; j < hidden; ++j)
                if (layer_stats.activation_variance[j] > layer_stats.activation_variance[keep])
                    keep = j;
            doomed.erase(std::find(doomed.begin(), doomed.end(), keep));
        }
        if (doomed.empty()) continue;

        // Fold each removed neuron's mean activation into the consumer's
        // bias, then drop the consumer rows and this layer's columns.
        if (l + 1 < pruned.layers.size()) {
            RbmParams& next = pruned.layers[l + 1];
            for (Eigen::Index j : doomed)
                next.hidden_bias += layer_stats.mean_activation[j] * next.weights.row(j).transpose();
            next.weights = remove_rows(next.weights, doomed);
            next.visible_bias = remove_entries(next.visible_bias, doomed);
        } else {
            for (Eigen::Index j : doomed)
                pruned.head.bias +=
                    layer_stats.mean_activation[j] * pruned.head.weights.row(j).transpose();
            pruned.head.weights = remove_rows(pruned.head.weights, doomed);
        }
        pruned.layers[l] = annihilate_neurons(pruned.layers[l], doomed);

        StructureEvent event;
        event.kind = StructureEvent::Kind::neurons_pruned;
        event.layer = static_cast<int>(l);
        event.epoch = -1;
        event.removed = doomed;
        pruned.structure_log.push_back(event);
        report.removed[l] = std::move(doomed);
    }

    report.after_sizes = pruned.hidden_sizes();
    pruned.check_consistent();
    return {std::move(pruned), std::move(report)};
}

}  // namespace adbn
