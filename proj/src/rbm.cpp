#include "adbn/rbm.hpp"

#include <cmath>
#include <string>

namespace adbn {
namespace {

void require(bool condition, const std::string& message) {
    if (!condition) throw ContractError(message);
}

void check_unit_interval(const Eigen::VectorXd& v, const char* name) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        require(v[i] >= 0.0 && v[i] <= 1.0,
                std::string(name) + " entries must lie in [0, 1]");
    }
}

void check_enumeration_guard(const RbmParams& params, const char* op) {
    if (params.visible_size() + params.hidden_size() > kEnumerationGuard) {
        throw UsageError(std::string(op) + ": model too large for exact enumeration (I + J = " +
                         std::to_string(params.visible_size() + params.hidden_size()) +
                         " > " + std::to_string(kEnumerationGuard) + ")");
    }
}

// Streaming log-sum-exp accumulator; order of feeds is fixed by the caller.
class LogSumExp {
public:
    void add(double x) {
        if (sum_ == 0.0) {
            max_ = x;
            sum_ = 1.0;
            return;
        }
        if (x > max_) {
            sum_ = sum_ * std::exp(max_ - x) + 1.0;
            max_ = x;
        } else {
            sum_ += std::exp(x - max_);
        }
    }

    double value() const { return max_ + std::log(sum_); }

private:
    double max_ = 0.0;
    double sum_ = 0.0;
};

Eigen::VectorXd bits_to_vector(std::uint32_t mask, Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = static_cast<double>((mask >> i) & 1u);
    return v;
}

}  // namespace

RbmParams RbmParams::zeros(Eigen::Index visible, Eigen::Index hidden) {
    require(visible >= 1 && hidden >= 1, "RbmParams: need at least one visible and one hidden unit");
    RbmParams p;
    p.visible_bias = Eigen::VectorXd::Zero(visible);
    p.hidden_bias = Eigen::VectorXd::Zero(hidden);
    p.weights = Eigen::MatrixXd::Zero(visible, hidden);
    return p;
}

RbmParams RbmParams::gaussian_init(Eigen::Index visible, Eigen::Index hidden,
                                   double weight_stddev, Rng& rng) {
    RbmParams p = zeros(visible, hidden);
    std::normal_distribution<double> unit(0.0, 1.0);
    for (Eigen::Index j = 0; j < hidden; ++j)
        for (Eigen::Index i = 0; i < visible; ++i) p.weights(i, j) = weight_stddev * unit(rng);
    return p;
}

void RbmParams::check_consistent() const {
    require(visible_bias.size() >= 1 && hidden_bias.size() >= 1, "RbmParams: empty layer");
    require(weights.rows() == visible_bias.size() && weights.cols() == hidden_bias.size(),
            "RbmParams: weight matrix shape does not match bias lengths");
    require(visible_bias.allFinite() && hidden_bias.allFinite() && weights.allFinite(),
            "RbmParams: non-finite parameter entry");
}

void CdConfig::validate() const {
    if (learning_rate <= 0.0) throw UsageError("cd.learning_rate must be > 0");
    if (cd_steps < 1) throw UsageError("cd.steps must be >= 1");
    if (batch_size < 1) throw UsageError("cd.batch_size must be >= 1");
}

ParamDelta ParamDelta::zeros(Eigen::Index visible, Eigen::Index hidden) {
    ParamDelta d;
    d.visible_bias = Eigen::VectorXd::Zero(visible);
    d.hidden_bias = Eigen::VectorXd::Zero(hidden);
    d.weights = Eigen::MatrixXd::Zero(visible, hidden);
    return d;
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double energy(const RbmParams& params, const Eigen::VectorXd& v, const Eigen::VectorXd& h) {
    require(v.size() == params.visible_size(), "energy: visible state length mismatch");
    require(h.size() == params.hidden_size(), "energy: hidden state length mismatch");
    return -params.visible_bias.dot(v) - params.hidden_bias.dot(h) -
           v.dot(params.weights * h);
}

double energy(const RbmParams& params, const BinaryState& state) {
    return energy(params, state.visible, state.hidden);
}

double log_partition_exact(const RbmParams& params) {
    params.check_consistent();
    check_enumeration_guard(params, "log_partition_exact");
    const Eigen::Index visible = params.visible_size();
    const std::uint32_t count = 1u << visible;
    LogSumExp acc;
    for (std::uint32_t mask = 0; mask < count; ++mask) {
        const Eigen::VectorXd v = bits_to_vector(mask, visible);
        const Eigen::VectorXd act = params.hidden_bias + params.weights.transpose() * v;
        double term = params.visible_bias.dot(v);
        for (Eigen::Index j = 0; j < act.size(); ++j) term += softplus(act[j]);
        acc.add(term);
    }
    return acc.value();
}

double joint_probability(const RbmParams& params, const BinaryState& state) {
    return std::exp(-energy(params, state) - log_partition_exact(params));
}

Eigen::VectorXd hidden_conditional(const RbmParams& params, const Eigen::VectorXd& v) {
    require(v.size() == params.visible_size(), "hidden_conditional: input length mismatch");
    Eigen::VectorXd act = params.hidden_bias + params.weights.transpose() * v;
    for (Eigen::Index j = 0; j < act.size(); ++j) act[j] = sigmoid(act[j]);
    return act;
}

Eigen::VectorXd visible_conditional(const RbmParams& params, const Eigen::VectorXd& h) {
    require(h.size() == params.hidden_size(), "visible_conditional: input length mismatch");
    Eigen::VectorXd act = params.visible_bias + params.weights * h;
    for (Eigen::Index i = 0; i < act.size(); ++i) act[i] = sigmoid(act[i]);
    return act;
}

ParamDelta exact_loglik_gradient(const RbmParams& params,
                                 const std::vector<Eigen::VectorXd>& dataset) {
    check_enumeration_guard(params, "exact_loglik_gradient");
    const Eigen::Index visible = params.visible_size();
    const Eigen::Index hidden = params.hidden_size();

    ParamDelta data_term = ParamDelta::zeros(visible, hidden);
    for (const Eigen::VectorXd& v : dataset) {
        require(v.size() == visible, "exact_loglik_gradient: sample length mismatch");
        const Eigen::VectorXd ph = hidden_conditional(params, v);
        data_term.visible_bias += v;
        data_term.hidden_bias += ph;
        data_term.weights += v * ph.transpose();
    }

    // Model expectations: p(v) is proportional to exp(b.v + sum_j softplus(.)),
    // normalised over all 2^I visible states.
    const double log_z = log_partition_exact(params);
    ParamDelta model_term = ParamDelta::zeros(visible, hidden);
    const std::uint32_t count = 1u << visible;
    for (std::uint32_t mask = 0; mask < count; ++mask) {
        const Eigen::VectorXd v = bits_to_vector(mask, visible);
        const Eigen::VectorXd act = params.hidden_bias + params.weights.transpose() * v;
        double log_p = params.visible_bias.dot(v) - log_z;
        for (Eigen::Index j = 0; j < hidden; ++j) log_p += softplus(act[j]);
        const double p = std::exp(log_p);
        Eigen::VectorXd ph(hidden);
        for (Eigen::Index j = 0; j < hidden; ++j) ph[j] = sigmoid(act[j]);
        model_term.visible_bias += p * v;
        model_term.hidden_bias += p * ph;
        model_term.weights += p * (v * ph.transpose());
    }

    const double n = static_cast<double>(dataset.size());
    ParamDelta grad;
    grad.visible_bias = data_term.visible_bias - n * model_term.visible_bias;
    grad.hidden_bias = data_term.hidden_bias - n * model_term.hidden_bias;
    grad.weights = data_term.weights - n * model_term.weights;
    return grad;
}

CdStepResult cd_update(const RbmParams& params, const std::vector<Eigen::VectorXd>& batch,
                       const CdConfig& config, Rng& rng) {
    params.check_consistent();
    if (batch.empty()) throw UsageError("cd_update: empty batch");
    if (config.learning_rate < 0.0) throw UsageError("cd_update: negative learning rate");
    if (config.cd_steps < 1) throw UsageError("cd_update: cd_steps must be >= 1");

    const Eigen::Index visible = params.visible_size();
    const Eigen::Index hidden = params.hidden_size();
    ParamDelta positive = ParamDelta::zeros(visible, hidden);
    ParamDelta negative = ParamDelta::zeros(visible, hidden);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double energy_sum = 0.0;

    Eigen::VectorXd h_sample(hidden);
    for (const Eigen::VectorXd& v : batch) {
        require(v.size() == visible, "cd_update: sample length mismatch");
        check_unit_interval(v, "cd_update batch");

        const Eigen::VectorXd ph0 = hidden_conditional(params, v);
        positive.visible_bias += v;
        positive.hidden_bias += ph0;
        positive.weights += v * ph0.transpose();

        Eigen::VectorXd v_state = v;
        Eigen::VectorXd ph = ph0;
        for (int step = 0; step < config.cd_steps; ++step) {
            if (step > 0) ph = hidden_conditional(params, v_state);
            for (Eigen::Index j = 0; j < hidden; ++j)
                h_sample[j] = unit(rng) < ph[j] ? 1.0 : 0.0;
            v_state = visible_conditional(params, h_sample);
        }
        const Eigen::VectorXd ph_k = hidden_conditional(params, v_state);
        negative.visible_bias += v_state;
        negative.hidden_bias += ph_k;
        negative.weights += v_state * ph_k.transpose();
        energy_sum += energy(params, v_state, ph_k);
    }

    const double scale = config.learning_rate / static_cast<double>(batch.size());
    CdStepResult result;
    result.delta.visible_bias = scale * (positive.visible_bias - negative.visible_bias);
    result.delta.hidden_bias = scale * (positive.hidden_bias - negative.hidden_bias);
    result.delta.weights = scale * (positive.weights - negative.weights);
    result.params.visible_bias = params.visible_bias + result.delta.visible_bias;
    result.params.hidden_bias = params.hidden_bias + result.delta.hidden_bias;
    result.params.weights = params.weights + result.delta.weights;
    result.mean_reconstruction_energy = energy_sum / static_cast<double>(batch.size());
    return result;
}

}  // namespace adbn
