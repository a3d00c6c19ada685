#include "qtcnn/qtcore.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "qtcnn/error.hpp"
#include "qtcnn/rng.hpp"

namespace qtcnn::qtcore {

namespace {

// Offsets into the flat gamma vector.
struct GammaLayout {
    std::size_t w1, b1, w2, b2;

    GammaLayout(int inputs, int hidden) {
        w1 = 0;
        b1 = static_cast<std::size_t>(hidden) * inputs;
        w2 = b1 + hidden;
        b2 = w2 + hidden;
    }
};

void check_input_width(const MappingModel& model, std::size_t width) {
    if (width != static_cast<std::size_t>(model.n_inputs)) {
        throw InvalidArgument("mapping input width " + std::to_string(width) +
                              " != model width " + std::to_string(model.n_inputs));
    }
}

}  // namespace

MappingModel::MappingModel(int inputs, int hidden_width, std::vector<double> weights)
    : n_inputs(inputs), hidden(hidden_width), gamma(std::move(weights)) {
    if (inputs < 1 || hidden_width < 1) {
        throw InvalidArgument("mapping model needs positive input and hidden widths");
    }
    if (gamma.size() != expected_params(inputs, hidden_width)) {
        throw InvalidArgument("gamma length " + std::to_string(gamma.size()) + " != " +
                              std::to_string(expected_params(inputs, hidden_width)));
    }
}

MappingModel MappingModel::zeros(int inputs, int hidden_width) {
    return MappingModel(inputs, hidden_width,
                        std::vector<double>(expected_params(inputs, hidden_width), 0.0));
}

MappingModel MappingModel::init(int inputs, int hidden_width, std::uint64_t seed) {
    std::vector<double> gamma(expected_params(inputs, hidden_width), 0.0);
    const GammaLayout lay(inputs, hidden_width);
    Rng rng(seed);
    const double bound1 = std::sqrt(6.0 / (inputs + hidden_width));
    for (std::size_t i = lay.w1; i < lay.b1; ++i) gamma[i] = rng.uniform(-bound1, bound1);
    const double bound2 = std::sqrt(6.0 / (hidden_width + 1));
    for (std::size_t i = lay.w2; i < lay.b2; ++i) gamma[i] = rng.uniform(-bound2, bound2);
    return MappingModel(inputs, hidden_width, std::move(gamma));
}

int LayerGroups::group_of(std::size_t index) const {
    std::size_t end = 0;
    for (int g = 0; g < 4; ++g) {
        end += sizes[g];
        if (index < end) return g;
    }
    throw InvalidArgument("theta index " + std::to_string(index) + " outside all layer groups");
}

int required_qubits(std::size_t m) {
    if (m == 0) throw InvalidArgument("parameter count must be positive");
    int n = 1;
    while ((std::size_t{1} << n) < m) ++n;
    return n;
}

std::vector<double> build_mapping_input(std::size_t basis_index, double probability,
                                        int n_qubits) {
    if (n_qubits < 1) throw InvalidArgument("n_qubits must be >= 1");
    if (basis_index >= (std::size_t{1} << n_qubits)) {
        throw InvalidArgument("basis index " + std::to_string(basis_index) +
                              " out of range for " + std::to_string(n_qubits) + " qubits");
    }
    if (probability < 0.0 || probability > 1.0) {
        throw InvalidArgument("probability " + std::to_string(probability) + " outside [0, 1]");
    }
    std::vector<double> input(static_cast<std::size_t>(n_qubits) + 1);
    for (int q = 0; q < n_qubits; ++q) {
        input[q] = static_cast<double>(qsim::basis_bit(basis_index, q, n_qubits));
    }
    input[n_qubits] = probability;
    return input;
}

double mapping_forward(const MappingModel& model, const std::vector<double>& input) {
    check_input_width(model, input.size());
    const GammaLayout lay(model.n_inputs, model.hidden);
    double out = model.gamma[lay.b2];
    for (int j = 0; j < model.hidden; ++j) {
        double pre = model.gamma[lay.b1 + j];
        const double* wrow = &model.gamma[lay.w1 + static_cast<std::size_t>(j) * model.n_inputs];
        for (int k = 0; k < model.n_inputs; ++k) pre += wrow[k] * input[k];
        out += model.gamma[lay.w2 + j] * std::tanh(pre);
    }
    return out;
}

GenerationResult generate_theta_cached(const qsim::QnnConfig& config, const qsim::PhiVector& phi,
                                       const MappingModel& mapping, const ScalingModel& scaling,
                                       const LayerGroups& groups) {
    const std::size_t m = groups.total();
    if (m == 0) throw InvalidArgument("layer groups are empty");
    if (config.dim() < m) {
        throw CapacityError("2^" + std::to_string(config.n_qubits) + " basis states cannot hold " +
                            std::to_string(m) + " parameters");
    }
    if (mapping.n_inputs != config.n_qubits + 1) {
        throw InvalidArgument("mapping input width " + std::to_string(mapping.n_inputs) +
                              " != n_qubits + 1 = " + std::to_string(config.n_qubits + 1));
    }

    GenerationResult res;
    res.cache.config = config;
    res.cache.phi = phi;
    res.cache.mapping = mapping;
    res.cache.scaling = scaling;
    res.cache.groups = groups;
    res.cache.probabilities = qsim::run_qnn(config, phi);
    res.cache.hidden.resize(m * static_cast<std::size_t>(mapping.hidden));
    res.cache.raw_outputs.resize(m);
    res.theta.resize(m);

    const GammaLayout lay(mapping.n_inputs, mapping.hidden);
    const int n = config.n_qubits;
    std::size_t group_end = groups.sizes[0];
    int group = 0;
    for (std::size_t i = 0; i < m; ++i) {
        while (i >= group_end) group_end += groups.sizes[++group];
        // clamp away the last-bit rounding of the simulator
        const double p = std::clamp(res.cache.probabilities[i], 0.0, 1.0);
        double out = mapping.gamma[lay.b2];
        double* hrow = &res.cache.hidden[i * static_cast<std::size_t>(mapping.hidden)];
        for (int j = 0; j < mapping.hidden; ++j) {
            double pre = mapping.gamma[lay.b1 + j];
            const double* wrow =
                &mapping.gamma[lay.w1 + static_cast<std::size_t>(j) * mapping.n_inputs];
            for (int q = 0; q < n; ++q) {
                pre += wrow[q] * static_cast<double>(qsim::basis_bit(i, q, n));
            }
            pre += wrow[n] * p;
            hrow[j] = std::tanh(pre);
            out += mapping.gamma[lay.w2 + j] * hrow[j];
        }
        res.cache.raw_outputs[i] = out;
        res.theta[i] = scaling.scale[group] * out + scaling.shift[group];
    }
    return res;
}

nn::ThetaVector generate_theta(const qsim::QnnConfig& config, const qsim::PhiVector& phi,
                               const MappingModel& mapping, const ScalingModel& scaling,
                               const nn::CnnArchitecture& arch) {
    return generate_theta_cached(config, phi, mapping, scaling,
                                 LayerGroups::from_architecture(arch))
        .theta;
}

GenerationGradients backprop_generation(const std::vector<double>& dl_dtheta,
                                        const GenerationCache& cache) {
    if (!cache.valid()) {
        throw StateError("backprop_generation called without a generation cache");
    }
    const std::size_t m = cache.groups.total();
    if (dl_dtheta.size() != m) {
        throw InvalidArgument("dL/dtheta length " + std::to_string(dl_dtheta.size()) + " != " +
                              std::to_string(m));
    }

    const MappingModel& mapping = cache.mapping;
    const GammaLayout lay(mapping.n_inputs, mapping.hidden);
    const int n = cache.config.n_qubits;

    GenerationGradients grads;
    grads.gamma.assign(mapping.gamma.size(), 0.0);
    std::vector<double> dl_dp(cache.config.dim(), 0.0);

    std::size_t group_end = cache.groups.sizes[0];
    int group = 0;
    for (std::size_t i = 0; i < m; ++i) {
        while (i >= group_end) group_end += cache.groups.sizes[++group];
        const double dtheta = dl_dtheta[i];
        if (dtheta == 0.0) continue;
        const double raw = cache.raw_outputs[i];
        grads.shift[group] += dtheta;
        grads.scale[group] += dtheta * raw;

        // through the mapping network
        const double dout = dtheta * cache.scaling.scale[group];
        if (dout == 0.0) continue;
        const double p = std::clamp(cache.probabilities[i], 0.0, 1.0);
        const double* hrow = &cache.hidden[i * static_cast<std::size_t>(mapping.hidden)];
        grads.gamma[lay.b2] += dout;
        double dp = 0.0;
        for (int j = 0; j < mapping.hidden; ++j) {
            grads.gamma[lay.w2 + j] += dout * hrow[j];
            const double dpre = dout * mapping.gamma[lay.w2 + j] * (1.0 - hrow[j] * hrow[j]);
            grads.gamma[lay.b1 + j] += dpre;
            double* grow = &grads.gamma[lay.w1 + static_cast<std::size_t>(j) * mapping.n_inputs];
            const double* wrow =
                &mapping.gamma[lay.w1 + static_cast<std::size_t>(j) * mapping.n_inputs];
            for (int q = 0; q < n; ++q) {
                grow[q] += dpre * static_cast<double>(qsim::basis_bit(i, q, n));
            }
            grow[n] += dpre * p;
            dp += dpre * wrow[n];
        }
        dl_dp[i] = dp;
    }

    grads.phi = qsim::grad_probabilities(cache.config, cache.phi, dl_dp);
    return grads;
}

std::size_t count_qt_params(const qsim::QnnConfig& config, const MappingModel& mapping,
                            const ScalingModel& scaling) {
    return config.n_params() + mapping.param_count() + scaling.param_count();
}

}  // namespace qtcnn::qtcore
