#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "qtcnn/nn.hpp"
#include "qtcnn/qsim.hpp"

namespace qtcnn::qtcore {

// Two-layer feed-forward mapping network: tanh hidden layer, linear scalar
// output. Turns (basis bits, measurement probability) into one unbounded
// CNN parameter. gamma layout: W1 (hidden x n_inputs, row-major), b1, w2, b2.
struct MappingModel {
    int n_inputs = 0;
    int hidden = 0;
    std::vector<double> gamma;

    MappingModel(int inputs, int hidden_width, std::vector<double> weights);

    static std::size_t expected_params(int inputs, int hidden_width) {
        return static_cast<std::size_t>(inputs) * hidden_width + hidden_width + hidden_width + 1;
    }
    static MappingModel zeros(int inputs, int hidden_width);
    // Glorot-uniform weights, zero biases, deterministic under seed.
    static MappingModel init(int inputs, int hidden_width, std::uint64_t seed);

    std::size_t param_count() const { return gamma.size(); }
};

// Per-layer-group affine adjustment applied after the mapping model:
// theta_i = scale[g] * G(x_i) + shift[g]. Four groups (conv1, conv2, fc1,
// fc2; weights and biases share a group), 8 parameters.
struct ScalingModel {
    std::array<double, 4> scale{1.0, 1.0, 1.0, 1.0};
    std::array<double, 4> shift{0.0, 0.0, 0.0, 0.0};

    static constexpr std::size_t param_count() { return 8; }
};

// Contiguous theta index ranges of the four CNN layer groups.
struct LayerGroups {
    std::array<std::size_t, 4> sizes{0, 0, 0, 0};

    static LayerGroups from_architecture(const nn::CnnArchitecture& arch) {
        return LayerGroups{arch.group_sizes()};
    }
    std::size_t total() const { return sizes[0] + sizes[1] + sizes[2] + sizes[3]; }
    int group_of(std::size_t index) const;
};

// ceil(log2 m); the number of qubits needed to index m parameters.
// Returns 1 for m = 1.
int required_qubits(std::size_t m);

// [bits of basis_index, big-endian over N positions, probability].
std::vector<double> build_mapping_input(std::size_t basis_index, double probability,
                                        int n_qubits);

double mapping_forward(const MappingModel& model, const std::vector<double>& input);

// Forward values retained for the backward pass.
struct GenerationCache {
    qsim::QnnConfig config;
    qsim::PhiVector phi;
    MappingModel mapping = MappingModel::zeros(1, 1);
    ScalingModel scaling;
    LayerGroups groups;
    std::vector<double> probabilities;  // 2^N
    std::vector<double> hidden;         // M x H tanh activations
    std::vector<double> raw_outputs;    // M mapping outputs G(x_i)

    bool valid() const { return !probabilities.empty(); }
};

struct GenerationResult {
    nn::ThetaVector theta;
    GenerationCache cache;
};

// Runs the QNN, maps basis states 0..M-1 through the mapping model and the
// scaling model. Basis states M..2^N-1 are computed but unused.
GenerationResult generate_theta_cached(const qsim::QnnConfig& config, const qsim::PhiVector& phi,
                                       const MappingModel& mapping, const ScalingModel& scaling,
                                       const LayerGroups& groups);

nn::ThetaVector generate_theta(const qsim::QnnConfig& config, const qsim::PhiVector& phi,
                               const MappingModel& mapping, const ScalingModel& scaling,
                               const nn::CnnArchitecture& arch);

struct GenerationGradients {
    std::vector<double> phi;
    std::vector<double> gamma;
    std::array<double, 4> scale{0.0, 0.0, 0.0, 0.0};
    std::array<double, 4> shift{0.0, 0.0, 0.0, 0.0};
};

// Chain rule from dL/dtheta back to (phi, gamma, scaling). Cotangents of the
// unused basis states are zero.
GenerationGradients backprop_generation(const std::vector<double>& dl_dtheta,
                                        const GenerationCache& cache);

std::size_t count_qt_params(const qsim::QnnConfig& config, const MappingModel& mapping,
                            const ScalingModel& scaling);

}  // namespace qtcnn::qtcore
