#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace qtcnn::nn {

// 1-D CNN over the feature axis of a window: the w frames act as input
// channels, the F_in features as the spatial dimension.
//
//   conv1 (valid, stride 1, ReLU) -> max-pool 2 -> conv2 (ReLU) ->
//   max-pool 2 -> flatten -> fc1 (ReLU) -> fc2 -> sigmoid
//
// Defaults reproduce a 3373-parameter network:
//   conv1 13*(5*3+1)=208, conv2 2*(13*3+1)=80, fc1 257*11=2827, fc2 258.
struct CnnArchitecture {
    int window_frames = 5;
    int feature_width = 26;
    int conv1_channels = 13;
    int conv1_kernel = 3;
    int conv2_channels = 2;
    int conv2_kernel = 3;
    int hidden_units = 257;
    int output_units = 1;

    // Zero-channel conv stages count as skipped (identity) so degenerate
    // shapes can still be sized.
    int flatten_size() const;
    std::size_t param_count() const;

    // Parameter counts of the four layer groups, in theta order:
    // conv1 (weights+bias), conv2, fc1, fc2.
    std::array<std::size_t, 4> group_sizes() const;

    // Throws InvalidArgument unless every stage has positive dimensions.
    void validate_runnable() const;

    bool operator==(const CnnArchitecture&) const = default;
};

std::size_t count_cnn_params(const CnnArchitecture& arch);

// Flattened parameters in fixed layer order:
// conv1 W[oc][ic][k], conv1 b, conv2 W, conv2 b, fc1 W[h][flat], fc1 b,
// fc2 W[out][h], fc2 b.
using ThetaVector = std::vector<double>;

// Glorot-uniform weights, zero biases, deterministic under seed.
ThetaVector init_theta(const CnnArchitecture& arch, std::uint64_t seed);

// Batch is row-major: n_samples rows of window_frames * feature_width
// values, frame-major within a row.
std::vector<double> cnn_forward(const CnnArchitecture& arch, const ThetaVector& theta,
                                const std::vector<double>& batch);

struct BackwardResult {
    double loss = 0.0;
    std::vector<double> predictions;
    ThetaVector grad;
};

// Mean binary cross-entropy over the batch and its exact gradient with
// respect to every theta component.
BackwardResult cnn_backward(const CnnArchitecture& arch, const ThetaVector& theta,
                            const std::vector<double>& batch, const std::vector<int>& labels);

// Mean of -[y log yhat + (1-y) log(1-yhat)] with yhat clamped to
// [1e-12, 1 - 1e-12].
double bce_loss(const std::vector<int>& labels, const std::vector<double>& predictions);

// Adaptive-moment optimizer state over one flat parameter vector.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t step_count = 0;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    explicit AdamState(std::size_t n_params, double lr = 1e-3)
        : m(n_params, 0.0), v(n_params, 0.0), learning_rate(lr) {}
};

// One bias-corrected update, in place. Throws NumericError on non-finite
// gradient entries.
void adam_step(AdamState& state, std::vector<double>& params, const std::vector<double>& grads);

}  // namespace qtcnn::nn
