#include "qtcnn/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qtcnn/error.hpp"
#include "qtcnn/rng.hpp"

namespace qtcnn::nn {

namespace {

struct Dims {
    int w, f, c1, k1, c2, k2, h, out;
    int len1, pool1, len2, pool2, flat;

    explicit Dims(const CnnArchitecture& a)
        : w(a.window_frames), f(a.feature_width), c1(a.conv1_channels), k1(a.conv1_kernel),
          c2(a.conv2_channels), k2(a.conv2_kernel), h(a.hidden_units), out(a.output_units) {
        len1 = f - k1 + 1;
        pool1 = len1 / 2;
        len2 = pool1 - k2 + 1;
        pool2 = len2 / 2;
        flat = c2 * pool2;
    }
};

struct ThetaLayout {
    std::size_t conv1_w, conv1_b, conv2_w, conv2_b, fc1_w, fc1_b, fc2_w, fc2_b, total;

    explicit ThetaLayout(const Dims& d) {
        conv1_w = 0;
        conv1_b = conv1_w + static_cast<std::size_t>(d.c1) * d.w * d.k1;
        conv2_w = conv1_b + d.c1;
        conv2_b = conv2_w + static_cast<std::size_t>(d.c2) * d.c1 * d.k2;
        fc1_w = conv2_b + d.c2;
        fc1_b = fc1_w + static_cast<std::size_t>(d.h) * d.flat;
        fc2_w = fc1_b + d.h;
        fc2_b = fc2_w + static_cast<std::size_t>(d.out) * d.h;
        total = fc2_b + d.out;
    }
};

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Per-sample activations kept for the backward pass.
struct ForwardCache {
    std::vector<double> conv1_pre, pool1_out, conv2_pre, pool2_out, flat, fc1_pre, fc1_out;
    std::vector<int> pool1_arg, pool2_arg;
    double logit = 0.0;

    void resize(const Dims& d) {
        conv1_pre.assign(static_cast<std::size_t>(d.c1) * d.len1, 0.0);
        pool1_out.assign(static_cast<std::size_t>(d.c1) * d.pool1, 0.0);
        pool1_arg.assign(static_cast<std::size_t>(d.c1) * d.pool1, 0);
        conv2_pre.assign(static_cast<std::size_t>(d.c2) * d.len2, 0.0);
        pool2_out.assign(static_cast<std::size_t>(d.c2) * d.pool2, 0.0);
        pool2_arg.assign(static_cast<std::size_t>(d.c2) * d.pool2, 0);
        flat.assign(d.flat, 0.0);
        fc1_pre.assign(d.h, 0.0);
        fc1_out.assign(d.h, 0.0);
    }
};

double relu(double x) { return x > 0.0 ? x : 0.0; }

void forward_sample(const Dims& d, const ThetaLayout& lay, const ThetaVector& t,
                    const double* in, ForwardCache& c) {
    // conv1: input channels are the window frames
    for (int oc = 0; oc < d.c1; ++oc) {
        for (int x = 0; x < d.len1; ++x) {
            double acc = t[lay.conv1_b + oc];
            for (int ic = 0; ic < d.w; ++ic) {
                const double* wrow = &t[lay.conv1_w + (static_cast<std::size_t>(oc) * d.w + ic) * d.k1];
                const double* irow = in + static_cast<std::size_t>(ic) * d.f + x;
                for (int k = 0; k < d.k1; ++k) acc += wrow[k] * irow[k];
            }
            c.conv1_pre[static_cast<std::size_t>(oc) * d.len1 + x] = acc;
        }
    }
    // relu + max-pool 2 (floor: an odd tail element is dropped)
    for (int oc = 0; oc < d.c1; ++oc) {
        for (int x = 0; x < d.pool1; ++x) {
            const double a = relu(c.conv1_pre[static_cast<std::size_t>(oc) * d.len1 + 2 * x]);
            const double b = relu(c.conv1_pre[static_cast<std::size_t>(oc) * d.len1 + 2 * x + 1]);
            const int arg = b > a ? 1 : 0;
            c.pool1_out[static_cast<std::size_t>(oc) * d.pool1 + x] = arg ? b : a;
            c.pool1_arg[static_cast<std::size_t>(oc) * d.pool1 + x] = arg;
        }
    }
    // conv2
    for (int oc = 0; oc < d.c2; ++oc) {
        for (int x = 0; x < d.len2; ++x) {
            double acc = t[lay.conv2_b + oc];
            for (int ic = 0; ic < d.c1; ++ic) {
                const double* wrow = &t[lay.conv2_w + (static_cast<std::size_t>(oc) * d.c1 + ic) * d.k2];
                const double* irow = &c.pool1_out[static_cast<std::size_t>(ic) * d.pool1 + x];
                for (int k = 0; k < d.k2; ++k) acc += wrow[k] * irow[k];
            }
            c.conv2_pre[static_cast<std::size_t>(oc) * d.len2 + x] = acc;
        }
    }
    for (int oc = 0; oc < d.c2; ++oc) {
        for (int x = 0; x < d.pool2; ++x) {
            const double a = relu(c.conv2_pre[static_cast<std::size_t>(oc) * d.len2 + 2 * x]);
            const double b = relu(c.conv2_pre[static_cast<std::size_t>(oc) * d.len2 + 2 * x + 1]);
            const int arg = b > a ? 1 : 0;
            c.pool2_out[static_cast<std::size_t>(oc) * d.pool2 + x] = arg ? b : a;
            c.pool2_arg[static_cast<std::size_t>(oc) * d.pool2 + x] = arg;
        }
    }
    // flatten channel-major
    for (int oc = 0; oc < d.c2; ++oc) {
        for (int x = 0; x < d.pool2; ++x) {
            c.flat[static_cast<std::size_t>(oc) * d.pool2 + x] =
                c.pool2_out[static_cast<std::size_t>(oc) * d.pool2 + x];
        }
    }
    // fc1 + relu
    for (int j = 0; j < d.h; ++j) {
        double acc = t[lay.fc1_b + j];
        const double* wrow = &t[lay.fc1_w + static_cast<std::size_t>(j) * d.flat];
        for (int i = 0; i < d.flat; ++i) acc += wrow[i] * c.flat[i];
        c.fc1_pre[j] = acc;
        c.fc1_out[j] = relu(acc);
    }
    // fc2 (single logit)
    double logit = t[lay.fc2_b];
    for (int j = 0; j < d.h; ++j) logit += t[lay.fc2_w + j] * c.fc1_out[j];
    c.logit = logit;
}

// Accumulates dL/dtheta for one sample given dL/dlogit.
void backward_sample(const Dims& d, const ThetaLayout& lay, const ThetaVector& t,
                     const double* in, const ForwardCache& c, double dlogit,
                     ThetaVector& grad, std::vector<double>& dfc1, std::vector<double>& dflat,
                     std::vector<double>& dpool1) {
    // fc2
    grad[lay.fc2_b] += dlogit;
    for (int j = 0; j < d.h; ++j) {
        grad[lay.fc2_w + j] += dlogit * c.fc1_out[j];
        dfc1[j] = dlogit * t[lay.fc2_w + j];
    }
    // fc1
    std::fill(dflat.begin(), dflat.end(), 0.0);
    for (int j = 0; j < d.h; ++j) {
        const double dpre = c.fc1_pre[j] > 0.0 ? dfc1[j] : 0.0;
        if (dpre == 0.0) continue;
        grad[lay.fc1_b + j] += dpre;
        const double* wrow = &t[lay.fc1_w + static_cast<std::size_t>(j) * d.flat];
        double* grow = &grad[lay.fc1_w + static_cast<std::size_t>(j) * d.flat];
        for (int i = 0; i < d.flat; ++i) {
            grow[i] += dpre * c.flat[i];
            dflat[i] += dpre * wrow[i];
        }
    }
    // pool2 + relu + conv2
    std::fill(dpool1.begin(), dpool1.end(), 0.0);
    for (int oc = 0; oc < d.c2; ++oc) {
        for (int x = 0; x < d.pool2; ++x) {
            const double dp = dflat[static_cast<std::size_t>(oc) * d.pool2 + x];
            if (dp == 0.0) continue;
            const int pos = 2 * x + c.pool2_arg[static_cast<std::size_t>(oc) * d.pool2 + x];
            if (c.conv2_pre[static_cast<std::size_t>(oc) * d.len2 + pos] <= 0.0) continue;
            // conv2 backward at (oc, pos)
            grad[lay.conv2_b + oc] += dp;
            for (int ic = 0; ic < d.c1; ++ic) {
                const double* wrow =
                    &t[lay.conv2_w + (static_cast<std::size_t>(oc) * d.c1 + ic) * d.k2];
                double* grow =
                    &grad[lay.conv2_w + (static_cast<std::size_t>(oc) * d.c1 + ic) * d.k2];
                const double* irow = &c.pool1_out[static_cast<std::size_t>(ic) * d.pool1 + pos];
                double* drow = &dpool1[static_cast<std::size_t>(ic) * d.pool1 + pos];
                for (int k = 0; k < d.k2; ++k) {
                    grow[k] += dp * irow[k];
                    drow[k] += dp * wrow[k];
                }
            }
        }
    }
    // pool1 + relu + conv1
    for (int oc = 0; oc < d.c1; ++oc) {
        for (int x = 0; x < d.pool1; ++x) {
            const double dp = dpool1[static_cast<std::size_t>(oc) * d.pool1 + x];
            if (dp == 0.0) continue;
            const int pos = 2 * x + c.pool1_arg[static_cast<std::size_t>(oc) * d.pool1 + x];
            if (c.conv1_pre[static_cast<std::size_t>(oc) * d.len1 + pos] <= 0.0) continue;
            grad[lay.conv1_b + oc] += dp;
            for (int ic = 0; ic < d.w; ++ic) {
                double* grow =
                    &grad[lay.conv1_w + (static_cast<std::size_t>(oc) * d.w + ic) * d.k1];
                const double* irow = in + static_cast<std::size_t>(ic) * d.f + pos;
                for (int k = 0; k < d.k1; ++k) grow[k] += dp * irow[k];
            }
        }
    }
}

std::size_t check_batch(const CnnArchitecture& arch, const std::vector<double>& batch) {
    const std::size_t sample =
        static_cast<std::size_t>(arch.window_frames) * arch.feature_width;
    if (sample == 0 || batch.empty() || batch.size() % sample != 0) {
        throw InvalidArgument("batch size " + std::to_string(batch.size()) +
                              " is not a multiple of the window size " + std::to_string(sample));
    }
    return batch.size() / sample;
}

}  // namespace

int CnnArchitecture::flatten_size() const {
    int channels = window_frames;
    int length = feature_width;
    if (conv1_channels > 0) {
        channels = conv1_channels;
        length = (length - conv1_kernel + 1) / 2;
    }
    if (conv2_channels > 0) {
        channels = conv2_channels;
        length = (length - conv2_kernel + 1) / 2;
    }
    return channels * length;
}

std::array<std::size_t, 4> CnnArchitecture::group_sizes() const {
    const int c_in2 = conv1_channels > 0 ? conv1_channels : window_frames;
    const std::size_t conv1 =
        static_cast<std::size_t>(conv1_channels) * (window_frames * conv1_kernel + 1);
    const std::size_t conv2 = static_cast<std::size_t>(conv2_channels) * (c_in2 * conv2_kernel + 1);
    const std::size_t fc1 = static_cast<std::size_t>(hidden_units) * (flatten_size() + 1);
    const std::size_t fc2 = static_cast<std::size_t>(output_units) * (hidden_units + 1);
    return {conv1, conv2, fc1, fc2};
}

std::size_t CnnArchitecture::param_count() const {
    const auto g = group_sizes();
    return g[0] + g[1] + g[2] + g[3];
}

void CnnArchitecture::validate_runnable() const {
    const Dims d(*this);
    if (d.w < 1 || d.f < 1 || d.c1 < 1 || d.c2 < 1 || d.h < 1 || d.out != 1 || d.k1 < 1 ||
        d.k2 < 1 || d.len1 < 2 || d.len2 < 2) {
        throw InvalidArgument("architecture has a degenerate stage and cannot be executed");
    }
}

std::size_t count_cnn_params(const CnnArchitecture& arch) { return arch.param_count(); }

ThetaVector init_theta(const CnnArchitecture& arch, std::uint64_t seed) {
    arch.validate_runnable();
    const Dims d(arch);
    const ThetaLayout lay(d);
    ThetaVector theta(lay.total, 0.0);
    Rng rng(seed);
    auto fill = [&](std::size_t begin, std::size_t count, int fan_in, int fan_out) {
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        for (std::size_t i = 0; i < count; ++i) theta[begin + i] = rng.uniform(-bound, bound);
    };
    fill(lay.conv1_w, lay.conv1_b - lay.conv1_w, d.w * d.k1, d.c1 * d.k1);
    fill(lay.conv2_w, lay.conv2_b - lay.conv2_w, d.c1 * d.k2, d.c2 * d.k2);
    fill(lay.fc1_w, lay.fc1_b - lay.fc1_w, d.flat, d.h);
    fill(lay.fc2_w, lay.fc2_b - lay.fc2_w, d.h, d.out);
    return theta;
}

std::vector<double> cnn_forward(const CnnArchitecture& arch, const ThetaVector& theta,
                                const std::vector<double>& batch) {
    arch.validate_runnable();
    const Dims d(arch);
    const ThetaLayout lay(d);
    if (theta.size() != lay.total) {
        throw InvalidArgument("theta length " + std::to_string(theta.size()) + " != " +
                              std::to_string(lay.total));
    }
    const std::size_t n = check_batch(arch, batch);
    const std::size_t sample = static_cast<std::size_t>(d.w) * d.f;

    std::vector<double> predictions(n);
    ForwardCache cache;
    cache.resize(d);
    for (std::size_t s = 0; s < n; ++s) {
        forward_sample(d, lay, theta, batch.data() + s * sample, cache);
        predictions[s] = sigmoid(cache.logit);
    }
    return predictions;
}

BackwardResult cnn_backward(const CnnArchitecture& arch, const ThetaVector& theta,
                            const std::vector<double>& batch, const std::vector<int>& labels) {
    arch.validate_runnable();
    const Dims d(arch);
    const ThetaLayout lay(d);
    if (theta.size() != lay.total) {
        throw InvalidArgument("theta length " + std::to_string(theta.size()) + " != " +
                              std::to_string(lay.total));
    }
    const std::size_t n = check_batch(arch, batch);
    if (labels.size() != n) {
        throw InvalidArgument("labels length " + std::to_string(labels.size()) +
                              " != batch size " + std::to_string(n));
    }
    for (int y : labels) {
        if (y != 0 && y != 1) {
            throw InvalidArgument("labels must be 0 or 1, got " + std::to_string(y));
        }
    }

    const std::size_t sample = static_cast<std::size_t>(d.w) * d.f;
    BackwardResult res;
    res.predictions.resize(n);
    res.grad.assign(lay.total, 0.0);

    ForwardCache cache;
    cache.resize(d);
    std::vector<double> dfc1(d.h), dflat(d.flat), dpool1(static_cast<std::size_t>(d.c1) * d.pool1);
    for (std::size_t s = 0; s < n; ++s) {
        const double* in = batch.data() + s * sample;
        forward_sample(d, lay, theta, in, cache);
        const double yhat = sigmoid(cache.logit);
        res.predictions[s] = yhat;
        // d(mean BCE)/dlogit through the sigmoid
        const double dlogit = (yhat - labels[s]) / static_cast<double>(n);
        backward_sample(d, lay, theta, in, cache, dlogit, res.grad, dfc1, dflat, dpool1);
    }
    res.loss = bce_loss(labels, res.predictions);
    return res;
}

double bce_loss(const std::vector<int>& labels, const std::vector<double>& predictions) {
    if (labels.size() != predictions.size() || labels.empty()) {
        throw InvalidArgument("labels and predictions must have equal non-zero length");
    }
    constexpr double eps = 1e-12;
    double total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double p = std::clamp(predictions[i], eps, 1.0 - eps);
        total += labels[i] == 1 ? -std::log(p) : -std::log(1.0 - p);
    }
    return total / static_cast<double>(labels.size());
}

void adam_step(AdamState& state, std::vector<double>& params, const std::vector<double>& grads) {
    if (params.size() != state.m.size() || grads.size() != state.m.size()) {
        throw InvalidArgument("optimizer state, params and grads must have equal lengths");
    }
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (!std::isfinite(grads[i])) {
            throw NumericError("non-finite gradient at component " + std::to_string(i));
        }
    }
    state.step_count += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    }
}

}  // namespace qtcnn::nn
