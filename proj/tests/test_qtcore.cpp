#include <doctest.h>

#include <cmath>
#include <vector>

#include "qtcnn/error.hpp"
#include "qtcnn/qtcore.hpp"
#include "qtcnn/rng.hpp"
#include "test_util.hpp"

using namespace qtcnn;
using namespace qtcnn::qtcore;
using qtcnn::testing::close_rel;
using qtcnn::testing::finite_difference;

namespace {

// Straight-line re-evaluation of the two-layer mapping network, kept
// independent of mapping_forward. gamma layout: W1 | b1 | w2 | b2.
double mapping_oracle(int n_inputs, int hidden, const std::vector<double>& gamma,
                      const std::vector<double>& x) {
    const std::size_t w1 = 0;
    const std::size_t b1 = static_cast<std::size_t>(hidden) * n_inputs;
    const std::size_t w2 = b1 + hidden;
    const std::size_t b2 = w2 + hidden;
    double out = gamma[b2];
    for (int j = 0; j < hidden; ++j) {
        double pre = gamma[b1 + j];
        for (int k = 0; k < n_inputs; ++k) pre += gamma[w1 + j * n_inputs + k] * x[k];
        out += gamma[w2 + j] * std::tanh(pre);
    }
    return out;
}

// Whole generation chain evaluated from scratch for one theta index:
// run the circuit, build the input, map, scale. Used as the brute-force
// oracle on toy instances.
double chain_oracle(const qsim::QnnConfig& config, const qsim::PhiVector& phi,
                    const MappingModel& mapping, const ScalingModel& scaling,
                    const LayerGroups& groups, std::size_t index) {
    const auto probs = qsim::run_qnn(config, phi);
    const auto x = build_mapping_input(index, probs[index], config.n_qubits);
    const double g = mapping_oracle(mapping.n_inputs, mapping.hidden, mapping.gamma, x);
    const int group = groups.group_of(index);
    return scaling.scale[group] * g + scaling.shift[group];
}

MappingModel random_mapping(int n_inputs, int hidden, Rng& rng) {
    std::vector<double> gamma(MappingModel::expected_params(n_inputs, hidden));
    for (double& g : gamma) g = rng.uniform(-1.0, 1.0);
    return MappingModel(n_inputs, hidden, std::move(gamma));
}

}  // namespace

TEST_CASE("required_qubits") {
    CHECK(required_qubits(3373) == 12);
    CHECK(required_qubits(2) == 1);
    CHECK(required_qubits(4097) == 13);
    CHECK(required_qubits(1) == 1);
    CHECK(required_qubits(4096) == 12);
    CHECK_THROWS_AS(required_qubits(0), InvalidArgument);
}

TEST_CASE("build_mapping_input") {
    SUBCASE("7-qubit bitstring 0100100 with its probability") {
        const auto x = build_mapping_input(0b0100100, 0.023, 7);
        const std::vector<double> expected{0, 1, 0, 0, 1, 0, 0, 0.023};
        CHECK(x == expected);
    }
    SUBCASE("index 0 is the all-zero bitstring") {
        const auto x = build_mapping_input(0, 1.0, 3);
        CHECK(x == std::vector<double>{0, 0, 0, 1.0});
    }
    SUBCASE("index 5 over 3 bits") {
        const auto x = build_mapping_input(5, 0.25, 3);
        CHECK(x == std::vector<double>{1, 0, 1, 0.25});
    }
    SUBCASE("probability outside [0, 1]") {
        CHECK_THROWS_AS(build_mapping_input(0, 1.5, 3), InvalidArgument);
        CHECK_THROWS_AS(build_mapping_input(0, -0.1, 3), InvalidArgument);
    }
}

TEST_CASE("mapping_forward") {
    SUBCASE("zero network maps everything to 0") {
        const auto model = MappingModel::zeros(4, 3);
        CHECK(mapping_forward(model, {1.0, 0.0, 1.0, 0.5}) == 0.0);
    }
    SUBCASE("output bias passes through") {
        auto model = MappingModel::zeros(4, 3);
        model.gamma.back() = 2.5;
        CHECK(mapping_forward(model, {1.0, 1.0, 0.0, 0.9}) == doctest::Approx(2.5));
    }
    SUBCASE("agrees with the straight-line oracle") {
        Rng rng(13);
        for (int trial = 0; trial < 8; ++trial) {
            const int n_inputs = 2 + static_cast<int>(rng.below(5));
            const int hidden = 1 + static_cast<int>(rng.below(4));
            const MappingModel model = random_mapping(n_inputs, hidden, rng);
            std::vector<double> x(n_inputs);
            for (double& v : x) v = rng.uniform(0.0, 1.0);
            CHECK(mapping_forward(model, x) ==
                  doctest::Approx(mapping_oracle(n_inputs, hidden, model.gamma, x))
                      .epsilon(1e-12));
        }
    }
    SUBCASE("width mismatch") {
        const auto model = MappingModel::zeros(4, 3);
        CHECK_THROWS_AS(mapping_forward(model, {1.0, 0.0}), InvalidArgument);
    }
    SUBCASE("parameter count is 301 for the 12-qubit, width-20 model") {
        CHECK(MappingModel::expected_params(13, 20) == 301);
        CHECK(MappingModel::init(13, 20, 1).param_count() == 301);
    }
}

TEST_CASE("generate_theta") {
    const qsim::QnnConfig config(2, 1);
    const LayerGroups groups{{1, 1, 1, 1}};

    SUBCASE("zero mapping with unit scaling gives zero theta") {
        const auto res = generate_theta_cached(config, {0.4, -0.7}, MappingModel::zeros(3, 2),
                                               ScalingModel{}, groups);
        CHECK(res.theta == std::vector<double>{0, 0, 0, 0});
    }
    SUBCASE("shifts pass through a zero mapping per group") {
        ScalingModel scaling;
        scaling.shift = {1.0, -2.0, 3.0, 0.25};
        const auto res = generate_theta_cached(config, {0.4, -0.7}, MappingModel::zeros(3, 2),
                                               scaling, groups);
        CHECK(res.theta == std::vector<double>{1.0, -2.0, 3.0, 0.25});
    }
    SUBCASE("matches the brute-force chain oracle on a 4-parameter toy") {
        Rng rng(3);
        const MappingModel mapping = random_mapping(3, 2, rng);
        ScalingModel scaling;
        for (auto& s : scaling.scale) s = rng.uniform(0.5, 2.0);
        for (auto& s : scaling.shift) s = rng.uniform(-1.0, 1.0);
        const qsim::PhiVector phi{0.9, -1.3};
        const auto res = generate_theta_cached(config, phi, mapping, scaling, groups);
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(res.theta[i] ==
                  doctest::Approx(chain_oracle(config, phi, mapping, scaling, groups, i))
                      .epsilon(1e-12));
        }
    }
    SUBCASE("capacity error when 2^N < M") {
        const LayerGroups too_big{{3, 1, 1, 1}};
        CHECK_THROWS_AS(generate_theta_cached(config, {0.0, 0.0}, MappingModel::zeros(3, 2),
                                              ScalingModel{}, too_big),
                        CapacityError);
    }
    SUBCASE("theta is deterministic") {
        Rng rng(19);
        const MappingModel mapping = random_mapping(3, 2, rng);
        const qsim::PhiVector phi{0.2, 0.8};
        const auto a = generate_theta_cached(config, phi, mapping, ScalingModel{}, groups);
        const auto b = generate_theta_cached(config, phi, mapping, ScalingModel{}, groups);
        CHECK(a.theta == b.theta);
    }
    SUBCASE("sign flexibility: generated theta can be negative and positive") {
        Rng rng(8);
        bool saw_positive = false;
        bool saw_negative = false;
        for (int trial = 0; trial < 10 && !(saw_positive && saw_negative); ++trial) {
            const MappingModel mapping = random_mapping(3, 2, rng);
            qsim::PhiVector phi{rng.uniform(-M_PI, M_PI), rng.uniform(-M_PI, M_PI)};
            const auto res = generate_theta_cached(config, phi, mapping, ScalingModel{}, groups);
            for (double t : res.theta) {
                saw_positive = saw_positive || t > 0.0;
                saw_negative = saw_negative || t < 0.0;
            }
        }
        CHECK(saw_positive);
        CHECK(saw_negative);
    }
}

TEST_CASE("backprop_generation") {
    const qsim::QnnConfig config(2, 1);
    const LayerGroups groups{{1, 1, 1, 1}};
    Rng rng(29);
    const MappingModel mapping = random_mapping(3, 2, rng);

    SUBCASE("zero cotangent zeroes every gradient") {
        const auto res =
            generate_theta_cached(config, {0.3, 0.6}, mapping, ScalingModel{}, groups);
        const auto grads = backprop_generation({0, 0, 0, 0}, res.cache);
        for (double g : grads.phi) CHECK(g == 0.0);
        for (double g : grads.gamma) CHECK(g == 0.0);
        for (double g : grads.scale) CHECK(g == 0.0);
        for (double g : grads.shift) CHECK(g == 0.0);
    }
    SUBCASE("zero scale blocks gamma and phi, shifts collect column sums") {
        ScalingModel scaling;
        scaling.scale = {0.0, 0.0, 0.0, 0.0};
        const auto res = generate_theta_cached(config, {0.3, 0.6}, mapping, scaling, groups);
        const auto grads = backprop_generation({1.0, 2.0, -1.0, 0.5}, res.cache);
        for (double g : grads.phi) CHECK(g == 0.0);
        for (double g : grads.gamma) CHECK(g == 0.0);
        CHECK(grads.shift == std::array<double, 4>{1.0, 2.0, -1.0, 0.5});
    }
    SUBCASE("missing cache") {
        GenerationCache empty;
        CHECK_THROWS_AS(backprop_generation({0, 0, 0, 0}, empty), StateError);
    }
    SUBCASE("matches finite differences over phi, gamma and scaling") {
        // random toy instances: M = 4..8, N = 2..3, n_block = 1..3, H = 2..4
        Rng trial_rng(37);
        for (int trial = 0; trial < 8; ++trial) {
            const int n = 2 + static_cast<int>(trial_rng.below(2));
            const int blocks = 1 + static_cast<int>(trial_rng.below(3));
            const qsim::QnnConfig cfg(n, blocks);
            LayerGroups g{{1, 1, 1, 1}};
            for (auto& s : g.sizes) s += trial_rng.below(2);
            if (g.total() > cfg.dim()) continue;
            const int hidden = 2 + static_cast<int>(trial_rng.below(3));
            const MappingModel map = random_mapping(n + 1, hidden, trial_rng);
            ScalingModel scaling;
            for (auto& s : scaling.scale) s = trial_rng.uniform(0.5, 1.5);
            for (auto& s : scaling.shift) s = trial_rng.uniform(-0.5, 0.5);
            qsim::PhiVector phi(cfg.n_params());
            for (double& a : phi) a = trial_rng.uniform(-M_PI, M_PI);
            std::vector<double> cot(g.total());
            for (double& c : cot) c = trial_rng.uniform(-1.0, 1.0);

            // scalar probe loss: L = sum_i cot_i * theta_i
            const auto res = generate_theta_cached(cfg, phi, map, scaling, g);
            const auto grads = backprop_generation(cot, res.cache);

            auto loss_for = [&](const qsim::PhiVector& p, const MappingModel& mm,
                                const ScalingModel& ss) {
                const auto theta = generate_theta_cached(cfg, p, mm, ss, g).theta;
                double loss = 0.0;
                for (std::size_t i = 0; i < theta.size(); ++i) loss += cot[i] * theta[i];
                return loss;
            };

            const auto fd_phi = finite_difference(
                [&](const std::vector<double>& x) { return loss_for(x, map, scaling); }, phi);
            for (std::size_t i = 0; i < fd_phi.size(); ++i) {
                CAPTURE(trial);
                CHECK(close_rel(grads.phi[i], fd_phi[i]));
            }

            const auto fd_gamma = finite_difference(
                [&](const std::vector<double>& x) {
                    return loss_for(phi, MappingModel(n + 1, hidden, x), scaling);
                },
                map.gamma);
            for (std::size_t i = 0; i < fd_gamma.size(); ++i) {
                CHECK(close_rel(grads.gamma[i], fd_gamma[i]));
            }

            std::vector<double> s_flat(scaling.scale.begin(), scaling.scale.end());
            s_flat.insert(s_flat.end(), scaling.shift.begin(), scaling.shift.end());
            const auto fd_scaling = finite_difference(
                [&](const std::vector<double>& x) {
                    ScalingModel ss;
                    std::copy_n(x.begin(), 4, ss.scale.begin());
                    std::copy_n(x.begin() + 4, 4, ss.shift.begin());
                    return loss_for(phi, map, ss);
                },
                s_flat);
            for (int i = 0; i < 4; ++i) {
                CHECK(close_rel(grads.scale[i], fd_scaling[i]));
                CHECK(close_rel(grads.shift[i], fd_scaling[i + 4]));
            }
        }
    }
}

TEST_CASE("count_qt_params") {
    const ScalingModel scaling;
    SUBCASE("12 qubits, 12 blocks, width 20") {
        const auto mapping = MappingModel::zeros(13, 20);
        CHECK(count_qt_params(qsim::QnnConfig(12, 12), mapping, scaling) == 453);
    }
    SUBCASE("12 qubits, 96 blocks") {
        const auto mapping = MappingModel::zeros(13, 20);
        CHECK(count_qt_params(qsim::QnnConfig(12, 96), mapping, scaling) == 1461);
    }
    SUBCASE("mapping model alone") {
        CHECK(MappingModel::zeros(13, 20).param_count() == 301);
    }
}
