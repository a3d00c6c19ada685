#include "qtcnn/qsim.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "qtcnn/error.hpp"
#include "qtcnn/rng.hpp"

namespace qtcnn::qsim {

namespace {

// In-place kernels. The public operations copy first; the circuit runner
// and the reverse pass work on raw amplitude vectors to avoid churn.

// Pairs (i0, i1) differ in the bit of `qubit`; qubit 0 is the MSB.
void ry_inplace(std::vector<double>& amps, int n_qubits, int qubit, double angle) {
    const std::size_t dim = amps.size();
    const std::size_t stride = std::size_t{1} << (n_qubits - 1 - qubit);
    const double c = std::cos(angle / 2.0);
    const double s = std::sin(angle / 2.0);
    for (std::size_t i = 0; i < dim; ++i) {
        if ((i & stride) == 0) {
            const double a0 = amps[i];
            const double a1 = amps[i | stride];
            amps[i] = c * a0 - s * a1;
            amps[i | stride] = s * a0 + c * a1;
        }
    }
}

// Contraction of the adjoint with dRy/dangle applied to the pre-gate state:
// dRy/dmu = 0.5 * [[-sin(mu/2), -cos(mu/2)], [cos(mu/2), -sin(mu/2)]].
double ry_param_grad(const std::vector<double>& pre, const std::vector<double>& adj,
                     int n_qubits, int qubit, double angle) {
    const std::size_t dim = pre.size();
    const std::size_t stride = std::size_t{1} << (n_qubits - 1 - qubit);
    const double hc = 0.5 * std::cos(angle / 2.0);
    const double hs = 0.5 * std::sin(angle / 2.0);
    double grad = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        if ((i & stride) == 0) {
            const double a0 = pre[i];
            const double a1 = pre[i | stride];
            grad += adj[i] * (-hs * a0 - hc * a1);
            grad += adj[i | stride] * (hc * a0 - hs * a1);
        }
    }
    return grad;
}

// Swaps the target bit of every basis state whose control bit is 1.
// The permutation is its own transpose, so the same kernel serves the
// forward and the reverse pass.
void cnot_inplace(std::vector<double>& amps, int n_qubits, int control, int target) {
    const std::size_t dim = amps.size();
    const std::size_t cmask = std::size_t{1} << (n_qubits - 1 - control);
    const std::size_t tmask = std::size_t{1} << (n_qubits - 1 - target);
    for (std::size_t i = 0; i < dim; ++i) {
        if ((i & cmask) != 0 && (i & tmask) == 0) {
            std::swap(amps[i], amps[i | tmask]);
        }
    }
}

void check_qubit(const char* what, int qubit, int n_qubits) {
    if (qubit < 0 || qubit >= n_qubits) {
        throw InvalidArgument(std::string(what) + " index " + std::to_string(qubit) +
                              " out of range for " + std::to_string(n_qubits) + " qubits");
    }
}

void check_phi(const QnnConfig& config, const PhiVector& phi) {
    if (phi.size() != config.n_params()) {
        throw InvalidArgument("phi length " + std::to_string(phi.size()) + " does not match " +
                              std::to_string(config.n_params()) + " ansatz parameters");
    }
}

// Statevector of the full circuit, kept in a raw vector.
std::vector<double> run_circuit(const QnnConfig& config, const PhiVector& phi) {
    std::vector<double> amps(config.dim(), 0.0);
    amps[0] = 1.0;
    const int n = config.n_qubits;
    for (int b = 0; b < config.n_blocks; ++b) {
        for (int q = 0; q < n; ++q) {
            ry_inplace(amps, n, q, phi[static_cast<std::size_t>(b) * n + q]);
        }
        for (int k = 0; k + 1 < n; ++k) {
            cnot_inplace(amps, n, k, k + 1);
        }
    }
    return amps;
}

}  // namespace

Statevector::Statevector(std::vector<double> amps, int qubits)
    : amplitudes(std::move(amps)), n_qubits(qubits) {
    if (qubits < 1) {
        throw InvalidArgument("statevector needs at least one qubit");
    }
    if (amplitudes.size() != (std::size_t{1} << qubits)) {
        throw InvalidArgument("amplitude vector length " + std::to_string(amplitudes.size()) +
                              " is not 2^" + std::to_string(qubits));
    }
    if (std::abs(norm_squared() - 1.0) > 1e-10) {
        throw InvalidArgument("amplitudes are not normalized");
    }
}

Statevector Statevector::zero_state(int n_qubits) {
    if (n_qubits < 1) {
        throw InvalidArgument("statevector needs at least one qubit");
    }
    std::vector<double> amps(std::size_t{1} << n_qubits, 0.0);
    amps[0] = 1.0;
    return Statevector(std::move(amps), n_qubits);
}

double Statevector::norm_squared() const {
    double s = 0.0;
    for (double a : amplitudes) s += a * a;
    return s;
}

QnnConfig::QnnConfig(int qubits, int blocks) : n_qubits(qubits), n_blocks(blocks) {
    if (qubits < 1) throw InvalidArgument("n_qubits must be >= 1");
    if (blocks < 1) throw InvalidArgument("n_blocks must be >= 1");
}

Statevector apply_ry(const Statevector& state, int qubit, double angle) {
    check_qubit("qubit", qubit, state.n_qubits);
    Statevector out = state;
    ry_inplace(out.amplitudes, out.n_qubits, qubit, angle);
    return out;
}

Statevector apply_cnot(const Statevector& state, int control, int target) {
    check_qubit("control", control, state.n_qubits);
    check_qubit("target", target, state.n_qubits);
    if (control == target) {
        throw InvalidArgument("control and target must differ");
    }
    Statevector out = state;
    cnot_inplace(out.amplitudes, out.n_qubits, control, target);
    return out;
}

std::vector<double> run_qnn(const QnnConfig& config, const PhiVector& phi) {
    check_phi(config, phi);
    std::vector<double> amps = run_circuit(config, phi);
    for (double& a : amps) a = a * a;
    return amps;
}

std::vector<double> grad_probabilities(const QnnConfig& config, const PhiVector& phi,
                                       const std::vector<double>& cotangent) {
    check_phi(config, phi);
    if (cotangent.size() != config.dim()) {
        throw InvalidArgument("cotangent length " + std::to_string(cotangent.size()) +
                              " does not match 2^" + std::to_string(config.n_qubits));
    }
    for (double c : cotangent) {
        if (!std::isfinite(c)) throw InvalidArgument("cotangent has non-finite entries");
    }

    const int n = config.n_qubits;
    std::vector<double> state = run_circuit(config, phi);

    // dL/da_i = 2 a_i dL/dp_i since p_i = a_i^2.
    std::vector<double> adjoint(state.size());
    for (std::size_t i = 0; i < state.size(); ++i) {
        adjoint[i] = 2.0 * state[i] * cotangent[i];
    }

    std::vector<double> grad(config.n_params(), 0.0);
    for (int b = config.n_blocks - 1; b >= 0; --b) {
        for (int k = n - 2; k >= 0; --k) {
            cnot_inplace(state, n, k, k + 1);
            cnot_inplace(adjoint, n, k, k + 1);
        }
        for (int q = n - 1; q >= 0; --q) {
            const double angle = phi[static_cast<std::size_t>(b) * n + q];
            ry_inplace(state, n, q, -angle);  // transpose of Ry(angle)
            grad[static_cast<std::size_t>(b) * n + q] =
                ry_param_grad(state, adjoint, n, q, angle);
            ry_inplace(adjoint, n, q, -angle);
        }
    }
    return grad;
}

double grad_parameter_shift(const QnnConfig& config, const PhiVector& phi,
                            std::size_t param_index, std::size_t basis_index) {
    check_phi(config, phi);
    if (param_index >= config.n_params()) {
        throw InvalidArgument("parameter index " + std::to_string(param_index) + " out of range");
    }
    if (basis_index >= config.dim()) {
        throw InvalidArgument("basis index " + std::to_string(basis_index) + " out of range");
    }
    PhiVector shifted = phi;
    shifted[param_index] = phi[param_index] + M_PI / 2.0;
    const double plus = run_qnn(config, shifted)[basis_index];
    shifted[param_index] = phi[param_index] - M_PI / 2.0;
    const double minus = run_qnn(config, shifted)[basis_index];
    return (plus - minus) / 2.0;
}

std::vector<double> sample_shots(const std::vector<double>& probabilities,
                                 std::uint64_t n_shots, std::uint64_t seed) {
    if (probabilities.empty() || n_shots == 0) {
        throw InvalidArgument("need a non-empty distribution and at least one shot");
    }
    double total = 0.0;
    for (double p : probabilities) total += p;
    if (std::abs(total - 1.0) > 1e-8) {
        throw InvalidArgument("probabilities sum to " + std::to_string(total) + ", expected 1");
    }

    std::vector<double> cdf(probabilities.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        acc += probabilities[i];
        cdf[i] = acc;
    }
    cdf.back() = 1.0;

    std::vector<std::uint64_t> counts(probabilities.size(), 0);
    Rng rng(seed);
    for (std::uint64_t s = 0; s < n_shots; ++s) {
        const double u = rng.uniform01();
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        counts[static_cast<std::size_t>(it - cdf.begin())] += 1;
    }

    std::vector<double> freq(probabilities.size());
    for (std::size_t i = 0; i < freq.size(); ++i) {
        freq[i] = static_cast<double>(counts[i]) / static_cast<double>(n_shots);
    }
    return freq;
}

}  // namespace qtcnn::qsim
