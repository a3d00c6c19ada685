#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace qtcnn::qsim {

// Full register of 2^N real amplitudes. The ansatz uses only Ry and CNOT,
// whose matrices are real, so a real statevector is exact.
//
// Basis index convention: index i is read big-endian with qubit 0 as the
// most significant bit, i.e. bitstring "0100100" (qubit 0 leftmost) is
// index 0b0100100.
struct Statevector {
    std::vector<double> amplitudes;
    int n_qubits = 0;

    Statevector(std::vector<double> amps, int qubits);

    static Statevector zero_state(int n_qubits);

    std::size_t dim() const { return amplitudes.size(); }
    double norm_squared() const;
};

// Circuit shape: n_blocks repetitions of [Ry layer, linear CNOT chain].
// The ansatz has exactly n_qubits * n_blocks rotation angles.
struct QnnConfig {
    int n_qubits = 1;
    int n_blocks = 1;

    QnnConfig() = default;
    QnnConfig(int qubits, int blocks);

    std::size_t n_params() const {
        return static_cast<std::size_t>(n_qubits) * static_cast<std::size_t>(n_blocks);
    }
    std::size_t dim() const { return std::size_t{1} << n_qubits; }
};

// Rotation angles in radians, ordered block-major then qubit index:
// angle for (block b, qubit q) sits at index b * n_qubits + q.
using PhiVector = std::vector<double>;

// Bit of qubit `qubit` inside basis index `index` for an n_qubits register.
inline int basis_bit(std::size_t index, int qubit, int n_qubits) {
    return static_cast<int>((index >> (n_qubits - 1 - qubit)) & 1U);
}

Statevector apply_ry(const Statevector& state, int qubit, double angle);
Statevector apply_cnot(const Statevector& state, int control, int target);

// Runs the ansatz from |0...0> and returns the 2^N basis probabilities.
std::vector<double> run_qnn(const QnnConfig& config, const PhiVector& phi);

// Reverse-mode derivative of a scalar loss through the circuit:
// given cotangent dL/dp (length 2^N), returns dL/dphi (length N * n_blocks).
// Exact: the gates are real orthogonal, so the reverse pass unapplies each
// gate by its transpose on both the state and the adjoint accumulator.
std::vector<double> grad_probabilities(const QnnConfig& config, const PhiVector& phi,
                                       const std::vector<double>& cotangent);

// d p_basis / d phi_j via two circuit evaluations at phi_j +- pi/2.
double grad_parameter_shift(const QnnConfig& config, const PhiVector& phi,
                            std::size_t param_index, std::size_t basis_index);

// Empirical frequencies from n_shots seeded categorical draws.
std::vector<double> sample_shots(const std::vector<double>& probabilities,
                                 std::uint64_t n_shots, std::uint64_t seed);

}  // namespace qtcnn::qsim
