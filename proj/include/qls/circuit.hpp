#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "qls/error.hpp"
#include "qls/gate.hpp"
#include "qls/state_vector.hpp"

namespace qls {

/// Ordered gate list on a fixed register width. Gates apply front to back.
struct Circuit {
    std::size_t n_qubits = 0;
    std::vector<Gate> gates;

    Circuit() = default;
    explicit Circuit(std::size_t n) : n_qubits(n) {}
    Circuit(std::size_t n, std::vector<Gate> g) : n_qubits(n), gates(std::move(g)) {}

    Circuit &add(Gate g) {
        gates.push_back(std::move(g));
        return *this;
    }

    /// Appends `other` after this circuit.
    Circuit &append(const Circuit &other) {
        if (other.n_qubits != n_qubits) {
            throw InvalidArgument("cannot append a " + std::to_string(other.n_qubits) +
                                  "-qubit circuit to a " + std::to_string(n_qubits) +
                                  "-qubit circuit");
        }
        gates.insert(gates.end(), other.gates.begin(), other.gates.end());
        return *this;
    }

    [[nodiscard]] Circuit then(const Circuit &other) const {
        Circuit c = *this;
        c.append(other);
        return c;
    }

    /// Gate-wise inverse: reversed order, each gate inverted.
    [[nodiscard]] Circuit inverse() const {
        Circuit inv(n_qubits);
        inv.gates.reserve(gates.size());
        for (auto it = gates.rbegin(); it != gates.rend(); ++it) {
            inv.gates.push_back(qls::inverse(*it));
        }
        return inv;
    }

    [[nodiscard]] bool empty() const noexcept { return gates.empty(); }
    [[nodiscard]] std::size_t size() const noexcept { return gates.size(); }

    void validate() const {
        for (const auto &g : gates) {
            qls::validate(g, n_qubits);
        }
    }

    friend bool operator==(const Circuit &, const Circuit &) = default;
};

/// H on every qubit: the b-preparation used by every registry instance.
inline Circuit hadamard_all(std::size_t n) {
    Circuit c(n);
    for (std::size_t q = 0; q < n; ++q) {
        c.add(gates::h(q));
    }
    return c;
}

inline void run_circuit_inplace(const Circuit &circuit, StateVector &state) {
    if (circuit.n_qubits != state.n_qubits()) {
        throw InvalidArgument("circuit width " + std::to_string(circuit.n_qubits) +
                              " does not match state width " + std::to_string(state.n_qubits()));
    }
    circuit.validate();
    for (const auto &g : circuit.gates) {
        detail::apply_gate_unchecked(state.amplitudes(), g);
    }
}

inline StateVector run_circuit(const Circuit &circuit, StateVector initial) {
    run_circuit_inplace(circuit, initial);
    return initial;
}

/// circuit |0...0>
inline StateVector prepare(const Circuit &circuit) {
    return run_circuit(circuit, StateVector(circuit.n_qubits));
}

} // namespace qls
