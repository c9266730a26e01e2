#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "qls/error.hpp"
#include "qls/state_vector.hpp"

namespace qls {

/// Single-target gate kinds. Controlled variants are expressed through
/// Gate::controls, so CX is X with one control, CZ is Z with one control, etc.
/// Y is only used by the depolarizing channel.
enum class GateKind : std::uint8_t { I, H, X, Y, Z, S, Sdg, Ry, U3 };

inline std::string_view to_string(GateKind k) noexcept {
    switch (k) {
    case GateKind::I: return "I";
    case GateKind::H: return "H";
    case GateKind::X: return "X";
    case GateKind::Y: return "Y";
    case GateKind::Z: return "Z";
    case GateKind::S: return "S";
    case GateKind::Sdg: return "Sdg";
    case GateKind::Ry: return "Ry";
    case GateKind::U3: return "U3";
    }
    return "?";
}

/// Number of real angles a kind consumes.
constexpr std::size_t angle_count(GateKind k) noexcept {
    switch (k) {
    case GateKind::Ry: return 1;
    case GateKind::U3: return 3;
    default: return 0;
    }
}

using Matrix2 = std::array<Complex, 4>; // row-major [[m0, m1], [m2, m3]]

struct Gate {
    GateKind kind = GateKind::I;
    std::size_t target = 0;
    std::vector<std::size_t> controls;
    std::array<double, 3> angles{0.0, 0.0, 0.0};

    [[nodiscard]] bool is_controlled() const noexcept { return !controls.empty(); }

    /// Every qubit the gate acts on, target first.
    [[nodiscard]] std::vector<std::size_t> touched() const {
        std::vector<std::size_t> q{target};
        q.insert(q.end(), controls.begin(), controls.end());
        return q;
    }

    friend bool operator==(const Gate &, const Gate &) = default;
};

namespace gates {

inline Gate identity(std::size_t q) { return {GateKind::I, q, {}, {}}; }
inline Gate h(std::size_t q) { return {GateKind::H, q, {}, {}}; }
inline Gate x(std::size_t q) { return {GateKind::X, q, {}, {}}; }
inline Gate y(std::size_t q) { return {GateKind::Y, q, {}, {}}; }
inline Gate z(std::size_t q) { return {GateKind::Z, q, {}, {}}; }
inline Gate s(std::size_t q) { return {GateKind::S, q, {}, {}}; }
inline Gate sdg(std::size_t q) { return {GateKind::Sdg, q, {}, {}}; }
inline Gate ry(std::size_t q, double theta) { return {GateKind::Ry, q, {}, {theta, 0.0, 0.0}}; }
inline Gate u3(std::size_t q, double theta, double phi, double lambda) {
    return {GateKind::U3, q, {}, {theta, phi, lambda}};
}
inline Gate cx(std::size_t c, std::size_t t) { return {GateKind::X, t, {c}, {}}; }
inline Gate cz(std::size_t c, std::size_t t) { return {GateKind::Z, t, {c}, {}}; }
inline Gate cry(std::size_t c, std::size_t t, double theta) {
    return {GateKind::Ry, t, {c}, {theta, 0.0, 0.0}};
}
inline Gate cu3(std::size_t c, std::size_t t, double theta, double phi, double lambda) {
    return {GateKind::U3, t, {c}, {theta, phi, lambda}};
}

} // namespace gates

/// The 2x2 unitary acting on the target (controls excluded).
inline Matrix2 gate_matrix(const Gate &g) {
    constexpr double r = 0.70710678118654752440;
    const Complex i{0.0, 1.0};
    switch (g.kind) {
    case GateKind::I: return {1.0, 0.0, 0.0, 1.0};
    case GateKind::H: return {r, r, r, -r};
    case GateKind::X: return {0.0, 1.0, 1.0, 0.0};
    case GateKind::Y: return {0.0, -i, i, 0.0};
    case GateKind::Z: return {1.0, 0.0, 0.0, -1.0};
    case GateKind::S: return {1.0, 0.0, 0.0, i};
    case GateKind::Sdg: return {1.0, 0.0, 0.0, -i};
    case GateKind::Ry: {
        const double c = std::cos(g.angles[0] / 2.0);
        const double s = std::sin(g.angles[0] / 2.0);
        return {c, -s, s, c};
    }
    case GateKind::U3: {
        const double c = std::cos(g.angles[0] / 2.0);
        const double s = std::sin(g.angles[0] / 2.0);
        const double phi = g.angles[1];
        const double lam = g.angles[2];
        return {c, -std::polar(s, lam), std::polar(s, phi), std::polar(c, phi + lam)};
    }
    }
    throw InvalidArgument("unknown gate kind");
}

/// Gate implementing the inverse unitary.
inline Gate inverse(const Gate &g) {
    Gate inv = g;
    switch (g.kind) {
    case GateKind::S: inv.kind = GateKind::Sdg; break;
    case GateKind::Sdg: inv.kind = GateKind::S; break;
    case GateKind::Ry: inv.angles[0] = -g.angles[0]; break;
    case GateKind::U3: inv.angles = {-g.angles[0], -g.angles[2], -g.angles[1]}; break;
    default: break; // I, H, X, Y, Z are self-inverse
    }
    return inv;
}

/// Throws InvalidArgument unless the gate is well formed on `n_qubits`.
inline void validate(const Gate &g, std::size_t n_qubits) {
    if (g.target >= n_qubits) {
        throw InvalidArgument("gate target " + std::to_string(g.target) + " out of range for " +
                              std::to_string(n_qubits) + " qubits");
    }
    for (std::size_t k = 0; k < g.controls.size(); ++k) {
        const auto c = g.controls[k];
        if (c >= n_qubits) {
            throw InvalidArgument("gate control " + std::to_string(c) + " out of range");
        }
        if (c == g.target) {
            throw InvalidArgument("gate control coincides with its target");
        }
        for (std::size_t j = 0; j < k; ++j) {
            if (g.controls[j] == c) {
                throw InvalidArgument("duplicate control qubit");
            }
        }
    }
    for (std::size_t k = 0; k < angle_count(g.kind); ++k) {
        if (!std::isfinite(g.angles[k])) {
            throw InvalidArgument("non-finite gate parameter");
        }
    }
}

namespace detail {

/// Unchecked kernel; callers validate.
inline void apply_gate_unchecked(std::span<Complex> amps, const Gate &g) {
    if (g.kind == GateKind::I) {
        return;
    }
    const Matrix2 m = gate_matrix(g);
    const std::size_t tbit = std::size_t{1} << g.target;
    std::size_t cmask = 0;
    for (auto c : g.controls) {
        cmask |= std::size_t{1} << c;
    }
    const std::size_t dim = amps.size();
    const bool diagonal = m[1] == Complex{} && m[2] == Complex{};
    for (std::size_t base = 0; base < dim; ++base) {
        if ((base & tbit) != 0 || (base & cmask) != cmask) {
            continue;
        }
        const std::size_t hi = base | tbit;
        if (diagonal) {
            amps[base] *= m[0];
            amps[hi] *= m[3];
        } else {
            const Complex a0 = amps[base];
            const Complex a1 = amps[hi];
            amps[base] = m[0] * a0 + m[1] * a1;
            amps[hi] = m[2] * a0 + m[3] * a1;
        }
    }
}

} // namespace detail

inline void apply_gate_inplace(StateVector &state, const Gate &g) {
    validate(g, state.n_qubits());
    detail::apply_gate_unchecked(state.amplitudes(), g);
}

/// Returns U_gate |state>; the argument is taken by value and left untouched
/// for the caller.
inline StateVector apply_gate(StateVector state, const Gate &g) {
    apply_gate_inplace(state, g);
    return state;
}

} // namespace qls
