#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "qls/circuit.hpp"
#include "qls/error.hpp"
#include "qls/noise.hpp"
#include "qls/random.hpp"
#include "qls/state_vector.hpp"

namespace qls {

enum class Part : std::uint8_t { Real, Imag };

/// Ancilla circuit on n+1 qubits whose ancilla (qubit n) expectation
/// p0 - p1 equals Re (or Im) <0|prep^dag probe prep|0>:
///   prep on the register, H on the ancilla, probe controlled on the ancilla,
///   S^dag on the ancilla for the imaginary part, H on the ancilla.
inline Circuit hadamard_test_circuit(const Circuit &prep, const Circuit &probe, Part part) {
    if (prep.n_qubits != probe.n_qubits) {
        throw InvalidArgument("hadamard test: prep and probe widths differ");
    }
    const std::size_t n = prep.n_qubits;
    const std::size_t anc = n;
    Circuit c(n + 1);
    c.gates.reserve(prep.size() + probe.size() + 3);
    for (const auto &g : prep.gates) {
        c.add(g);
    }
    c.add(gates::h(anc));
    for (const auto &g : probe.gates) {
        Gate cg = g;
        cg.controls.push_back(anc);
        c.add(std::move(cg));
    }
    if (part == Part::Imag) {
        c.add(gates::sdg(anc));
    }
    c.add(gates::h(anc));
    return c;
}

/// p0 - p1 of the given qubit.
inline double qubit_expectation(const StateVector &state, std::size_t qubit) {
    if (qubit >= state.n_qubits()) {
        throw InvalidArgument("measured qubit out of range");
    }
    const std::size_t bit = std::size_t{1} << qubit;
    double acc = 0.0;
    const auto amps = state.amplitudes();
    for (std::size_t i = 0; i < amps.size(); ++i) {
        acc += (i & bit) ? -std::norm(amps[i]) : std::norm(amps[i]);
    }
    return acc;
}

/// Binomial estimate of p0 - p1 from `shots` draws given the exact value.
inline double sample_expectation(double exact_value, std::uint64_t shots, Rng &rng) {
    const double p0 = std::clamp((1.0 + exact_value) / 2.0, 0.0, 1.0);
    std::binomial_distribution<std::uint64_t> draw(shots, p0);
    const auto zeros = draw(rng);
    return (2.0 * static_cast<double>(zeros) - static_cast<double>(shots)) /
           static_cast<double>(shots);
}

/// One-sigma binomial standard error of a sampled p0 - p1.
inline double expectation_standard_error(double exact_value, std::uint64_t shots) {
    const double p0 = std::clamp((1.0 + exact_value) / 2.0, 0.0, 1.0);
    return 2.0 * std::sqrt(p0 * (1.0 - p0) / static_cast<double>(shots));
}

namespace detail {

/// Ancilla estimate of a full Hadamard-test circuit under the stochastic
/// Pauli channel. Trajectories without any fault reuse the ideal p0.
inline double depolarized_expectation(const Circuit &circuit, std::size_t ancilla,
                                      const NoiseRegime &regime, Rng &rng) {
    const StateVector ideal = prepare(circuit);
    const double ideal_p0 = (1.0 + qubit_expectation(ideal, ancilla)) / 2.0;

    struct Fault {
        std::size_t after_gate;
        std::size_t qubit;
        int pauli; // 0 = X, 1 = Y, 2 = Z
    };
    std::bernoulli_distribution hit(regime.depolarizing);
    std::uniform_int_distribution<int> which(0, 2);

    const std::uint64_t n_traj =
        std::min<std::uint64_t>(regime.shots, static_cast<std::uint64_t>(regime.trajectories));
    const std::uint64_t per = regime.shots / n_traj;
    const std::uint64_t extra = regime.shots % n_traj;

    std::uint64_t zeros = 0;
    std::vector<Fault> faults;
    for (std::uint64_t t = 0; t < n_traj; ++t) {
        faults.clear();
        for (std::size_t gi = 0; gi < circuit.gates.size(); ++gi) {
            const Gate &g = circuit.gates[gi];
            if (g.kind == GateKind::I) {
                continue;
            }
            for (auto q : g.touched()) {
                if (hit(rng)) {
                    faults.push_back({gi, q, which(rng)});
                }
            }
        }
        double p0 = ideal_p0;
        if (!faults.empty()) {
            StateVector s(circuit.n_qubits);
            std::size_t next = 0;
            for (std::size_t gi = 0; gi < circuit.gates.size(); ++gi) {
                apply_gate_unchecked(s.amplitudes(), circuit.gates[gi]);
                for (; next < faults.size() && faults[next].after_gate == gi; ++next) {
                    const auto q = faults[next].qubit;
                    const Gate pauli = faults[next].pauli == 0   ? gates::x(q)
                                       : faults[next].pauli == 1 ? gates::y(q)
                                                                 : gates::z(q);
                    apply_gate_unchecked(s.amplitudes(), pauli);
                }
            }
            p0 = std::clamp((1.0 + qubit_expectation(s, ancilla)) / 2.0, 0.0, 1.0);
        }
        const std::uint64_t shots_here = per + (t < extra ? 1 : 0);
        std::binomial_distribution<std::uint64_t> draw(shots_here, std::clamp(p0, 0.0, 1.0));
        zeros += draw(rng);
    }
    return (2.0 * static_cast<double>(zeros) - static_cast<double>(regime.shots)) /
           static_cast<double>(regime.shots);
}

inline double part_of(Complex z, Part part) noexcept {
    return part == Part::Real ? z.real() : z.imag();
}

} // namespace detail

/// Estimate of Re/Im <0|prep^dag probe prep|0> as the ancilla p0 - p1.
/// The ancilla is added internally as the highest-indexed qubit.
inline double hadamard_test(const Circuit &prep, const Circuit &probe, Part part,
                            const NoiseRegime &regime) {
    if (prep.n_qubits != probe.n_qubits) {
        throw InvalidArgument("hadamard test: prep and probe widths differ");
    }
    regime.validate();
    probe.validate();
    if (regime.mode == NoiseMode::ShotsDepolarizing) {
        Rng rng(regime.seed);
        return detail::depolarized_expectation(hadamard_test_circuit(prep, probe, part),
                                               prep.n_qubits, regime, rng);
    }
    const StateVector phi = prepare(prep);
    const StateVector probed = run_circuit(probe, phi);
    const double exact = detail::part_of(inner_product_exact(phi, probed), part);
    if (regime.mode == NoiseMode::Exact) {
        return exact;
    }
    Rng rng(regime.seed);
    return sample_expectation(exact, regime.shots, rng);
}

/// One overlap <0|L^dag R|0> = <L|R> between two prepared states, realised as
/// a Hadamard test. `stream` selects the RNG stream in sampled regimes so an
/// entry's noise does not depend on its position in a batch.
struct OverlapJob {
    std::size_t left = 0;
    std::size_t right = 0;
    Part part = Part::Real;
    std::uint64_t stream = 0;
};

/// Splits an overlap into the Hadamard-test form: the longest common gate
/// prefix of L and R becomes the (uncontrolled) preparation, and the probe is
/// the remainder of R followed by the inverse of the remainder of L.
inline std::pair<Circuit, Circuit> overlap_as_hadamard_test(const Circuit &left, const Circuit &right) {
    if (left.n_qubits != right.n_qubits) {
        throw InvalidArgument("overlap of circuits with different widths");
    }
    std::size_t common = 0;
    while (common < left.size() && common < right.size() &&
           left.gates[common] == right.gates[common]) {
        ++common;
    }
    Circuit prep(left.n_qubits,
                 std::vector<Gate>(left.gates.begin(), left.gates.begin() + common));
    Circuit probe(left.n_qubits,
                  std::vector<Gate>(right.gates.begin() + common, right.gates.end()));
    for (auto it = left.gates.rbegin(); it != left.gates.rend() - common; ++it) {
        probe.add(inverse(*it));
    }
    return {std::move(prep), std::move(probe)};
}

/// Exact <L|R> values for every job, each circuit simulated once.
inline std::vector<double> exact_overlaps(std::span<const Circuit> circuits,
                                          std::span<const OverlapJob> jobs) {
    std::vector<StateVector> states;
    states.reserve(circuits.size());
    for (const auto &c : circuits) {
        states.push_back(prepare(c));
    }
    std::vector<double> out(jobs.size());
    for (std::size_t t = 0; t < jobs.size(); ++t) {
        const auto &j = jobs[t];
        out[t] = detail::part_of(inner_product_exact(states.at(j.left), states.at(j.right)), j.part);
    }
    return out;
}

/// Hadamard-test estimates for a batch of overlaps under `regime`.
inline std::vector<double> estimate_overlaps(std::span<const Circuit> circuits,
                                             std::span<const OverlapJob> jobs,
                                             const NoiseRegime &regime) {
    regime.validate();
    if (regime.mode == NoiseMode::ShotsDepolarizing) {
        std::vector<double> out(jobs.size());
        for (std::size_t t = 0; t < jobs.size(); ++t) {
            const auto &j = jobs[t];
            auto [prep, probe] = overlap_as_hadamard_test(circuits[j.left], circuits[j.right]);
            Rng rng(derive_seed(regime.seed, j.stream));
            out[t] = detail::depolarized_expectation(hadamard_test_circuit(prep, probe, j.part),
                                                     prep.n_qubits, regime, rng);
        }
        return out;
    }
    auto out = exact_overlaps(circuits, jobs);
    if (regime.mode == NoiseMode::Shots) {
        for (std::size_t t = 0; t < jobs.size(); ++t) {
            Rng rng(derive_seed(regime.seed, jobs[t].stream));
            out[t] = sample_expectation(out[t], regime.shots, rng);
        }
    }
    return out;
}

} // namespace qls
