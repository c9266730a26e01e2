#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qls/circuit.hpp"
#include "qls/error.hpp"
#include "qls/random.hpp"

namespace qls {

/// A template gate. Angle k takes params[param[k]] when param[k] >= 0 and
/// keeps gate.angles[k] otherwise.
struct ParamSlot {
    Gate gate;
    std::array<int, 3> param{-1, -1, -1};

    [[nodiscard]] bool parameterized() const noexcept {
        return param[0] >= 0 || param[1] >= 0 || param[2] >= 0;
    }
};

/// Where a parameter is consumed.
struct ParamUse {
    std::size_t slot;
    std::size_t angle;
};

/// Parameterized circuit V(alpha) = gamma_1(alpha_1) ... gamma_n(alpha_n).
class ParamCircuit {
  public:
    ParamCircuit() = default;
    explicit ParamCircuit(std::size_t n_qubits) : n_qubits_(n_qubits) {}

    [[nodiscard]] std::size_t n_qubits() const noexcept { return n_qubits_; }
    [[nodiscard]] std::size_t n_params() const noexcept { return n_params_; }
    [[nodiscard]] const std::vector<ParamSlot> &slots() const noexcept { return slots_; }

    /// Slot offsets at which each layer begins (empty when not layered).
    [[nodiscard]] const std::vector<std::size_t> &layer_offsets() const noexcept { return layers_; }
    void begin_layer() { layers_.push_back(slots_.size()); }

    ParamCircuit &add_fixed(Gate g) {
        validate(g, n_qubits_);
        slots_.push_back({std::move(g), {-1, -1, -1}});
        return *this;
    }

    /// Appends a gate whose angles are all fresh parameters.
    ParamCircuit &add_parameterized(Gate g) {
        validate(g, n_qubits_);
        const std::size_t k = angle_count(g.kind);
        if (k == 0) {
            throw InvalidArgument("gate kind " + std::string(to_string(g.kind)) + " has no angles");
        }
        ParamSlot s{std::move(g), {-1, -1, -1}};
        for (std::size_t a = 0; a < k; ++a) {
            s.param[a] = static_cast<int>(n_params_++);
        }
        slots_.push_back(std::move(s));
        return *this;
    }

    /// Appends a slot with an explicit parameter mapping (indices may repeat).
    ParamCircuit &add_slot(ParamSlot s) {
        validate(s.gate, n_qubits_);
        for (int p : s.param) {
            if (p >= 0) {
                n_params_ = std::max(n_params_, static_cast<std::size_t>(p) + 1);
            }
        }
        slots_.push_back(std::move(s));
        return *this;
    }

    ParamCircuit &append_fixed(const Circuit &c) {
        if (c.n_qubits != n_qubits_) {
            throw InvalidArgument("fixed suffix width mismatch");
        }
        for (const auto &g : c.gates) {
            add_fixed(g);
        }
        return *this;
    }

    [[nodiscard]] Circuit bind(std::span<const double> params) const {
        if (params.size() != n_params_) {
            throw InvalidArgument("expected " + std::to_string(n_params_) + " parameters, got " +
                                  std::to_string(params.size()));
        }
        Circuit c(n_qubits_);
        c.gates.reserve(slots_.size());
        for (const auto &s : slots_) {
            Gate g = s.gate;
            for (std::size_t a = 0; a < 3; ++a) {
                if (s.param[a] >= 0) {
                    const double v = params[static_cast<std::size_t>(s.param[a])];
                    if (!std::isfinite(v)) {
                        throw InvalidArgument("non-finite ansatz parameter");
                    }
                    g.angles[a] = v;
                }
            }
            c.gates.push_back(std::move(g));
        }
        return c;
    }

    [[nodiscard]] std::vector<ParamUse> uses(std::size_t param) const {
        std::vector<ParamUse> out;
        for (std::size_t i = 0; i < slots_.size(); ++i) {
            for (std::size_t a = 0; a < 3; ++a) {
                if (slots_[i].param[a] == static_cast<int>(param)) {
                    out.push_back({i, a});
                }
            }
        }
        return out;
    }

    /// True when d/d(param) obeys the two-term pi/2 shift rule: the parameter
    /// feeds exactly one angle of one uncontrolled Ry or U3 gate.
    [[nodiscard]] bool shift_rule_applies(std::size_t param) const {
        const auto u = uses(param);
        if (u.size() != 1) {
            return false;
        }
        const Gate &g = slots_[u.front().slot].gate;
        return !g.is_controlled() && (g.kind == GateKind::Ry || g.kind == GateKind::U3);
    }

  private:
    std::size_t n_qubits_ = 0;
    std::size_t n_params_ = 0;
    std::vector<ParamSlot> slots_;
    std::vector<std::size_t> layers_;
};

using Coupling = std::vector<std::pair<std::size_t, std::size_t>>;

inline Coupling linear_coupling(std::size_t n) {
    Coupling c;
    for (std::size_t q = 0; q + 1 < n; ++q) {
        c.emplace_back(q, q + 1);
    }
    return c;
}

inline Coupling full_coupling(std::size_t n) {
    Coupling c;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            c.emplace_back(a, b);
        }
    }
    return c;
}

enum class EntanglerFamily : std::uint8_t { RyCz, RyCx };

namespace detail {

inline void check_coupling(std::size_t n, const Coupling &coupling) {
    for (const auto &[a, b] : coupling) {
        if (a >= n || b >= n || a == b) {
            throw InvalidArgument("invalid coupling pair (" + std::to_string(a) + ", " +
                                  std::to_string(b) + ")");
        }
    }
}

inline Gate entangler(EntanglerFamily f, std::size_t a, std::size_t b) {
    return f == EntanglerFamily::RyCz ? gates::cz(a, b) : gates::cx(a, b);
}

} // namespace detail

/// Hardware-efficient ansatz: every layer is one Ry per qubit followed by the
/// entanglers along `coupling`. n_params = n_qubits * n_layers.
inline ParamCircuit layered_ansatz(std::size_t n_qubits, std::size_t n_layers,
                                   EntanglerFamily family = EntanglerFamily::RyCz,
                                   std::optional<Coupling> custom_coupling = std::nullopt) {
    if (n_qubits == 0 || n_layers == 0) {
        throw InvalidArgument("layered ansatz needs at least one qubit and one layer");
    }
    const Coupling coupling = custom_coupling.value_or(linear_coupling(n_qubits));
    detail::check_coupling(n_qubits, coupling);
    if (coupling.empty() && n_qubits > 1 && n_layers > 1) {
        throw InvalidArgument("empty coupling: the layered ansatz would have no entanglement");
    }
    ParamCircuit pc(n_qubits);
    for (std::size_t l = 0; l < n_layers; ++l) {
        pc.begin_layer();
        for (std::size_t q = 0; q < n_qubits; ++q) {
            pc.add_parameterized(gates::ry(q, 0.0));
        }
        for (const auto &[a, b] : coupling) {
            pc.add_fixed(detail::entangler(family, a, b));
        }
    }
    return pc;
}

/// Parameters at which the ansatz acts as the identity on |0...0>. Only the
/// all-zero point is tried; families without one are reported.
inline std::vector<double> identity_init(const ParamCircuit &ansatz) {
    std::vector<double> zeros(ansatz.n_params(), 0.0);
    const StateVector s = prepare(ansatz.bind(zeros));
    double dev = std::abs(s[0] - Complex{1.0, 0.0});
    for (std::size_t i = 1; i < s.size(); ++i) {
        dev = std::max(dev, std::abs(s[i]));
    }
    if (dev > 1e-10) {
        throw InvalidArgument("ansatz admits no identity point at zero parameters");
    }
    return zeros;
}

/// V_AAVQLS(alpha) = U V(alpha): V runs first, then the b-preparation U.
struct AdiabaticAnsatz {
    ParamCircuit inner;
    Circuit b_suffix;

    [[nodiscard]] ParamCircuit full() const {
        ParamCircuit pc = inner;
        pc.append_fixed(b_suffix);
        return pc;
    }
};

/// Identity-initialisable V: `n_pairs` repetitions of
///   [Ry layer, CZ chain, Ry layer, CZ chain].
/// At zero angles each CZ chain meets its twin and V = 1 exactly.
inline AdiabaticAnsatz adiabatic_ansatz(std::size_t n_qubits, std::size_t n_pairs, const Circuit &b_prep,
                                        Coupling coupling = {}) {
    if (n_pairs == 0) {
        throw InvalidArgument("adiabatic ansatz needs at least one layer pair");
    }
    if (b_prep.n_qubits != n_qubits) {
        throw InvalidArgument("b-preparation width mismatch");
    }
    if (coupling.empty()) {
        coupling = linear_coupling(n_qubits);
    }
    detail::check_coupling(n_qubits, coupling);
    ParamCircuit v(n_qubits);
    for (std::size_t p = 0; p < 2 * n_pairs; ++p) {
        v.begin_layer();
        for (std::size_t q = 0; q < n_qubits; ++q) {
            v.add_parameterized(gates::ry(q, 0.0));
        }
        for (const auto &[a, b] : coupling) {
            v.add_fixed(gates::cz(a, b));
        }
    }
    return {std::move(v), b_prep};
}

/// Random shallow ansatz over {I, Ry, CX}: each layer gives every qubit one
/// element of the gate set, CX consuming a control/target pair. Identity
/// slots are kept explicitly so each layer covers every qubit.
inline ParamCircuit random_shallow(std::size_t n_qubits, std::size_t n_layers, std::uint64_t seed) {
    if (n_qubits == 0) {
        throw InvalidArgument("random ansatz needs at least one qubit");
    }
    Rng rng(seed);
    ParamCircuit pc(n_qubits);
    std::vector<std::size_t> order(n_qubits);
    for (std::size_t l = 0; l < n_layers; ++l) {
        pc.begin_layer();
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<bool> used(n_qubits, false);
        for (std::size_t idx = 0; idx < n_qubits; ++idx) {
            const std::size_t q = order[idx];
            if (used[q]) {
                continue;
            }
            std::vector<std::size_t> free;
            for (std::size_t j = idx + 1; j < n_qubits; ++j) {
                if (!used[order[j]]) {
                    free.push_back(order[j]);
                }
            }
            const int n_choices = free.empty() ? 2 : 3;
            const int choice = std::uniform_int_distribution<int>(0, n_choices - 1)(rng);
            used[q] = true;
            if (choice == 0) {
                pc.add_fixed(gates::identity(q));
            } else if (choice == 1) {
                pc.add_parameterized(gates::ry(q, 0.0));
            } else {
                const std::size_t partner =
                    free[std::uniform_int_distribution<std::size_t>(0, free.size() - 1)(rng)];
                used[partner] = true;
                if (std::bernoulli_distribution(0.5)(rng)) {
                    pc.add_fixed(gates::cx(q, partner));
                } else {
                    pc.add_fixed(gates::cx(partner, q));
                }
            }
        }
    }
    return pc;
}

/// Serializable recipe for an ansatz ({family, n_qubits, n_layers, coupling, seed}).
/// An empty coupling means the default linear chain.
struct AnsatzDescriptor {
    std::string family = "ry_cz"; // ry_cz | ry_cx | adiabatic | random_shallow
    std::size_t n_qubits = 0;
    std::size_t n_layers = 1;
    Coupling coupling;
    std::uint64_t seed = 0;
};

inline nlohmann::json to_json(const AnsatzDescriptor &d) {
    nlohmann::json c = nlohmann::json::array();
    for (const auto &[a, b] : d.coupling) {
        c.push_back({a, b});
    }
    return {{"family", d.family}, {"n_qubits", d.n_qubits}, {"n_layers", d.n_layers},
            {"coupling", c}, {"seed", d.seed}};
}

inline AnsatzDescriptor descriptor_from_json(const nlohmann::json &j) {
    AnsatzDescriptor d;
    d.family = j.at("family").get<std::string>();
    d.n_qubits = j.at("n_qubits").get<std::size_t>();
    d.n_layers = j.value("n_layers", std::size_t{1});
    d.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("coupling")) {
        for (const auto &p : j["coupling"]) {
            d.coupling.emplace_back(p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>());
        }
    }
    return d;
}

/// Builds the circuit a descriptor names. `b_prep` is only used by the
/// adiabatic family, where n_layers counts layer pairs.
inline ParamCircuit build_ansatz(const AnsatzDescriptor &d, const Circuit &b_prep = {}) {
    std::optional<Coupling> coupling;
    if (!d.coupling.empty()) {
        coupling = d.coupling;
    }
    if (d.family == "ry_cz") return layered_ansatz(d.n_qubits, d.n_layers, EntanglerFamily::RyCz, coupling);
    if (d.family == "ry_cx") return layered_ansatz(d.n_qubits, d.n_layers, EntanglerFamily::RyCx, coupling);
    if (d.family == "random_shallow") return random_shallow(d.n_qubits, d.n_layers, d.seed);
    if (d.family == "adiabatic") return adiabatic_ansatz(d.n_qubits, d.n_layers, b_prep, d.coupling).full();
    throw InvalidArgument("unknown ansatz family '" + d.family + "'");
}

} // namespace qls
