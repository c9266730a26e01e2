#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "qls/circuit.hpp"
#include "qls/error.hpp"

namespace qls {

/// Per-qubit factor of a tensor-string term.
enum class Label : std::uint8_t { I, H, X, Z };

inline char to_char(Label l) noexcept {
    switch (l) {
    case Label::I: return 'I';
    case Label::H: return 'H';
    case Label::X: return 'X';
    case Label::Z: return 'Z';
    }
    return '?';
}

inline Label label_from_char(char c) {
    switch (c) {
    case 'I': return Label::I;
    case 'H': return Label::H;
    case 'X': return Label::X;
    case 'Z': return Label::Z;
    default: throw InvalidArgument(std::string("unknown tensor factor '") + c + "'");
    }
}

/// c_l * A_l with A_l a tensor product of single-qubit I/H/X/Z.
/// factors[k] acts on qubit k (the "qubit k+1" of 1-based notation).
struct UnitaryTerm {
    Complex coefficient{1.0, 0.0};
    std::vector<Label> factors;

    /// Parses "HIZ": character k is the factor on qubit k.
    static UnitaryTerm parse(Complex coefficient, std::string_view factors) {
        UnitaryTerm t{coefficient, {}};
        t.factors.reserve(factors.size());
        for (char c : factors) {
            t.factors.push_back(label_from_char(c));
        }
        return t;
    }

    [[nodiscard]] std::string factor_string() const {
        std::string s;
        for (auto l : factors) {
            s.push_back(to_char(l));
        }
        return s;
    }

    [[nodiscard]] bool is_identity() const noexcept {
        return std::all_of(factors.begin(), factors.end(), [](Label l) { return l == Label::I; });
    }

    /// Gate realisation of A_l (identity factors omitted).
    [[nodiscard]] Circuit circuit() const {
        Circuit c(factors.size());
        for (std::size_t q = 0; q < factors.size(); ++q) {
            switch (factors[q]) {
            case Label::I: break;
            case Label::H: c.add(gates::h(q)); break;
            case Label::X: c.add(gates::x(q)); break;
            case Label::Z: c.add(gates::z(q)); break;
            }
        }
        return c;
    }
};

/// A = sum_l c_l A_l together with a circuit U such that U|0> = |b>.
struct LinearProblem {
    std::size_t n_qubits = 0;
    std::vector<UnitaryTerm> terms;
    Circuit b_prep;
    std::optional<std::string> id;

    void validate() const {
        if (n_qubits == 0) {
            throw InvalidArgument("problem needs at least one qubit");
        }
        if (terms.empty()) {
            throw InvalidArgument("problem needs at least one term");
        }
        for (const auto &t : terms) {
            if (t.factors.size() != n_qubits) {
                throw InvalidArgument("term '" + t.factor_string() + "' does not have " +
                                      std::to_string(n_qubits) + " factors");
            }
            if (!std::isfinite(t.coefficient.real()) || !std::isfinite(t.coefficient.imag())) {
                throw InvalidArgument("non-finite term coefficient");
            }
        }
        if (b_prep.n_qubits != n_qubits) {
            throw InvalidArgument("b-preparation width does not match the problem");
        }
        b_prep.validate();
    }

    [[nodiscard]] std::size_t n_terms() const noexcept { return terms.size(); }
};

/// The linear system ((1 - s) 1 + s A) x = b. The identity term merges with an
/// existing all-identity term; terms whose coefficient becomes exactly zero
/// are dropped (so s = 1 returns A's own term list).
inline LinearProblem interpolate_with_identity(const LinearProblem &problem, double s) {
    LinearProblem out = problem;
    out.terms.clear();
    const Complex id_coeff{1.0 - s, 0.0};
    bool merged = false;
    for (const auto &t : problem.terms) {
        UnitaryTerm scaled{t.coefficient * s, t.factors};
        if (!merged && t.is_identity()) {
            scaled.coefficient += id_coeff;
            merged = true;
        }
        if (scaled.coefficient != Complex{}) {
            out.terms.push_back(std::move(scaled));
        }
    }
    if (!merged && id_coeff != Complex{}) {
        out.terms.insert(out.terms.begin(),
                         UnitaryTerm{id_coeff, std::vector<Label>(problem.n_qubits, Label::I)});
    }
    if (out.terms.empty()) {
        out.terms.push_back(UnitaryTerm{Complex{}, std::vector<Label>(problem.n_qubits, Label::I)});
    }
    return out;
}

// --- registry ---------------------------------------------------------------

namespace detail {

inline LinearProblem make_registry_problem(std::string id, std::size_t n,
                                           std::initializer_list<std::pair<double, const char *>> terms) {
    LinearProblem p;
    p.n_qubits = n;
    for (const auto &[c, f] : terms) {
        p.terms.push_back(UnitaryTerm::parse({c, 0.0}, f));
    }
    p.b_prep = hadamard_all(n);
    p.id = std::move(id);
    return p;
}

} // namespace detail

inline const std::vector<std::string> &registry_ids() {
    static const std::vector<std::string> ids{"A1", "A2", "A3", "A4", "A5", "A6", "A7"};
    return ids;
}

/// Benchmark instances, all with |b> = H^n |0>.
inline LinearProblem registry_get(std::string_view id) {
    using detail::make_registry_problem;
    if (id == "A1") return make_registry_problem("A1", 3, {{1.0, "HII"}, {0.25, "IZI"}, {0.15, "IIH"}});
    if (id == "A2") return make_registry_problem("A2", 4, {{1.0, "ZIII"}, {0.25, "IZII"}, {0.5, "IIIZ"}});
    if (id == "A3") return make_registry_problem("A3", 5, {{1.0, "HIIII"}, {0.25, "IIZII"}, {0.5, "IIIIH"}});
    // Printed on qubits 1-4 but described as a five-qubit problem: qubit 5 idles.
    if (id == "A4") return make_registry_problem("A4", 5, {{1.0, "ZIIII"}, {0.15, "IIZII"}, {0.5, "IIIZI"}});
    if (id == "A5") return make_registry_problem("A5", 4, {{1.0, "ZIII"}, {0.15, "IXZI"}, {0.5, "IIIH"}});
    if (id == "A6") return make_registry_problem("A6", 3, {{1.0, "III"}, {0.25, "IZI"}, {0.175, "IIH"}});
    if (id == "A7")
        return make_registry_problem("A7", 5,
                                     {{1.0, "HIIII"}, {0.25, "IIZII"}, {0.5, "IIIHI"}, {0.5, "IIIIZ"}});
    throw InvalidArgument("unknown problem id '" + std::string(id) + "'");
}

// --- JSON -------------------------------------------------------------------

inline nlohmann::json problem_to_json(const LinearProblem &p) {
    nlohmann::json j;
    j["n_qubits"] = p.n_qubits;
    auto &terms = j["terms"] = nlohmann::json::array();
    for (const auto &t : p.terms) {
        terms.push_back({{"coeff_re", t.coefficient.real()},
                         {"coeff_im", t.coefficient.imag()},
                         {"factors", t.factor_string()}});
    }
    if (p.b_prep == hadamard_all(p.n_qubits)) {
        j["b_prep"] = "hadamard_all";
    } else if (p.b_prep.empty()) {
        j["b_prep"] = "zero";
    } else {
        j["b_prep"] = "custom";
    }
    if (p.id) {
        j["id"] = *p.id;
    }
    return j;
}

/// Loads {"n_qubits", "terms": [{"coeff_re", "coeff_im", "factors"}], "b_prep"}.
/// A document carrying a registry "id" resolves to the registry instance.
inline LinearProblem problem_from_json(const nlohmann::json &j) {
    try {
        if (j.contains("id") && j["id"].is_string()) {
            const auto id = j["id"].get<std::string>();
            if (std::find(registry_ids().begin(), registry_ids().end(), id) != registry_ids().end()) {
                return registry_get(id);
            }
        }
        LinearProblem p;
        p.n_qubits = j.at("n_qubits").get<std::size_t>();
        for (const auto &t : j.at("terms")) {
            const double re = t.value("coeff_re", 0.0);
            const double im = t.value("coeff_im", 0.0);
            p.terms.push_back(UnitaryTerm::parse({re, im}, t.at("factors").get<std::string>()));
        }
        const auto prep = j.value("b_prep", std::string("hadamard_all"));
        if (prep == "hadamard_all") {
            p.b_prep = hadamard_all(p.n_qubits);
        } else if (prep == "zero") {
            p.b_prep = Circuit(p.n_qubits);
        } else {
            throw InvalidArgument("unsupported b_prep '" + prep + "'");
        }
        if (j.contains("id") && j["id"].is_string()) {
            p.id = j["id"].get<std::string>();
        }
        p.validate();
        return p;
    } catch (const nlohmann::json::exception &e) {
        throw InvalidArgument(std::string("malformed problem document: ") + e.what());
    }
}

} // namespace qls
