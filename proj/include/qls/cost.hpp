#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qls/ansatz.hpp"
#include "qls/circuit.hpp"
#include "qls/error.hpp"
#include "qls/hadamard_test.hpp"
#include "qls/noise.hpp"
#include "qls/problem.hpp"

namespace qls {

enum class CostType : std::uint8_t { Global, Local };

inline std::string_view to_string(CostType t) noexcept {
    return t == CostType::Global ? "global" : "local";
}

struct CostKind {
    CostType type = CostType::Local;
    NoiseRegime regime;
};

/// Counts cost evaluations against a hard cap. A gradient is charged two
/// evaluations per parameter. Safe to charge from several threads.
class CostBudget {
  public:
    explicit CostBudget(std::uint64_t max_evals) : max_(max_evals) {}
    CostBudget(const CostBudget &) = delete;
    CostBudget &operator=(const CostBudget &) = delete;

    [[nodiscard]] std::uint64_t max_evals() const noexcept { return max_; }
    [[nodiscard]] std::uint64_t used() const noexcept { return used_.load(); }
    [[nodiscard]] std::uint64_t remaining() const noexcept { return max_ - used_.load(); }
    [[nodiscard]] bool can_afford(std::uint64_t k) const noexcept { return remaining() >= k; }

    /// Reserves `k` evaluations atomically or throws BudgetExhausted.
    void charge(std::uint64_t k) {
        std::uint64_t cur = used_.load();
        do {
            if (cur + k > max_) {
                throw BudgetExhausted("evaluation budget exhausted (" + std::to_string(cur) + " of " +
                                      std::to_string(max_) + " used, " + std::to_string(k) +
                                      " requested)");
            }
        } while (!used_.compare_exchange_weak(cur, cur + k));
    }

  private:
    std::uint64_t max_;
    std::atomic<std::uint64_t> used_{0};
};

/// Numerator <x|H|x> and denominator <psi|psi> of a VQLS cost.
struct CostParts {
    double numerator = 0.0;
    double denominator = 1.0;

    [[nodiscard]] double value() const { return numerator / denominator; }
};

struct CostEvaluation {
    double raw = 0.0;   ///< assembled value, unclamped
    double value = 0.0; ///< clamped to [0, 1] in sampled regimes, raw otherwise
    CostParts parts;
};

inline constexpr double kDenominatorFloor = 1e-9;

namespace detail {

/// Circuits and Hadamard-test overlaps needed for one cost evaluation.
/// circuits[l] = V then A_l, so <A_l x|A_l' x> gives the term-pair overlaps;
/// only l <= l' is measured (the rest follows by conjugation) and the
/// imaginary part is skipped on the diagonal, where it vanishes.
struct CostPlan {
    CostType type = CostType::Local;
    std::size_t n_qubits = 0;
    std::vector<Complex> coeffs;
    std::vector<Circuit> circuits;
    std::vector<OverlapJob> jobs;
};

inline void add_pair_jobs(CostPlan &plan, std::size_t m, auto right_index) {
    for (std::size_t l = 0; l < m; ++l) {
        for (std::size_t lp = l; lp < m; ++lp) {
            const std::size_t r = right_index(lp);
            plan.jobs.push_back({l, r, Part::Real, plan.jobs.size()});
            if (l != lp) {
                plan.jobs.push_back({l, r, Part::Imag, plan.jobs.size()});
            }
        }
    }
}

inline CostPlan build_cost_plan(const LinearProblem &problem, const Circuit &x_prep, CostType type) {
    if (x_prep.n_qubits != problem.n_qubits) {
        throw InvalidArgument("ansatz width " + std::to_string(x_prep.n_qubits) +
                              " does not match problem width " + std::to_string(problem.n_qubits));
    }
    CostPlan plan;
    plan.type = type;
    plan.n_qubits = problem.n_qubits;
    const std::size_t m = problem.n_terms();
    for (const auto &t : problem.terms) {
        plan.coeffs.push_back(t.coefficient);
        plan.circuits.push_back(x_prep.then(t.circuit()));
    }
    add_pair_jobs(plan, m, [](std::size_t lp) { return lp; });
    if (type == CostType::Global) {
        plan.circuits.push_back(problem.b_prep);
        const std::size_t b = m;
        for (std::size_t l = 0; l < m; ++l) {
            plan.jobs.push_back({b, l, Part::Real, plan.jobs.size()});
            plan.jobs.push_back({b, l, Part::Imag, plan.jobs.size()});
        }
    } else {
        const Circuit u_dag = problem.b_prep.inverse();
        const std::size_t n = problem.n_qubits;
        const std::size_t base = plan.circuits.size();
        // circuits[base + lp * n + j] = V, A_lp, U^dag, Z_j, U
        for (std::size_t lp = 0; lp < m; ++lp) {
            for (std::size_t j = 0; j < n; ++j) {
                Circuit c = plan.circuits[lp].then(u_dag);
                c.add(gates::z(j));
                c.append(problem.b_prep);
                plan.circuits.push_back(std::move(c));
            }
        }
        for (std::size_t j = 0; j < n; ++j) {
            add_pair_jobs(plan, m, [&](std::size_t lp) { return base + lp * n + j; });
        }
    }
    return plan;
}

/// sum_{l,l'} conj(c_l) c_l' d_{ll'} from upper-triangle estimates, consuming
/// values in the order add_pair_jobs produced them.
inline double pair_sum(std::span<const Complex> c, std::span<const double> values, std::size_t &pos) {
    double acc = 0.0;
    for (std::size_t l = 0; l < c.size(); ++l) {
        for (std::size_t lp = l; lp < c.size(); ++lp) {
            const double re = values[pos++];
            if (l == lp) {
                acc += std::norm(c[l]) * re;
            } else {
                const double im = values[pos++];
                acc += 2.0 * (std::conj(c[l]) * c[lp] * Complex{re, im}).real();
            }
        }
    }
    return acc;
}

inline CostParts assemble(const CostPlan &plan, std::span<const double> values) {
    std::size_t pos = 0;
    CostParts parts;
    parts.denominator = pair_sum(plan.coeffs, values, pos);
    if (plan.type == CostType::Global) {
        Complex beta{0.0, 0.0};
        for (const auto &c : plan.coeffs) {
            const double re = values[pos++];
            const double im = values[pos++];
            beta += c * Complex{re, im};
        }
        parts.numerator = parts.denominator - std::norm(beta);
    } else {
        double local = 0.0;
        for (std::size_t j = 0; j < plan.n_qubits; ++j) {
            local += pair_sum(plan.coeffs, values, pos);
        }
        parts.numerator =
            0.5 * parts.denominator - local / (2.0 * static_cast<double>(plan.n_qubits));
    }
    return parts;
}

} // namespace detail

/// Numerator and denominator estimated under `kind.regime`.
inline CostParts cost_parts(const LinearProblem &problem, const Circuit &x_prep, const CostKind &kind) {
    const auto plan = detail::build_cost_plan(problem, x_prep, kind.type);
    const auto values = estimate_overlaps(plan.circuits, plan.jobs, kind.regime);
    return detail::assemble(plan, values);
}

inline CostEvaluation finish_cost(const CostParts &parts, const NoiseRegime &regime) {
    if (!(parts.denominator > kDenominatorFloor)) {
        throw CostUndefined("cost undefined: <psi|psi> estimate " + std::to_string(parts.denominator) +
                            " below floor");
    }
    CostEvaluation e;
    e.parts = parts;
    e.raw = parts.value();
    e.value = regime.sampled() ? std::clamp(e.raw, 0.0, 1.0) : e.raw;
    return e;
}

inline CostEvaluation evaluate_cost(const LinearProblem &problem, const Circuit &x_prep, const CostKind &kind) {
    return finish_cost(cost_parts(problem, x_prep, kind), kind.regime);
}

/// C_G = (<psi|psi> - |<b|psi>|^2) / <psi|psi>, |psi> = A|x>.
inline double cost_global(const LinearProblem &problem, const Circuit &x_prep, const NoiseRegime &regime) {
    return evaluate_cost(problem, x_prep, {CostType::Global, regime}).value;
}

/// C_L = <x|H_L|x> / <psi|psi>.
inline double cost_local(const LinearProblem &problem, const Circuit &x_prep, const NoiseRegime &regime) {
    return evaluate_cost(problem, x_prep, {CostType::Local, regime}).value;
}

/// Delta-method standard error of a Shots(N) cost estimate, propagated from
/// the binomial error of every Hadamard test through the assembly.
inline double cost_standard_error(const LinearProblem &problem, const Circuit &x_prep, CostType type,
                                  std::uint64_t shots) {
    const auto plan = detail::build_cost_plan(problem, x_prep, type);
    auto values = exact_overlaps(plan.circuits, plan.jobs);
    double var = 0.0;
    constexpr double h = 1e-6;
    for (std::size_t t = 0; t < values.size(); ++t) {
        const double v = values[t];
        const double sigma = expectation_standard_error(v, shots);
        values[t] = v + h;
        const double up = detail::assemble(plan, values).value();
        values[t] = v - h;
        const double down = detail::assemble(plan, values).value();
        values[t] = v;
        const double d = (up - down) / (2.0 * h);
        var += d * d * sigma * sigma;
    }
    return std::sqrt(var);
}

// --- gradients --------------------------------------------------------------

struct Gradient {
    std::vector<double> values;
    /// Parameters whose component came from the central-difference fallback.
    std::vector<std::size_t> finite_difference;
};

inline constexpr double kFallbackStep = 1e-4;

namespace detail {

inline Gradient gradient_unbudgeted(const LinearProblem &problem, const ParamCircuit &ansatz,
                                    std::span<const double> params, const CostKind &kind,
                                    std::optional<CostParts> center) {
    const std::size_t p = ansatz.n_params();
    if (params.size() != p) {
        throw InvalidArgument("gradient: parameter count mismatch");
    }
    auto parts_at = [&](std::span<const double> theta, std::uint64_t stream) {
        CostKind k = kind;
        k.regime = kind.regime.reseeded(derive_seed(kind.regime.seed, {0x67726164ULL, stream}));
        return cost_parts(problem, ansatz.bind(theta), k);
    };
    if (!center) {
        center = parts_at(params, 0);
    }
    if (!(center->denominator > kDenominatorFloor)) {
        throw CostUndefined("gradient: <psi|psi> below floor at the expansion point");
    }
    Gradient g;
    g.values.resize(p);
    std::vector<double> theta(params.begin(), params.end());
    for (std::size_t k = 0; k < p; ++k) {
        const double orig = theta[k];
        if (ansatz.shift_rule_applies(k)) {
            theta[k] = orig + std::numbers::pi / 2.0;
            const auto plus = parts_at(theta, 2 * k + 1);
            theta[k] = orig - std::numbers::pi / 2.0;
            const auto minus = parts_at(theta, 2 * k + 2);
            const double dn = 0.5 * (plus.numerator - minus.numerator);
            const double dd = 0.5 * (plus.denominator - minus.denominator);
            const double d = center->denominator;
            g.values[k] = (dn * d - center->numerator * dd) / (d * d);
        } else {
            theta[k] = orig + kFallbackStep;
            const double up = finish_cost(parts_at(theta, 2 * k + 1), kind.regime).raw;
            theta[k] = orig - kFallbackStep;
            const double down = finish_cost(parts_at(theta, 2 * k + 2), kind.regime).raw;
            g.values[k] = (up - down) / (2.0 * kFallbackStep);
            g.finite_difference.push_back(k);
        }
        theta[k] = orig;
    }
    return g;
}

} // namespace detail

/// Analytic parameter-shift gradient of C = N / D. N and D are expectation
/// values in |x(theta)>, so each obeys the pi/2 shift rule and
///   dC = (dN * D - N * dD) / D^2.
/// Parameters outside the rule (controlled or shared rotations) fall back to a
/// central difference with step 1e-4 and are listed in the result. Charges
/// the budget 2 evaluations per parameter; the expansion point itself is taken
/// from `center` (typically the caller's own evaluation there) or evaluated
/// uncharged.
inline Gradient gradient(const LinearProblem &problem, const ParamCircuit &ansatz, std::span<const double> params,
                         const CostKind &kind, CostBudget &budget,
                         std::optional<CostParts> center = std::nullopt) {
    budget.charge(2 * ansatz.n_params());
    return detail::gradient_unbudgeted(problem, ansatz, params, kind, center);
}

} // namespace qls
