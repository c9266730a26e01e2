#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "qls/ansatz.hpp"
#include "qls/cost.hpp"
#include "qls/optimizers.hpp"
#include "qls/oracle.hpp"
#include "qls/problem.hpp"

namespace qls {

struct VqlsRun {
    LinearProblem problem;
    ParamCircuit ansatz;
    CostKind cost_kind;
    OptimizerSpec optimizer;
    std::uint64_t budget = 1000;
    std::vector<double> x0;
};

struct VqlsResult {
    OptimResult optim;
    StateVector solution;
    /// Noise-free cost of the returned parameters.
    double final_cost_exact = 0.0;
    /// |<x_exact|x'>|^2 when the dense oracle is available.
    std::optional<double> fidelity;
};

namespace detail {

/// Exact-solution fidelity when the problem fits the dense oracle and is
/// well conditioned; nothing otherwise.
inline std::optional<double> oracle_fidelity(const LinearProblem &problem, const StateVector &x) {
    if (problem.n_qubits > dense::kDefaultQubitCap) {
        return std::nullopt;
    }
    try {
        return dense::fidelity(dense::exact_solution(dense::assemble_dense(problem)), x);
    } catch (const SingularMatrix &) {
        return std::nullopt;
    }
}

/// Cost and gradient callables over ansatz parameters. Every call draws a
/// fresh seed from a per-objective counter, so a run is reproducible from
/// the regime seed alone.
struct VqlsObjective {
    const LinearProblem *problem;
    const ParamCircuit *ansatz;
    CostKind kind;
    std::shared_ptr<std::uint64_t> counter = std::make_shared<std::uint64_t>(0);

    [[nodiscard]] CostKind next_kind() const {
        CostKind k = kind;
        k.regime = kind.regime.reseeded(derive_seed(kind.regime.seed, (*counter)++));
        return k;
    }

    Observation operator()(std::span<const double> theta) const {
        const auto k = next_kind();
        const auto e = evaluate_cost(*problem, ansatz->bind(theta), k);
        return {e.value, e.raw};
    }

    [[nodiscard]] GradientFunction gradient() const {
        return [self = *this](std::span<const double> theta) {
            return gradient_unbudgeted(*self.problem, *self.ansatz, theta, self.next_kind(), std::nullopt).values;
        };
    }
};

inline OptimResult optimize_vqls(const LinearProblem &problem, const ParamCircuit &ansatz, const CostKind &kind,
                                 const OptimizerSpec &spec, CostBudget &budget, std::span<const double> x0) {
    if (ansatz.n_qubits() != problem.n_qubits) {
        throw InvalidArgument("ansatz width does not match the problem");
    }
    const VqlsObjective obj{&problem, &ansatz, kind};
    const GradientFunction grad = spec.kind == OptimizerKind::BFGS ? obj.gradient() : GradientFunction{};
    return minimize(ObservedCostFunction(obj), x0, spec, budget, grad);
}

} // namespace detail

/// VQLS: minimizes the chosen cost over the ansatz parameters. BFGS receives
/// parameter-shift gradients; the other optimizers use cost values only.
inline VqlsResult solve_vqls(const VqlsRun &run) {
    run.problem.validate();
    if (run.budget == 0) {
        throw InvalidArgument("VQLS needs a positive budget");
    }
    std::vector<double> x0 = run.x0;
    if (x0.empty()) {
        x0.assign(run.ansatz.n_params(), 0.0);
    }
    CostBudget budget(run.budget);
    VqlsResult out;
    out.optim = detail::optimize_vqls(run.problem, run.ansatz, run.cost_kind, run.optimizer, budget, x0);
    const Circuit best = run.ansatz.bind(out.optim.best_params);
    out.solution = prepare(best);
    out.final_cost_exact = evaluate_cost(run.problem, best, {run.cost_kind.type, NoiseRegime::exact()}).raw;
    out.fidelity = detail::oracle_fidelity(run.problem, out.solution);
    return out;
}

// --- AAVQLS -----------------------------------------------------------------

/// T steps after the s = 0 boundary. The total budget pays one evaluation
/// for the s = 0 boundary and splits the rest evenly across steps 1..T
/// (remainder to the last); evaluations a step leaves unused roll over.
struct AdiabaticSchedule {
    std::size_t T = 10;
    std::uint64_t total_budget = 1000;

    void validate() const {
        if (T == 0) {
            throw InvalidArgument("adiabatic schedule needs T >= 1");
        }
        if (total_budget < T + 1) {
            throw InvalidArgument("adiabatic schedule leaves a step with zero budget");
        }
    }

    [[nodiscard]] double s_bar(std::size_t k) const { return k == T ? 1.0 : static_cast<double>(k) / T; }

    [[nodiscard]] std::uint64_t step_budget(std::size_t k) const {
        if (k == 0) {
            return 1;
        }
        const std::uint64_t share = (total_budget - 1) / T;
        return k == T ? total_budget - 1 - share * (T - 1) : share;
    }
};

struct AdiabaticStep {
    std::size_t step = 0;
    double s_bar = 0.0;
    double cost_before = 0.0; ///< new s, parameters carried over from the previous step
    double cost_after = 0.0;
    std::uint64_t evals_used = 0;
};

struct AavqlsResult {
    OptimResult final_step;
    std::vector<AdiabaticStep> steps;
    std::vector<double> params;
    StateVector solution;
    double final_cost_exact = 0.0;
    std::optional<double> fidelity;
    std::uint64_t total_evals = 0;
};

/// Discrete adiabatic sweep over (1 - s) 1 + s A with s = k / T, each step a
/// VQLS warm-started from the previous optimum of V_AAVQLS = U V(alpha).
inline AavqlsResult solve_aavqls(const LinearProblem &problem, const AdiabaticAnsatz &ansatz,
                                 const AdiabaticSchedule &schedule, const OptimizerSpec &optimizer,
                                 const CostKind &cost_kind) {
    problem.validate();
    schedule.validate();
    std::vector<double> alpha = identity_init(ansatz.inner);
    const ParamCircuit full = ansatz.full();
    if (full.n_qubits() != problem.n_qubits) {
        throw InvalidArgument("ansatz width does not match the problem");
    }
    AavqlsResult out;
    std::uint64_t carry = 0;
    for (std::size_t k = 0; k <= schedule.T; ++k) {
        const double s = schedule.s_bar(k);
        const LinearProblem step_problem = interpolate_with_identity(problem, s);
        CostKind kind = cost_kind;
        kind.regime = cost_kind.regime.reseeded(derive_seed(cost_kind.regime.seed, {0x61617671ULL, k}));
        const std::uint64_t allowance = schedule.step_budget(k) + carry;
        CostBudget budget(allowance);
        AdiabaticStep rec{k, s, 0.0, 0.0, 0};
        if (k == 0) {
            const auto e = evaluate_cost(step_problem, full.bind(alpha), kind);
            budget.charge(1);
            rec.cost_before = rec.cost_after = e.raw;
            out.final_step = {alpha, e.value, {{1, e.raw}}, Termination::Tolerance, 1};
        } else {
            auto r = detail::optimize_vqls(step_problem, full, kind, optimizer, budget, alpha);
            rec.cost_before = r.trace.front().cost;
            rec.cost_after = r.best_cost;
            alpha = r.best_params;
            out.final_step = std::move(r);
        }
        rec.evals_used = budget.used();
        carry = allowance - budget.used();
        out.total_evals += budget.used();
        out.steps.push_back(rec);
    }
    out.params = alpha;
    const Circuit best = full.bind(alpha);
    out.solution = prepare(best);
    out.final_cost_exact = evaluate_cost(problem, best, {cost_kind.type, NoiseRegime::exact()}).raw;
    out.fidelity = detail::oracle_fidelity(problem, out.solution);
    return out;
}

} // namespace qls
