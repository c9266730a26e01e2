#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "qls/ansatz.hpp"
#include "qls/cost.hpp"
#include "qls/oracle.hpp"
#include "test_support.hpp"

using namespace qls;

namespace {

const NoiseRegime kExact = NoiseRegime::exact();

LinearProblem identity_problem(std::size_t n) {
    return {n, {UnitaryTerm::parse({1.0, 0.0}, std::string(n, 'I'))}, hadamard_all(n), {}};
}

struct Reference {
    dense::DenseOracle oracle;
    dense::Matrix h_local;
};

Reference reference(const LinearProblem &p) {
    auto o = dense::assemble_dense(p);
    auto h = dense::local_hamiltonian(p, o);
    return {std::move(o), std::move(h)};
}

// Central differences of the exact cost, step 1e-5.
std::vector<double> fd_gradient(const LinearProblem &p, const ParamCircuit &a, std::vector<double> theta,
                                CostType type) {
    constexpr double h = 1e-5;
    std::vector<double> g(theta.size());
    for (std::size_t k = 0; k < theta.size(); ++k) {
        const double t = theta[k];
        theta[k] = t + h;
        const double up = evaluate_cost(p, a.bind(theta), {type, kExact}).raw;
        theta[k] = t - h;
        const double down = evaluate_cost(p, a.bind(theta), {type, kExact}).raw;
        theta[k] = t;
        g[k] = (up - down) / (2.0 * h);
    }
    return g;
}

} // namespace

TEST(CostGlobal, IdentityAtB) {
    const auto p = identity_problem(3);
    EXPECT_NEAR(cost_global(p, hadamard_all(3), kExact), 0.0, 1e-15);
    EXPECT_NEAR(cost_local(p, hadamard_all(3), kExact), 0.0, 1e-15);
}

TEST(CostGlobal, IdentityOrthogonalState) {
    // H Z H = X on qubit 0 takes |+++> to |-++>, orthogonal to |b>.
    const auto p = identity_problem(3);
    Circuit x = hadamard_all(3);
    x.add(gates::z(0));
    EXPECT_NEAR(cost_global(p, x, kExact), 1.0, 1e-15);
}

TEST(CostGlobal, MatchesDenseOracleOnA1) {
    const auto p = registry_get("A1");
    const auto ref = reference(p);
    const auto ansatz = layered_ansatz(3, 3, EntanglerFamily::RyCz, std::nullopt);
    Rng rng(1);
    for (int rep = 0; rep < 100; ++rep) {
        const auto x = ansatz.bind(test::uniform_params(ansatz.n_params(), rng));
        const auto xv = dense::to_vector(prepare(x));
        ASSERT_NEAR(cost_global(p, x, kExact), dense::cost_global(ref.oracle, xv), 1e-10);
    }
}

TEST(CostLocal, MatchesDenseOracleOnA2) {
    const auto p = registry_get("A2");
    const auto ref = reference(p);
    const auto ansatz = layered_ansatz(4, 4, EntanglerFamily::RyCx, std::nullopt);
    Rng rng(2);
    for (int rep = 0; rep < 100; ++rep) {
        const auto x = ansatz.bind(test::uniform_params(ansatz.n_params(), rng));
        const auto xv = dense::to_vector(prepare(x));
        ASSERT_NEAR(cost_local(p, x, kExact), dense::cost_local(ref.h_local, ref.oracle, xv), 1e-10);
    }
}

TEST(CostLocal, ComplexCoefficientsAndNonHadamardB) {
    // Arbitrary complex coefficients and a b-preparation with entanglement.
    LinearProblem p{3,
                    {UnitaryTerm::parse({0.9, 0.2}, "XIZ"), UnitaryTerm::parse({-0.3, 0.4}, "HZI"),
                     UnitaryTerm::parse({0.1, -0.7}, "IIX")},
                    Circuit(3),
                    {}};
    p.b_prep.add(gates::h(0)).add(gates::cx(0, 2)).add(gates::ry(1, 0.7));
    const auto ref = reference(p);
    Rng rng(21);
    const auto ansatz = layered_ansatz(3, 2, EntanglerFamily::RyCz, std::nullopt);
    for (int rep = 0; rep < 30; ++rep) {
        const auto x = ansatz.bind(test::uniform_params(ansatz.n_params(), rng));
        const auto xv = dense::to_vector(prepare(x));
        ASSERT_NEAR(cost_local(p, x, kExact), dense::cost_local(ref.h_local, ref.oracle, xv), 1e-10);
        ASSERT_NEAR(cost_global(p, x, kExact), dense::cost_global(ref.oracle, xv), 1e-10);
    }
}

TEST(CostLocal, ExactSolutionIsGroundState) {
    for (const auto &id : registry_ids()) {
        const auto p = registry_get(id);
        const auto x = dense::to_vector(dense::exact_solution(dense::assemble_dense(p)));
        const auto prep = test::prepare_real_state(x);
        EXPECT_NEAR(cost_local(p, prep, kExact), 0.0, 1e-9) << id;
        EXPECT_NEAR(cost_global(p, prep, kExact), 0.0, 1e-9) << id;
    }
}

TEST(CostProperties, BoundedInExactMode) {
    Rng rng(4);
    for (const auto &id : registry_ids()) {
        const auto p = registry_get(id);
        const auto ansatz = layered_ansatz(p.n_qubits, 2, EntanglerFamily::RyCz, std::nullopt);
        for (int rep = 0; rep < 20; ++rep) {
            const auto x = ansatz.bind(test::uniform_params(ansatz.n_params(), rng));
            const double cg = cost_global(p, x, kExact);
            const double cl = cost_local(p, x, kExact);
            EXPECT_GE(cg, -1e-12);
            EXPECT_LE(cg, 1.0 + 1e-12);
            EXPECT_GE(cl, -1e-12);
            EXPECT_LE(cl, 1.0 + 1e-12);
        }
    }
}

TEST(CostProperties, GlobalAndLocalVanishTogether) {
    // Perturb the exact solution slightly; both costs go to zero together.
    Rng rng(6);
    std::normal_distribution<double> g;
    for (const auto &id : {"A1", "A2", "A5"}) {
        const auto p = registry_get(id);
        const auto x = dense::to_vector(dense::exact_solution(dense::assemble_dense(p)));
        for (double eps : {0.0, 1e-7, 1e-3}) {
            dense::Vector y = x;
            for (Eigen::Index i = 0; i < y.size(); ++i) {
                y(i) += eps * g(rng);
            }
            y.normalize();
            const auto prep = test::prepare_real_state(y);
            const double cg = cost_global(p, prep, kExact);
            const double cl = cost_local(p, prep, kExact);
            if (cg <= 1e-12) {
                EXPECT_LE(cl, 1e-9) << id << " eps=" << eps;
            }
            if (cl <= 1e-12) {
                EXPECT_LE(cg, 1e-9) << id << " eps=" << eps;
            }
            if (eps == 1e-3) {
                EXPECT_GT(cg, 1e-12);
                EXPECT_GT(cl, 1e-12);
            }
        }
    }
}

TEST(CostEvaluation, DenominatorFloor) {
    // A = 1 + X annihilates |->.
    LinearProblem p{1, {UnitaryTerm::parse({1.0, 0.0}, "I"), UnitaryTerm::parse({1.0, 0.0}, "X")}, hadamard_all(1), {}};
    Circuit minus(1);
    minus.add(gates::x(0)).add(gates::h(0));
    EXPECT_THROW(cost_global(p, minus, kExact), CostUndefined);
    EXPECT_THROW(cost_local(p, minus, kExact), CostUndefined);
}

TEST(CostEvaluation, WidthMismatchRejected) {
    EXPECT_THROW(cost_global(registry_get("A1"), Circuit(2), kExact), InvalidArgument);
}

TEST(CostEvaluation, ShotsWithinFiveStandardErrors) {
    const auto p = registry_get("A1");
    const auto ansatz = layered_ansatz(3, 3, EntanglerFamily::RyCz, std::nullopt);
    Rng rng(8);
    const auto x = ansatz.bind(test::uniform_params(ansatz.n_params(), rng));
    for (auto type : {CostType::Global, CostType::Local}) {
        const double exact = evaluate_cost(p, x, {type, kExact}).raw;
        const double se = cost_standard_error(p, x, type, 10000);
        EXPECT_GT(se, 0.0);
        int inside = 0;
        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            const double est = evaluate_cost(p, x, {type, NoiseRegime::with_shots(10000, seed)}).raw;
            inside += std::abs(est - exact) <= 5.0 * se ? 1 : 0;
        }
        EXPECT_GE(inside, 198) << to_string(type);
    }
}

TEST(CostEvaluation, StandardErrorMatchesEmpiricalSpread) {
    const auto p = registry_get("A1");
    const auto ansatz = layered_ansatz(3, 2, EntanglerFamily::RyCz, std::nullopt);
    Rng rng(9);
    const auto x = ansatz.bind(test::uniform_params(ansatz.n_params(), rng));
    const double se = cost_standard_error(p, x, CostType::Local, 10000);
    double sum = 0.0;
    double sum2 = 0.0;
    const int n = 400;
    for (int seed = 0; seed < n; ++seed) {
        const double v = evaluate_cost(p, x, {CostType::Local, NoiseRegime::with_shots(10000, seed)}).raw;
        sum += v;
        sum2 += v * v;
    }
    const double sd = std::sqrt(sum2 / n - (sum / n) * (sum / n));
    EXPECT_NEAR(sd / se, 1.0, 0.2);
}

TEST(CostEvaluation, SampledValuesAreClampedRawAreNot) {
    // At the exact solution the sampled raw estimate straddles zero.
    const auto p = registry_get("A1");
    const auto prep =
        test::prepare_real_state(dense::to_vector(dense::exact_solution(dense::assemble_dense(p))));
    bool saw_negative = false;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto e = evaluate_cost(p, prep, {CostType::Local, NoiseRegime::with_shots(1000, seed)});
        EXPECT_GE(e.value, 0.0);
        EXPECT_LE(e.value, 1.0);
        saw_negative = saw_negative || e.raw < 0.0;
    }
    EXPECT_TRUE(saw_negative);
}

TEST(Budget, CountsAndRefuses) {
    CostBudget b(5);
    b.charge(3);
    EXPECT_EQ(b.used(), 3u);
    EXPECT_EQ(b.remaining(), 2u);
    EXPECT_FALSE(b.can_afford(3));
    EXPECT_THROW(b.charge(3), BudgetExhausted);
    EXPECT_EQ(b.used(), 3u);
    b.charge(2);
    EXPECT_THROW(b.charge(1), BudgetExhausted);
}

TEST(Gradient, ZeroWhereCostIsConstant) {
    // A = 1, |b> = |00>. Qubit 1 is flipped to |1>, so every x is orthogonal
    // to b whatever the Ry on qubit 0 does: C_G = 1 identically.
    LinearProblem p{2, {UnitaryTerm::parse({1.0, 0.0}, "II")}, Circuit(2), {}};
    ParamCircuit flat(2);
    flat.add_fixed(gates::x(1)).add_parameterized(gates::ry(0, 0.0));
    CostBudget budget(100);
    for (double t : {0.0, 0.4, -1.3}) {
        const std::vector<double> theta{t};
        const auto g = gradient(p, flat, theta, {CostType::Global, kExact}, budget);
        ASSERT_EQ(g.values.size(), 1u);
        EXPECT_NEAR(g.values[0], 0.0, 1e-14);
        EXPECT_TRUE(g.finite_difference.empty());
    }
}

TEST(Gradient, ShiftRuleMatchesFiniteDifferencesA1) {
    const auto p = registry_get("A1");
    const auto ansatz = layered_ansatz(3, 3, EntanglerFamily::RyCz, std::nullopt);
    Rng rng(10);
    for (auto type : {CostType::Local, CostType::Global}) {
        for (int rep = 0; rep < 50; ++rep) {
            const auto theta = test::uniform_params(ansatz.n_params(), rng);
            CostBudget budget(2 * ansatz.n_params());
            const auto g = gradient(p, ansatz, theta, {type, kExact}, budget);
            EXPECT_TRUE(g.finite_difference.empty());
            const auto fd = fd_gradient(p, ansatz, theta, type);
            for (std::size_t k = 0; k < theta.size(); ++k) {
                ASSERT_NEAR(g.values[k], fd[k], 1e-5) << "component " << k;
            }
        }
    }
}

TEST(Gradient, FallbackForControlledAndSharedParameters) {
    const auto p = registry_get("A5");
    ParamCircuit a(4);
    for (std::size_t q = 0; q < 4; ++q) {
        a.add_parameterized(gates::ry(q, 0.0));
    }
    a.add_parameterized(gates::cry(0, 1, 0.0));
    ParamSlot shared{gates::u3(2, 0.0, 0.0, 0.0), {5, 5, -1}};
    a.add_slot(shared);
    a.add_parameterized(gates::cu3(3, 2, 0.0, 0.0, 0.0));
    Rng rng(11);
    const auto theta = test::uniform_params(a.n_params(), rng);
    CostBudget budget(1000);
    const auto g = gradient(p, a, theta, {CostType::Local, kExact}, budget);
    EXPECT_EQ(budget.used(), 2 * a.n_params());
    EXPECT_EQ(g.finite_difference, (std::vector<std::size_t>{4, 5, 6, 7, 8}));
    const auto fd = fd_gradient(p, a, theta, CostType::Local);
    for (std::size_t k = 0; k < theta.size(); ++k) {
        EXPECT_NEAR(g.values[k], fd[k], 1e-5) << "component " << k;
    }
}

TEST(Gradient, BudgetAccounting) {
    const auto p = registry_get("A1");
    const auto ansatz = layered_ansatz(3, 1, EntanglerFamily::RyCz, std::nullopt);
    const std::vector<double> theta(ansatz.n_params(), 0.3);
    CostBudget budget(2 * ansatz.n_params());
    EXPECT_NO_THROW(gradient(p, ansatz, theta, {CostType::Local, kExact}, budget));
    EXPECT_EQ(budget.remaining(), 0u);
    EXPECT_THROW(gradient(p, ansatz, theta, {CostType::Local, kExact}, budget), BudgetExhausted);
}
