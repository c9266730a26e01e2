// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include <unistd.h>

#include "qls/qls.hpp"

using namespace qls;
namespace fs = std::filesystem;

namespace {

const NoiseRegime kExact = NoiseRegime::exact();

std::size_t hw_jobs() { return std::max<std::size_t>(1, std::thread::hardware_concurrency()); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char *f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::vector<double> uniform(std::size_t n, Rng &rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> x(n);
    for (auto &v : x) {
        v = u(rng);
    }
    return x;
}

double median(std::vector<double> v) { return quartiles(std::move(v)).median; }

struct Scratch {
    fs::path path;
    Scratch() {
        path = fs::temp_directory_path() / ("qls-acceptance-" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~Scratch() { fs::remove_all(path); }
};

std::string slurp(const fs::path &p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

// 1 -------------------------------------------------------------------------
Outcome oracle_equivalence() {
    double worst = 0.0;
    std::string where;
    for (const auto &id : registry_ids()) {
        const auto p = registry_get(id);
        const auto o = dense::assemble_dense(p);
        const auto h = dense::local_hamiltonian(p, o);
        const auto ansatz = layered_ansatz(p.n_qubits, p.n_qubits, EntanglerFamily::RyCx, std::nullopt);
        Rng rng(derive_seed(1, {static_cast<std::uint64_t>(id.back() - '0')}));
        for (int k = 0; k < 100; ++k) {
            const auto x = ansatz.bind(uniform(ansatz.n_params(), rng, 0.0, 2.0 * std::numbers::pi));
            const auto v = dense::to_vector(prepare(x));
            const double dg = std::abs(cost_global(p, x, kExact) - dense::cost_global(o, v));
            const double dl = std::abs(cost_local(p, x, kExact) - dense::cost_local(h, o, v));
            if (std::max(dg, dl) > worst) {
                worst = std::max(dg, dl);
                where = id;
            }
        }
    }
    return {worst <= 1e-10, fmt("A1-A7 x 100 params, max |hadamard - dense| = %.3g (%s), tol 1e-10", worst,
                                where.c_str())};
}

// 2 -------------------------------------------------------------------------
Outcome cqs_printed_value() {
    const auto r = run_cqs(registry_get("A6"), BreadthFirst{2}, kExact);
    return {r.state.solution.loss <= 0.00324 + 1e-4,
            fmt("A6 depth-2 breadth-first: %zu nodes, L_R = %.3g (bound 0.00334)", r.state.nodes.size(),
                r.state.solution.loss)};
}

// 3 -------------------------------------------------------------------------
Outcome shot_statistics() {
    const auto p = registry_get("A1");
    const auto ansatz = layered_ansatz(3, 3, EntanglerFamily::RyCx, std::nullopt);
    Rng rng(3);
    std::size_t inside = 0;
    std::size_t total = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto x = ansatz.bind(uniform(ansatz.n_params(), rng, 0.0, 2.0 * std::numbers::pi));
        for (auto type : {CostType::Global, CostType::Local}) {
            const double exact = evaluate_cost(p, x, {type, kExact}).raw;
            const double se = cost_standard_error(p, x, type, 10000);
            const auto regime = NoiseRegime::with_shots(10000, derive_seed(33, {static_cast<std::uint64_t>(trial)}));
            const double est = evaluate_cost(p, x, {type, regime}).raw;
            inside += std::abs(est - exact) <= 5.0 * se ? 1 : 0;
            ++total;
        }
    }
    const double frac = static_cast<double>(inside) / static_cast<double>(total);
    return {frac >= 0.99, fmt("A1 Shots(10000): %zu/%zu estimates within 5 SE (%.4f, need >= 0.99)", inside, total,
                              frac)};
}

// 4 -------------------------------------------------------------------------
Outcome gradient_correctness() {
    double worst = 0.0;
    std::size_t configs = 0;
    for (const char *id : {"A1", "A5"}) {
        const auto p = registry_get(id);
        const auto ansatz = layered_ansatz(p.n_qubits, p.n_qubits, EntanglerFamily::RyCx, std::nullopt);
        Rng rng(4);
        for (int k = 0; k < 100; ++k) {
            const auto type = k % 2 ? CostType::Global : CostType::Local;
            auto theta = uniform(ansatz.n_params(), rng, 0.0, 2.0 * std::numbers::pi);
            CostBudget budget(2 * ansatz.n_params());
            const auto g = gradient(p, ansatz, theta, {type, kExact}, budget);
            constexpr double h = 1e-5;
            for (std::size_t j = 0; j < theta.size(); ++j) {
                const double t = theta[j];
                theta[j] = t + h;
                const double up = evaluate_cost(p, ansatz.bind(theta), {type, kExact}).raw;
                theta[j] = t - h;
                const double down = evaluate_cost(p, ansatz.bind(theta), {type, kExact}).raw;
                theta[j] = t;
                worst = std::max(worst, std::abs(g.values[j] - (up - down) / (2.0 * h)));
            }
            ++configs;
        }
    }
    return {worst <= 1e-5,
            fmt("A1, A5: %zu configurations, max |shift - central diff| = %.3g, tol 1e-5", configs, worst)};
}

// 5 -------------------------------------------------------------------------
Outcome vqls_reproduction(const fs::path &scratch) {
    std::vector<double> medians;
    for (const char *noise : {"exact", "shots:10000"}) {
        ExperimentConfig c;
        c.problem = "A1";
        c.method = Method::Vqls;
        c.noise = noise;
        c.optimizer = OptimizerSpec{OptimizerKind::BFGS, {}, 0};
        c.budget = 1000;
        c.restarts = 100;
        c.base_seed = 0;
        c.jobs = hw_jobs();
        c.output_dir = (scratch / "c5").string();
        const auto res = run_campaign(c);
        medians.push_back(res.summary["final_cost"]["median"].get<double>());
    }
    return {medians[0] <= 1e-3 && medians[1] > medians[0],
            fmt("A1/BFGS/budget 1000 x 100 restarts: median C_L exact %.3g (<= 1e-3), shots %.3g (> exact)",
                medians[0], medians[1])};
}

// 6 -------------------------------------------------------------------------
Outcome aavqls_endpoints() {
    const auto p = registry_get("A4");
    const auto aa = adiabatic_ansatz(p.n_qubits, 2, p.b_prep);
    const OptimizerSpec powell{OptimizerKind::Powell, {}, 0};
    const auto r10 = solve_aavqls(p, aa, {10, 1000}, powell, {CostType::Local, kExact});
    const auto r20 = solve_aavqls(p, aa, {20, 1000}, powell, {CostType::Local, kExact});
    const double c0 = std::max(std::abs(r10.steps.front().cost_after), std::abs(r20.steps.front().cost_after));
    const double dm = (dense::assemble_matrix(interpolate_with_identity(p, 1.0)) - dense::assemble_matrix(p))
                          .cwiseAbs()
                          .maxCoeff();
    const bool ok = c0 <= 1e-10 && dm <= 1e-12 && r10.total_evals == r20.total_evals;
    return {ok, fmt("A4: cost at s=0 %.3g, |A(1) - A| %.3g, evaluations T=10 %llu vs T=20 %llu", c0, dm,
                    static_cast<unsigned long long>(r10.total_evals),
                    static_cast<unsigned long long>(r20.total_evals))};
}

// 7 -------------------------------------------------------------------------
Outcome eavqls_laws() {
    // topological search keeps the realized state
    Rng rng(7);
    double worst_state = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(trial % 4);
        const GateSet set = trial % 2 ? GateSet::Complex : GateSet::Real;
        Genome g;
        for (int d = 0; d <= trial % 4; ++d) {
            g = topological_search(std::move(g), n, set, rng);
        }
        std::uniform_real_distribution<double> u(-3.0, 3.0);
        for (auto &gene : g.genes) {
            for (auto &s : gene.slots) {
                for (auto &x : s.params) {
                    x = u(rng);
                }
            }
        }
        const auto before = prepare(genome_circuit(g, n, set));
        const auto after = prepare(genome_circuit(topological_search(g, n, set, rng), n, set));
        for (std::size_t i = 0; i < before.size(); ++i) {
            worst_state = std::max(worst_state, std::abs(before[i] - after[i]));
        }

        // removal drawing p = m returns the genome untouched
        g.cost = 0.5;
        const auto r = removal(g, rng);
        if (r.genes.size() == g.genes.size() && (r.genes != g.genes || r.cost != g.cost)) {
            worst_state = std::numeric_limits<double>::infinity();
        }
    }
    // a one-gene genome always draws p = m
    bool removal_identity = true;
    for (int trial = 0; trial < 100; ++trial) {
        auto g = topological_search(Genome{}, 3, GateSet::Real, rng);
        g.cost = 0.25;
        const auto r = removal(g, rng);
        removal_identity = removal_identity && r.genes == g.genes && r.cost == g.cost;
    }

    // parameter search never accepts a worse gene
    const auto a5 = registry_get("A5");
    const GeneSearchContext ctx{&a5, GateSet::Real, {CostType::Local, kExact}, {OptimizerKind::NelderMead, {}, 0}, 60};
    double worst_rise = -std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 20; ++trial) {
        Genome g;
        for (int d = 0; d < 4; ++d) {
            g = topological_search(std::move(g), 4, GateSet::Real, rng);
        }
        for (const auto &v : parameter_search(g, ctx, static_cast<std::uint64_t>(trial))) {
            worst_rise = std::max(worst_rise, v.cost_after - v.cost_before);
        }
    }

    // 20x20 runs on A5 with the default configuration
    std::vector<EavqlsResult> runs(20);
    parallel_for(runs.size(), hw_jobs(), [&](std::size_t s) {
        EavqlsConfig cfg;
        cfg.seed = s;
        runs[s] = run_eavqls(a5, cfg);
    });
    std::size_t improved = 0;
    for (const auto &r : runs) {
        improved += r.history.back().best_true_cost < r.history.front().best_true_cost ? 1 : 0;
    }
    const bool ok = worst_state <= 1e-10 && removal_identity && worst_rise <= 0.0 && improved >= 19;
    return {ok, fmt("topo state dev %.3g, removal(p=m) identity %s, max accepted rise %.3g, "
                    "A5 20x20 improved in %zu/20 seeds (need >= 19)",
                    worst_state, removal_identity ? "yes" : "no", worst_rise, improved)};
}

// 8 -------------------------------------------------------------------------
Outcome regression_laws() {
    double worst_form = 0.0;
    Rng rng(8);
    for (const auto &id : registry_ids()) {
        const auto p = registry_get(id);
        for (int trial = 0; trial < 10; ++trial) {
            std::vector<TreeNode> nodes{TreeNode{}};
            const int extra = 1 + trial % 5;
            for (int k = 0; k < extra; ++k) {
                const auto cand = candidate_children(nodes, p.n_terms());
                nodes.push_back(cand[std::uniform_int_distribution<std::size_t>(0, cand.size() - 1)(rng)]);
            }
            const auto preps = detail::node_circuits(p, nodes);
            const auto gq = estimate_gram_and_q(p, preps, kExact);
            const double lc = solve_alpha(gq.gram, gq.q).loss;
            const double lr = solve_alpha_real(gq.gram, gq.q).loss;
            worst_form = std::max(worst_form, std::abs(lc - lr));
        }
    }

    double worst_rise = -std::numeric_limits<double>::infinity();
    std::size_t expansions = 0;
    for (const auto &id : registry_ids()) {
        const auto p = registry_get(id);
        for (int chain = 0; chain < 3 && expansions < 200; ++chain) {
            std::vector<TreeNode> nodes{TreeNode{}};
            double prev = run_cqs(p, FixedNodes{nodes}, kExact).state.solution.loss;
            for (int k = 0; k < 10 && expansions < 200; ++k) {
                const auto cand = candidate_children(nodes, p.n_terms());
                nodes.push_back(cand[std::uniform_int_distribution<std::size_t>(0, cand.size() - 1)(rng)]);
                const double loss = run_cqs(p, FixedNodes{nodes}, kExact).state.solution.loss;
                worst_rise = std::max(worst_rise, loss - prev);
                prev = loss;
                ++expansions;
            }
        }
    }

    const auto a7 = registry_get("A7");
    std::vector<double> finals(40);
    parallel_for(finals.size(), hw_jobs(), [&](std::size_t i) {
        LavqlsConfig cfg;
        cfg.method = i < 20 ? LavqlsMethod::M1 : LavqlsMethod::M2;
        cfg.seed = i % 20;
        finals[i] = run_lavqls(a7, cfg).loss_exact;
    });
    std::size_t hit1 = 0;
    std::size_t hit2 = 0;
    for (std::size_t i = 0; i < 20; ++i) {
        hit1 += finals[i] <= 1e-2 ? 1 : 0;
        hit2 += finals[20 + i] <= 1e-2 ? 1 : 0;
    }
    const double m1 = median({finals.begin(), finals.begin() + 20});
    const double m2 = median({finals.begin() + 20, finals.end()});
    const bool ok = worst_form <= 1e-8 && worst_rise <= 1e-9 && hit1 >= 10 && hit2 >= 10;
    return {ok, fmt("real/complex max diff %.3g (tol 1e-8), max rise over %zu expansions %.3g, "
                    "LAVQLS A7 L_R <= 1e-2: M1 %zu/20 (median %.3g), M2 %zu/20 (median %.3g), need >= 10",
                    worst_form, expansions, worst_rise, hit1, m1, hit2, m2)};
}

// 9 -------------------------------------------------------------------------
Outcome determinism(const fs::path &scratch) {
    std::vector<std::string> checked;
    bool ok = true;
    auto compare = [&](ExperimentConfig c, const std::string &label) {
        c.output_dir = (scratch / "c9a").string();
        c.jobs = hw_jobs();
        const auto a = run_campaign(c);
        c.output_dir = (scratch / "c9b").string();
        c.jobs = 1;
        const auto b = run_campaign(c);
        const bool same = slurp(a.dir / "summary.json") == slurp(b.dir / "summary.json");
        ok = ok && same;
        checked.push_back(label + (same ? " same" : " DIFFERENT"));
    };
    for (const char *noise : {"exact", "shots:10000"}) {
        ExperimentConfig v;
        v.problem = "A1";
        v.method = Method::Vqls;
        v.noise = noise;
        v.optimizer = OptimizerSpec{OptimizerKind::SPSA, {}, 0};
        v.budget = 300;
        v.restarts = 8;
        v.base_seed = 9;
        compare(v, std::string("vqls/") + noise);

        ExperimentConfig q;
        q.problem = "A6";
        q.method = Method::Cqs;
        q.noise = noise;
        q.restarts = 4;
        compare(q, std::string("cqs/") + noise);

        ExperimentConfig e;
        e.problem = "A5";
        e.method = Method::Eavqls;
        e.noise = noise;
        e.restarts = 2;
        e.params = {{"population", 6}, {"generations", 3}, {"per_gene_budget", 30}};
        compare(e, std::string("eavqls/") + noise);
    }
    std::string detail = "summary.json byte-identical across re-runs:";
    for (const auto &s : checked) {
        detail += " " + s + ";";
    }
    return {ok, detail};
}

} // namespace

int main(int argc, char **argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        only.insert(std::atoi(argv[i]));
    }
    Scratch scratch;
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"oracle equivalence", oracle_equivalence},
        {"CQS printed value", cqs_printed_value},
        {"shot-noise statistics", shot_statistics},
        {"gradient correctness", gradient_correctness},
        {"VQLS reproduction", [&] { return vqls_reproduction(scratch.path); }},
        {"AAVQLS endpoint identities", aavqls_endpoints},
        {"EAVQLS operator laws", eavqls_laws},
        {"CQS/LAVQLS regression laws", regression_laws},
        {"determinism", [&] { return determinism(scratch.path); }},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int num = static_cast<int>(i) + 1;
        if (!only.empty() && !only.contains(num)) {
            continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception &e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s [%d] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", num, criteria[i].first.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
