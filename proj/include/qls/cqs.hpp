#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numbers>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "qls/ansatz.hpp"
#include "qls/hadamard_test.hpp"
#include "qls/optimizers.hpp"
#include "qls/oracle.hpp"
#include "qls/problem.hpp"

namespace qls {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Node of the ansatz tree: |s> = A_{i_k} ... A_{i_1} U |0>, term indices
/// into the problem's decomposition (0-based). The root is |b>.
struct TreeNode {
    std::vector<std::size_t> seq;

    [[nodiscard]] TreeNode child(std::size_t i) const {
        TreeNode c{seq};
        c.seq.push_back(i);
        return c;
    }

    friend bool operator==(const TreeNode &, const TreeNode &) = default;
    friend auto operator<=>(const TreeNode &, const TreeNode &) = default;
};

inline Circuit node_circuit(const LinearProblem &problem, const TreeNode &node) {
    Circuit c = problem.b_prep;
    for (const std::size_t i : node.seq) {
        if (i >= problem.n_terms()) {
            throw InvalidArgument("tree node term index " + std::to_string(i) + " out of range");
        }
        c.append(problem.terms[i].circuit());
    }
    return c;
}

/// Every node of depth <= `depth`, shallow first, each level in
/// lexicographic order.
inline std::vector<TreeNode> breadth_first_nodes(std::size_t n_terms, std::size_t depth) {
    std::vector<TreeNode> out{TreeNode{}};
    std::size_t level_begin = 0;
    for (std::size_t d = 0; d < depth; ++d) {
        const std::size_t level_end = out.size();
        for (std::size_t k = level_begin; k < level_end; ++k) {
            for (std::size_t i = 0; i < n_terms; ++i) {
                out.push_back(out[k].child(i));
            }
        }
        level_begin = level_end;
    }
    return out;
}

// --- Gram matrix and q ------------------------------------------------------

struct GramQ {
    CMatrix gram; ///< (V^dag V)_{ij} = <s_i|A^dag A|s_j>
    CVector q;    ///< q_i = <s_i|A^dag|b>
};

namespace detail {

/// Hadamard-test estimates of <s_i|A^dag A|s_j> for the requested pairs and
/// <s_i|A^dag|b> for the requested rows. circuits[i * m + l] = P_i then A_l,
/// circuits.back() = U. A diagonal pair measures l <= l' only.
struct BlockEstimate {
    std::vector<Complex> pairs;
    std::vector<Complex> q;
};

inline BlockEstimate estimate_blocks(const LinearProblem &problem, std::span<const Circuit> preps,
                                     std::span<const std::pair<std::size_t, std::size_t>> pairs,
                                     std::span<const std::size_t> q_rows, const NoiseRegime &regime) {
    const std::size_t m = problem.n_terms();
    std::vector<Circuit> circuits;
    circuits.reserve(preps.size() * m + 1);
    for (const auto &p : preps) {
        if (p.n_qubits != problem.n_qubits) {
            throw InvalidArgument("state preparation width does not match the problem");
        }
        for (const auto &t : problem.terms) {
            circuits.push_back(p.then(t.circuit()));
        }
    }
    const std::size_t b = circuits.size();
    circuits.push_back(problem.b_prep);

    std::vector<OverlapJob> jobs;
    auto add = [&](std::size_t l, std::size_t r, bool imag) {
        jobs.push_back({l, r, Part::Real, jobs.size()});
        if (imag) {
            jobs.push_back({l, r, Part::Imag, jobs.size()});
        }
    };
    for (const auto &[i, j] : pairs) {
        for (std::size_t l = 0; l < m; ++l) {
            for (std::size_t lp = i == j ? l : 0; lp < m; ++lp) {
                add(i * m + l, j * m + lp, !(i == j && l == lp));
            }
        }
    }
    for (const std::size_t i : q_rows) {
        for (std::size_t l = 0; l < m; ++l) {
            add(i * m + l, b, true);
        }
    }
    const auto v = estimate_overlaps(circuits, jobs, regime);

    BlockEstimate out;
    std::size_t pos = 0;
    auto next = [&](bool imag) {
        const double re = v[pos++];
        return Complex{re, imag ? v[pos++] : 0.0};
    };
    for (const auto &[i, j] : pairs) {
        Complex acc{0.0, 0.0};
        for (std::size_t l = 0; l < m; ++l) {
            const Complex cl = problem.terms[l].coefficient;
            for (std::size_t lp = i == j ? l : 0; lp < m; ++lp) {
                const Complex clp = problem.terms[lp].coefficient;
                const Complex d = next(!(i == j && l == lp));
                if (i == j) {
                    acc += l == lp ? std::norm(cl) * d.real() : 2.0 * (std::conj(cl) * clp * d).real();
                } else {
                    acc += std::conj(cl) * clp * d;
                }
            }
        }
        out.pairs.push_back(acc);
    }
    for (std::size_t r = 0; r < q_rows.size(); ++r) {
        Complex acc{0.0, 0.0};
        for (std::size_t l = 0; l < m; ++l) {
            acc += std::conj(problem.terms[l].coefficient) * next(true);
        }
        out.q.push_back(acc);
    }
    return out;
}

} // namespace detail

/// Upper triangle measured, lower triangle filled by conjugation.
inline GramQ estimate_gram_and_q(const LinearProblem &problem, std::span<const Circuit> preps,
                                 const NoiseRegime &regime) {
    if (preps.empty()) {
        throw InvalidArgument("Gram estimation needs at least one state");
    }
    const std::size_t n = preps.size();
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            pairs.emplace_back(i, j);
        }
    }
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    const auto e = detail::estimate_blocks(problem, preps, pairs, rows, regime);
    GramQ out{CMatrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)), CVector(static_cast<Eigen::Index>(n))};
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto [i, j] = pairs[k];
        const auto I = static_cast<Eigen::Index>(i);
        const auto J = static_cast<Eigen::Index>(j);
        out.gram(I, J) = e.pairs[k];
        out.gram(J, I) = std::conj(e.pairs[k]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        out.q(static_cast<Eigen::Index>(i)) = e.q[i];
    }
    return out;
}

// --- regression -------------------------------------------------------------

struct AlphaSolution {
    CVector alpha;
    double loss = 0.0; ///< L_R = a^dag G a - 2 Re(q^dag a) + 1
};

inline constexpr double kRidgeScale = 1e-8;

inline double regression_loss(const CMatrix &gram, const CVector &q, const CVector &alpha) {
    const CMatrix g = 0.5 * (gram + gram.adjoint());
    return (alpha.adjoint() * g * alpha)(0, 0).real() - 2.0 * q.dot(alpha).real() + 1.0;
}

namespace detail {

inline void check_regression_inputs(const CMatrix &gram, const CVector &q) {
    if (gram.rows() != gram.cols() || gram.rows() != q.size() || q.size() == 0) {
        throw InvalidArgument("Gram matrix and q have inconsistent sizes");
    }
    if (!gram.allFinite() || !q.allFinite()) {
        throw InvalidArgument("non-finite entry in Gram matrix or q");
    }
}

inline double ridge(const CMatrix &g) {
    const double tr = g.trace().real();
    return kRidgeScale * std::max(tr, 0.0) / static_cast<double>(g.rows());
}

} // namespace detail

/// Minimizes L_R over alpha via the regularized normal equation
/// (G_sym + lambda 1) alpha = q, lambda = 1e-8 tr(G) / m.
inline AlphaSolution solve_alpha(const CMatrix &gram, const CVector &q) {
    detail::check_regression_inputs(gram, q);
    const CMatrix g = 0.5 * (gram + gram.adjoint());
    const CMatrix reg = g + detail::ridge(g) * CMatrix::Identity(g.rows(), g.cols());
    AlphaSolution s;
    s.alpha = reg.ldlt().solve(q);
    if (!s.alpha.allFinite()) {
        s.alpha = reg.completeOrthogonalDecomposition().solve(q);
    }
    s.loss = regression_loss(gram, q, s.alpha);
    return s;
}

struct RealQp {
    Eigen::MatrixXd Q;
    Eigen::VectorXd r;
    Eigen::VectorXd z;
};

/// G = Gr + i Gi, alpha = a + i b, z = (a, b):
///   Q = [[Gr, -Gi], [Gi, Gr]], r = (Re q, Im q), L_R = z^T Q z - 2 r^T z + 1.
inline RealQp real_form(const CMatrix &gram, const CVector &q) {
    detail::check_regression_inputs(gram, q);
    const CMatrix g = 0.5 * (gram + gram.adjoint());
    const Eigen::Index m = g.rows();
    RealQp p;
    p.Q.resize(2 * m, 2 * m);
    p.Q.topLeftCorner(m, m) = g.real();
    p.Q.topRightCorner(m, m) = -g.imag();
    p.Q.bottomLeftCorner(m, m) = g.imag();
    p.Q.bottomRightCorner(m, m) = g.real();
    p.r.resize(2 * m);
    p.r << q.real(), q.imag();
    return p;
}

inline AlphaSolution solve_alpha_real(const CMatrix &gram, const CVector &q, RealQp *qp_out = nullptr) {
    RealQp p = real_form(gram, q);
    const Eigen::Index m = gram.rows();
    const double lambda = detail::ridge(0.5 * (gram + gram.adjoint()));
    const Eigen::MatrixXd reg = p.Q + lambda * Eigen::MatrixXd::Identity(2 * m, 2 * m);
    p.z = reg.ldlt().solve(p.r);
    AlphaSolution s;
    s.alpha = p.z.head(m).cast<Complex>() + Complex{0.0, 1.0} * p.z.tail(m).cast<Complex>();
    s.loss = p.z.dot(p.Q * p.z) - 2.0 * p.r.dot(p.z) + 1.0;
    if (qp_out) {
        *qp_out = std::move(p);
    }
    return s;
}

// --- CQS --------------------------------------------------------------------

struct CqsState {
    std::vector<TreeNode> nodes;
    GramQ gq;
    AlphaSolution solution;
};

namespace detail {

inline std::vector<Circuit> node_circuits(const LinearProblem &problem, std::span<const TreeNode> nodes) {
    std::vector<Circuit> out;
    out.reserve(nodes.size());
    for (const auto &n : nodes) {
        out.push_back(node_circuit(problem, n));
    }
    return out;
}

inline CqsState solve_nodes(const LinearProblem &problem, std::vector<TreeNode> nodes, const NoiseRegime &regime) {
    CqsState s;
    s.nodes = std::move(nodes);
    const auto preps = node_circuits(problem, s.nodes);
    s.gq = estimate_gram_and_q(problem, preps, regime);
    s.solution = solve_alpha(s.gq.gram, s.gq.q);
    return s;
}

} // namespace detail

/// Children of every node in S, ascending term index, without duplicates and
/// without nodes already in S.
inline std::vector<TreeNode> candidate_children(std::span<const TreeNode> nodes, std::size_t n_terms) {
    std::vector<TreeNode> out;
    for (const auto &n : nodes) {
        for (std::size_t i = 0; i < n_terms; ++i) {
            TreeNode c = n.child(i);
            if (std::find(nodes.begin(), nodes.end(), c) == nodes.end() &&
                std::find(out.begin(), out.end(), c) == out.end()) {
                out.push_back(std::move(c));
            }
        }
    }
    return out;
}

struct ExpansionScore {
    TreeNode node;
    Complex overlap; ///< <psi|grad L_R> = 2 (sum_i alpha_i <psi|A^dag A|s_i> - <psi|A^dag|b>)
};

/// Gradient overlap of every candidate child with the current solution.
inline std::vector<ExpansionScore> expansion_scores(const LinearProblem &problem, const CqsState &state,
                                                    const NoiseRegime &regime) {
    const auto children = candidate_children(state.nodes, problem.n_terms());
    if (children.empty()) {
        throw InvalidArgument("no candidate children to expand");
    }
    auto preps = detail::node_circuits(problem, state.nodes);
    const std::size_t n_s = preps.size();
    for (const auto &c : children) {
        preps.push_back(node_circuit(problem, c));
    }
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::vector<std::size_t> rows;
    for (std::size_t c = 0; c < children.size(); ++c) {
        for (std::size_t i = 0; i < n_s; ++i) {
            pairs.emplace_back(n_s + c, i);
        }
        rows.push_back(n_s + c);
    }
    const auto e = detail::estimate_blocks(problem, preps, pairs, rows, regime);
    std::vector<ExpansionScore> out;
    for (std::size_t c = 0; c < children.size(); ++c) {
        Complex acc{0.0, 0.0};
        for (std::size_t i = 0; i < n_s; ++i) {
            acc += state.solution.alpha(static_cast<Eigen::Index>(i)) * e.pairs[c * n_s + i];
        }
        out.push_back({children[c], 2.0 * (acc - e.q[c])});
    }
    return out;
}

inline constexpr double kTieTolerance = 1e-12;

/// The child with the largest |<psi|grad L_R>|; near-ties go to the
/// lexicographically smallest term sequence.
inline TreeNode heuristic_expand(const LinearProblem &problem, const CqsState &state, const NoiseRegime &regime) {
    const auto scores = expansion_scores(problem, state, regime);
    double best = 0.0;
    for (const auto &s : scores) {
        best = std::max(best, std::abs(s.overlap));
    }
    const double cut = best - kTieTolerance * (1.0 + best);
    std::optional<TreeNode> pick;
    for (const auto &s : scores) {
        if (std::abs(s.overlap) >= cut && (!pick || s.node < *pick)) {
            pick = s.node;
        }
    }
    return *pick;
}

struct BreadthFirst {
    std::size_t depth = 2;
};
struct Heuristic {
    std::size_t max_nodes = 5;
};
struct FixedNodes {
    std::vector<TreeNode> nodes;
};
using CqsMode = std::variant<BreadthFirst, Heuristic, FixedNodes>;

struct CqsIteration {
    std::size_t n_nodes = 0;
    double loss = 0.0;
};

struct CqsResult {
    CqsState state;
    std::vector<CqsIteration> history;
    double loss_exact = 0.0; ///< noise-free L_R of the returned alpha
};

/// Noise-free L_R of given states and weights.
inline double exact_regression_loss(const LinearProblem &problem, std::span<const Circuit> preps,
                                    const CVector &alpha) {
    const auto gq = estimate_gram_and_q(problem, preps, NoiseRegime::exact());
    return regression_loss(gq.gram, gq.q, alpha);
}

/// Breadth-first: solves after completing each level. Heuristic: grows S one
/// child at a time from the root. Fixed: one solve, no expansion.
inline CqsResult run_cqs(const LinearProblem &problem, const CqsMode &mode, const NoiseRegime &regime) {
    problem.validate();
    regime.validate();
    std::uint64_t step = 0;
    auto next_regime = [&] { return regime.reseeded(derive_seed(regime.seed, step++)); };
    CqsResult out;
    auto record = [&](CqsState s) {
        out.history.push_back({s.nodes.size(), s.solution.loss});
        out.state = std::move(s);
    };
    if (const auto *bf = std::get_if<BreadthFirst>(&mode)) {
        for (std::size_t d = 0; d <= bf->depth; ++d) {
            record(detail::solve_nodes(problem, breadth_first_nodes(problem.n_terms(), d), next_regime()));
        }
    } else if (const auto *h = std::get_if<Heuristic>(&mode)) {
        if (h->max_nodes == 0) {
            throw InvalidArgument("heuristic CQS needs max_nodes >= 1");
        }
        record(detail::solve_nodes(problem, {TreeNode{}}, next_regime()));
        while (out.state.nodes.size() < h->max_nodes) {
            auto nodes = out.state.nodes;
            nodes.push_back(heuristic_expand(problem, out.state, next_regime()));
            record(detail::solve_nodes(problem, std::move(nodes), next_regime()));
        }
    } else {
        const auto &fixed = std::get<FixedNodes>(mode);
        if (fixed.nodes.empty()) {
            throw InvalidArgument("fixed CQS node set is empty");
        }
        record(detail::solve_nodes(problem, fixed.nodes, next_regime()));
    }
    const auto preps = detail::node_circuits(problem, out.state.nodes);
    out.loss_exact = exact_regression_loss(problem, preps, out.state.solution.alpha);
    return out;
}

/// x' = sum_i alpha_i |s_i> as a state vector (unnormalized).
inline StateVector combine_states(std::span<const Circuit> preps, const CVector &alpha) {
    if (preps.empty() || static_cast<std::size_t>(alpha.size()) != preps.size()) {
        throw InvalidArgument("state and weight counts differ");
    }
    const std::size_t n = preps.front().n_qubits;
    std::vector<Complex> acc(std::size_t{1} << n, Complex{0.0, 0.0});
    for (std::size_t i = 0; i < preps.size(); ++i) {
        const auto s = prepare(preps[i]);
        const Complex a = alpha(static_cast<Eigen::Index>(i));
        for (std::size_t k = 0; k < acc.size(); ++k) {
            acc[k] += a * s[k];
        }
    }
    return StateVector::from_amplitudes(std::move(acc));
}

// --- LAVQLS -----------------------------------------------------------------

enum class LavqlsMethod : std::uint8_t { M1, M2 };

inline std::string_view to_string(LavqlsMethod m) noexcept { return m == LavqlsMethod::M1 ? "m1" : "m2"; }

inline LavqlsMethod parse_lavqls_method(std::string_view s) {
    if (s == "m1" || s == "1") return LavqlsMethod::M1;
    if (s == "m2" || s == "2") return LavqlsMethod::M2;
    throw InvalidArgument("unknown LAVQLS method '" + std::string(s) + "'");
}

struct LavqlsConfig {
    std::size_t n_ansatze = 5;
    std::size_t layers = 3;
    LavqlsMethod method = LavqlsMethod::M1;
    std::size_t rounds = 4; ///< Method 1 only
    std::uint64_t budget = 5000; ///< L_R evaluations over the whole run
    OptimizerSpec optimizer{OptimizerKind::Powell, {}, 0};
    NoiseRegime regime = NoiseRegime::exact();
    std::uint64_t seed = 0;

    void validate() const {
        if (n_ansatze == 0 || layers == 0) {
            throw InvalidArgument("LAVQLS needs at least one ansatz and one layer");
        }
        if (method == LavqlsMethod::M1 && rounds == 0) {
            throw InvalidArgument("LAVQLS method 1 needs at least one round");
        }
        if (budget == 0) {
            throw InvalidArgument("LAVQLS needs a positive budget");
        }
        optimizer.validate();
        regime.validate();
    }
};

struct LavqlsResult {
    std::vector<ParamCircuit> ansatze;
    std::vector<std::vector<double>> thetas;
    CVector alpha;
    double loss = 0.0;       ///< L_R from the last solve, in the run's regime
    double loss_exact = 0.0; ///< noise-free L_R of the returned thetas and alpha
    std::vector<double> history; ///< L_R after each alpha solve
    std::vector<TraceEntry> trace; ///< every L_R evaluation, in order
    std::uint64_t evals_used = 0;
};

namespace detail {

struct LogicalAnsatz {
    const LinearProblem *problem;
    std::vector<ParamCircuit> ansatze;
    std::vector<std::vector<double>> thetas;

    [[nodiscard]] std::vector<Circuit> preps() const {
        std::vector<Circuit> out;
        for (std::size_t i = 0; i < ansatze.size(); ++i) {
            out.push_back(ansatze[i].bind(thetas[i]));
        }
        return out;
    }
};

} // namespace detail

/// Logical ansatz x' = sum_i alpha_i |s_i(theta_i)> over random shallow
/// ansaetze. Method 1 trains one member at a time with alpha frozen and
/// re-solves alpha after each member; Method 2 trains all parameters jointly
/// with alpha re-solved at every evaluation.
inline LavqlsResult run_lavqls(const LinearProblem &problem, const LavqlsConfig &cfg) {
    problem.validate();
    cfg.validate();
    detail::LogicalAnsatz la{&problem, {}, {}};
    Rng init(derive_seed(cfg.seed, 0x696e6974ULL));
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    for (std::size_t i = 0; i < cfg.n_ansatze; ++i) {
        la.ansatze.push_back(random_shallow(problem.n_qubits, cfg.layers, derive_seed(cfg.seed, {0x616e7361ULL, i})));
        std::vector<double> th(la.ansatze.back().n_params());
        for (auto &t : th) {
            t = angle(init);
        }
        la.thetas.push_back(std::move(th));
    }

    LavqlsResult out;
    CostBudget budget(cfg.budget);
    std::uint64_t stream = 0;
    auto regime = [&] { return cfg.regime.reseeded(derive_seed(cfg.regime.seed, {cfg.seed, stream++})); };
    std::uint64_t n_evals = 0;
    auto log_eval = [&](double v) { out.trace.push_back({++n_evals, v}); };
    auto resolve = [&] {
        const auto gq = estimate_gram_and_q(problem, la.preps(), regime());
        budget.charge(1);
        const auto s = solve_alpha(gq.gram, gq.q);
        log_eval(s.loss);
        out.history.push_back(s.loss);
        out.alpha = s.alpha;
        out.loss = s.loss;
    };

    try {
        resolve();
        if (cfg.method == LavqlsMethod::M1) {
            Rng order_rng(derive_seed(cfg.seed, 0x6f726465ULL));
            const std::uint64_t visits = cfg.rounds * cfg.n_ansatze;
            std::uint64_t visit = 0;
            for (std::size_t r = 0; r < cfg.rounds; ++r) {
                std::vector<std::size_t> order(cfg.n_ansatze);
                std::iota(order.begin(), order.end(), std::size_t{0});
                std::shuffle(order.begin(), order.end(), order_rng);
                for (const std::size_t k : order) {
                    ++visit;
                    if (la.thetas[k].empty()) {
                        continue;
                    }
                    // even split of what is left, keeping one evaluation per
                    // remaining visit for the alpha re-solve
                    const std::uint64_t left = visits - visit + 1;
                    if (budget.remaining() < 2 * left) {
                        throw BudgetExhausted("LAVQLS budget exhausted");
                    }
                    const std::uint64_t share = (budget.remaining() - left) / left;
                    CostBudget sub(std::max<std::uint64_t>(share, 1));
                    const CVector alpha = out.alpha;
                    auto objective = [&](std::span<const double> th) {
                        auto trial = la;
                        trial.thetas[k].assign(th.begin(), th.end());
                        const auto gq = estimate_gram_and_q(problem, trial.preps(), regime());
                        const double v = regression_loss(gq.gram, gq.q, alpha);
                        log_eval(v);
                        return v;
                    };
                    OptimizerSpec spec = cfg.optimizer;
                    spec.seed = derive_seed(cfg.optimizer.seed, {cfg.seed, visit});
                    const auto res = minimize(CostFunction(objective), la.thetas[k], spec, sub);
                    budget.charge(res.evals_used);
                    la.thetas[k] = res.best_params;
                    resolve();
                }
            }
        } else {
            std::vector<std::size_t> offsets{0};
            for (const auto &t : la.thetas) {
                offsets.push_back(offsets.back() + t.size());
            }
            std::vector<double> x0;
            for (const auto &t : la.thetas) {
                x0.insert(x0.end(), t.begin(), t.end());
            }
            if (!x0.empty() && budget.remaining() >= 2) {
                auto unpack = [&](std::span<const double> x) {
                    auto trial = la;
                    for (std::size_t i = 0; i < trial.thetas.size(); ++i) {
                        trial.thetas[i].assign(x.begin() + static_cast<std::ptrdiff_t>(offsets[i]),
                                               x.begin() + static_cast<std::ptrdiff_t>(offsets[i + 1]));
                    }
                    return trial;
                };
                auto objective = [&](std::span<const double> x) {
                    const auto trial = unpack(x);
                    const auto gq = estimate_gram_and_q(problem, trial.preps(), regime());
                    const double v = solve_alpha(gq.gram, gq.q).loss;
                    log_eval(v);
                    return v;
                };
                CostBudget sub(budget.remaining() - 1);
                OptimizerSpec spec = cfg.optimizer;
                spec.seed = derive_seed(cfg.optimizer.seed, cfg.seed);
                const auto res = minimize(CostFunction(objective), x0, spec, sub);
                budget.charge(res.evals_used);
                la = unpack(res.best_params);
                resolve();
            }
        }
    } catch (const BudgetExhausted &) {
        // keep the last solved state
    }
    out.ansatze = la.ansatze;
    out.thetas = la.thetas;
    out.evals_used = budget.used();
    out.loss_exact = exact_regression_loss(problem, la.preps(), out.alpha);
    return out;
}

// --- serialization ----------------------------------------------------------

inline nlohmann::json alpha_to_json(const CVector &alpha) {
    nlohmann::json re = nlohmann::json::array();
    nlohmann::json im = nlohmann::json::array();
    for (Eigen::Index i = 0; i < alpha.size(); ++i) {
        re.push_back(alpha(i).real());
        im.push_back(alpha(i).imag());
    }
    return {{"re", re}, {"im", im}};
}

inline nlohmann::json cqs_to_json(const CqsResult &r) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto &n : r.state.nodes) {
        nodes.push_back(n.seq);
    }
    nlohmann::json hist = nlohmann::json::array();
    for (const auto &h : r.history) {
        hist.push_back({{"n_nodes", h.n_nodes}, {"loss", h.loss}});
    }
    return {{"nodes", nodes},
            {"alpha", alpha_to_json(r.state.solution.alpha)},
            {"loss", r.state.solution.loss},
            {"loss_exact", r.loss_exact},
            {"history", hist}};
}

inline void write_cqs_history_csv(std::ostream &os, const std::vector<CqsIteration> &history) {
    os << "iteration,n_nodes,loss\n";
    os.precision(17);
    for (std::size_t i = 0; i < history.size(); ++i) {
        os << i << ',' << history[i].n_nodes << ',' << history[i].loss << '\n';
    }
}

} // namespace qls
