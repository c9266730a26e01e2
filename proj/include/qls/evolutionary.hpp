#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qls/ansatz.hpp"
#include "qls/cost.hpp"
#include "qls/optimizers.hpp"
#include "qls/parallel.hpp"
#include "qls/problem.hpp"
#include "qls/vqls.hpp"

namespace qls {

/// G_R = {I, Ry, CRy} for real problems, G = {I, U3, CU3} otherwise.
enum class GateSet : std::uint8_t { Real, Complex };

inline std::string_view to_string(GateSet g) noexcept { return g == GateSet::Real ? "real" : "complex"; }

inline GateSet parse_gate_set(std::string_view s) {
    if (s == "real") return GateSet::Real;
    if (s == "complex") return GateSet::Complex;
    throw InvalidArgument("unknown gate set '" + std::string(s) + "'");
}

enum class SlotKind : std::uint8_t { Identity, Rotation, Controlled };

struct GeneSlot {
    SlotKind kind = SlotKind::Identity;
    std::size_t target = 0;
    std::size_t control = 0; ///< meaningful for Controlled only
    std::vector<double> params;

    friend bool operator==(const GeneSlot &, const GeneSlot &) = default;
};

/// One layer: every qubit is covered by exactly one slot.
struct Gene {
    std::vector<GeneSlot> slots;

    [[nodiscard]] std::size_t n_params() const {
        std::size_t n = 0;
        for (const auto &s : slots) {
            n += s.params.size();
        }
        return n;
    }
    [[nodiscard]] std::size_t controlled_count() const {
        return static_cast<std::size_t>(
            std::count_if(slots.begin(), slots.end(), [](const GeneSlot &s) { return s.kind == SlotKind::Controlled; }));
    }

    friend bool operator==(const Gene &, const Gene &) = default;
};

struct Genome {
    std::vector<Gene> genes;
    /// Ancestor ids, one per generation, ending with this genome's own id.
    std::vector<std::uint64_t> lineage;
    std::size_t species = 0;
    std::optional<double> cost; ///< measured cost of the realized circuit, when current

    [[nodiscard]] std::size_t depth() const noexcept { return genes.size(); }
    [[nodiscard]] std::size_t controlled_count() const {
        std::size_t n = 0;
        for (const auto &g : genes) {
            n += g.controlled_count();
        }
        return n;
    }
};

struct FitnessWeights {
    double depth_weight = 0.01;
    double twoqubit_weight = 0.005;

    void validate() const {
        if (!(depth_weight >= 0.0) || !(twoqubit_weight >= 0.0)) {
            throw InvalidArgument("fitness weights must be non-negative");
        }
    }
};

/// f = C + depth_weight * |g| + twoqubit_weight * |controlled(g)|
inline double fitness(const Genome &g, double cost_value, const FitnessWeights &w) {
    if (!std::isfinite(cost_value)) {
        throw InvalidArgument("fitness needs a finite cost");
    }
    return cost_value + w.depth_weight * static_cast<double>(g.depth()) +
           w.twoqubit_weight * static_cast<double>(g.controlled_count());
}

// --- circuits ---------------------------------------------------------------

namespace detail {

inline std::size_t rotation_arity(GateSet set) { return set == GateSet::Real ? 1 : 3; }

inline Gate slot_gate(const GeneSlot &s, GateSet set) {
    const bool real = set == GateSet::Real;
    switch (s.kind) {
    case SlotKind::Identity: return gates::identity(s.target);
    case SlotKind::Rotation: return real ? gates::ry(s.target, 0.0) : gates::u3(s.target, 0.0, 0.0, 0.0);
    case SlotKind::Controlled:
        return real ? gates::cry(s.control, s.target, 0.0) : gates::cu3(s.control, s.target, 0.0, 0.0, 0.0);
    }
    return gates::identity(s.target);
}

} // namespace detail

/// H^n followed by the genes. Parameters of `free_gene` (if any) stay free,
/// in slot order; every other angle is fixed at its current value.
inline ParamCircuit genome_ansatz(const Genome &g, std::size_t n_qubits, GateSet set,
                                  std::optional<std::size_t> free_gene = std::nullopt) {
    ParamCircuit pc(n_qubits);
    pc.append_fixed(hadamard_all(n_qubits));
    int next = 0;
    for (std::size_t i = 0; i < g.genes.size(); ++i) {
        pc.begin_layer();
        for (const auto &s : g.genes[i].slots) {
            Gate gate = detail::slot_gate(s, set);
            for (std::size_t a = 0; a < s.params.size(); ++a) {
                gate.angles[a] = s.params[a];
            }
            if (free_gene && *free_gene == i && !s.params.empty()) {
                ParamSlot slot{gate, {-1, -1, -1}};
                for (std::size_t a = 0; a < s.params.size(); ++a) {
                    slot.param[a] = next++;
                }
                pc.add_slot(std::move(slot));
            } else {
                pc.add_fixed(std::move(gate));
            }
        }
    }
    return pc;
}

inline Circuit genome_circuit(const Genome &g, std::size_t n_qubits, GateSet set) {
    return genome_ansatz(g, n_qubits, set).bind({});
}

// --- operators --------------------------------------------------------------

/// A fresh identity-initialized gene. Against the previous gene it avoids
/// repeating a rotation on the same qubit or a controlled gate on the same
/// (control, target) pair; a qubit gets the identity only when every other
/// choice would be such a repeat.
inline Gene random_gene(std::size_t n_qubits, GateSet set, const Gene *previous, Rng &rng) {
    std::vector<bool> prev_rot(n_qubits, false);
    std::vector<std::pair<std::size_t, std::size_t>> prev_ctrl;
    if (previous) {
        for (const auto &s : previous->slots) {
            if (s.kind == SlotKind::Rotation) {
                prev_rot[s.target] = true;
            } else if (s.kind == SlotKind::Controlled) {
                prev_ctrl.emplace_back(s.control, s.target);
            }
        }
    }
    auto repeats = [&](std::size_t c, std::size_t t) {
        return std::find(prev_ctrl.begin(), prev_ctrl.end(), std::pair{c, t}) != prev_ctrl.end();
    };
    const std::size_t arity = detail::rotation_arity(set);
    std::vector<std::size_t> order(n_qubits);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<bool> used(n_qubits, false);
    Gene gene;
    for (const std::size_t q : order) {
        if (used[q]) {
            continue;
        }
        std::vector<std::pair<std::size_t, std::size_t>> pairs; // (control, target)
        for (std::size_t p = 0; p < n_qubits; ++p) {
            if (p == q || used[p]) {
                continue;
            }
            if (!repeats(q, p)) pairs.emplace_back(q, p);
            if (!repeats(p, q)) pairs.emplace_back(p, q);
        }
        const bool rot_ok = !prev_rot[q];
        used[q] = true;
        GeneSlot slot;
        slot.target = q;
        if (!rot_ok && pairs.empty()) {
            slot.kind = SlotKind::Identity;
        } else if (pairs.empty() || (rot_ok && std::bernoulli_distribution(0.5)(rng))) {
            slot.kind = SlotKind::Rotation;
            slot.params.assign(arity, 0.0);
        } else {
            const auto [c, t] = pairs[std::uniform_int_distribution<std::size_t>(0, pairs.size() - 1)(rng)];
            slot.kind = SlotKind::Controlled;
            slot.control = c;
            slot.target = t;
            slot.params.assign(arity, 0.0);
            used[c == q ? t : c] = true;
        }
        gene.slots.push_back(std::move(slot));
    }
    return gene;
}

/// tau: appends one random identity gene. The realized state is unchanged,
/// so a cached cost stays valid.
inline Genome topological_search(Genome g, std::size_t n_qubits, GateSet set, Rng &rng) {
    const Gene *prev = g.genes.empty() ? nullptr : &g.genes.back();
    Gene fresh = random_gene(n_qubits, set, prev, rng);
    g.genes.push_back(std::move(fresh));
    return g;
}

/// rho: keeps a uniformly drawn prefix of length p in {1..m}.
inline Genome removal(Genome g, Rng &rng) {
    if (g.genes.empty()) {
        throw InvalidArgument("removal needs a nonempty genome");
    }
    const auto p = std::uniform_int_distribution<std::size_t>(1, g.genes.size())(rng);
    if (p != g.genes.size()) {
        g.genes.resize(p);
        g.cost.reset();
    }
    return g;
}

struct GeneSearchContext {
    const LinearProblem *problem = nullptr;
    GateSet set = GateSet::Real;
    CostKind kind;
    OptimizerSpec optimizer{OptimizerKind::NelderMead, {}, 0};
    std::uint64_t per_gene_budget = 60;
};

struct GeneVisit {
    std::size_t gene = 0;
    double cost_before = 0.0;
    double cost_after = 0.0;
    std::uint64_t evals = 0;
};

/// O on one gene: VQLS over that gene's parameters, the rest frozen. The
/// starting point is evaluated first, so the result never loses to it.
inline GeneVisit optimize_gene(Genome &g, std::size_t index, const GeneSearchContext &ctx, std::uint64_t seed) {
    const std::size_t n = ctx.problem->n_qubits;
    const ParamCircuit pc = genome_ansatz(g, n, ctx.set, index);
    std::vector<double> x0;
    for (const auto &s : g.genes[index].slots) {
        x0.insert(x0.end(), s.params.begin(), s.params.end());
    }
    GeneVisit v{index, 0.0, 0.0, 0};
    if (x0.empty()) {
        // an all-identity gene has nothing to train
        if (!g.cost) {
            CostKind k = ctx.kind;
            k.regime = ctx.kind.regime.reseeded(seed);
            g.cost = evaluate_cost(*ctx.problem, pc.bind({}), k).value;
            v.evals = 1;
        }
        v.cost_before = v.cost_after = *g.cost;
        return v;
    }
    CostBudget budget(ctx.per_gene_budget);
    OptimizerSpec spec = ctx.optimizer;
    spec.seed = seed;
    CostKind kind = ctx.kind;
    kind.regime = ctx.kind.regime.reseeded(seed);
    const auto r = detail::optimize_vqls(*ctx.problem, pc, kind, spec, budget, x0);
    std::size_t k = 0;
    for (auto &s : g.genes[index].slots) {
        for (auto &p : s.params) {
            p = r.best_params[k++];
        }
    }
    v.cost_before = r.trace.front().cost;
    v.cost_after = r.best_cost;
    v.evals = r.evals_used;
    g.cost = r.best_cost;
    return v;
}

/// Runs O on every gene in a seeded random order.
inline std::vector<GeneVisit> parameter_search(Genome &g, const GeneSearchContext &ctx, std::uint64_t seed) {
    if (g.genes.empty()) {
        throw InvalidArgument("parameter search needs a nonempty genome");
    }
    Rng rng(seed);
    std::vector<std::size_t> order(g.genes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<GeneVisit> visits;
    for (std::size_t i = 0; i < order.size(); ++i) {
        visits.push_back(optimize_gene(g, order[i], ctx, derive_seed(seed, i)));
    }
    return visits;
}

// --- speciation -------------------------------------------------------------

inline constexpr std::size_t kNoCommonAncestor = std::numeric_limits<std::size_t>::max();

/// Generations since the most recent common ancestor, counted back from the
/// longer lineage; kNoCommonAncestor when the lineages never meet.
inline std::size_t lineage_distance(const Genome &a, const Genome &b) {
    const std::size_t la = a.lineage.size();
    const std::size_t lb = b.lineage.size();
    const std::size_t common = std::min(la, lb);
    for (std::size_t i = common; i-- > 0;) {
        if (a.lineage[i] == b.lineage[i]) {
            return std::max(la, lb) - 1 - i;
        }
    }
    return kNoCommonAncestor;
}

/// Species = connected components of the graph linking genomes at lineage
/// distance <= threshold. Ids are numbered in order of first appearance.
inline std::size_t assign_species(std::vector<Genome> &pop, std::size_t threshold) {
    const std::size_t n = pop.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (lineage_distance(pop[i], pop[j]) <= threshold) {
                parent[find(i)] = find(j);
            }
        }
    }
    std::vector<std::size_t> label(n, kNoCommonAncestor);
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = find(i);
        if (label[r] == kNoCommonAncestor) {
            label[r] = count++;
        }
        pop[i].species = label[r];
    }
    return count;
}

/// Mean raw fitness over each genome's species.
inline std::vector<double> species_adjusted(const std::vector<Genome> &pop, std::span<const double> raw) {
    std::size_t n_species = 0;
    for (const auto &g : pop) {
        n_species = std::max(n_species, g.species + 1);
    }
    std::vector<double> sum(n_species, 0.0);
    std::vector<std::size_t> count(n_species, 0);
    for (std::size_t i = 0; i < pop.size(); ++i) {
        sum[pop[i].species] += raw[i];
        ++count[pop[i].species];
    }
    std::vector<double> out(pop.size());
    for (std::size_t i = 0; i < pop.size(); ++i) {
        out[i] = sum[pop[i].species] / static_cast<double>(count[pop[i].species]);
    }
    return out;
}

inline constexpr double kSelectionEpsilon = 1e-6;

/// Selection weight 1 / (eps + adjusted fitness).
inline std::vector<double> selection_weights(std::span<const double> adjusted) {
    std::vector<double> w(adjusted.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = 1.0 / (kSelectionEpsilon + std::max(0.0, adjusted[i]));
    }
    return w;
}

/// Groups by species, then draws `n_parents` indices with replacement,
/// weighted inversely to species-adjusted fitness.
inline std::vector<std::size_t> speciate_and_select(std::vector<Genome> &pop, std::span<const double> raw,
                                                    std::size_t threshold, std::size_t n_parents, Rng &rng) {
    if (pop.empty()) {
        throw InvalidArgument("selection needs a nonempty population");
    }
    assign_species(pop, threshold);
    const auto w = selection_weights(species_adjusted(pop, raw));
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    std::vector<std::size_t> out(n_parents);
    for (auto &i : out) {
        i = pick(rng);
    }
    return out;
}

// --- the generational loop --------------------------------------------------

struct EavqlsConfig {
    std::size_t population = 20;
    std::size_t generations = 20;
    double p_topological = 0.7;
    double p_parameter = 0.2;
    double p_removal = 0.4;
    FitnessWeights weights;
    std::size_t distance_threshold = 3;
    GateSet gate_set = GateSet::Real;
    OptimizerSpec gene_optimizer{OptimizerKind::NelderMead, {}, 0};
    std::uint64_t per_gene_budget = 60;
    CostKind cost_kind{CostType::Local, NoiseRegime::exact()};
    std::uint64_t seed = 0;
    std::size_t jobs = 1;

    void validate() const {
        if (population == 0 || generations == 0) {
            throw InvalidArgument("EAVQLS needs a positive population and generation count");
        }
        for (double p : {p_topological, p_parameter, p_removal}) {
            if (!(p >= 0.0 && p <= 1.0)) {
                throw InvalidArgument("operator probabilities must lie in [0, 1]");
            }
        }
        if (per_gene_budget == 0) {
            throw InvalidArgument("per-gene budget must be positive");
        }
        weights.validate();
        gene_optimizer.validate();
        cost_kind.regime.validate();
    }
};

struct GenerationRecord {
    std::size_t generation = 0;
    double best_fitness = 0.0;
    double best_true_cost = 0.0; ///< noise-free cost of the fittest genome
    double mean_fitness = 0.0;
    std::size_t species_count = 0;
};

struct EavqlsResult {
    Genome best;
    double best_fitness = 0.0;
    double best_true_cost = 0.0;
    std::vector<GenerationRecord> history;
    std::uint64_t total_evals = 0;
};

namespace detail {

struct Population {
    std::vector<Genome> members;
    std::uint64_t next_id = 0;
};

inline std::uint64_t op_seed(std::uint64_t base, std::size_t gen, std::size_t idx, std::uint64_t op) {
    return derive_seed(base, {gen, idx, op});
}

} // namespace detail

/// Steps: (1) n one-gene genomes; each generation (2) trains the last gene
/// of every genome, (3) speciates and scores, (4) draws n parents, (5) applies
/// removal, topological search and parameter search with their
/// probabilities. After the final generation the fittest offspring is
/// returned. History row g describes the population scored in generation g;
/// the last row scores the returned offspring.
inline EavqlsResult run_eavqls(const LinearProblem &problem, const EavqlsConfig &cfg) {
    problem.validate();
    cfg.validate();
    const std::size_t n = problem.n_qubits;
    const GeneSearchContext ctx{&problem, cfg.gate_set, cfg.cost_kind, cfg.gene_optimizer, cfg.per_gene_budget};
    std::atomic<std::uint64_t> evals{0};

    detail::Population pop;
    pop.members.resize(cfg.population);
    for (std::size_t i = 0; i < cfg.population; ++i) {
        Rng rng(detail::op_seed(cfg.seed, 0, i, 1));
        pop.members[i] = topological_search(Genome{}, n, cfg.gate_set, rng);
        pop.members[i].lineage = {pop.next_id++};
    }

    auto measure = [&](Genome &g, std::uint64_t seed) {
        if (!g.cost) {
            CostKind k = cfg.cost_kind;
            k.regime = cfg.cost_kind.regime.reseeded(seed);
            g.cost = evaluate_cost(problem, genome_circuit(g, n, cfg.gate_set), k).value;
            ++evals;
        }
    };
    auto true_cost = [&](const Genome &g) {
        return evaluate_cost(problem, genome_circuit(g, n, cfg.gate_set), {cfg.cost_kind.type, NoiseRegime::exact()})
            .raw;
    };
    auto score = [&](std::vector<Genome> &members, std::size_t gen, GenerationRecord &rec) {
        std::vector<double> fit(members.size());
        for (std::size_t i = 0; i < members.size(); ++i) {
            fit[i] = fitness(members[i], *members[i].cost, cfg.weights);
        }
        rec.species_count = assign_species(members, cfg.distance_threshold);
        const auto best = static_cast<std::size_t>(std::min_element(fit.begin(), fit.end()) - fit.begin());
        rec.generation = gen;
        rec.best_fitness = fit[best];
        rec.best_true_cost = true_cost(members[best]);
        rec.mean_fitness = std::accumulate(fit.begin(), fit.end(), 0.0) / static_cast<double>(fit.size());
        return std::pair{fit, best};
    };

    EavqlsResult out;
    for (std::size_t gen = 0; gen < cfg.generations; ++gen) {
        // (2) train the newest gene of every genome
        parallel_for(pop.members.size(), cfg.jobs, [&](std::size_t i) {
            auto &g = pop.members[i];
            const auto v = optimize_gene(g, g.genes.size() - 1, ctx, detail::op_seed(cfg.seed, gen, i, 2));
            evals += v.evals;
        });
        // (3) species and fitness
        GenerationRecord rec;
        auto [fit, best] = score(pop.members, gen, rec);
        out.history.push_back(rec);
        // (4) parents
        Rng sel(detail::op_seed(cfg.seed, gen, 0, 4));
        const auto parents = speciate_and_select(pop.members, fit, cfg.distance_threshold, cfg.population, sel);
        std::vector<Genome> next(cfg.population);
        for (std::size_t i = 0; i < cfg.population; ++i) {
            next[i] = pop.members[parents[i]];
            next[i].lineage.push_back(pop.next_id++);
        }
        // (5) removal, topological search, parameter search
        parallel_for(next.size(), cfg.jobs, [&](std::size_t i) {
            Rng rng(detail::op_seed(cfg.seed, gen, i, 5));
            std::uniform_real_distribution<double> u(0.0, 1.0);
            const bool do_remove = u(rng) < cfg.p_removal;
            const bool do_topo = u(rng) < cfg.p_topological;
            const bool do_param = u(rng) < cfg.p_parameter;
            Genome g = std::move(next[i]);
            if (do_remove) {
                g = removal(std::move(g), rng);
            }
            if (do_topo) {
                g = topological_search(std::move(g), n, cfg.gate_set, rng);
            }
            if (do_param) {
                for (const auto &v : parameter_search(g, ctx, detail::op_seed(cfg.seed, gen, i, 6))) {
                    evals += v.evals;
                }
            }
            measure(g, detail::op_seed(cfg.seed, gen, i, 7));
            next[i] = std::move(g);
        });
        pop.members = std::move(next);
    }
    GenerationRecord last;
    auto [fit, best] = score(pop.members, cfg.generations, last);
    out.history.push_back(last);
    out.best = pop.members[best];
    out.best_fitness = fit[best];
    out.best_true_cost = last.best_true_cost;
    out.total_evals = evals.load();
    return out;
}

// --- serialization ----------------------------------------------------------

inline void write_history_csv(std::ostream &os, const std::vector<GenerationRecord> &history) {
    os << "generation,best_fitness,best_true_cost,mean_fitness,species_count\n";
    os.precision(17);
    for (const auto &r : history) {
        os << r.generation << ',' << r.best_fitness << ',' << r.best_true_cost << ',' << r.mean_fitness << ','
           << r.species_count << '\n';
    }
}

inline nlohmann::json genome_to_json(const Genome &g, std::size_t n_qubits, GateSet set) {
    nlohmann::json genes = nlohmann::json::array();
    for (const auto &gene : g.genes) {
        nlohmann::json slots = nlohmann::json::array();
        for (const auto &s : gene.slots) {
            nlohmann::json j;
            switch (s.kind) {
            case SlotKind::Identity: j["gate"] = "i"; break;
            case SlotKind::Rotation: j["gate"] = set == GateSet::Real ? "ry" : "u3"; break;
            case SlotKind::Controlled: j["gate"] = set == GateSet::Real ? "cry" : "cu3"; break;
            }
            j["target"] = s.target;
            if (s.kind == SlotKind::Controlled) {
                j["control"] = s.control;
            }
            j["params"] = s.params;
            slots.push_back(std::move(j));
        }
        genes.push_back(std::move(slots));
    }
    nlohmann::json j{{"n_qubits", n_qubits},
                     {"gate_set", std::string(to_string(set))},
                     {"init", "hadamard_all"},
                     {"genes", genes},
                     {"lineage", g.lineage}};
    if (g.cost) {
        j["cost"] = *g.cost;
    }
    return j;
}

inline Genome genome_from_json(const nlohmann::json &j) {
    try {
        Genome g;
        for (const auto &gene : j.at("genes")) {
            Gene out;
            for (const auto &s : gene) {
                GeneSlot slot;
                const auto name = s.at("gate").get<std::string>();
                slot.kind = name == "i" ? SlotKind::Identity
                            : (name == "ry" || name == "u3") ? SlotKind::Rotation
                            : (name == "cry" || name == "cu3")
                                ? SlotKind::Controlled
                                : throw InvalidArgument("unknown gene gate '" + name + "'");
                slot.target = s.at("target").get<std::size_t>();
                slot.control = s.value("control", std::size_t{0});
                slot.params = s.at("params").get<std::vector<double>>();
                out.slots.push_back(std::move(slot));
            }
            g.genes.push_back(std::move(out));
        }
        g.lineage = j.value("lineage", std::vector<std::uint64_t>{});
        if (j.contains("cost")) {
            g.cost = j["cost"].get<double>();
        }
        return g;
    } catch (const nlohmann::json::exception &e) {
        throw InvalidArgument(std::string("malformed genome document: ") + e.what());
    }
}

} // namespace qls
