#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qls/cqs.hpp"
#include "qls/evolutionary.hpp"
#include "qls/parallel.hpp"
#include "qls/vqls.hpp"

namespace qls {

/// A campaign description that cannot be run as given (CLI exit code 2).
class ConfigError : public InvalidArgument {
  public:
    using InvalidArgument::InvalidArgument;
};

enum class Method : std::uint8_t { Vqls, Aavqls, Eavqls, Cqs, Lavqls };

inline std::string_view to_string(Method m) noexcept {
    switch (m) {
    case Method::Vqls: return "vqls";
    case Method::Aavqls: return "aavqls";
    case Method::Eavqls: return "eavqls";
    case Method::Cqs: return "cqs";
    case Method::Lavqls: return "lavqls";
    }
    return "?";
}

inline Method parse_method(std::string_view s) {
    for (auto m : {Method::Vqls, Method::Aavqls, Method::Eavqls, Method::Cqs, Method::Lavqls}) {
        if (s == to_string(m)) {
            return m;
        }
    }
    throw ConfigError("unknown method '" + std::string(s) + "' (expected vqls | aavqls | eavqls | cqs | lavqls)");
}

inline constexpr std::uint64_t kDefaultShots = 10000;
inline constexpr std::uint64_t kCqsShots = 245760;

inline std::uint64_t default_budget(std::string_view problem_id) {
    if (problem_id == "A2") return 1500;
    if (problem_id == "A3") return 2000;
    return 1000;
}

inline std::size_t default_restarts(Method m) {
    return m == Method::Vqls ? 100 : 20;
}

struct ExperimentConfig {
    nlohmann::json problem = "A1"; ///< registry id or inline problem document
    Method method = Method::Vqls;
    std::string noise = "exact";
    std::optional<OptimizerSpec> optimizer;
    std::optional<std::uint64_t> budget;
    std::optional<std::size_t> restarts;
    std::uint64_t base_seed = 0;
    nlohmann::json params = nlohmann::json::object();
    std::string output_dir = "results";
    std::string campaign_id;
    std::size_t jobs = 1;
    std::vector<std::string> notes;
};

// --- config parsing ---------------------------------------------------------

namespace detail {

inline const std::map<Method, std::set<std::string>> &method_keys() {
    static const std::map<Method, std::set<std::string>> keys{
        {Method::Vqls, {"ansatz", "layers", "cost"}},
        {Method::Aavqls, {"T", "pairs", "cost"}},
        {Method::Eavqls,
         {"population", "generations", "per_gene_budget", "p_topological", "p_parameter", "p_removal",
          "depth_weight", "twoqubit_weight", "gate_set", "cost", "distance_threshold"}},
        {Method::Cqs, {"mode", "depth", "max_nodes", "nodes"}},
        {Method::Lavqls, {"method", "rounds", "n_ansatze", "layers"}},
    };
    return keys;
}

/// Optimizer names accepted on the command line; "cobyla" runs Nelder-Mead.
inline OptimizerSpec parse_optimizer_name(std::string_view name, std::vector<std::string> &notes) {
    if (name == "cobyla") {
        notes.emplace_back("optimizer cobyla is not available; running neldermead instead");
        return {OptimizerKind::NelderMead, {}, 0};
    }
    try {
        return {parse_optimizer_kind(name), {}, 0};
    } catch (const InvalidArgument &e) {
        throw ConfigError(e.what());
    }
}

} // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json &j) {
    static const std::set<std::string> fields{"problem", "method", "noise", "optimizer", "budget", "restarts",
                                              "base_seed", "params", "out", "campaign_id", "jobs"};
    if (!j.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    for (const auto &[k, v] : j.items()) {
        if (!fields.contains(k)) {
            throw ConfigError("unknown config field '" + k + "'");
        }
    }
    ExperimentConfig c;
    try {
        if (j.contains("problem")) c.problem = j["problem"];
        if (j.contains("method")) c.method = parse_method(j["method"].get<std::string>());
        if (j.contains("noise")) c.noise = j["noise"].get<std::string>();
        if (j.contains("optimizer")) {
            const auto &o = j["optimizer"];
            if (o.is_string()) {
                c.optimizer = detail::parse_optimizer_name(o.get<std::string>(), c.notes);
            } else {
                auto kind = o.at("kind").get<std::string>();
                auto copy = o;
                if (kind == "cobyla") {
                    c.notes.emplace_back("optimizer cobyla is not available; running neldermead instead");
                    copy["kind"] = "neldermead";
                }
                c.optimizer = optimizer_spec_from_json(copy);
            }
        }
        if (j.contains("budget")) c.budget = j["budget"].get<std::uint64_t>();
        if (j.contains("restarts")) c.restarts = j["restarts"].get<std::size_t>();
        if (j.contains("base_seed")) c.base_seed = j["base_seed"].get<std::uint64_t>();
        if (j.contains("params")) c.params = j["params"];
        if (j.contains("out")) c.output_dir = j["out"].get<std::string>();
        if (j.contains("campaign_id")) c.campaign_id = j["campaign_id"].get<std::string>();
        if (j.contains("jobs")) c.jobs = j["jobs"].get<std::size_t>();
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    } catch (const ConfigError &) {
        throw;
    } catch (const InvalidArgument &e) {
        throw ConfigError(e.what());
    }
    return c;
}

/// The problem's registry id, or the inline document's "id" (default "inline").
inline std::string problem_label(const ExperimentConfig &c) {
    if (c.problem.is_string()) {
        return c.problem.get<std::string>();
    }
    return c.problem.value("id", std::string("inline"));
}

inline LinearProblem resolve_problem(const ExperimentConfig &c) {
    try {
        if (c.problem.is_string()) {
            return registry_get(c.problem.get<std::string>());
        }
        return problem_from_json(c.problem);
    } catch (const InvalidArgument &e) {
        throw ConfigError(e.what());
    }
}

/// "shots" and "depol" without counts take the method's default shot count.
inline NoiseRegime resolve_noise(const ExperimentConfig &c) {
    const std::uint64_t shots = c.method == Method::Cqs ? kCqsShots : kDefaultShots;
    std::string text = c.noise;
    if (text == "shots") text = "shots:" + std::to_string(shots);
    if (text == "depol") text = "depol:" + std::to_string(shots) + ":0.005";
    try {
        return NoiseRegime::parse(text);
    } catch (const InvalidArgument &e) {
        throw ConfigError(e.what());
    }
}

inline OptimizerSpec resolve_optimizer(const ExperimentConfig &c) {
    if (c.optimizer) {
        return *c.optimizer;
    }
    switch (c.method) {
    case Method::Eavqls: return {OptimizerKind::NelderMead, {}, 0};
    case Method::Aavqls:
    case Method::Lavqls: return {OptimizerKind::Powell, {}, 0};
    default: return {OptimizerKind::BFGS, {}, 0};
    }
}

/// Evaluation budget of one restart. LAVQLS counts L_R evaluations and
/// defaults to its own larger budget.
inline std::uint64_t effective_budget(const ExperimentConfig &c) {
    if (c.budget) {
        return *c.budget;
    }
    return c.method == Method::Lavqls ? LavqlsConfig{}.budget : default_budget(problem_label(c));
}

/// Fills the campaign id and checks every field. All problems found are
/// reported together in one ConfigError.
inline void validate_config(ExperimentConfig &c) {
    std::vector<std::string> errs;
    auto check = [&](auto &&fn) {
        try {
            fn();
        } catch (const InvalidArgument &e) {
            errs.emplace_back(e.what());
        }
    };
    check([&] { resolve_problem(c); });
    std::optional<NoiseRegime> noise;
    check([&] { noise = resolve_noise(c); });
    if (!c.params.is_object()) {
        errs.emplace_back("params must be an object");
    } else {
        const auto &keys = detail::method_keys().at(c.method);
        for (const auto &[k, v] : c.params.items()) {
            if (!keys.contains(k)) {
                errs.push_back("method " + std::string(to_string(c.method)) + " has no parameter '" + k + "'");
            }
        }
    }
    if (c.budget && *c.budget == 0) errs.emplace_back("budget must be positive");
    if (c.restarts && *c.restarts == 0) errs.emplace_back("restarts must be positive");
    if (c.jobs == 0) errs.emplace_back("jobs must be positive");
    if (c.output_dir.empty()) errs.emplace_back("output directory is empty");
    check([&] { resolve_optimizer(c).validate(); });
    if (c.campaign_id.empty() && noise) {
        std::string id = std::string(to_string(c.method)) + "-" + problem_label(c) + "-" + noise->descriptor();
        if (c.method != Method::Cqs) {
            id += "-" + std::string(to_string(resolve_optimizer(c).kind));
        }
        if (c.method == Method::Vqls || c.method == Method::Aavqls || c.method == Method::Lavqls) {
            id += "-b" + std::to_string(effective_budget(c));
        }
        id += "-s" + std::to_string(c.base_seed);
        std::replace(id.begin(), id.end(), ':', '_');
        c.campaign_id = id;
    }
    if (c.campaign_id.find('/') != std::string::npos || c.campaign_id == "." || c.campaign_id == "..") {
        errs.emplace_back("campaign id must be a plain directory name");
    }
    if (!errs.empty()) {
        std::string msg = "invalid config:";
        for (const auto &e : errs) {
            msg += "\n  " + e;
        }
        throw ConfigError(msg);
    }
}

inline nlohmann::json config_to_json(const ExperimentConfig &c) {
    nlohmann::json j{{"problem", c.problem},
                     {"method", std::string(to_string(c.method))},
                     {"noise", c.noise},
                     {"optimizer", to_json(resolve_optimizer(c))},
                     {"budget", effective_budget(c)},
                     {"restarts", c.restarts.value_or(default_restarts(c.method))},
                     {"base_seed", c.base_seed},
                     {"params", c.params},
                     {"campaign_id", c.campaign_id}};
    if (!c.notes.empty()) {
        j["notes"] = c.notes;
    }
    return j;
}

// --- single runs ------------------------------------------------------------

struct RunReport {
    std::size_t restart = 0;
    std::uint64_t seed = 0;
    std::string init_hash;
    double final_cost = 0.0;          ///< noise-free cost of the returned solution
    double final_cost_measured = 0.0; ///< the same quantity as estimated in the run's regime
    std::vector<double> final_params;
    std::vector<TraceEntry> trace;
    bool trace_is_evaluations = true; ///< false when the trace is a per-step history
    std::string terminated_by;
    std::uint64_t evals_used = 0;
    double wall_ms = 0.0;
    nlohmann::json extra = nlohmann::json::object();
};

inline nlohmann::json report_to_json(const RunReport &r) {
    nlohmann::json trace = nlohmann::json::array();
    for (const auto &t : r.trace) {
        trace.push_back({t.eval_index, t.cost});
    }
    return {{"restart", r.restart},
            {"seed", r.seed},
            {"init_hash", r.init_hash},
            {"final_cost", r.final_cost},
            {"final_cost_measured", r.final_cost_measured},
            {"final_params", r.final_params},
            {"trace", trace},
            {"trace_kind", r.trace_is_evaluations ? "evaluations" : "history"},
            {"terminated_by", r.terminated_by},
            {"evals_used", r.evals_used},
            {"wall_ms", r.wall_ms},
            {"extra", r.extra}};
}

inline RunReport report_from_json(const nlohmann::json &j) {
    RunReport r;
    r.restart = j.at("restart").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.init_hash = j.at("init_hash").get<std::string>();
    r.final_cost = j.at("final_cost").get<double>();
    r.final_cost_measured = j.at("final_cost_measured").get<double>();
    r.final_params = j.at("final_params").get<std::vector<double>>();
    for (const auto &t : j.at("trace")) {
        r.trace.push_back({t.at(0).get<std::uint64_t>(), t.at(1).get<double>()});
    }
    r.trace_is_evaluations = j.at("trace_kind").get<std::string>() == "evaluations";
    r.terminated_by = j.at("terminated_by").get<std::string>();
    r.evals_used = j.at("evals_used").get<std::uint64_t>();
    r.wall_ms = j.value("wall_ms", 0.0);
    r.extra = j.value("extra", nlohmann::json::object());
    return r;
}

/// FNV-1a over the IEEE-754 bytes, as 16 hex digits.
inline std::string hash_params(std::span<const double> x) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double v : x) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, &v, sizeof bits);
        for (int b = 0; b < 8; ++b) {
            h ^= (bits >> (8 * b)) & 0xffU;
            h *= 0x100000001b3ULL;
        }
    }
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

namespace detail {

inline constexpr std::uint64_t kInitTag = 0x696e6974ULL;
inline constexpr std::uint64_t kNoiseTag = 0x6e6f6973ULL;
inline constexpr std::uint64_t kOptTag = 0x6f707469ULL;

/// Restart k's initial point: uniform in [0, 2 pi) from seed base + k alone,
/// so every arm of a comparison starts restart k from the same vector.
inline std::vector<double> initial_params(std::uint64_t run_seed, std::size_t n) {
    Rng rng(derive_seed(run_seed, kInitTag));
    std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
    std::vector<double> x(n);
    for (auto &v : x) {
        v = u(rng);
    }
    return x;
}

template <class T>
T param(const nlohmann::json &p, const char *key, T fallback) {
    if (!p.contains(key)) {
        return fallback;
    }
    try {
        return p.at(key).get<T>();
    } catch (const nlohmann::json::exception &) {
        throw ConfigError(std::string("parameter '") + key + "' has the wrong type");
    }
}

inline CostType parse_cost_type(const std::string &s) {
    if (s == "local") return CostType::Local;
    if (s == "global") return CostType::Global;
    throw ConfigError("cost must be local or global, got '" + s + "'");
}

inline RunReport run_vqls_restart(const LinearProblem &problem, const ExperimentConfig &c, std::uint64_t seed) {
    const auto &p = c.params;
    AnsatzDescriptor d;
    d.family = param<std::string>(p, "ansatz", "ry_cx");
    if (d.family != "ry_cx" && d.family != "ry_cz") {
        throw ConfigError("vqls ansatz must be ry_cx or ry_cz");
    }
    d.n_qubits = problem.n_qubits;
    d.n_layers = param<std::size_t>(p, "layers", problem.n_qubits);
    const auto ansatz = build_ansatz(d);
    NoiseRegime regime = resolve_noise(c).reseeded(derive_seed(seed, kNoiseTag));
    OptimizerSpec opt = resolve_optimizer(c);
    opt.seed = derive_seed(seed, kOptTag);
    VqlsRun run{problem,
                ansatz,
                {parse_cost_type(param<std::string>(p, "cost", "local")), regime},
                opt,
                effective_budget(c),
                initial_params(seed, ansatz.n_params())};
    const auto r = solve_vqls(run);
    RunReport rep;
    rep.init_hash = hash_params(run.x0);
    rep.final_cost = r.final_cost_exact;
    rep.final_cost_measured = r.optim.best_cost;
    rep.final_params = r.optim.best_params;
    rep.trace = r.optim.trace;
    rep.terminated_by = std::string(to_string(r.optim.terminated_by));
    rep.evals_used = r.optim.evals_used;
    if (r.fidelity) {
        rep.extra["fidelity"] = *r.fidelity;
    }
    return rep;
}

inline RunReport run_aavqls_restart(const LinearProblem &problem, const ExperimentConfig &c, std::uint64_t seed) {
    const auto &p = c.params;
    const auto ansatz = adiabatic_ansatz(problem.n_qubits, param<std::size_t>(p, "pairs", 2), problem.b_prep);
    AdiabaticSchedule schedule{param<std::size_t>(p, "T", 10), effective_budget(c)};
    try {
        schedule.validate();
    } catch (const InvalidArgument &e) {
        throw ConfigError(e.what());
    }
    OptimizerSpec opt = resolve_optimizer(c);
    opt.seed = derive_seed(seed, kOptTag);
    const CostKind kind{parse_cost_type(param<std::string>(p, "cost", "local")),
                        resolve_noise(c).reseeded(derive_seed(seed, kNoiseTag))};
    const auto r = solve_aavqls(problem, ansatz, schedule, opt, kind);
    RunReport rep;
    rep.init_hash = hash_params(identity_init(ansatz.inner));
    rep.final_cost = r.final_cost_exact;
    rep.final_cost_measured = r.final_step.best_cost;
    rep.final_params = r.params;
    rep.trace_is_evaluations = false;
    std::uint64_t used = 0;
    nlohmann::json steps = nlohmann::json::array();
    for (const auto &s : r.steps) {
        used += s.evals_used;
        rep.trace.push_back({used, s.cost_after});
        steps.push_back({{"step", s.step}, {"s_bar", s.s_bar}, {"cost_before", s.cost_before},
                         {"cost_after", s.cost_after}, {"evals", s.evals_used}});
    }
    rep.terminated_by = std::string(to_string(r.final_step.terminated_by));
    rep.evals_used = r.total_evals;
    rep.extra["steps"] = steps;
    if (r.fidelity) {
        rep.extra["fidelity"] = *r.fidelity;
    }
    return rep;
}

inline RunReport run_eavqls_restart(const LinearProblem &problem, const ExperimentConfig &c, std::uint64_t seed) {
    const auto &p = c.params;
    EavqlsConfig cfg;
    cfg.population = param<std::size_t>(p, "population", cfg.population);
    cfg.generations = param<std::size_t>(p, "generations", cfg.generations);
    cfg.per_gene_budget = param<std::uint64_t>(p, "per_gene_budget", cfg.per_gene_budget);
    cfg.p_topological = param<double>(p, "p_topological", cfg.p_topological);
    cfg.p_parameter = param<double>(p, "p_parameter", cfg.p_parameter);
    cfg.p_removal = param<double>(p, "p_removal", cfg.p_removal);
    cfg.weights.depth_weight = param<double>(p, "depth_weight", cfg.weights.depth_weight);
    cfg.weights.twoqubit_weight = param<double>(p, "twoqubit_weight", cfg.weights.twoqubit_weight);
    cfg.distance_threshold = param<std::size_t>(p, "distance_threshold", cfg.distance_threshold);
    try {
        cfg.gate_set = parse_gate_set(param<std::string>(p, "gate_set", "real"));
        cfg.gene_optimizer = resolve_optimizer(c);
        cfg.cost_kind = {parse_cost_type(param<std::string>(p, "cost", "local")),
                         resolve_noise(c).reseeded(derive_seed(seed, kNoiseTag))};
        cfg.seed = seed;
        cfg.validate();
    } catch (const ConfigError &) {
        throw;
    } catch (const InvalidArgument &e) {
        throw ConfigError(e.what());
    }
    const auto r = run_eavqls(problem, cfg);
    RunReport rep;
    rep.init_hash = hash_params({});
    rep.final_cost = r.best_true_cost;
    rep.final_cost_measured = r.best.cost.value_or(r.best_true_cost);
    for (const auto &g : r.best.genes) {
        for (const auto &s : g.slots) {
            rep.final_params.insert(rep.final_params.end(), s.params.begin(), s.params.end());
        }
    }
    rep.trace_is_evaluations = false;
    nlohmann::json hist = nlohmann::json::array();
    for (const auto &h : r.history) {
        rep.trace.push_back({h.generation, h.best_true_cost});
        hist.push_back({{"generation", h.generation}, {"best_fitness", h.best_fitness},
                        {"best_true_cost", h.best_true_cost}, {"mean_fitness", h.mean_fitness},
                        {"species_count", h.species_count}});
    }
    rep.terminated_by = "generations";
    rep.evals_used = r.total_evals;
    rep.extra["history"] = hist;
    rep.extra["best_genome"] = genome_to_json(r.best, problem.n_qubits, cfg.gate_set);
    rep.extra["best_fitness"] = r.best_fitness;
    return rep;
}

inline RunReport run_cqs_restart(const LinearProblem &problem, const ExperimentConfig &c, std::uint64_t seed) {
    const auto &p = c.params;
    const auto mode_name = param<std::string>(p, "mode", "fixed");
    CqsMode mode;
    if (mode_name == "breadth_first") {
        mode = BreadthFirst{param<std::size_t>(p, "depth", 2)};
    } else if (mode_name == "heuristic") {
        mode = Heuristic{param<std::size_t>(p, "max_nodes", 5)};
    } else if (mode_name == "fixed") {
        FixedNodes f;
        if (p.contains("nodes")) {
            for (const auto &n : p["nodes"]) {
                f.nodes.push_back(TreeNode{n.get<std::vector<std::size_t>>()});
            }
        } else {
            f.nodes = breadth_first_nodes(problem.n_terms(), param<std::size_t>(p, "depth", 2));
        }
        mode = std::move(f);
    } else {
        throw ConfigError("cqs mode must be breadth_first, heuristic or fixed");
    }
    const auto r = run_cqs(problem, mode, resolve_noise(c).reseeded(derive_seed(seed, kNoiseTag)));
    RunReport rep;
    rep.init_hash = hash_params({});
    rep.final_cost = r.loss_exact;
    rep.final_cost_measured = r.state.solution.loss;
    for (Eigen::Index i = 0; i < r.state.solution.alpha.size(); ++i) {
        rep.final_params.push_back(r.state.solution.alpha(i).real());
        rep.final_params.push_back(r.state.solution.alpha(i).imag());
    }
    rep.trace_is_evaluations = false;
    for (const auto &h : r.history) {
        rep.trace.push_back({h.n_nodes, h.loss});
    }
    rep.terminated_by = "nodes";
    rep.evals_used = r.history.size();
    rep.extra["tree"] = cqs_to_json(r);
    return rep;
}

inline RunReport run_lavqls_restart(const LinearProblem &problem, const ExperimentConfig &c, std::uint64_t seed) {
    const auto &p = c.params;
    LavqlsConfig cfg;
    try {
        cfg.method = parse_lavqls_method(param<std::string>(p, "method", "m1"));
    } catch (const InvalidArgument &e) {
        throw ConfigError(e.what());
    }
    cfg.rounds = param<std::size_t>(p, "rounds", cfg.rounds);
    cfg.n_ansatze = param<std::size_t>(p, "n_ansatze", cfg.n_ansatze);
    cfg.layers = param<std::size_t>(p, "layers", cfg.layers);
    cfg.budget = effective_budget(c);
    cfg.optimizer = resolve_optimizer(c);
    cfg.optimizer.seed = derive_seed(seed, kOptTag);
    cfg.regime = resolve_noise(c).reseeded(derive_seed(seed, kNoiseTag));
    cfg.seed = seed;
    try {
        cfg.validate();
    } catch (const InvalidArgument &e) {
        throw ConfigError(e.what());
    }
    const auto r = run_lavqls(problem, cfg);
    RunReport rep;
    rep.final_cost = r.loss_exact;
    rep.final_cost_measured = r.loss;
    for (const auto &t : r.thetas) {
        rep.final_params.insert(rep.final_params.end(), t.begin(), t.end());
    }
    rep.init_hash = hash_params({});
    rep.trace = r.trace;
    rep.terminated_by = r.evals_used >= cfg.budget ? "budget" : "rounds";
    rep.evals_used = r.evals_used;
    rep.extra["alpha"] = alpha_to_json(r.alpha);
    rep.extra["history"] = r.history;
    return rep;
}

} // namespace detail

/// Restart k of a validated campaign, seed base_seed + k.
inline RunReport run_restart(const ExperimentConfig &c, std::size_t k) {
    const auto problem = resolve_problem(c);
    const std::uint64_t seed = c.base_seed + k;
    const auto t0 = std::chrono::steady_clock::now();
    RunReport r;
    switch (c.method) {
    case Method::Vqls: r = detail::run_vqls_restart(problem, c, seed); break;
    case Method::Aavqls: r = detail::run_aavqls_restart(problem, c, seed); break;
    case Method::Eavqls: r = detail::run_eavqls_restart(problem, c, seed); break;
    case Method::Cqs: r = detail::run_cqs_restart(problem, c, seed); break;
    case Method::Lavqls: r = detail::run_lavqls_restart(problem, c, seed); break;
    }
    r.restart = k;
    r.seed = seed;
    r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

// --- summaries --------------------------------------------------------------

struct Quartiles {
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

/// Linear interpolation between order statistics (position p (n - 1)).
inline Quartiles quartiles(std::vector<double> v) {
    if (v.empty()) {
        throw InvalidArgument("quartiles of an empty sample");
    }
    std::sort(v.begin(), v.end());
    auto at = [&](double p) {
        const double pos = p * static_cast<double>(v.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
    };
    return {v.front(), at(0.25), at(0.5), at(0.75), v.back()};
}

/// Mean over runs of each run's curve at every index any run reports. An
/// evaluation trace contributes its best-so-far value, a history its latest
/// value; runs enter once their first entry is reached.
inline std::vector<std::pair<std::uint64_t, double>> mean_trace(const std::vector<RunReport> &runs) {
    std::set<std::uint64_t> grid;
    for (const auto &r : runs) {
        for (const auto &t : r.trace) {
            grid.insert(t.eval_index);
        }
    }
    std::vector<std::pair<std::uint64_t, double>> out;
    std::vector<std::size_t> pos(runs.size(), 0);
    std::vector<std::optional<double>> cur(runs.size());
    for (const auto idx : grid) {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < runs.size(); ++i) {
            const auto &t = runs[i].trace;
            while (pos[i] < t.size() && t[pos[i]].eval_index <= idx) {
                const double v = t[pos[i]].cost;
                cur[i] = runs[i].trace_is_evaluations && cur[i] ? std::min(*cur[i], v) : v;
                ++pos[i];
            }
            if (cur[i]) {
                sum += *cur[i];
                ++n;
            }
        }
        out.emplace_back(idx, sum / static_cast<double>(n));
    }
    return out;
}

/// Deterministic campaign summary: no wall-clock fields.
inline nlohmann::json summarize(const ExperimentConfig &c, const std::vector<RunReport> &runs) {
    std::vector<double> finals;
    nlohmann::json per_run = nlohmann::json::array();
    std::map<std::string, std::size_t> term;
    for (const auto &r : runs) {
        finals.push_back(r.final_cost);
        ++term[r.terminated_by];
        per_run.push_back({{"restart", r.restart},
                           {"seed", r.seed},
                           {"init_hash", r.init_hash},
                           {"final_cost", r.final_cost},
                           {"final_cost_measured", r.final_cost_measured},
                           {"evals_used", r.evals_used},
                           {"terminated_by", r.terminated_by}});
    }
    const auto q = quartiles(finals);
    nlohmann::json curve = nlohmann::json::array();
    for (const auto &[i, v] : mean_trace(runs)) {
        curve.push_back({i, v});
    }
    return {{"campaign_id", c.campaign_id},
            {"method", std::string(to_string(c.method))},
            {"problem", problem_label(c)},
            {"noise", resolve_noise(c).descriptor()},
            {"optimizer", c.method == Method::Cqs ? std::string("none") : std::string(to_string(resolve_optimizer(c).kind))},
            {"restarts", runs.size()},
            {"final_cost",
             {{"min", q.min},
              {"q1", q.q1},
              {"median", q.median},
              {"q3", q.q3},
              {"max", q.max},
              {"mean", std::accumulate(finals.begin(), finals.end(), 0.0) / static_cast<double>(finals.size())}}},
            {"terminated_by", term},
            {"runs", per_run},
            {"mean_trace", curve}};
}

// --- campaigns --------------------------------------------------------------

struct CampaignResult {
    std::filesystem::path dir;
    std::vector<RunReport> runs;
    nlohmann::json summary;
    std::size_t resumed = 0;
};

namespace detail {

inline void write_text(const std::filesystem::path &path, const std::string &text) {
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) {
            throw Error("cannot write " + tmp);
        }
        os << text;
    }
    std::filesystem::rename(tmp, path);
}

inline std::optional<RunReport> load_run(const std::filesystem::path &path) {
    std::ifstream is(path);
    if (!is) {
        return std::nullopt;
    }
    try {
        return report_from_json(nlohmann::json::parse(is));
    } catch (const std::exception &) {
        return std::nullopt; // corrupt or partial file: rerun
    }
}

inline std::string trace_csv(const RunReport &r) {
    std::ostringstream os;
    os.precision(17);
    os << "eval_index,cost\n";
    for (const auto &t : r.trace) {
        os << t.eval_index << ',' << t.cost << '\n';
    }
    return os.str();
}

} // namespace detail

/// Runs (or resumes) every restart, then writes summary.json. Existing
/// run-k.json files are reused; the per-run CSV is rewritten from them.
inline CampaignResult run_campaign(ExperimentConfig c) {
    validate_config(c);
    namespace fs = std::filesystem;
    CampaignResult out;
    out.dir = fs::path(c.output_dir) / c.campaign_id;
    fs::create_directories(out.dir);
    const auto echo = config_to_json(c);
    const auto cfg_path = out.dir / "config.json";
    if (fs::exists(cfg_path)) {
        std::ifstream is(cfg_path);
        nlohmann::json old;
        try {
            old = nlohmann::json::parse(is);
        } catch (const std::exception &) {
        }
        if (!old.is_null() && old != echo) {
            throw ConfigError("campaign directory " + out.dir.string() + " holds a different configuration");
        }
    }
    detail::write_text(cfg_path, echo.dump(2) + "\n");

    const std::size_t n = c.restarts.value_or(default_restarts(c.method));
    out.runs.resize(n);
    std::vector<bool> resumed(n, false);
    parallel_for(n, c.jobs, [&](std::size_t k) {
        const auto json_path = out.dir / ("run-" + std::to_string(k) + ".json");
        if (auto prev = detail::load_run(json_path); prev && prev->restart == k) {
            out.runs[k] = std::move(*prev);
            resumed[k] = true;
        } else {
            out.runs[k] = run_restart(c, k);
            detail::write_text(json_path, report_to_json(out.runs[k]).dump() + "\n");
        }
        detail::write_text(out.dir / ("run-" + std::to_string(k) + ".csv"), detail::trace_csv(out.runs[k]));
    });
    out.resumed = static_cast<std::size_t>(std::count(resumed.begin(), resumed.end(), true));
    out.summary = summarize(c, out.runs);
    detail::write_text(out.dir / "summary.json", out.summary.dump(2) + "\n");
    return out;
}

// --- plot data --------------------------------------------------------------

struct PlotData {
    std::size_t summaries = 0;
    std::size_t box_rows = 0;
    std::size_t curve_rows = 0;
};

/// Collects every summary.json below `root` into boxplot.csv and
/// convergence.csv in `out_dir`. With top_k > 0 only the k lowest final
/// costs of each arm are kept (the "top attempts" of a box plot).
inline PlotData emit_plotdata(const std::filesystem::path &root, const std::filesystem::path &out_dir,
                              std::size_t top_k = 0) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root)) {
        throw Error("no data: " + root.string() + " is not a directory");
    }
    std::vector<fs::path> files;
    for (const auto &e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file() && e.path().filename() == "summary.json") {
            files.push_back(e.path());
        }
    }
    if (files.empty()) {
        throw Error("no data: no summary.json under " + root.string());
    }
    std::sort(files.begin(), files.end());
    std::ostringstream box;
    std::ostringstream curve;
    box.precision(17);
    curve.precision(17);
    box << "method,problem,noise,optimizer,restart,final_cost\n";
    curve << "method,problem,noise,optimizer,eval_index,mean_cost\n";
    PlotData pd;
    for (const auto &f : files) {
        nlohmann::json s;
        try {
            std::ifstream is(f);
            s = nlohmann::json::parse(is);
            const std::string arm = s.at("method").get<std::string>() + ',' + s.at("problem").get<std::string>() +
                                    ',' + s.at("noise").get<std::string>() + ',' +
                                    s.at("optimizer").get<std::string>();
            std::vector<std::pair<double, std::size_t>> finals;
            for (const auto &r : s.at("runs")) {
                finals.emplace_back(r.at("final_cost").get<double>(), r.at("restart").get<std::size_t>());
            }
            std::sort(finals.begin(), finals.end());
            if (top_k > 0 && finals.size() > top_k) {
                finals.resize(top_k);
            }
            std::sort(finals.begin(), finals.end(), [](const auto &a, const auto &b) { return a.second < b.second; });
            for (const auto &[cost, restart] : finals) {
                box << arm << ',' << restart << ',' << cost << '\n';
                ++pd.box_rows;
            }
            for (const auto &pt : s.at("mean_trace")) {
                curve << arm << ',' << pt.at(0).get<std::uint64_t>() << ',' << pt.at(1).get<double>() << '\n';
                ++pd.curve_rows;
            }
        } catch (const nlohmann::json::exception &e) {
            throw Error("corrupt summary " + f.string() + ": " + e.what());
        }
        ++pd.summaries;
    }
    fs::create_directories(out_dir);
    detail::write_text(out_dir / "boxplot.csv", box.str());
    detail::write_text(out_dir / "convergence.csv", curve.str());
    return pd;
}

} // namespace qls
