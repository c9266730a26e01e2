// qls: run solver campaigns and turn their summaries into plot data.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "qls/qls.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct SolveArgs {
    std::string method;
    std::string config_file;
    std::string problem;
    std::string noise;
    std::string optimizer;
    std::string out;
    std::string id;
    std::optional<std::uint64_t> budget;
    std::optional<std::size_t> restarts;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;
    std::vector<std::string> params;
};

/// "k=v": numbers and booleans become JSON numbers, everything else a string.
nlohmann::json param_value(const std::string &text) {
    try {
        auto j = nlohmann::json::parse(text);
        if (j.is_number() || j.is_boolean() || j.is_array()) {
            return j;
        }
    } catch (const nlohmann::json::exception &) {
    }
    return text;
}

qls::ExperimentConfig build_config(const SolveArgs &a) {
    nlohmann::json j = nlohmann::json::object();
    if (!a.config_file.empty()) {
        std::ifstream is(a.config_file);
        if (!is) {
            throw qls::ConfigError("cannot read config file " + a.config_file);
        }
        try {
            j = nlohmann::json::parse(is);
        } catch (const nlohmann::json::exception &e) {
            throw qls::ConfigError("config file " + a.config_file + ": " + e.what());
        }
        if (!j.is_object()) {
            throw qls::ConfigError("config file must hold a JSON object");
        }
    }
    // command-line flags override the file
    if (!a.method.empty()) j["method"] = a.method;
    if (!a.problem.empty()) {
        if (a.problem.front() == '{') {
            try {
                j["problem"] = nlohmann::json::parse(a.problem);
            } catch (const nlohmann::json::exception &e) {
                throw qls::ConfigError(std::string("inline problem: ") + e.what());
            }
        } else {
            j["problem"] = a.problem;
        }
    }
    if (!a.noise.empty()) j["noise"] = a.noise;
    if (!a.optimizer.empty()) j["optimizer"] = a.optimizer;
    if (!a.out.empty()) j["out"] = a.out;
    if (!a.id.empty()) j["campaign_id"] = a.id;
    if (a.budget) j["budget"] = *a.budget;
    if (a.restarts) j["restarts"] = *a.restarts;
    if (a.seed) j["base_seed"] = *a.seed;
    if (a.jobs) j["jobs"] = *a.jobs;
    for (const auto &kv : a.params) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw qls::ConfigError("--param expects key=value, got '" + kv + "'");
        }
        j["params"][kv.substr(0, eq)] = param_value(kv.substr(eq + 1));
    }
    if (!j.contains("method")) {
        throw qls::ConfigError("no method given");
    }
    return qls::config_from_json(j);
}

int run_solve(const SolveArgs &a) {
    auto cfg = build_config(a);
    for (const auto &n : cfg.notes) {
        std::cerr << "note: " << n << '\n';
    }
    const auto res = qls::run_campaign(cfg);
    const auto &fc = res.summary["final_cost"];
    std::cout << "campaign " << res.dir.string() << ": " << res.runs.size() << " runs";
    if (res.resumed > 0) {
        std::cout << " (" << res.resumed << " resumed)";
    }
    std::cout << "\nfinal cost min " << fc["min"].get<double>() << "  median " << fc["median"].get<double>()
              << "  max " << fc["max"].get<double>() << '\n';
    return 0;
}

int run_plotdata(const std::string &dir, const std::string &out, std::size_t top_k) {
    const auto pd = qls::emit_plotdata(dir, out.empty() ? dir : out, top_k);
    std::cout << pd.summaries << " summaries -> " << pd.box_rows << " box-plot rows, " << pd.curve_rows
              << " convergence rows\n";
    return 0;
}

int run_list() {
    for (const auto &id : {"A1", "A2", "A3", "A4", "A5", "A6", "A7"}) {
        const auto p = qls::registry_get(id);
        std::cout << id << "  " << p.n_qubits << " qubits, " << p.n_terms() << " terms\n";
    }
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Variational and classical-combination linear solvers on a simulated quantum device"};
    app.require_subcommand(1);

    SolveArgs sa;
    auto *solve = app.add_subcommand("solve", "run a seeded campaign of restarts");
    solve->add_option("method", sa.method, "vqls | aavqls | eavqls | cqs | lavqls");
    solve->add_option("--config", sa.config_file, "JSON config file; flags override its fields");
    solve->add_option("--problem", sa.problem, "registry id (A1..A7) or inline JSON problem");
    solve->add_option("--noise", sa.noise, "exact | shots[:N] | depol[:N[:p]]");
    solve->add_option("--optimizer", sa.optimizer, "spsa | bfgs | powell | neldermead");
    solve->add_option("--budget", sa.budget, "cost evaluations per restart");
    solve->add_option("--restarts", sa.restarts, "number of restarts");
    solve->add_option("--seed", sa.seed, "base seed; restart k uses seed + k");
    solve->add_option("--out", sa.out, "output directory");
    solve->add_option("--id", sa.id, "campaign directory name");
    solve->add_option("--param", sa.params, "method parameter key=value (repeatable)");
    solve->add_option("--jobs", sa.jobs, "restarts run concurrently");

    std::string plot_dir;
    std::string plot_out;
    std::size_t top_k = 0;
    auto *plot = app.add_subcommand("plotdata", "collect summaries into box-plot and convergence CSVs");
    plot->add_option("dir", plot_dir, "directory searched for summary.json")->required();
    plot->add_option("--out", plot_out, "where the CSVs go (default: DIR)");
    plot->add_option("--top-k", top_k, "keep the k lowest final costs per arm (0 keeps all)");

    auto *list = app.add_subcommand("list-problems", "show the registered problem instances");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (solve->parsed()) return run_solve(sa);
        if (plot->parsed()) return run_plotdata(plot_dir, plot_out, top_k);
        if (list->parsed()) return run_list();
    } catch (const qls::ConfigError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
