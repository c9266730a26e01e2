#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "qls/cost.hpp"
#include "qls/error.hpp"
#include "qls/random.hpp"

namespace qls {

enum class OptimizerKind : std::uint8_t { SPSA, BFGS, Powell, NelderMead };

inline std::string_view to_string(OptimizerKind k) noexcept {
    switch (k) {
    case OptimizerKind::SPSA: return "spsa";
    case OptimizerKind::BFGS: return "bfgs";
    case OptimizerKind::Powell: return "powell";
    case OptimizerKind::NelderMead: return "neldermead";
    }
    return "?";
}

/// Accepts the CLI spellings. "cobyla" is not offered here; callers that
/// accept it map it to Nelder-Mead themselves and say so in their output.
inline OptimizerKind parse_optimizer_kind(std::string_view s) {
    if (s == "spsa") return OptimizerKind::SPSA;
    if (s == "bfgs") return OptimizerKind::BFGS;
    if (s == "powell") return OptimizerKind::Powell;
    if (s == "neldermead" || s == "nelder-mead" || s == "nelder_mead") return OptimizerKind::NelderMead;
    throw InvalidArgument("unknown optimizer '" + std::string(s) + "'");
}

struct OptimizerSpec {
    OptimizerKind kind = OptimizerKind::BFGS;
    std::map<std::string, double> hyperparams;
    std::uint64_t seed = 0;

    [[nodiscard]] double get(const std::string &key, double fallback) const {
        const auto it = hyperparams.find(key);
        return it == hyperparams.end() ? fallback : it->second;
    }

    [[nodiscard]] static const std::set<std::string> &known_keys(OptimizerKind k) {
        static const std::set<std::string> spsa{"a", "c", "A", "alpha", "gamma", "max_iter"};
        static const std::set<std::string> bfgs{"c1", "contraction", "max_probes", "gtol", "max_iter"};
        static const std::set<std::string> powell{"line_tol", "ftol", "step", "max_iter"};
        static const std::set<std::string> nm{"step", "fatol", "xatol", "max_iter"};
        switch (k) {
        case OptimizerKind::SPSA: return spsa;
        case OptimizerKind::BFGS: return bfgs;
        case OptimizerKind::Powell: return powell;
        case OptimizerKind::NelderMead: return nm;
        }
        return nm;
    }

    void validate() const {
        const auto &keys = known_keys(kind);
        for (const auto &[k, v] : hyperparams) {
            if (!keys.contains(k)) {
                throw InvalidArgument("optimizer " + std::string(to_string(kind)) + " has no hyperparameter '" +
                                      k + "'");
            }
            if (!std::isfinite(v)) {
                throw InvalidArgument("hyperparameter '" + k + "' is not finite");
            }
        }
        if (kind == OptimizerKind::SPSA) {
            const double alpha = get("alpha", 0.602);
            const double gamma = get("gamma", 0.101);
            if (!(get("a", 0.2) > 0.0) || !(get("c", 0.1) > 0.0) || !(get("A", 0.0) >= 0.0) ||
                !(alpha > 0.0 && alpha <= 1.0) || !(gamma > 0.0 && gamma <= 1.0)) {
                throw InvalidArgument("SPSA gains must be positive with exponents in (0, 1]");
            }
        }
    }
};

inline nlohmann::json to_json(const OptimizerSpec &s) {
    nlohmann::json params = nlohmann::json::object();
    for (const auto &[k, v] : s.hyperparams) {
        params[k] = v;
    }
    return {{"kind", std::string(to_string(s.kind))}, {"seed", s.seed}, {"params", params}};
}

inline OptimizerSpec optimizer_spec_from_json(const nlohmann::json &j) {
    OptimizerSpec s;
    s.kind = parse_optimizer_kind(j.at("kind").get<std::string>());
    s.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("params")) {
        for (const auto &[k, v] : j["params"].items()) {
            s.hyperparams[k] = v.get<double>();
        }
    }
    s.validate();
    return s;
}

enum class Termination : std::uint8_t { Budget, Tolerance, MaxIter };

inline std::string_view to_string(Termination t) noexcept {
    switch (t) {
    case Termination::Budget: return "budget";
    case Termination::Tolerance: return "tolerance";
    case Termination::MaxIter: return "max_iter";
    }
    return "?";
}

struct TraceEntry {
    std::uint64_t eval_index = 0; ///< budget.used() right after the evaluation
    double cost = 0.0;            ///< raw value as measured
};

struct OptimResult {
    std::vector<double> best_params;
    double best_cost = std::numeric_limits<double>::infinity();
    std::vector<TraceEntry> trace;
    Termination terminated_by = Termination::Budget;
    std::uint64_t evals_used = 0; ///< budget consumed by this call, gradients included
};

/// What the optimizer sees (`value`) and what the trace records (`raw`).
struct Observation {
    double value = 0.0;
    double raw = 0.0;
};

using CostFunction = std::function<double(std::span<const double>)>;
using ObservedCostFunction = std::function<Observation(std::span<const double>)>;
/// Must not charge the budget; the optimizer charges 2 per parameter.
using GradientFunction = std::function<std::vector<double>(std::span<const double>)>;

/// Running minimum of the trace.
inline std::vector<double> best_so_far(const std::vector<TraceEntry> &trace) {
    std::vector<double> out;
    out.reserve(trace.size());
    double best = std::numeric_limits<double>::infinity();
    for (const auto &e : trace) {
        best = std::min(best, e.cost);
        out.push_back(best);
    }
    return out;
}

/// The one place where cost calls are charged, traced, and screened.
class Evaluator {
  public:
    Evaluator(ObservedCostFunction cost, CostBudget &budget, GradientFunction gradient = {})
        : cost_(std::move(cost)), gradient_(std::move(gradient)), budget_(budget) {}

    double operator()(std::span<const double> x) {
        budget_.charge(1);
        Observation o;
        try {
            o = cost_(x);
        } catch (const EvaluationError &) {
            throw;
        } catch (const std::exception &e) {
            throw EvaluationError(e.what(), {x.begin(), x.end()});
        }
        if (!std::isfinite(o.value)) {
            throw EvaluationError("cost is not finite", {x.begin(), x.end()});
        }
        trace_.push_back({budget_.used(), o.raw});
        if (o.value < best_value_) {
            best_value_ = o.value;
            best_.assign(x.begin(), x.end());
        }
        return o.value;
    }

    [[nodiscard]] bool has_gradient() const noexcept { return static_cast<bool>(gradient_); }

    /// Analytic gradient when one was supplied, central differences through
    /// operator() otherwise. Either way 2 evaluations per parameter.
    std::vector<double> gradient(std::span<const double> x) {
        if (gradient_) {
            budget_.charge(2 * x.size());
            try {
                auto g = gradient_(x);
                for (double v : g) {
                    if (!std::isfinite(v)) {
                        throw EvaluationError("gradient is not finite", {x.begin(), x.end()});
                    }
                }
                return g;
            } catch (const EvaluationError &) {
                throw;
            } catch (const std::exception &e) {
                throw EvaluationError(e.what(), {x.begin(), x.end()});
            }
        }
        constexpr double h = 1e-5;
        std::vector<double> y(x.begin(), x.end());
        std::vector<double> g(x.size());
        for (std::size_t k = 0; k < x.size(); ++k) {
            const double orig = y[k];
            y[k] = orig + h;
            const double up = (*this)(y);
            y[k] = orig - h;
            const double down = (*this)(y);
            y[k] = orig;
            g[k] = (up - down) / (2.0 * h);
        }
        return g;
    }

    [[nodiscard]] CostBudget &budget() noexcept { return budget_; }
    [[nodiscard]] const std::vector<TraceEntry> &trace() const noexcept { return trace_; }
    [[nodiscard]] const std::vector<double> &best_params() const noexcept { return best_; }
    [[nodiscard]] double best_value() const noexcept { return best_value_; }

    OptimResult finish(Termination t, std::uint64_t start_used) && {
        OptimResult r;
        r.best_params = std::move(best_);
        r.best_cost = best_value_;
        r.trace = std::move(trace_);
        r.terminated_by = t;
        r.evals_used = budget_.used() - start_used;
        return r;
    }

  private:
    ObservedCostFunction cost_;
    GradientFunction gradient_;
    CostBudget &budget_;
    std::vector<TraceEntry> trace_;
    std::vector<double> best_;
    double best_value_ = std::numeric_limits<double>::infinity();
};

// --- SPSA -------------------------------------------------------------------

struct SpsaGains {
    double a = 0.2;
    double c = 0.1;
    double A = 0.0;
    double alpha = 0.602;
    double gamma = 0.101;

    [[nodiscard]] double a_k(std::size_t k) const {
        return a / std::pow(static_cast<double>(k) + 1.0 + A, alpha);
    }
    [[nodiscard]] double c_k(std::size_t k) const {
        return std::max(c / std::pow(static_cast<double>(k) + 1.0, gamma), kMinPerturbation);
    }

    static constexpr double kMinPerturbation = 1.4901161193847656e-08; // sqrt(eps)

    static SpsaGains from(const OptimizerSpec &s, std::size_t planned_iterations) {
        return {s.get("a", 0.2), s.get("c", 0.1), s.get("A", 0.1 * static_cast<double>(planned_iterations)),
                s.get("alpha", 0.602), s.get("gamma", 0.101)};
    }
};

inline std::vector<double> rademacher(std::size_t n, Rng &rng) {
    std::bernoulli_distribution coin(0.5);
    std::vector<double> d(n);
    for (auto &v : d) {
        v = coin(rng) ? 1.0 : -1.0;
    }
    return d;
}

/// g_i = (f(theta + c delta) - f(theta - c delta)) / (2 c delta_i)
template <class F>
std::vector<double> spsa_gradient_estimate(std::span<const double> theta, F &&f, double ck,
                                           std::span<const double> delta) {
    std::vector<double> plus(theta.begin(), theta.end());
    std::vector<double> minus(theta.begin(), theta.end());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        plus[i] += ck * delta[i];
        minus[i] -= ck * delta[i];
    }
    const double diff = f(std::span<const double>(plus)) - f(std::span<const double>(minus));
    std::vector<double> g(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        g[i] = diff / (2.0 * ck * delta[i]);
    }
    return g;
}

namespace detail {

inline std::vector<double> spsa_step(std::span<const double> theta, Evaluator &eval, std::size_t k,
                                     const SpsaGains &gains, Rng &rng) {
    if (!eval.budget().can_afford(2)) {
        throw BudgetExhausted("SPSA step needs 2 evaluations");
    }
    const auto delta = rademacher(theta.size(), rng);
    const auto g = spsa_gradient_estimate(theta, eval, gains.c_k(k), delta);
    std::vector<double> next(theta.begin(), theta.end());
    const double ak = gains.a_k(k);
    for (std::size_t i = 0; i < next.size(); ++i) {
        next[i] -= ak * g[i];
    }
    return next;
}

} // namespace detail

/// One SPSA iteration: theta - a_k * g_hat. Both evaluations are checked
/// against the budget before either runs, so an unaffordable step leaves
/// no partial update.
inline std::vector<double> spsa_step(std::span<const double> theta, const CostFunction &cost, std::size_t k,
                                     const SpsaGains &gains, CostBudget &budget, Rng &rng) {
    Evaluator eval([&](std::span<const double> x) { const double v = cost(x); return Observation{v, v}; },
                   budget);
    return detail::spsa_step(theta, eval, k, gains, rng);
}

namespace detail {

inline Termination run_spsa(Evaluator &eval, std::vector<double> theta, const OptimizerSpec &spec) {
    Rng rng(spec.seed);
    // x0 and the final iterate take one evaluation each
    const std::uint64_t rem = eval.budget().remaining();
    const std::size_t planned = rem >= 2 ? static_cast<std::size_t>((rem - 2) / 2) : 0;
    const auto gains = SpsaGains::from(spec, planned);
    const auto max_iter = static_cast<std::size_t>(spec.get("max_iter", 1e18));
    eval(theta);
    Termination why = Termination::Budget;
    for (std::size_t k = 0;; ++k) {
        if (k >= max_iter) {
            why = Termination::MaxIter;
            break;
        }
        if (!eval.budget().can_afford(3)) {
            break;
        }
        theta = spsa_step(theta, eval, k, gains, rng);
    }
    if (eval.budget().can_afford(1)) {
        eval(theta);
    }
    return why;
}

// --- BFGS -------------------------------------------------------------------

inline double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline Termination run_bfgs(Evaluator &eval, std::vector<double> x, const OptimizerSpec &spec) {
    const double c1 = spec.get("c1", 1e-4);
    const double shrink = spec.get("contraction", 0.5);
    const auto max_probes = static_cast<int>(spec.get("max_probes", 30));
    const double gtol = spec.get("gtol", 1e-10);
    const auto max_iter = static_cast<std::size_t>(spec.get("max_iter", 1e9));
    const std::size_t n = x.size();

    auto identity = [n] {
        std::vector<double> h(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            h[i * n + i] = 1.0;
        }
        return h;
    };
    std::vector<double> hinv = identity();
    bool fresh = true;

    double f = eval(x);
    std::vector<double> g = eval.gradient(x);
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        if (std::sqrt(dot(g, g)) <= gtol) {
            return Termination::Tolerance;
        }
        std::vector<double> d(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                d[i] -= hinv[i * n + j] * g[j];
            }
        }
        double slope = dot(g, d);
        if (!(slope < 0.0)) {
            hinv = identity();
            fresh = true;
            for (std::size_t i = 0; i < n; ++i) {
                d[i] = -g[i];
            }
            slope = dot(g, d);
        }
        double step = 1.0;
        std::vector<double> xn(n);
        double fn = 0.0;
        bool accepted = false;
        for (int probe = 0; probe < max_probes; ++probe) {
            for (std::size_t i = 0; i < n; ++i) {
                xn[i] = x[i] + step * d[i];
            }
            fn = eval(xn);
            if (fn <= f + c1 * step * slope) {
                accepted = true;
                break;
            }
            step *= shrink;
        }
        if (!accepted) {
            if (fresh) {
                return Termination::Tolerance;
            }
            hinv = identity();
            fresh = true;
            continue;
        }
        std::vector<double> gn = eval.gradient(xn);
        std::vector<double> s(n);
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = xn[i] - x[i];
            y[i] = gn[i] - g[i];
        }
        const double sy = dot(s, y);
        if (sy > 1e-12) {
            // H+ = (I - r s y^T) H (I - r y s^T) + r s s^T
            const double r = 1.0 / sy;
            std::vector<double> hy(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    hy[i] += hinv[i * n + j] * y[j];
                }
            }
            const double yhy = dot(y, hy);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    hinv[i * n + j] += (1.0 + r * yhy) * r * s[i] * s[j] - r * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
            fresh = false;
        }
        x = std::move(xn);
        f = fn;
        g = std::move(gn);
    }
    return Termination::MaxIter;
}

// --- Powell -----------------------------------------------------------------

struct LineResult {
    double t = 0.0;
    double f = 0.0;
};

/// Minimizes f(x + t u) over t: expanding bracket, then golden section until
/// the bracket is narrower than `tol`.
inline LineResult line_minimize(Evaluator &eval, std::span<const double> x, double fx, std::span<const double> u,
                                double step, double tol) {
    constexpr double phi = 1.6180339887498949;
    constexpr double rg = 0.3819660112501051; // 2 - phi
    std::vector<double> y(x.size());
    auto f = [&](double t) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            y[i] = x[i] + t * u[i];
        }
        return eval(y);
    };
    double a = 0.0;
    double fa = fx;
    double b = step;
    double fb = f(b);
    if (fb > fa) {
        std::swap(a, b);
        std::swap(fa, fb);
    }
    double c = b + phi * (b - a);
    double fc = f(c);
    for (int grow = 0; fc <= fb && grow < 40; ++grow) {
        a = b;
        fa = fb;
        b = c;
        fb = fc;
        c = b + phi * (b - a);
        fc = f(c);
    }
    if (fc <= fb) {
        return {c, fc};
    }
    // a, c bracket the minimum with b inside and fb below both ends
    double lo = std::min(a, c);
    double hi = std::max(a, c);
    double x1 = b;
    double f1 = fb;
    double x2;
    double f2;
    if (hi - b > b - lo) {
        x2 = b + rg * (hi - b);
        f2 = f(x2);
    } else {
        x2 = x1;
        f2 = f1;
        x1 = b - rg * (b - lo);
        f1 = f(x1);
    }
    while (hi - lo > tol) {
        if (f2 < f1) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = x1 + rg * (hi - x1);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = x2 - rg * (x2 - lo);
            f1 = f(x1);
        }
    }
    return f1 < f2 ? LineResult{x1, f1} : LineResult{x2, f2};
}

inline Termination run_powell(Evaluator &eval, std::vector<double> x, const OptimizerSpec &spec) {
    const double line_tol = spec.get("line_tol", 1e-6);
    const double ftol = spec.get("ftol", 1e-10);
    const double step = spec.get("step", 1.0);
    const auto max_iter = static_cast<std::size_t>(spec.get("max_iter", 1e9));
    const std::size_t n = x.size();
    std::vector<std::vector<double>> dirs(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        dirs[i][i] = 1.0;
    }
    double f = eval(x);
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        const std::vector<double> x0 = x;
        const double f0 = f;
        std::size_t biggest = 0;
        double drop = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double before = f;
            const auto r = line_minimize(eval, x, f, dirs[i], step, line_tol);
            if (r.f < f) {
                for (std::size_t k = 0; k < n; ++k) {
                    x[k] += r.t * dirs[i][k];
                }
                f = r.f;
            }
            if (before - f > drop) {
                drop = before - f;
                biggest = i;
            }
        }
        if (2.0 * (f0 - f) <= ftol * (std::abs(f0) + std::abs(f)) + 1e-300) {
            return Termination::Tolerance;
        }
        std::vector<double> u(n);
        std::vector<double> xe(n);
        for (std::size_t k = 0; k < n; ++k) {
            u[k] = x[k] - x0[k];
            xe[k] = x[k] + u[k];
        }
        const double fe = eval(xe);
        if (fe < f0) {
            const double t = 2.0 * (f0 - 2.0 * f + fe) * (f0 - f - drop) * (f0 - f - drop) -
                             drop * (f0 - fe) * (f0 - fe);
            if (t < 0.0) {
                const auto r = line_minimize(eval, x, f, u, 1.0, line_tol);
                if (r.f < f) {
                    for (std::size_t k = 0; k < n; ++k) {
                        x[k] += r.t * u[k];
                    }
                    f = r.f;
                }
                dirs[biggest] = dirs.back();
                dirs.back() = u;
            }
        }
    }
    return Termination::MaxIter;
}

// --- Nelder-Mead ------------------------------------------------------------

inline Termination run_nelder_mead(Evaluator &eval, const std::vector<double> &x0, const OptimizerSpec &spec) {
    const double step = spec.get("step", 0.5);
    const double fatol = spec.get("fatol", 1e-10);
    const double xatol = spec.get("xatol", 1e-8);
    const auto max_iter = static_cast<std::size_t>(spec.get("max_iter", 1e9));
    const std::size_t n = x0.size();
    std::vector<std::vector<double>> pts(n + 1, x0);
    std::vector<double> fs(n + 1);
    fs[0] = eval(pts[0]);
    for (std::size_t i = 0; i < n; ++i) {
        pts[i + 1][i] += step;
        fs[i + 1] = eval(pts[i + 1]);
    }
    std::vector<std::size_t> order(n + 1);
    auto point_along = [&](const std::vector<double> &centroid, const std::vector<double> &worst, double coef) {
        std::vector<double> p(n);
        for (std::size_t k = 0; k < n; ++k) {
            p[k] = centroid[k] + coef * (worst[k] - centroid[k]);
        }
        return p;
    };
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
        {
            std::vector<std::vector<double>> p2;
            std::vector<double> f2;
            for (auto i : order) {
                p2.push_back(pts[i]);
                f2.push_back(fs[i]);
            }
            pts = std::move(p2);
            fs = std::move(f2);
        }
        double spread = 0.0;
        double diam = 0.0;
        for (std::size_t i = 1; i <= n; ++i) {
            spread = std::max(spread, std::abs(fs[i] - fs[0]));
            for (std::size_t k = 0; k < n; ++k) {
                diam = std::max(diam, std::abs(pts[i][k] - pts[0][k]));
            }
        }
        if (spread <= fatol && diam <= xatol) {
            return Termination::Tolerance;
        }
        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < n; ++k) {
                centroid[k] += pts[i][k] / static_cast<double>(n);
            }
        }
        const auto xr = point_along(centroid, pts[n], -1.0);
        const double fr = eval(xr);
        if (fr < fs[0]) {
            const auto xe = point_along(centroid, pts[n], -2.0);
            const double fe = eval(xe);
            if (fe < fr) {
                pts[n] = xe;
                fs[n] = fe;
            } else {
                pts[n] = xr;
                fs[n] = fr;
            }
            continue;
        }
        if (fr < fs[n - 1]) {
            pts[n] = xr;
            fs[n] = fr;
            continue;
        }
        const bool outside = fr < fs[n];
        const auto xc = point_along(centroid, pts[n], outside ? -0.5 : 0.5);
        const double fc = eval(xc);
        if (fc < (outside ? fr : fs[n])) {
            pts[n] = xc;
            fs[n] = fc;
            continue;
        }
        for (std::size_t i = 1; i <= n; ++i) {
            for (std::size_t k = 0; k < n; ++k) {
                pts[i][k] = pts[0][k] + 0.5 * (pts[i][k] - pts[0][k]);
            }
            fs[i] = eval(pts[i]);
        }
    }
    return Termination::MaxIter;
}

} // namespace detail

/// Minimizes `cost` from `x0` until the budget, a tolerance, or max_iter
/// stops it. The best point seen is returned even when the budget runs out
/// mid-iteration. Evaluation failures surface as EvaluationError carrying
/// the offending point.
inline OptimResult minimize(const ObservedCostFunction &cost, std::span<const double> x0, const OptimizerSpec &spec,
                            CostBudget &budget, const GradientFunction &gradient = {}) {
    spec.validate();
    if (budget.remaining() == 0) {
        throw InvalidArgument("optimizer given a zero evaluation budget");
    }
    for (double v : x0) {
        if (!std::isfinite(v)) {
            throw InvalidArgument("initial point is not finite");
        }
    }
    const std::uint64_t start = budget.used();
    Evaluator eval(cost, budget, gradient);
    std::vector<double> x(x0.begin(), x0.end());
    Termination why = Termination::Budget;
    try {
        switch (spec.kind) {
        case OptimizerKind::SPSA: why = detail::run_spsa(eval, x, spec); break;
        case OptimizerKind::BFGS: why = detail::run_bfgs(eval, x, spec); break;
        case OptimizerKind::Powell: why = detail::run_powell(eval, x, spec); break;
        case OptimizerKind::NelderMead: why = detail::run_nelder_mead(eval, x, spec); break;
        }
    } catch (const BudgetExhausted &) {
        why = Termination::Budget;
    }
    if (eval.trace().empty()) {
        throw InvalidArgument("budget too small for a single evaluation");
    }
    return std::move(eval).finish(why, start);
}

inline OptimResult minimize(const CostFunction &cost, std::span<const double> x0, const OptimizerSpec &spec,
                            CostBudget &budget, const GradientFunction &gradient = {}) {
    return minimize(
        ObservedCostFunction([&cost](std::span<const double> x) {
            const double v = cost(x);
            return Observation{v, v};
        }),
        x0, spec, budget, gradient);
}

} // namespace qls
