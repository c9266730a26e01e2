#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "qls/error.hpp"

namespace qls {

enum class NoiseMode : std::uint8_t { Exact, Shots, ShotsDepolarizing };

/// How Hadamard-test expectation values are obtained.
///
/// Exact: p0 - p1 of the ancilla computed analytically.
/// Shots: the ancilla outcome is drawn `shots` times from a seeded binomial on
///   the exact p0.
/// ShotsDepolarizing: as Shots, but every shot follows a stochastic Pauli
///   trajectory in which each qubit touched by a non-identity gate suffers a
///   uniformly random X, Y or Z with probability `depolarizing`. Shots are
///   spread over at most `trajectories` sampled trajectories.
struct NoiseRegime {
    NoiseMode mode = NoiseMode::Exact;
    std::uint64_t shots = 0;
    double depolarizing = 0.0;
    std::uint64_t seed = 0;
    std::size_t trajectories = 200;

    static NoiseRegime exact() { return {}; }

    static NoiseRegime with_shots(std::uint64_t n, std::uint64_t seed = 0) {
        NoiseRegime r{NoiseMode::Shots, n, 0.0, seed};
        r.validate();
        return r;
    }

    static NoiseRegime depolarizing_shots(std::uint64_t n, double p, std::uint64_t seed = 0) {
        NoiseRegime r{NoiseMode::ShotsDepolarizing, n, p, seed};
        r.validate();
        return r;
    }

    [[nodiscard]] bool sampled() const noexcept { return mode != NoiseMode::Exact; }

    [[nodiscard]] NoiseRegime reseeded(std::uint64_t s) const {
        NoiseRegime r = *this;
        r.seed = s;
        return r;
    }

    void validate() const {
        if (mode == NoiseMode::Exact) {
            return;
        }
        if (shots == 0) {
            throw InvalidArgument("shot count must be positive");
        }
        if (mode == NoiseMode::ShotsDepolarizing) {
            if (!(depolarizing >= 0.0 && depolarizing <= 0.5)) {
                throw InvalidArgument("depolarizing probability must lie in [0, 0.5]");
            }
            if (trajectories == 0) {
                throw InvalidArgument("trajectory count must be positive");
            }
        }
    }

    /// "exact", "shots:N" or "depol:N:p".
    [[nodiscard]] std::string descriptor() const {
        switch (mode) {
        case NoiseMode::Exact: return "exact";
        case NoiseMode::Shots: return "shots:" + std::to_string(shots);
        case NoiseMode::ShotsDepolarizing: {
            std::string p = std::to_string(depolarizing);
            while (p.size() > 1 && p.back() == '0') {
                p.pop_back();
            }
            return "depol:" + std::to_string(shots) + ":" + p;
        }
        }
        return "?";
    }

    static NoiseRegime parse(std::string_view text, std::uint64_t seed = 0) {
        auto fail = [&]() -> NoiseRegime {
            throw InvalidArgument("bad noise descriptor '" + std::string(text) +
                                  "' (expected exact | shots:N | depol:N:p)");
        };
        auto parse_u64 = [&](std::string_view s) {
            std::uint64_t v = 0;
            auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc{} || ptr != s.data() + s.size()) {
                fail();
            }
            return v;
        };
        if (text == "exact") {
            return NoiseRegime{NoiseMode::Exact, 0, 0.0, seed};
        }
        if (text.starts_with("shots:")) {
            return with_shots(parse_u64(text.substr(6)), seed);
        }
        if (text.starts_with("depol:")) {
            auto rest = text.substr(6);
            auto colon = rest.find(':');
            if (colon == std::string_view::npos) {
                return depolarizing_shots(parse_u64(rest), 0.005, seed);
            }
            const auto n = parse_u64(rest.substr(0, colon));
            std::string p_text(rest.substr(colon + 1));
            std::size_t used = 0;
            double p = 0.0;
            try {
                p = std::stod(p_text, &used);
            } catch (const std::exception &) {
                fail();
            }
            if (used != p_text.size()) {
                fail();
            }
            return depolarizing_shots(n, p, seed);
        }
        return fail();
    }
};

} // namespace qls
