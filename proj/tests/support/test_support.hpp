#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "qls/circuit.hpp"
#include "qls/oracle.hpp"
#include "qls/random.hpp"

namespace qls::test {

inline std::vector<double> uniform_params(std::size_t n, Rng &rng, double lo = -3.14159, double hi = 3.14159) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> p(n);
    for (auto &v : p) {
        v = u(rng);
    }
    return p;
}

/// Multi-controlled Ry tree preparing a real amplitude vector (any signs).
/// Zero-controls are realised by X conjugation.
inline Circuit prepare_real_state(const std::vector<double> &amps) {
    std::size_t n = 0;
    while ((std::size_t{1} << n) < amps.size()) {
        ++n;
    }
    Circuit c(n);
    for (std::size_t k = n; k-- > 0;) {
        const std::size_t n_high = n - 1 - k;
        for (std::size_t prefix = 0; prefix < (std::size_t{1} << n_high); ++prefix) {
            // amplitudes whose bits above k equal prefix, split by bit k
            double w0 = 0.0;
            double w1 = 0.0;
            for (std::size_t i = 0; i < amps.size(); ++i) {
                if ((i >> (k + 1)) != prefix) {
                    continue;
                }
                ((i >> k) & 1U ? w1 : w0) += amps[i] * amps[i];
            }
            double theta;
            if (k == 0) {
                const std::size_t base = prefix << 1;
                theta = 2.0 * std::atan2(amps[base + 1], amps[base]);
            } else {
                theta = 2.0 * std::atan2(std::sqrt(w1), std::sqrt(w0));
            }
            if (w0 + w1 == 0.0) {
                continue;
            }
            std::vector<std::size_t> flips;
            Gate g = gates::ry(k, theta);
            for (std::size_t h = 0; h < n_high; ++h) {
                const std::size_t q = k + 1 + h;
                g.controls.push_back(q);
                if (((prefix >> h) & 1U) == 0) {
                    flips.push_back(q);
                }
            }
            for (auto q : flips) {
                c.add(gates::x(q));
            }
            c.add(g);
            for (auto q : flips) {
                c.add(gates::x(q));
            }
        }
    }
    return c;
}

inline Circuit prepare_real_state(const dense::Vector &v) {
    std::vector<double> a(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        a[static_cast<std::size_t>(i)] = v(i).real();
    }
    return prepare_real_state(a);
}

} // namespace qls::test
