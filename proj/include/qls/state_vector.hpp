#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qls/error.hpp"

namespace qls {

using Complex = std::complex<double>;

/// Maximum register width the simulator accepts (2^24 amplitudes = 256 MiB).
inline constexpr std::size_t kMaxSimulatedQubits = 24;

/// Pure state of an n-qubit register. Qubit 0 is the least-significant bit of
/// the amplitude index.
class StateVector {
  public:
    StateVector() = default;

    /// |0...0> on `n_qubits` qubits.
    explicit StateVector(std::size_t n_qubits) : StateVector(n_qubits, 0) {}

    /// Computational basis state |index>.
    StateVector(std::size_t n_qubits, std::uint64_t index) : n_qubits_(n_qubits) {
        check_width(n_qubits);
        amplitudes_.assign(std::size_t{1} << n_qubits, Complex{0.0, 0.0});
        if (index >= amplitudes_.size()) {
            throw InvalidArgument("basis index " + std::to_string(index) + " out of range");
        }
        amplitudes_[index] = 1.0;
    }

    /// Takes ownership of raw amplitudes; length must be a power of two.
    static StateVector from_amplitudes(std::vector<Complex> amplitudes) {
        std::size_t n = 0;
        while ((std::size_t{1} << n) < amplitudes.size()) {
            ++n;
        }
        if (amplitudes.empty() || (std::size_t{1} << n) != amplitudes.size()) {
            throw InvalidArgument("amplitude count must be a nonzero power of two");
        }
        check_width(n);
        StateVector s;
        s.n_qubits_ = n;
        s.amplitudes_ = std::move(amplitudes);
        return s;
    }

    [[nodiscard]] std::size_t n_qubits() const noexcept { return n_qubits_; }
    [[nodiscard]] std::size_t size() const noexcept { return amplitudes_.size(); }

    [[nodiscard]] std::span<const Complex> amplitudes() const noexcept { return amplitudes_; }
    [[nodiscard]] std::span<Complex> amplitudes() noexcept { return amplitudes_; }

    Complex &operator[](std::size_t i) noexcept { return amplitudes_[i]; }
    const Complex &operator[](std::size_t i) const noexcept { return amplitudes_[i]; }

    [[nodiscard]] double norm_squared() const noexcept {
        double acc = 0.0;
        for (const auto &a : amplitudes_) {
            acc += std::norm(a);
        }
        return acc;
    }

    /// Rescales to unit 2-norm. Throws on the zero vector.
    void normalize() {
        const double n = std::sqrt(norm_squared());
        if (!(n > 0.0)) {
            throw InvalidArgument("cannot normalize a zero state");
        }
        for (auto &a : amplitudes_) {
            a /= n;
        }
    }

  private:
    static void check_width(std::size_t n) {
        if (n == 0 || n > kMaxSimulatedQubits) {
            throw InvalidArgument("register width " + std::to_string(n) + " outside [1, " +
                                  std::to_string(kMaxSimulatedQubits) + "]");
        }
    }

    std::size_t n_qubits_ = 0;
    std::vector<Complex> amplitudes_;
};

/// <a|b> by direct summation.
inline Complex inner_product_exact(const StateVector &a, const StateVector &b) {
    if (a.n_qubits() != b.n_qubits()) {
        throw InvalidArgument("inner product of states with different widths");
    }
    Complex acc{0.0, 0.0};
    const auto lhs = a.amplitudes();
    const auto rhs = b.amplitudes();
    for (std::size_t i = 0; i < lhs.size(); ++i) {
        acc += std::conj(lhs[i]) * rhs[i];
    }
    return acc;
}

} // namespace qls
