#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include <Eigen/Dense>

#include "qls/circuit.hpp"
#include "qls/error.hpp"
#include "qls/problem.hpp"
#include "qls/state_vector.hpp"

// Dense ground truth. Everything here is built from explicit matrices and
// shares no code with the Hadamard-test estimators, so it can cross-check them.
namespace qls::dense {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr std::size_t kDefaultQubitCap = 12;

inline Matrix kron(const Matrix &a, const Matrix &b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

inline Matrix label_matrix(Label l) {
    const double r = 1.0 / std::sqrt(2.0);
    Matrix m(2, 2);
    switch (l) {
    case Label::I: m << 1, 0, 0, 1; break;
    case Label::H: m << r, r, r, -r; break;
    case Label::X: m << 0, 1, 1, 0; break;
    case Label::Z: m << 1, 0, 0, -1; break;
    }
    return m;
}

/// Kronecker product with qubit 0 as the rightmost (least significant) factor.
inline Matrix tensor_string(const std::vector<Matrix> &per_qubit) {
    Matrix out = Matrix::Identity(1, 1);
    for (auto it = per_qubit.rbegin(); it != per_qubit.rend(); ++it) {
        out = kron(out, *it);
    }
    return out;
}

inline Matrix term_matrix(const UnitaryTerm &t) {
    std::vector<Matrix> f;
    f.reserve(t.factors.size());
    for (auto l : t.factors) {
        f.push_back(label_matrix(l));
    }
    return tensor_string(f);
}

inline Matrix gate_unitary(const Gate &g, std::size_t n) {
    validate(g, n);
    const Matrix2 m2 = gate_matrix(g);
    Matrix m(2, 2);
    m << m2[0], m2[1], m2[2], m2[3];
    std::vector<Matrix> target(n, Matrix::Identity(2, 2));
    target[g.target] = m;
    const Matrix u = tensor_string(target);
    if (g.controls.empty()) {
        return u;
    }
    std::vector<Matrix> proj(n, Matrix::Identity(2, 2));
    Matrix one = Matrix::Zero(2, 2);
    one(1, 1) = 1.0;
    for (auto c : g.controls) {
        proj[c] = one;
    }
    const Matrix p = tensor_string(proj);
    const Matrix id = Matrix::Identity(u.rows(), u.cols());
    return id - p + p * u;
}

inline Matrix circuit_unitary(const Circuit &c) {
    const auto dim = static_cast<Eigen::Index>(std::size_t{1} << c.n_qubits);
    Matrix u = Matrix::Identity(dim, dim);
    for (const auto &g : c.gates) {
        u = gate_unitary(g, c.n_qubits) * u;
    }
    return u;
}

inline Vector to_vector(const StateVector &s) {
    Vector v(static_cast<Eigen::Index>(s.size()));
    for (std::size_t i = 0; i < s.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = s[i];
    }
    return v;
}

inline StateVector to_state(const Vector &v) {
    std::vector<Complex> a(v.data(), v.data() + v.size());
    return StateVector::from_amplitudes(std::move(a));
}

/// Explicit A and |b>.
struct DenseOracle {
    Matrix matrix;
    Vector b_vec;
    std::size_t n_qubits = 0;
};

inline Matrix assemble_matrix(const LinearProblem &problem, std::size_t max_qubits = kDefaultQubitCap) {
    problem.validate();
    if (problem.n_qubits > max_qubits) {
        throw InvalidArgument("dense oracle capped at " + std::to_string(max_qubits) + " qubits");
    }
    const auto dim = static_cast<Eigen::Index>(std::size_t{1} << problem.n_qubits);
    Matrix a = Matrix::Zero(dim, dim);
    for (const auto &t : problem.terms) {
        a += t.coefficient * term_matrix(t);
    }
    return a;
}

inline DenseOracle assemble_dense(const LinearProblem &problem, std::size_t max_qubits = kDefaultQubitCap) {
    DenseOracle o;
    o.matrix = assemble_matrix(problem, max_qubits);
    o.b_vec = to_vector(prepare(problem.b_prep));
    o.n_qubits = problem.n_qubits;
    return o;
}

/// normalize(A^{-1} b). Refuses matrices whose 2-norm condition number
/// exceeds 1e12.
inline StateVector exact_solution(const DenseOracle &oracle) {
    Eigen::BDCSVD<Matrix> svd(oracle.matrix, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto &sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    const double smin = sv.size() > 0 ? sv(sv.size() - 1) : 0.0;
    if (!(smin > 0.0) || !(smax / smin <= 1e12)) {
        throw SingularMatrix("matrix is singular or numerically singular (condition " +
                             std::to_string(smin > 0.0 ? smax / smin : INFINITY) + ")");
    }
    Vector x = svd.solve(oracle.b_vec);
    x.normalize();
    return to_state(x);
}

/// [[0, A], [A^dag, 0]]
inline Matrix embed_hermitian(const Matrix &a, std::size_t max_dim = std::size_t{1} << kDefaultQubitCap) {
    if (a.rows() != a.cols()) {
        throw InvalidArgument("hermitian embedding needs a square matrix");
    }
    if (static_cast<std::size_t>(a.rows()) > max_dim) {
        throw InvalidArgument("matrix exceeds the dense size cap");
    }
    const auto n = a.rows();
    Matrix out = Matrix::Zero(2 * n, 2 * n);
    out.topRightCorner(n, n) = a;
    out.bottomLeftCorner(n, n) = a.adjoint();
    return out;
}

/// C_G = <x|A^dag (1 - |b><b|) A|x> / <x|A^dag A|x>
inline double cost_global(const DenseOracle &o, const Vector &x) {
    const Vector psi = o.matrix * x;
    const double norm2 = psi.squaredNorm();
    const Complex overlap = o.b_vec.dot(psi);
    return (norm2 - std::norm(overlap)) / norm2;
}

/// Local Hamiltonian A^dag U (1 - (1/n) sum_j |0_j><0_j| (x) 1) U^dag A.
inline Matrix local_hamiltonian(const LinearProblem &problem, const DenseOracle &o) {
    const std::size_t n = problem.n_qubits;
    const Matrix u = circuit_unitary(problem.b_prep);
    const auto dim = o.matrix.rows();
    Matrix proj_sum = Matrix::Zero(dim, dim);
    Matrix zero_proj = Matrix::Zero(2, 2);
    zero_proj(0, 0) = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<Matrix> f(n, Matrix::Identity(2, 2));
        f[j] = zero_proj;
        proj_sum += tensor_string(f);
    }
    const Matrix inner = Matrix::Identity(dim, dim) - proj_sum / static_cast<double>(n);
    return o.matrix.adjoint() * u * inner * u.adjoint() * o.matrix;
}

inline double cost_local(const Matrix &h_local, const DenseOracle &o, const Vector &x) {
    const Vector psi = o.matrix * x;
    return x.dot(h_local * x).real() / psi.squaredNorm();
}

/// |<a|b>|^2 for normalized states.
inline double fidelity(const StateVector &a, const StateVector &b) {
    return std::norm(inner_product_exact(a, b));
}

/// ||A x - b||^2
inline double residual_squared(const DenseOracle &o, const Vector &x) {
    return (o.matrix * x - o.b_vec).squaredNorm();
}

} // namespace qls::dense
