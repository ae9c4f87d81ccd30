// Copyright 2026 The ionlink Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Dense complex linear algebra for registers of at most four qubits.
//
// Register layout (the only place it is defined):
//   * qubit 0 is the most significant bit of a basis index, so
//     tensor(a, b) is the Kronecker product kron(a, b);
//   * level 0 of an ion qubit is |down>, level 1 is |up>;
//   * level 0 of a photon qubit is |H>, level 1 is |V>;
//   * the full entanglement-swap register is (ion A, photon A, ion B, photon B);
//   * a two-ion index is 2 * ion_a + ion_b, i.e. populations are ordered
//     (dd, du, ud, uu).

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ionlink/random.hpp"

namespace ionlink {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr std::size_t kMaxDim = 16;

namespace reg {
inline constexpr int ion_a = 0;
inline constexpr int photon_a = 1;
inline constexpr int ion_b = 2;
inline constexpr int photon_b = 3;
inline constexpr int down = 0;
inline constexpr int up = 1;
inline constexpr int h = 0;
inline constexpr int v = 1;
}  // namespace reg

namespace detail {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline int log2_dim(std::size_t dim) {
    int q = 0;
    while ((std::size_t{1} << q) < dim) ++q;
    return q;
}

inline void check_dim(std::size_t dim) {
    if (!is_power_of_two(dim)) throw std::invalid_argument("dimension must be a power of two");
    if (dim > kMaxDim)
        throw std::length_error("register dimension " + std::to_string(dim) +
                                " exceeds the 16-dimensional cap");
}

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace detail

/// Normalized state vector.
class PureState {
public:
    explicit PureState(Vector amplitudes) : amps_(std::move(amplitudes)) {
        detail::check_dim(static_cast<std::size_t>(amps_.size()));
        if (std::abs(amps_.norm() - 1.0) > 1e-12)
            throw std::invalid_argument("pure state is not unit norm");
    }

    /// Normalizes before validating; rejects the zero vector.
    static PureState normalized(Vector amplitudes) {
        const double n = amplitudes.norm();
        if (n == 0.0) throw std::invalid_argument("cannot normalize the zero vector");
        return PureState(amplitudes / n);
    }

    static PureState basis(std::size_t dim, std::size_t index) {
        Vector v = Vector::Zero(static_cast<Eigen::Index>(dim));
        v(static_cast<Eigen::Index>(index)) = 1.0;
        return PureState(std::move(v));
    }

    std::size_t dim() const { return static_cast<std::size_t>(amps_.size()); }
    const Vector& amplitudes() const { return amps_; }

private:
    Vector amps_;
};

/// Trace-one, Hermitian, positive semidefinite matrix on a qubit register.
class DensityMatrix {
public:
    explicit DensityMatrix(Matrix rho) : rho_(std::move(rho)) {
        validate(1e-12, 1e-12, 1e-10);
    }

    static DensityMatrix from_pure(const PureState& psi) {
        return DensityMatrix(trusted_tag{}, psi.amplitudes() * psi.amplitudes().adjoint());
    }

    static DensityMatrix maximally_mixed(std::size_t dim) {
        detail::check_dim(dim);
        const auto d = static_cast<Eigen::Index>(dim);
        return DensityMatrix(trusted_tag{}, Matrix::Identity(d, d) / static_cast<double>(dim));
    }

    static DensityMatrix basis(std::size_t dim, std::size_t index) {
        return from_pure(PureState::basis(dim, index));
    }

    /// Result of an internal computation that is a valid state up to rounding.
    /// Re-Hermitizes and renormalizes; still rejects gross violations.
    static DensityMatrix from_computation(const Matrix& rho) {
        return DensityMatrix(trusted_tag{}, rho);
    }

    std::size_t dim() const { return static_cast<std::size_t>(rho_.rows()); }
    int num_qubits() const { return detail::log2_dim(dim()); }
    const Matrix& matrix() const { return rho_; }
    Complex operator()(std::size_t i, std::size_t j) const {
        return rho_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }

    std::vector<double> populations() const {
        std::vector<double> p(dim());
        for (std::size_t i = 0; i < dim(); ++i) p[i] = std::max(0.0, (*this)(i, i).real());
        return p;
    }

    double purity() const { return (rho_ * rho_).trace().real(); }

private:
    struct trusted_tag {};

    DensityMatrix(trusted_tag, const Matrix& rho) : rho_(0.5 * (rho + rho.adjoint())) {
        detail::check_dim(dim());
        if (rho_.rows() != rho_.cols()) throw std::invalid_argument("density matrix must be square");
        const double tr = rho_.trace().real();
        if (!(tr > 0.0)) throw std::invalid_argument("density matrix has non-positive trace");
        rho_ /= tr;
        validate(1e-12, 1e-12, 1e-10);
    }

    void validate(double herm_tol, double trace_tol, double psd_tol) const {
        if (rho_.rows() != rho_.cols()) throw std::invalid_argument("density matrix must be square");
        detail::check_dim(dim());
        if (detail::max_abs(rho_ - rho_.adjoint()) > herm_tol)
            throw std::invalid_argument("density matrix is not Hermitian");
        if (std::abs(rho_.trace() - Complex(1.0, 0.0)) > trace_tol)
            throw std::invalid_argument("density matrix trace differs from one");
        Eigen::SelfAdjointEigenSolver<Matrix> es(rho_, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -psd_tol)
            throw std::invalid_argument("density matrix has a negative eigenvalue");
    }

    Matrix rho_;
};

/// Trace-preserving completely positive map in Kraus form.
class KrausChannel {
public:
    explicit KrausChannel(std::vector<Matrix> ops) : ops_(std::move(ops)) {
        if (ops_.empty()) throw std::invalid_argument("channel needs at least one Kraus operator");
        const auto d = ops_.front().rows();
        Matrix sum = Matrix::Zero(d, d);
        for (const auto& k : ops_) {
            if (k.rows() != d || k.cols() != d)
                throw std::invalid_argument("Kraus operators must share one square dimension");
            sum += k.adjoint() * k;
        }
        detail::check_dim(static_cast<std::size_t>(d));
        if (detail::max_abs(sum - Matrix::Identity(d, d)) > 1e-10)
            throw std::invalid_argument("Kraus operators are not trace preserving");
    }

    static KrausChannel identity(std::size_t dim) {
        const auto d = static_cast<Eigen::Index>(dim);
        return KrausChannel({Matrix::Identity(d, d)});
    }

    static KrausChannel unitary(const Matrix& u) { return KrausChannel({u}); }

    std::size_t dim() const { return static_cast<std::size_t>(ops_.front().rows()); }
    const std::vector<Matrix>& operators() const { return ops_; }

private:
    std::vector<Matrix> ops_;
};

// --- operators ------------------------------------------------------------

inline Matrix pauli_x() {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

inline Matrix pauli_y() {
    Matrix m(2, 2);
    m << 0, Complex(0, -1), Complex(0, 1), 0;
    return m;
}

inline Matrix pauli_z() {
    Matrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

/// Lifts a single-qubit operator onto `qubit` of an n-qubit register.
inline Matrix embed(const Matrix& op, int qubit, int num_qubits) {
    if (qubit < 0 || qubit >= num_qubits) throw std::out_of_range("qubit index out of range");
    Matrix out = Matrix::Identity(1, 1);
    for (int q = 0; q < num_qubits; ++q) out = kron(out, q == qubit ? op : Matrix::Identity(2, 2));
    return out;
}

/// Projector onto `level` of `qubit`.
inline Matrix level_projector(int qubit, int level, int num_qubits) {
    Matrix p = Matrix::Zero(2, 2);
    p(level, level) = 1.0;
    return embed(p, qubit, num_qubits);
}

// --- channels -------------------------------------------------------------

/// rho -> (1 - p) rho + p I / d on the whole register.
inline KrausChannel depolarizing(double p, int num_qubits) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("depolarizing strength outside [0,1]");
    const std::size_t d = std::size_t{1} << num_qubits;
    detail::check_dim(d);
    const double d2 = static_cast<double>(d * d);
    const Matrix paulis[4] = {Matrix::Identity(2, 2), pauli_x(), pauli_y(), pauli_z()};
    std::vector<Matrix> ops;
    ops.reserve(d * d);
    for (std::size_t code = 0; code < d * d; ++code) {
        Matrix k = Matrix::Identity(1, 1);
        std::size_t c = code;
        for (int q = 0; q < num_qubits; ++q) {
            k = kron(k, paulis[c % 4]);
            c /= 4;
        }
        const double w = code == 0 ? 1.0 - p + p / d2 : p / d2;
        if (w > 0.0) ops.push_back(std::sqrt(w) * k);
    }
    return KrausChannel(std::move(ops));
}

/// Phase damping of one qubit; off-diagonal elements scale by `coherence`.
inline KrausChannel dephasing(double coherence, int qubit = 0, int num_qubits = 1) {
    if (coherence < 0.0 || coherence > 1.0) throw std::invalid_argument("coherence factor outside [0,1]");
    return KrausChannel({std::sqrt(0.5 * (1.0 + coherence)) * embed(Matrix::Identity(2, 2), qubit, num_qubits),
                         std::sqrt(0.5 * (1.0 - coherence)) * embed(pauli_z(), qubit, num_qubits)});
}

// --- operations -----------------------------------------------------------

inline DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
    if (a.dim() * b.dim() > kMaxDim)
        throw std::length_error("tensor product exceeds the 16-dimensional register cap");
    return DensityMatrix::from_computation(kron(a.matrix(), b.matrix()));
}

/// Reduced state on the qubits listed in `keep` (kept in ascending order).
inline DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const int> keep) {
    const int n = rho.num_qubits();
    if (keep.empty()) throw std::invalid_argument("partial trace must keep at least one qubit");
    std::vector<int> kept(keep.begin(), keep.end());
    std::sort(kept.begin(), kept.end());
    if (std::adjacent_find(kept.begin(), kept.end()) != kept.end())
        throw std::invalid_argument("duplicate subsystem index");
    for (int q : kept)
        if (q < 0 || q >= n) throw std::out_of_range("subsystem index out of range");
    std::vector<int> traced;
    for (int q = 0; q < n; ++q)
        if (!std::binary_search(kept.begin(), kept.end(), q)) traced.push_back(q);

    const int nk = static_cast<int>(kept.size());
    const int nt = static_cast<int>(traced.size());
    // Places the bits of `bits` (MSB first) at the register positions `where`.
    auto deposit = [n](std::size_t bits, const std::vector<int>& where) {
        std::size_t idx = 0;
        const int m = static_cast<int>(where.size());
        for (int k = 0; k < m; ++k)
            if ((bits >> (m - 1 - k)) & 1U) idx |= std::size_t{1} << (n - 1 - where[k]);
        return idx;
    };

    const std::size_t dk = std::size_t{1} << nk;
    const std::size_t dt = std::size_t{1} << nt;
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(dk), static_cast<Eigen::Index>(dk));
    for (std::size_t t = 0; t < dt; ++t) {
        const std::size_t toff = deposit(t, traced);
        for (std::size_t i = 0; i < dk; ++i) {
            const std::size_t ri = deposit(i, kept) | toff;
            for (std::size_t j = 0; j < dk; ++j) {
                const std::size_t cj = deposit(j, kept) | toff;
                out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += rho(ri, cj);
            }
        }
    }
    return DensityMatrix::from_computation(out);
}

inline DensityMatrix partial_trace(const DensityMatrix& rho, std::initializer_list<int> keep) {
    return partial_trace(rho, std::span<const int>(keep.begin(), keep.size()));
}

inline DensityMatrix apply_channel(const DensityMatrix& rho, const KrausChannel& ch) {
    if (ch.dim() != rho.dim()) throw std::invalid_argument("channel dimension does not match state");
    Matrix out = Matrix::Zero(rho.matrix().rows(), rho.matrix().cols());
    for (const auto& k : ch.operators()) out += k * rho.matrix() * k.adjoint();
    return DensityMatrix::from_computation(out);
}

inline DensityMatrix apply_unitary(const DensityMatrix& rho, const Matrix& u) {
    if (static_cast<std::size_t>(u.rows()) != rho.dim())
        throw std::invalid_argument("unitary dimension does not match state");
    return DensityMatrix::from_computation(u * rho.matrix() * u.adjoint());
}

inline double fidelity_pure(const DensityMatrix& rho, const PureState& psi) {
    if (rho.dim() != psi.dim()) throw std::invalid_argument("state dimensions differ");
    const double f = (psi.amplitudes().adjoint() * rho.matrix() * psi.amplitudes())(0, 0).real();
    return std::clamp(f, 0.0, 1.0);
}

/// Born probabilities of a complete projector set.
inline std::vector<double> born_probabilities(const DensityMatrix& rho, std::span<const Matrix> projectors) {
    if (projectors.empty()) throw std::invalid_argument("empty projector set");
    const auto d = static_cast<Eigen::Index>(rho.dim());
    Matrix sum = Matrix::Zero(d, d);
    for (const auto& p : projectors) {
        if (p.rows() != d || p.cols() != d) throw std::invalid_argument("projector dimension mismatch");
        sum += p;
    }
    if (detail::max_abs(sum - Matrix::Identity(d, d)) > 1e-10)
        throw std::invalid_argument("projectors do not sum to identity");
    std::vector<double> probs;
    probs.reserve(projectors.size());
    for (const auto& p : projectors)
        probs.push_back(std::max(0.0, (p * rho.matrix()).trace().real()));
    return probs;
}

struct Measurement {
    std::size_t outcome;
    DensityMatrix post_state;
};

inline Measurement measure_projective(const DensityMatrix& rho, std::span<const Matrix> projectors,
                                      RandomStream& rng) {
    const auto probs = born_probabilities(rho, projectors);
    double total = 0.0;
    for (double p : probs) total += p;
    const double u = rng.uniform() * total;
    std::size_t k = 0;
    double acc = probs[0];
    while (u >= acc && k + 1 < probs.size()) acc += probs[++k];
    while (probs[k] == 0.0 && k > 0) --k;  // guard against landing on a zero-probability tail
    const Matrix& p = projectors[k];
    return {k, DensityMatrix::from_computation(p * rho.matrix() * p)};
}

}  // namespace ionlink
