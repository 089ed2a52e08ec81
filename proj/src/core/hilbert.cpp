#include "qctrl/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace qctrl {

// ---------------------------------------------------------------------------
// HilbertSpace

HilbertSpace::HilbertSpace(std::vector<Factor> factors) : factors_(std::move(factors)) {
    std::set<std::string> seen;
    total_dim_ = 1;
    for (const auto &f : factors_) {
        if (f.dim == 0) {
            throw DimensionError("factor '" + f.label + "' has dimension 0");
        }
        if (!seen.insert(f.label).second) {
            throw DimensionError("duplicate factor label '" + f.label + "'");
        }
        total_dim_ *= f.dim;
    }
}

HilbertSpace HilbertSpace::flat(std::size_t dim, std::string label) {
    return HilbertSpace({{std::move(label), dim}});
}

bool HilbertSpace::has(const std::string &label) const {
    return std::any_of(factors_.begin(), factors_.end(),
                       [&](const Factor &f) { return f.label == label; });
}

std::size_t HilbertSpace::position(const std::string &label) const {
    for (std::size_t i = 0; i < factors_.size(); ++i) {
        if (factors_[i].label == label) {
            return i;
        }
    }
    throw DimensionError("unknown factor label '" + label + "'");
}

std::size_t HilbertSpace::dim_of(const std::string &label) const {
    return factors_[position(label)].dim;
}

std::size_t HilbertSpace::index(std::span<const std::size_t> digits) const {
    if (digits.size() != factors_.size()) {
        throw DimensionError("digit count does not match factor count");
    }
    std::size_t idx = 0;
    for (std::size_t i = 0; i < factors_.size(); ++i) {
        if (digits[i] >= factors_[i].dim) {
            throw DimensionError("digit out of range for factor '" + factors_[i].label + "'");
        }
        idx = idx * factors_[i].dim + digits[i];
    }
    return idx;
}

std::vector<std::size_t> HilbertSpace::digits(std::size_t flat_index) const {
    if (flat_index >= total_dim_) {
        throw DimensionError("basis index out of range");
    }
    std::vector<std::size_t> out(factors_.size());
    for (std::size_t i = factors_.size(); i-- > 0;) {
        out[i] = flat_index % factors_[i].dim;
        flat_index /= factors_[i].dim;
    }
    return out;
}

HilbertSpace HilbertSpace::concat(const HilbertSpace &other) const {
    auto fs = factors_;
    fs.insert(fs.end(), other.factors_.begin(), other.factors_.end());
    return HilbertSpace(std::move(fs));
}

// ---------------------------------------------------------------------------
// Operator / StateVector / DensityMatrix

double max_abs_diff(const Matrix &a, const Matrix &b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError("max_abs_diff: shape mismatch");
    }
    if (a.size() == 0) {
        return 0.0;
    }
    return (a - b).cwiseAbs().maxCoeff();
}

bool is_unitary(const Matrix &m, double tol) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        return false;
    }
    const Matrix gram = m.adjoint() * m;
    return max_abs_diff(gram, Matrix::Identity(m.rows(), m.cols())) <= tol;
}

bool is_unitary(const Operator &op, double tol) { return is_unitary(op.matrix(), tol); }

Operator::Operator(Matrix m, bool claims_unitary) : m_(std::move(m)), unitary_(claims_unitary) {
    if (m_.rows() != m_.cols() || m_.rows() == 0) {
        throw DimensionError("operator matrix must be square and non-empty");
    }
    if (unitary_ && !is_unitary(m_, kDefaultTol)) {
        throw ValidationError("operator claims unitarity but U†U deviates from 𝟙");
    }
}

Operator Operator::identity(std::size_t dim) {
    const auto n = static_cast<Eigen::Index>(dim);
    return Operator(Matrix::Identity(n, n), true);
}

Operator Operator::adjoint() const { return Operator(m_.adjoint(), unitary_); }

Operator operator*(const Operator &a, const Operator &b) {
    if (a.dim() != b.dim()) {
        throw DimensionError("operator product: dimension mismatch");
    }
    Operator out;
    out.m_ = a.m_ * b.m_;
    out.unitary_ = a.unitary_ && b.unitary_;
    return out;
}

StateVector::StateVector(HilbertSpace space, Vector amps, double tol)
    : space_(std::move(space)), amps_(std::move(amps)) {
    if (static_cast<std::size_t>(amps_.size()) != space_.total_dim()) {
        throw DimensionError("amplitude count does not match space dimension");
    }
    if (std::abs(amps_.norm() - 1.0) > tol) {
        throw ValidationError("state vector is not normalized");
    }
}

StateVector StateVector::basis(const HilbertSpace &space, std::size_t index) {
    if (index >= space.total_dim()) {
        throw DimensionError("basis index out of range");
    }
    Vector v = Vector::Zero(static_cast<Eigen::Index>(space.total_dim()));
    v(static_cast<Eigen::Index>(index)) = 1.0;
    return StateVector(space, std::move(v));
}

StateVector StateVector::normalized(const HilbertSpace &space, Vector amps) {
    const double n = amps.norm();
    if (n == 0.0) {
        throw ValidationError("cannot normalize the zero vector");
    }
    return StateVector(space, amps / n);
}

DensityMatrix::DensityMatrix(HilbertSpace space, Matrix rho, double tol)
    : space_(std::move(space)), rho_(std::move(rho)) {
    const auto n = static_cast<Eigen::Index>(space_.total_dim());
    if (rho_.rows() != n || rho_.cols() != n) {
        throw DimensionError("density matrix shape does not match space dimension");
    }
    if (max_abs_diff(rho_, rho_.adjoint()) > tol) {
        throw ValidationError("density matrix is not Hermitian");
    }
    if (std::abs(rho_.trace().real() - 1.0) > tol) {
        throw ValidationError("density matrix trace is not 1");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -tol) {
        throw ValidationError("density matrix has a negative eigenvalue");
    }
}

DensityMatrix DensityMatrix::pure(const StateVector &psi) {
    return DensityMatrix(psi.space(), psi.amps() * psi.amps().adjoint());
}

double DensityMatrix::purity() const { return (rho_ * rho_).trace().real(); }

// ---------------------------------------------------------------------------
// Products and embeddings

namespace {

Matrix kron(const Matrix &a, const Matrix &b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

} // namespace

Operator tensor(const Operator &a, const Operator &b) {
    return Operator(kron(a.matrix(), b.matrix()), a.claims_unitary() && b.claims_unitary());
}

StateVector tensor(const StateVector &a, const StateVector &b) {
    const HilbertSpace space = a.space().concat(b.space());
    Vector v(a.amps().size() * b.amps().size());
    for (Eigen::Index i = 0; i < a.amps().size(); ++i) {
        v.segment(i * b.amps().size(), b.amps().size()) = a.amps()(i) * b.amps();
    }
    return StateVector(space, std::move(v));
}

Operator subsystem_embed(const Operator &u, const HilbertSpace &space, const std::string &slot) {
    const std::size_t pos = space.position(slot);
    if (space.factors()[pos].dim != u.dim()) {
        throw DimensionError("subsystem_embed: operator dim " + std::to_string(u.dim()) +
                             " does not match factor '" + slot + "'");
    }
    std::size_t before = 1;
    std::size_t after = 1;
    for (std::size_t i = 0; i < space.size(); ++i) {
        if (i < pos) {
            before *= space.factors()[i].dim;
        } else if (i > pos) {
            after *= space.factors()[i].dim;
        }
    }
    Operator out = tensor(Operator::identity(before), tensor(u, Operator::identity(after)));
    return out;
}

Operator subspace_embed(const Operator &u, const DirectSumBlock &block) {
    const auto &idx = block.block_indices;
    if (idx.size() != u.dim()) {
        throw DimensionError("subspace_embed: block size does not match operator dim");
    }
    for (std::size_t k = 0; k < idx.size(); ++k) {
        if (idx[k] >= block.total_dim) {
            throw DimensionError("subspace_embed: index out of range");
        }
        if (k > 0 && idx[k] == idx[k - 1]) {
            throw DimensionError("subspace_embed: duplicate index");
        }
        if (k > 0 && idx[k] < idx[k - 1]) {
            throw DimensionError("subspace_embed: block indices must be sorted");
        }
    }
    const auto n = static_cast<Eigen::Index>(block.total_dim);
    Matrix m = Matrix::Identity(n, n);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        m(static_cast<Eigen::Index>(idx[r]), static_cast<Eigen::Index>(idx[r])) = 0.0;
    }
    for (std::size_t r = 0; r < idx.size(); ++r) {
        for (std::size_t c = 0; c < idx.size(); ++c) {
            m(static_cast<Eigen::Index>(idx[r]), static_cast<Eigen::Index>(idx[c])) = u(r, c);
        }
    }
    return Operator(std::move(m), u.claims_unitary());
}

Operator embed(const Operator &u, const HilbertSpace &space, const SubspaceEmbedding &emb) {
    if (const auto *s = std::get_if<Subsystem>(&emb)) {
        return subsystem_embed(u, space, s->slot);
    }
    const auto &block = std::get<DirectSumBlock>(emb);
    if (block.total_dim != space.total_dim()) {
        throw DimensionError("embed: block total_dim does not match space");
    }
    return subspace_embed(u, block);
}

// ---------------------------------------------------------------------------
// Evolution and figures of merit

StateVector apply(const Operator &op, const StateVector &psi) {
    if (op.dim() != psi.space().total_dim()) {
        throw DimensionError("apply: operator dim does not match state space");
    }
    if (!op.claims_unitary()) {
        throw ValidationError("apply: operator is not marked unitary");
    }
    return StateVector(psi.space(), op.matrix() * psi.amps());
}

double fidelity_pure(const StateVector &a, const StateVector &b) {
    if (!(a.space() == b.space())) {
        throw DimensionError("fidelity_pure: space mismatch");
    }
    return std::clamp(std::norm(a.amps().dot(b.amps())), 0.0, 1.0);
}

double fidelity_mixed(const DensityMatrix &rho, const StateVector &b) {
    if (!(rho.space() == b.space())) {
        throw DimensionError("fidelity_mixed: space mismatch");
    }
    const Complex f = b.amps().dot(rho.matrix() * b.amps());
    return std::clamp(f.real(), 0.0, 1.0);
}

DensityMatrix partial_trace(const DensityMatrix &rho, const std::set<std::string> &keep) {
    const HilbertSpace &space = rho.space();
    if (keep.empty()) {
        throw DimensionError("partial_trace: keep set must be non-empty");
    }
    std::vector<HilbertSpace::Factor> kept;
    std::vector<bool> is_kept(space.size(), false);
    for (const auto &label : keep) {
        is_kept[space.position(label)] = true;
    }
    for (std::size_t i = 0; i < space.size(); ++i) {
        if (is_kept[i]) {
            kept.push_back(space.factors()[i]);
        }
    }
    HilbertSpace reduced(kept);

    // Split every full index into (kept, traced) sub-indices once.
    const std::size_t n = space.total_dim();
    std::vector<std::size_t> kept_of(n);
    std::vector<std::size_t> traced_of(n);
    for (std::size_t idx = 0; idx < n; ++idx) {
        const auto dg = space.digits(idx);
        std::size_t k = 0;
        std::size_t t = 0;
        for (std::size_t f = 0; f < space.size(); ++f) {
            if (is_kept[f]) {
                k = k * space.factors()[f].dim + dg[f];
            } else {
                t = t * space.factors()[f].dim + dg[f];
            }
        }
        kept_of[idx] = k;
        traced_of[idx] = t;
    }
    const auto m = static_cast<Eigen::Index>(reduced.total_dim());
    Matrix out = Matrix::Zero(m, m);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            if (traced_of[r] == traced_of[c]) {
                out(static_cast<Eigen::Index>(kept_of[r]), static_cast<Eigen::Index>(kept_of[c])) +=
                    rho.matrix()(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
            }
        }
    }
    return DensityMatrix(std::move(reduced), std::move(out));
}

std::vector<double> outcome_probabilities(const StateVector &psi,
                                          std::span<const Operator> projectors, double tol) {
    if (projectors.empty()) {
        throw ValidationError("measure: empty projector set");
    }
    const auto n = static_cast<Eigen::Index>(psi.space().total_dim());
    Matrix sum = Matrix::Zero(n, n);
    for (const auto &p : projectors) {
        if (p.dim() != psi.space().total_dim()) {
            throw DimensionError("measure: projector dim does not match state");
        }
        const Matrix &m = p.matrix();
        if (max_abs_diff(m, m.adjoint()) > tol || max_abs_diff(m * m, m) > tol) {
            throw ValidationError("measure: projector is not Hermitian idempotent");
        }
        sum += m;
    }
    if (max_abs_diff(sum, Matrix::Identity(n, n)) > tol) {
        throw ValidationError("measure: incomplete projector set");
    }
    std::vector<double> probs;
    probs.reserve(projectors.size());
    for (const auto &p : projectors) {
        probs.push_back(std::max(0.0, psi.amps().dot(p.matrix() * psi.amps()).real()));
    }
    return probs;
}

MeasurementResult measure_projective(const StateVector &psi,
                                     std::span<const Operator> projectors, Rng &rng) {
    const auto probs = outcome_probabilities(psi, projectors);
    const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    const double u = rng.uniform() * total;
    std::size_t outcome = probs.size();
    double acc = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        if (probs[k] <= 0.0) {
            continue;
        }
        outcome = k;
        acc += probs[k];
        if (u < acc) {
            break;
        }
    }
    const Vector post = projectors[outcome].matrix() * psi.amps();
    return {outcome, StateVector::normalized(psi.space(), post), probs[outcome]};
}

Operator haar_unitary(std::size_t dim, Rng &rng) {
    if (dim == 0) {
        throw DimensionError("haar_unitary: dim must be positive");
    }
    const auto n = static_cast<Eigen::Index>(dim);
    Matrix z(n, n);
    // Column-major fill order is part of the reproducibility contract.
    for (Eigen::Index c = 0; c < n; ++c) {
        for (Eigen::Index r = 0; r < n; ++r) {
            const double re = rng.normal();
            const double im = rng.normal();
            z(r, c) = Complex(re, im) / std::sqrt(2.0);
        }
    }
    Eigen::HouseholderQR<Matrix> qr(z);
    Matrix q = qr.householderQ() * Matrix::Identity(n, n);
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index k = 0; k < n; ++k) {
        const Complex d = r(k, k);
        const double mag = std::abs(d);
        q.col(k) *= (mag > 0.0) ? d / mag : Complex(1.0);
    }
    return Operator(std::move(q), true);
}

} // namespace qctrl
