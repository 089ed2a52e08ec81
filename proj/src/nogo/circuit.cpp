#include "qctrl/nogo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace qctrl::nogo {

std::size_t slot_count(Kind kind) { return kind == Kind::CtrlU ? 2 : 3; }

std::size_t ParamCircuit::param_count(Kind kind, CircuitDims dims) {
    const std::size_t n = dims.total_dim();
    return slot_count(kind) * n * n;
}

Matrix hermitian_from_params(std::span<const double> params, std::size_t n) {
    if (params.size() != n * n) {
        throw DimensionError("hermitian_from_params: expected n² parameters");
    }
    const auto dim = static_cast<Eigen::Index>(n);
    Matrix h = Matrix::Zero(dim, dim);
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < dim; ++i) {
        h(i, i) = params[k++];
    }
    for (Eigen::Index i = 0; i < dim; ++i) {
        for (Eigen::Index j = i + 1; j < dim; ++j) {
            const Complex z(params[k], params[k + 1]);
            k += 2;
            h(i, j) = z;
            h(j, i) = std::conj(z);
        }
    }
    return h;
}

Matrix unitary_from_params(std::span<const double> params, std::size_t n) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_from_params(params, n));
    const Eigen::VectorXd &lambda = es.eigenvalues();
    Vector phases(lambda.size());
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        phases(i) = std::polar(1.0, lambda(i));
    }
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

ParamCircuit::ParamCircuit(Kind kind, CircuitDims dims, std::vector<double> params)
    : kind_(kind), dims_(dims), params_(std::move(params)) {
    if (dims_.ancilla == 0 || dims_.system == 0) {
        throw DimensionError("circuit dimensions must be positive");
    }
    if (params_.size() != param_count(kind_, dims_)) {
        throw DimensionError("ParamCircuit: expected " + std::to_string(param_count(kind_, dims_)) +
                             " parameters, got " + std::to_string(params_.size()));
    }
    const std::size_t n = dims_.total_dim();
    const std::span<const double> all(params_);
    for (std::size_t s = 0; s < slot_count(kind_); ++s) {
        slots_.push_back(unitary_from_params(all.subspan(s * n * n, n * n), n));
    }
}

namespace {

void check_oracle(Kind kind, CircuitDims dims, const OracleSample &oracle) {
    const auto check = [&](const Operator &u) {
        if (u.dim() != dims.system) {
            throw DimensionError("oracle dimension does not match the system dimension");
        }
    };
    check(oracle.first);
    if (kind == Kind::Switch) {
        if (!oracle.second) {
            throw DimensionError("switch oracle needs a (U_f, U_g) pair");
        }
        check(*oracle.second);
    }
}

/// Multiplies each d-row block of m (block index = a·2 + c) by the oracle
/// chosen for that control value.
void apply_oracle(Matrix &m, std::size_t d, const Matrix *on_c0, const Matrix *on_c1) {
    const auto dd = static_cast<Eigen::Index>(d);
    const Eigen::Index blocks = m.rows() / dd;
    for (Eigen::Index b = 0; b < blocks; ++b) {
        const Matrix *u = (b % 2 == 0) ? on_c0 : on_c1;
        if (u != nullptr) {
            m.middleRows(b * dd, dd) = (*u) * m.middleRows(b * dd, dd);
        }
    }
}

std::vector<Matrix> kraus_from_slots(Kind kind, CircuitDims dims, const std::vector<Matrix> &slots,
                                     const OracleSample &oracle, Insertion insertion) {
    const std::size_t d = dims.system;
    const auto dd = static_cast<Eigen::Index>(dims.channel_dim());
    Matrix m = slots[0].leftCols(dd);
    const Matrix &u1 = oracle.first.matrix();
    if (kind == Kind::CtrlU) {
        if (insertion == Insertion::Subsystem) {
            apply_oracle(m, d, &u1, &u1);
        } else {
            apply_oracle(m, d, nullptr, &u1);
        }
        m = slots[1] * m;
    } else {
        const Matrix &u2 = oracle.second->matrix();
        if (insertion == Insertion::Subsystem) {
            apply_oracle(m, d, &u1, &u1);
            m = slots[1] * m;
            apply_oracle(m, d, &u2, &u2);
        } else {
            apply_oracle(m, d, &u1, &u2);
            m = slots[1] * m;
            apply_oracle(m, d, &u2, &u1);
        }
        m = slots[2] * m;
    }
    std::vector<Matrix> kraus;
    kraus.reserve(dims.ancilla);
    for (std::size_t k = 0; k < dims.ancilla; ++k) {
        kraus.push_back(m.middleRows(static_cast<Eigen::Index>(k) * dd, dd));
    }
    return kraus;
}

} // namespace

std::vector<Matrix> kraus_operators(const ParamCircuit &pc, const OracleSample &oracle, Insertion insertion) {
    check_oracle(pc.kind(), pc.dims(), oracle);
    return kraus_from_slots(pc.kind(), pc.dims(), pc.slots(), oracle, insertion);
}

Matrix realized_channel(const ParamCircuit &pc, const OracleSample &oracle, Insertion insertion) {
    const auto kraus = kraus_operators(pc, oracle, insertion);
    const auto dd = static_cast<Eigen::Index>(pc.dims().channel_dim());
    Matrix choi = Matrix::Zero(dd * dd, dd * dd);
    for (const auto &k : kraus) {
        Vector v(dd * dd);
        for (Eigen::Index o = 0; o < dd; ++o) {
            for (Eigen::Index i = 0; i < dd; ++i) {
                v(o * dd + i) = k(o, i);
            }
        }
        choi += v * v.adjoint();
    }
    return choi;
}

Operator target_unitary(Kind kind, const OracleSample &oracle) {
    const Matrix &u = oracle.first.matrix();
    const Eigen::Index d = u.rows();
    Matrix t = Matrix::Zero(2 * d, 2 * d);
    if (kind == Kind::CtrlU) {
        t.topLeftCorner(d, d) = Matrix::Identity(d, d);
        t.bottomRightCorner(d, d) = u;
    } else {
        if (!oracle.second) {
            throw DimensionError("switch target needs a (U_f, U_g) pair");
        }
        const Matrix &ug = oracle.second->matrix();
        t.topLeftCorner(d, d) = ug * u;
        t.bottomRightCorner(d, d) = u * ug;
    }
    return Operator(std::move(t), true);
}

double process_fidelity(std::span<const Matrix> kraus, const Matrix &target) {
    const double dd = static_cast<double>(target.rows());
    double acc = 0.0;
    for (const auto &k : kraus) {
        acc += std::norm(target.cwiseProduct(k.conjugate()).sum());
    }
    return acc / (dd * dd);
}

double process_fidelity_choi(const Matrix &choi, const Matrix &target) {
    const Eigen::Index dd = target.rows();
    if (choi.rows() != dd * dd) {
        throw DimensionError("process_fidelity_choi: Choi size does not match target");
    }
    Vector v(dd * dd);
    for (Eigen::Index o = 0; o < dd; ++o) {
        for (Eigen::Index i = 0; i < dd; ++i) {
            v(o * dd + i) = target(o, i);
        }
    }
    const double norm = static_cast<double>(dd * dd);
    return v.dot(choi * v).real() / norm;
}

double worst_case_fidelity(const ParamCircuit &pc, const SampledOracleSet &samples, Insertion insertion) {
    double worst = std::numeric_limits<double>::infinity();
    for (const auto &s : samples) {
        const auto kraus = kraus_operators(pc, s, insertion);
        worst = std::min(worst, process_fidelity(kraus, target_unitary(pc.kind(), s).matrix()));
    }
    return std::clamp(worst, 0.0, 1.0);
}

double soft_min(std::span<const double> values, double temperature) {
    const double lo = *std::min_element(values.begin(), values.end());
    if (temperature <= 0.0 || values.size() == 1) {
        return lo;
    }
    // Shifted by the minimum for numerical stability.
    double acc = 0.0;
    for (const double v : values) {
        acc += std::exp(-(v - lo) / temperature);
    }
    return lo - temperature * std::log(acc / static_cast<double>(values.size()));
}

// ---------------------------------------------------------------------------
// Objective

Objective::Objective(Kind kind, CircuitDims dims, SampledOracleSet samples)
    : kind_(kind), dims_(dims), samples_(std::move(samples)) {
    if (samples_.empty()) {
        throw ValidationError("objective needs at least one oracle sample");
    }
    for (const auto &s : samples_) {
        check_oracle(kind_, dims_, s);
    }
}

std::vector<double> Objective::per_sample_with(const std::vector<Matrix> &slots) const {
    std::vector<double> out;
    out.reserve(samples_.size());
    for (const auto &s : samples_) {
        const auto kraus = kraus_from_slots(kind_, dims_, slots, s, Insertion::Subsystem);
        out.push_back(process_fidelity(kraus, target_unitary(kind_, s).matrix()));
    }
    return out;
}

std::vector<double> Objective::per_sample(std::span<const double> params) const {
    const ParamCircuit pc(kind_, dims_, std::vector<double>(params.begin(), params.end()));
    return per_sample_with(pc.slots());
}

double Objective::operator()(std::span<const double> params, double temperature) const {
    const auto f = per_sample(params);
    return soft_min(f, temperature);
}

double Objective::worst_case(std::span<const double> params) const {
    const auto f = per_sample(params);
    return std::clamp(*std::min_element(f.begin(), f.end()), 0.0, 1.0);
}

std::vector<double> Objective::gradient(std::span<const double> params, double temperature, double step) const {
    const std::size_t n = dims_.total_dim();
    const std::size_t per_slot = n * n;
    const ParamCircuit base(kind_, dims_, std::vector<double>(params.begin(), params.end()));
    std::vector<Matrix> slots = base.slots();
    std::vector<double> work(params.begin(), params.end());
    std::vector<double> grad(params.size());
    for (std::size_t p = 0; p < params.size(); ++p) {
        const std::size_t s = p / per_slot;
        const std::span<const double> slot_params(work.data() + s * per_slot, per_slot);
        const double keep = work[p];

        work[p] = keep + step;
        slots[s] = unitary_from_params(slot_params, n);
        const double up = soft_min(per_sample_with(slots), temperature);

        work[p] = keep - step;
        slots[s] = unitary_from_params(slot_params, n);
        const double down = soft_min(per_sample_with(slots), temperature);

        work[p] = keep;
        slots[s] = base.slots()[s];
        grad[p] = (up - down) / (2.0 * step);
    }
    return grad;
}

double Objective::value_and_gradient(std::span<const double> params, double temperature,
                                     std::vector<double> &grad) const {
    const std::size_t n = dims_.total_dim();
    const std::size_t per_slot = n * n;
    const std::size_t nslots = slot_count(kind_);
    if (params.size() != nslots * per_slot) {
        throw DimensionError("value_and_gradient: wrong parameter count");
    }
    const auto en = static_cast<Eigen::Index>(n);
    const auto dd = static_cast<Eigen::Index>(dims_.channel_dim());
    const double d2 = static_cast<double>(dd * dd);
    const std::size_t d = dims_.system;

    std::vector<Matrix> vecs(nslots);
    std::vector<Eigen::VectorXd> lambdas(nslots);
    std::vector<Matrix> slots(nslots);
    for (std::size_t s = 0; s < nslots; ++s) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_from_params(params.subspan(s * per_slot, per_slot), n));
        vecs[s] = es.eigenvectors();
        lambdas[s] = es.eigenvalues();
        Vector phases(en);
        for (Eigen::Index i = 0; i < en; ++i) {
            phases(i) = std::polar(1.0, lambdas[s](i));
        }
        slots[s] = vecs[s] * phases.asDiagonal() * vecs[s].adjoint();
    }

    // Per-sample fidelity and ∂f_k/∂S_s (as the matrix G with df = Re Tr(G† dS)).
    const std::size_t k_count = samples_.size();
    std::vector<double> f(k_count);
    std::vector<std::vector<Matrix>> g_slot(k_count, std::vector<Matrix>(nslots));
    for (std::size_t k = 0; k < k_count; ++k) {
        const auto &sample = samples_[k];
        const Matrix &u1 = sample.first.matrix();
        const Matrix *u2 = sample.second ? &sample.second->matrix() : nullptr;
        const Matrix target = target_unitary(kind_, sample).matrix();

        // Forward, keeping the input of every slot.
        std::vector<Matrix> slot_in(nslots);
        Matrix m = Matrix::Identity(en, dd);
        slot_in[0] = m;
        m = slots[0] * m;
        apply_oracle(m, d, &u1, &u1);
        slot_in[1] = m;
        m = slots[1] * m;
        if (kind_ == Kind::Switch) {
            apply_oracle(m, d, u2, u2);
            slot_in[2] = m;
            m = slots[2] * m;
        }

        Matrix back(en, dd);
        double fk = 0.0;
        for (std::size_t j = 0; j < dims_.ancilla; ++j) {
            const auto block = m.middleRows(static_cast<Eigen::Index>(j) * dd, dd);
            const Complex z = target.conjugate().cwiseProduct(block).sum();
            fk += std::norm(z);
            back.middleRows(static_cast<Eigen::Index>(j) * dd, dd) = z * target;
        }
        f[k] = fk / d2;

        // Backward: df = (2/D²) Re Tr(back† dM).
        const Matrix u1a = u1.adjoint();
        for (std::size_t s = nslots; s-- > 0;) {
            g_slot[k][s] = (2.0 / d2) * back * slot_in[s].adjoint();
            back = slots[s].adjoint() * back;
            if (s == 2) {
                const Matrix u2a = u2->adjoint();
                apply_oracle(back, d, &u2a, &u2a);
            } else if (s == 1) {
                apply_oracle(back, d, &u1a, &u1a);
            }
        }
    }

    // Soft-min weights.
    const double lo = *std::min_element(f.begin(), f.end());
    std::vector<double> w(k_count, 0.0);
    if (temperature <= 0.0 || k_count == 1) {
        w[static_cast<std::size_t>(std::min_element(f.begin(), f.end()) - f.begin())] = 1.0;
    } else {
        double z = 0.0;
        for (std::size_t k = 0; k < k_count; ++k) {
            w[k] = std::exp(-(f[k] - lo) / temperature);
            z += w[k];
        }
        for (auto &x : w) x /= z;
    }

    grad.assign(params.size(), 0.0);
    for (std::size_t s = 0; s < nslots; ++s) {
        Matrix g = Matrix::Zero(en, en);
        for (std::size_t k = 0; k < k_count; ++k) {
            if (w[k] != 0.0) g += w[k] * g_slot[k][s];
        }
        // Divided differences of exp(iλ) on the spectrum of H.
        const Matrix gt = vecs[s].adjoint() * g * vecs[s];
        Matrix r(en, en);
        for (Eigen::Index a = 0; a < en; ++a) {
            for (Eigen::Index b = 0; b < en; ++b) {
                const double la = lambdas[s](a);
                const double lb = lambdas[s](b);
                Complex div;
                if (std::abs(la - lb) < 1e-9) {
                    div = Complex(0.0, 1.0) * std::polar(1.0, 0.5 * (la + lb));
                } else {
                    div = (std::polar(1.0, la) - std::polar(1.0, lb)) / (la - lb);
                }
                r(a, b) = gt(a, b) * std::conj(div);
            }
        }
        const Matrix zm = vecs[s] * r * vecs[s].adjoint();
        double *out = grad.data() + s * per_slot;
        std::size_t p = 0;
        for (Eigen::Index i = 0; i < en; ++i) {
            out[p++] = zm(i, i).real();
        }
        for (Eigen::Index i = 0; i < en; ++i) {
            for (Eigen::Index j = i + 1; j < en; ++j) {
                const Complex zij = std::conj(zm(i, j));
                const Complex zji = std::conj(zm(j, i));
                out[p++] = (zij + zji).real();
                out[p++] = (Complex(0.0, 1.0) * (zij - zji)).real();
            }
        }
    }
    return soft_min(f, temperature);
}

std::string to_string(Kind kind) { return kind == Kind::CtrlU ? "ctrl-u" : "switch"; }

Kind kind_from_string(const std::string &s) {
    if (s == "ctrl-u" || s == "ctrl_u") return Kind::CtrlU;
    if (s == "switch") return Kind::Switch;
    throw ValidationError("unknown circuit kind '" + s + "' (expected ctrl-u or switch)");
}

std::string to_string(Method m) { return m == Method::QuasiNewton ? "quasi-newton" : "nelder-mead"; }
std::string to_string(GradientMode m) { return m == GradientMode::Analytic ? "analytic" : "finite-difference"; }
std::string to_string(OracleMode m) { return m == OracleMode::Haar ? "haar" : "identity"; }

} // namespace qctrl::nogo
