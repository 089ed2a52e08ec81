#pragma once

/**
 * @file
 * Dense linear-algebra substrate: composite Hilbert spaces, pure and mixed
 * states, operators, and the two ways of embedding a small unitary into a
 * larger space (tensor-factor "subsystem" vs direct-sum "subspace").
 *
 * Index convention: in a composite space the leftmost factor is the
 * slowest-varying digit of the flattened basis index. Every module uses it.
 */

#include <complex>
#include <cstddef>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "qctrl/rng.hpp"

namespace qctrl {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr double kDefaultTol = 1e-10;

/// Raised for any shape or label mismatch between operands.
class DimensionError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a value violates a mathematical precondition
/// (non-unitary where unitary is required, bad projector set, ...).
class ValidationError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

class HilbertSpace {
  public:
    struct Factor {
        std::string label;
        std::size_t dim = 0;
        bool operator==(const Factor &) const = default;
    };

    HilbertSpace() = default;
    explicit HilbertSpace(std::vector<Factor> factors);

    /// A single unlabeled-looking factor, for flat spaces.
    static HilbertSpace flat(std::size_t dim, std::string label = "q");

    const std::vector<Factor> &factors() const { return factors_; }
    std::size_t total_dim() const { return total_dim_; }
    std::size_t size() const { return factors_.size(); }

    bool has(const std::string &label) const;
    std::size_t position(const std::string &label) const;
    std::size_t dim_of(const std::string &label) const;

    /// Flattened index from one digit per factor.
    std::size_t index(std::span<const std::size_t> digits) const;
    std::vector<std::size_t> digits(std::size_t flat_index) const;

    /// Concatenation (this ⊗ other); labels must stay unique.
    HilbertSpace concat(const HilbertSpace &other) const;

    bool operator==(const HilbertSpace &) const = default;

  private:
    std::vector<Factor> factors_;
    std::size_t total_dim_ = 1;
};

class Operator {
  public:
    Operator() = default;
    /// When claims_unitary is set the matrix is checked at kDefaultTol.
    explicit Operator(Matrix m, bool claims_unitary = false);

    static Operator identity(std::size_t dim);

    std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
    const Matrix &matrix() const { return m_; }
    bool claims_unitary() const { return unitary_; }

    Operator adjoint() const;
    Complex operator()(std::size_t r, std::size_t c) const { return m_(r, c); }

    /// Operator product; unitary if both factors are.
    friend Operator operator*(const Operator &a, const Operator &b);

  private:
    Matrix m_;
    bool unitary_ = false;
};

class StateVector {
  public:
    StateVector() = default;
    /// Throws ValidationError if | ‖amps‖ − 1 | > tol.
    StateVector(HilbertSpace space, Vector amps, double tol = kDefaultTol);

    static StateVector basis(const HilbertSpace &space, std::size_t index);
    /// Normalizes amps first; throws if amps is the zero vector.
    static StateVector normalized(const HilbertSpace &space, Vector amps);

    const HilbertSpace &space() const { return space_; }
    const Vector &amps() const { return amps_; }
    double norm() const { return amps_.norm(); }

  private:
    HilbertSpace space_;
    Vector amps_;
};

class DensityMatrix {
  public:
    DensityMatrix() = default;
    /// Checks Hermiticity, unit trace and positivity at tol.
    DensityMatrix(HilbertSpace space, Matrix rho, double tol = kDefaultTol);

    static DensityMatrix pure(const StateVector &psi);

    const HilbertSpace &space() const { return space_; }
    const Matrix &matrix() const { return rho_; }
    double trace() const { return rho_.trace().real(); }
    double purity() const;

  private:
    HilbertSpace space_;
    Matrix rho_;
};

/// Acting with U on one tensor factor: 𝟙 ⊗ … ⊗ U ⊗ … ⊗ 𝟙.
struct Subsystem {
    std::string slot;
};

/// Acting with U on a direct-sum block of basis indices, identity elsewhere.
struct DirectSumBlock {
    std::vector<std::size_t> block_indices;
    std::size_t total_dim = 0;
};

using SubspaceEmbedding = std::variant<Subsystem, DirectSumBlock>;

Operator tensor(const Operator &a, const Operator &b);
StateVector tensor(const StateVector &a, const StateVector &b);

Operator subsystem_embed(const Operator &u, const HilbertSpace &space, const std::string &slot);
Operator subspace_embed(const Operator &u, const DirectSumBlock &block);
/// Dispatches on the embedding kind.
Operator embed(const Operator &u, const HilbertSpace &space, const SubspaceEmbedding &emb);

/// Requires op to claim unitarity; result re-checked at kDefaultTol.
StateVector apply(const Operator &op, const StateVector &psi);

double fidelity_pure(const StateVector &a, const StateVector &b);
double fidelity_mixed(const DensityMatrix &rho, const StateVector &b);

/// Reduced state on the kept factors, in their original relative order.
DensityMatrix partial_trace(const DensityMatrix &rho, const std::set<std::string> &keep);

struct MeasurementResult {
    std::size_t outcome = 0;
    StateVector post_state;
    double probability = 0.0;
};

/// Born probabilities of each projector; checks completeness at tol.
std::vector<double> outcome_probabilities(const StateVector &psi,
                                          std::span<const Operator> projectors,
                                          double tol = kDefaultTol);

MeasurementResult measure_projective(const StateVector &psi,
                                     std::span<const Operator> projectors, Rng &rng);

/// Haar-distributed unitary: QR of a complex Ginibre matrix with R's
/// diagonal phases moved into Q.
Operator haar_unitary(std::size_t dim, Rng &rng);

bool is_unitary(const Operator &op, double tol = kDefaultTol);
bool is_unitary(const Matrix &m, double tol = kDefaultTol);

/// max |a_ij − b_ij|
double max_abs_diff(const Matrix &a, const Matrix &b);

} // namespace qctrl
