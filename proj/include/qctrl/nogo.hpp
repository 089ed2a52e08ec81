#pragma once

/**
 * @file
 * Search over fixed circuits with black-box oracle calls.
 *
 * Space order is (ancilla a, control c = 2, system s = d), ancilla
 * slowest. A circuit interleaves parametrized unitaries on the whole
 * space ("slots") with oracle calls on the system wire:
 *
 *   CtrlU:  slot0, U, slot1
 *   Switch: slot0, U_f, slot1, U_g, slot2
 *
 * (listed in application order). The ancilla starts in |0⟩ and is traced
 * out, so any final ancilla operation drops out of the comparison.
 */

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qctrl/hilbert.hpp"

namespace qctrl::nogo {

enum class Kind { CtrlU, Switch };

/// How an oracle call touches the (c, s) register.
enum class Insertion {
    /// 𝟙_ac ⊗ U: the circuit-model wire.
    Subsystem,
    /// CtrlU: 𝟙_a ⊗ (𝟙_d ⊕ U). Switch: first call 𝟙_a ⊗ (U_f ⊕ U_g),
    /// second call 𝟙_a ⊗ (U_g ⊕ U_f), i.e. each device met once per branch.
    Subspace,
};

struct CircuitDims {
    std::size_t ancilla = 2;
    std::size_t system = 2;

    static constexpr std::size_t control = 2;
    std::size_t channel_dim() const { return control * system; }
    std::size_t total_dim() const { return ancilla * control * system; }
};

std::size_t slot_count(Kind kind);

/// One oracle instance: U for CtrlU, (U_f, U_g) for Switch.
struct OracleSample {
    Operator first;
    std::optional<Operator> second;
};
using SampledOracleSet = std::vector<OracleSample>;

class ParamCircuit {
  public:
    /// params.size() must equal param_count(kind, dims).
    ParamCircuit(Kind kind, CircuitDims dims, std::vector<double> params);

    static std::size_t param_count(Kind kind, CircuitDims dims);

    Kind kind() const { return kind_; }
    const CircuitDims &dims() const { return dims_; }
    const std::vector<double> &params() const { return params_; }

    /// exp(iH(θ)) for each slot, in application order.
    const std::vector<Matrix> &slots() const { return slots_; }

  private:
    Kind kind_;
    CircuitDims dims_;
    std::vector<double> params_;
    std::vector<Matrix> slots_;
};

/// Hermitian matrix from n² reals: n diagonal entries, then (re, im) of
/// each strictly-upper entry in row-major order.
Matrix hermitian_from_params(std::span<const double> params, std::size_t n);
/// exp(iH) via the eigen-decomposition of H.
Matrix unitary_from_params(std::span<const double> params, std::size_t n);

/// Kraus operators of the induced map on (c, s): K_k = (⟨k|_a ⊗ 𝟙) W (|0⟩_a ⊗ 𝟙).
std::vector<Matrix> kraus_operators(const ParamCircuit &pc, const OracleSample &oracle,
                                    Insertion insertion = Insertion::Subsystem);

/// Choi matrix Σ_ij E(|i⟩⟨j|) ⊗ |i⟩⟨j| of the induced channel.
Matrix realized_channel(const ParamCircuit &pc, const OracleSample &oracle,
                        Insertion insertion = Insertion::Subsystem);

/// CtrlU → 𝟙_d ⊕ U; Switch → U_gU_f ⊕ U_fU_g.
Operator target_unitary(Kind kind, const OracleSample &oracle);

/// ⟨⟨V|J|⟩⟩V / D² for the channel given by its Kraus operators.
double process_fidelity(std::span<const Matrix> kraus, const Matrix &target);
/// Same, from a Choi matrix.
double process_fidelity_choi(const Matrix &choi, const Matrix &target);

double worst_case_fidelity(const ParamCircuit &pc, const SampledOracleSet &samples,
                           Insertion insertion = Insertion::Subsystem);

enum class OracleMode { Haar, Identity };
enum class Method { QuasiNewton, NelderMead };
enum class GradientMode { Analytic, FiniteDifference };

struct SearchConfig {
    std::size_t restarts = 20;
    std::size_t max_iters = 300;
    std::size_t sample_count = 16;
    std::uint64_t seed = 42;
    CircuitDims dims{};
    Method method = Method::QuasiNewton;
    GradientMode gradient = GradientMode::Analytic;
    OracleMode oracle_mode = OracleMode::Haar;
    /// Standard deviation of the random initial parameters.
    double init_scale = 1.0;
    /// Finite-difference step for gradients.
    double fd_step = 1e-6;
    /// Stop a stage when the objective improves by less than this.
    double ftol = 1e-12;
    /// Stop a stage when the step norm falls below this.
    double xtol = 1e-10;
    /// Soft-min temperatures, annealed in order; the last stage is the
    /// reported objective. Ignored when sample_count == 1.
    std::vector<double> temperatures{0.05, 0.01, 0.002};
    /// 0 = one worker per hardware thread.
    std::size_t threads = 0;

    /// Throws ValidationError when a field is out of range.
    void validate() const;
};

struct RestartTrace {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    double final_value = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

struct SearchReport {
    Kind kind = Kind::CtrlU;
    SearchConfig config;
    double best_worst_case_fidelity = 0.0;
    std::size_t best_restart = 0;
    std::vector<RestartTrace> restarts;
};

/// The fixed oracle set for a run, drawn once from the seed.
SampledOracleSet sample_oracles(Kind kind, std::size_t dim, std::size_t count, OracleMode mode,
                                std::uint64_t seed);

/// Smooth stand-in for min_k F_k: −τ log((1/K) Σ exp(−F_k/τ)).
double soft_min(std::span<const double> values, double temperature);

/// Objective used by the ascent: soft-min of the per-sample process
/// fidelities at the given temperature (exact min when temperature ≤ 0).
class Objective {
  public:
    Objective(Kind kind, CircuitDims dims, SampledOracleSet samples);

    std::size_t dimension() const { return ParamCircuit::param_count(kind_, dims_); }
    double operator()(std::span<const double> params, double temperature) const;
    double worst_case(std::span<const double> params) const;

    /// Central finite-difference gradient.
    std::vector<double> gradient(std::span<const double> params, double temperature, double step) const;

    /// Value and exact gradient by back-propagation through the circuit
    /// and the spectral derivative of exp(iH). At temperature ≤ 0 this is
    /// the gradient of the currently worst sample.
    double value_and_gradient(std::span<const double> params, double temperature, std::vector<double> &grad) const;

  private:
    std::vector<double> per_sample(std::span<const double> params) const;
    std::vector<double> per_sample_with(const std::vector<Matrix> &slots) const;

    Kind kind_;
    CircuitDims dims_;
    SampledOracleSet samples_;
};

SearchReport optimize(Kind kind, const SearchConfig &config);

/// Minimum output fidelity of the photonic ctrl-U and switch networks
/// against their analytic targets over `samples` random instances.
struct OracleSanity {
    double ctrl_u = 0.0;
    double ctrl_switch = 0.0;
    double worst() const { return ctrl_u < ctrl_switch ? ctrl_u : ctrl_switch; }
};
OracleSanity oracle_sanity_detail(std::size_t samples = 32, std::size_t dim = 2, std::uint64_t seed = 0);
double oracle_sanity(std::size_t samples = 32, std::size_t dim = 2, std::uint64_t seed = 0);

std::string to_string(Kind kind);
Kind kind_from_string(const std::string &s);
std::string to_string(Method m);
std::string to_string(GradientMode m);
std::string to_string(OracleMode m);

nlohmann::ordered_json to_json(const SearchReport &report);

} // namespace qctrl::nogo
