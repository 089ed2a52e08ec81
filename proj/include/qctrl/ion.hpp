#pragma once

/**
 * @file
 * Two trapped ions sharing one collective vibrational mode. Each ion has
 * qubit levels g, e and auxiliary levels g′, e′; pulses are modeled as
 * their ideal unitary maps. Factor order is (ion1, ion2, mode).
 *
 * Phase convention: every two-level transfer is the real symmetric
 * exchange |a⟩⟨b| + |b⟩⟨a| plus identity elsewhere.
 */

#include <map>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "qctrl/hilbert.hpp"

namespace qctrl::ion {

enum class Level : std::size_t { G = 0, E = 1, GPrime = 2, EPrime = 3 };

inline constexpr std::size_t kLevelsPerIon = 4;
inline constexpr std::size_t kIons = 2;

struct TrapSpace {
    /// Vibrational occupations 0 .. fock_cutoff − 1.
    std::size_t fock_cutoff = 3;

    explicit TrapSpace(std::size_t cutoff = 3);

    HilbertSpace hilbert() const;
    std::size_t total_dim() const { return kLevelsPerIon * kLevelsPerIon * fock_cutoff; }
    std::size_t index(Level ion1, Level ion2, std::size_t phonons) const;
};

/// |g⟩ᵢ|0⟩ ↔ |e⟩ᵢ|1⟩
struct SidebandSwap {
    int ion = 1;
};

enum class HidingKind { H1, H2 };
/// H1: |g⟩ᵢ|1⟩ ↔ |g′⟩ᵢ|0⟩; H2: |e⟩ᵢ|1⟩ ↔ |e′⟩ᵢ|0⟩
struct Hiding {
    int ion = 2;
    HidingKind which = HidingKind::H1;
};

enum class PassKind { Outgoing, Return };
/// Bound 2×2 unitary on {|g⟩ᵢ, |e⟩ᵢ} in the n = 0 block only. A Return
/// pass is the same laser pulse reflected back onto the ion.
struct Carrier {
    int ion = 2;
    std::string slot;
    PassKind pass = PassKind::Outgoing;
};

enum class SigmaKind { Sg, Se };
/// Sg: |g⟩ᵢ ↔ |g′⟩ᵢ; Se: |e⟩ᵢ ↔ |e′⟩ᵢ; n = 0 block only.
struct SigmaX {
    int ion = 2;
    SigmaKind which = SigmaKind::Sg;
};

using Pulse = std::variant<SidebandSwap, Hiding, Carrier, SigmaX>;
using Bindings = std::map<std::string, Operator>;

struct SlotUsage {
    std::size_t pulses_sent = 0;
    std::size_t interactions = 0;
};

class PulseSequence {
  public:
    PulseSequence() = default;
    /// Checks ion indices and that every Return follows an unmatched
    /// Outgoing pass of the same slot.
    explicit PulseSequence(std::vector<Pulse> pulses);

    const std::vector<Pulse> &pulses() const { return pulses_; }
    std::size_t size() const { return pulses_.size(); }
    const std::map<std::string, SlotUsage> &slot_usage() const { return usage_; }

  private:
    std::vector<Pulse> pulses_;
    std::map<std::string, SlotUsage> usage_;
};

Operator pulse_unitary(const Pulse &p, const TrapSpace &space, const Bindings &bindings);

struct RunResult {
    StateVector final_state;
    /// State after each pulse, in order.
    std::vector<StateVector> trace;
};

RunResult run_sequence(const PulseSequence &seq, const TrapSpace &space, const StateVector &init,
                       const Bindings &bindings);

/// Swap control into the mode, hide, U, unhide, swap back.
PulseSequence seq_ctrl_u();
/// ctrl-U skeleton with U_g, (S_g S_e), U_f, U_g return, (S_g S_e), U_f return.
PulseSequence seq_ctrl_switch();

/// True iff the population with n ≥ 1 is at most tol.
bool assert_ground_mode(const StateVector &s, const TrapSpace &space, double tol);
/// Population of the highest Fock level n = cutoff − 1.
double top_fock_population(const StateVector &s, const TrapSpace &space);

/// ψ on {g, e} of one ion as a 4-level vector.
Vector qubit_levels(const Vector &psi2);

/// (α|g⟩₁ + β|e⟩₁) ⊗ |ψ⟩₂ ⊗ |0⟩
StateVector protocol_input(const TrapSpace &space, Complex alpha, Complex beta, const Vector &psi);
/// (α|g⟩₁|ψ⟩₂ + β|e⟩₁U|ψ⟩₂)|0⟩
StateVector ctrl_u_target(const TrapSpace &space, Complex alpha, Complex beta, const Vector &psi, const Operator &u);
/// (α|g⟩₁U_gU_f|ψ⟩₂ + β|e⟩₁U_fU_g|ψ⟩₂)|0⟩
StateVector ctrl_switch_target(const TrapSpace &space, Complex alpha, Complex beta, const Vector &psi,
                               const Operator &uf, const Operator &ug);

nlohmann::ordered_json to_json(const PulseSequence &seq);
/// Accepts the bare pulse array.
PulseSequence sequence_from_json(const nlohmann::json &j);

} // namespace qctrl::ion
