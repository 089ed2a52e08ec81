#pragma once

#include "qctrl/hilbert.hpp"

namespace qctrl::gates {

Operator pauli_x();
Operator pauli_y();
Operator pauli_z();
Operator hadamard();
Operator phase_s();
Operator phase_t();

// exp(−i θ σ/2)
Operator rx(double theta);
Operator ry(double theta);
Operator rz(double theta);

/// 𝟙_d ⊕ U in the (control, system) basis with the control slowest.
Operator controlled(const Operator &u);

/// Projector |k⟩⟨k| on a flat space of dimension dim.
Operator basis_projector(std::size_t dim, std::size_t k);

} // namespace qctrl::gates
