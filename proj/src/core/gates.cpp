#include "qctrl/gates.hpp"

#include <cmath>
#include <numbers>

namespace qctrl::gates {

namespace {

Operator two_by_two(Complex a, Complex b, Complex c, Complex d) {
    Matrix m(2, 2);
    m << a, b, c, d;
    return Operator(std::move(m), true);
}

constexpr Complex kI{0.0, 1.0};

} // namespace

Operator pauli_x() { return two_by_two(0.0, 1.0, 1.0, 0.0); }
Operator pauli_y() { return two_by_two(0.0, -kI, kI, 0.0); }
Operator pauli_z() { return two_by_two(1.0, 0.0, 0.0, -1.0); }

Operator hadamard() {
    const double s = 1.0 / std::numbers::sqrt2;
    return two_by_two(s, s, s, -s);
}

Operator phase_s() { return two_by_two(1.0, 0.0, 0.0, kI); }
Operator phase_t() { return two_by_two(1.0, 0.0, 0.0, std::exp(kI * (std::numbers::pi / 4.0))); }

Operator rx(double theta) {
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    return two_by_two(c, -kI * s, -kI * s, c);
}

Operator ry(double theta) {
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    return two_by_two(c, -s, s, c);
}

Operator rz(double theta) {
    return two_by_two(std::exp(-kI * (theta / 2.0)), 0.0, 0.0, std::exp(kI * (theta / 2.0)));
}

Operator controlled(const Operator &u) {
    const std::size_t d = u.dim();
    std::vector<std::size_t> upper(d);
    for (std::size_t i = 0; i < d; ++i) {
        upper[i] = d + i;
    }
    return subspace_embed(u, DirectSumBlock{upper, 2 * d});
}

Operator basis_projector(std::size_t dim, std::size_t k) {
    const auto n = static_cast<Eigen::Index>(dim);
    Matrix m = Matrix::Zero(n, n);
    m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = 1.0;
    return Operator(std::move(m));
}

} // namespace qctrl::gates
